import itertools
import sys

import numpy as np
import pytest

from oscnet.sat import FALSE, TRUE, CnfProblem


def brute_force_sat(p: CnfProblem) -> list[tuple[int, ...]]:
    """All satisfying assignments (values 1/2) by enumeration."""
    out = []
    for bits in itertools.product((FALSE, TRUE), repeat=p.num_vars):
        if p.is_satisfied_by(np.array(bits)):
            out.append(bits)
    return out


@pytest.fixture
def fig2_problem():
    # (L1 or L2 or not L3) and (L2 or L3 or L4)
    return CnfProblem(4, ((1, 2, -3), (2, 3, 4)))


@pytest.fixture
def unsat_problem():
    # x1 xor-like contradiction over three variables: all 8 sign patterns
    return CnfProblem(3, tuple(tuple(s * v for s, v in zip(signs, (1, 2, 3)))
                               for signs in itertools.product((1, -1), repeat=3)))


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        terminalreporter.write_line(results[n])
