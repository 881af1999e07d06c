"""Benchmark graph constructions and bundled instance files."""

from __future__ import annotations

from importlib import resources
from itertools import combinations

from .coloring import ColoringProblem


def mycielski(order: int, k: int | None = None) -> ColoringProblem:
    """``myciel<order>`` graph: the Mycielskian iterated from K2.

    order 3 gives the 11-vertex Groetzsch graph (chromatic number 4).
    """
    if order < 1:
        raise ValueError("order must be >= 1")
    n, edges = 2, {(0, 1)}
    for _ in range(order - 1):
        new = set(edges)
        for u, v in edges:
            new.add((u, n + v))
            new.add((v, n + u))
        w = 2 * n
        new.update((n + i, w) for i in range(n))
        n, edges = 2 * n + 1, new
    return ColoringProblem(n, frozenset(edges), order + 1 if k is None else k, f"myciel{order}")


def queen_graph(size: int, k: int | None = None) -> ColoringProblem:
    """``queen<size>_<size>``: squares attacking each other along rows, columns, diagonals."""
    cells = [(r, c) for r in range(size) for c in range(size)]
    edges = set()
    for (a, (r1, c1)), (b, (r2, c2)) in combinations(enumerate(cells), 2):
        if r1 == r2 or c1 == c2 or abs(r1 - r2) == abs(c1 - c2):
            edges.add((a, b))
    return ColoringProblem(len(cells), frozenset(edges), size if k is None else k,
                           f"queen{size}_{size}")


def complete_graph(n: int, k: int) -> ColoringProblem:
    return ColoringProblem(n, frozenset(combinations(range(n), 2)), k, f"K{n}")


def data_path(*parts: str):
    return resources.files("oscnet").joinpath("data", *parts)


def bundled_cnf(name: str):
    """Load a bundled CNF file, e.g. ``"rand50-218/rand50-218-01.cnf"``."""
    from .dimacs import parse_dimacs_cnf

    return parse_dimacs_cnf(data_path(*name.split("/")).read_text())


def bundled_rand50(count: int = 10):
    """The bundled satisfiable uniform random 3-SAT instances (50 vars, 218 clauses)."""
    from .dimacs import parse_dimacs_cnf

    folder = data_path("rand50-218")
    names = sorted(p.name for p in folder.iterdir() if p.name.endswith(".cnf"))
    return [(n, parse_dimacs_cnf(folder.joinpath(n).read_text())) for n in names[:count]]


def bundled_graph(name: str, k: int):
    """``myciel3``, ``myciel4`` or ``queen5_5`` from the bundled .col files."""
    from .dimacs import parse_dimacs_col

    return parse_dimacs_col(data_path(f"{name}.col").read_text(), k, name)
