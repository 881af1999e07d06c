"""DIMACS CNF and DIMACS graph (.col) readers and writers."""

from __future__ import annotations

from .coloring import ColoringProblem
from .sat import CnfProblem


class DimacsError(ValueError):
    pass


def parse_dimacs_cnf(text: str, require_3sat: bool = False) -> CnfProblem:
    """Parse DIMACS CNF.  Clauses may span lines and end at a literal 0;
    a ``%`` line (as in the SATLIB uf files) ends the clause section."""
    n_vars = n_clauses = None
    clauses: list[tuple[int, ...]] = []
    cur: list[int] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        if line.startswith("%"):
            break
        if line.startswith("p"):
            parts = line.split()
            if len(parts) != 4 or parts[1] != "cnf":
                raise DimacsError(f"line {lineno}: bad header {line!r}")
            if n_vars is not None:
                raise DimacsError(f"line {lineno}: duplicate header")
            n_vars, n_clauses = int(parts[2]), int(parts[3])
            continue
        if n_vars is None:
            raise DimacsError(f"line {lineno}: clause before 'p cnf' header")
        for tok in line.split():
            try:
                lit = int(tok)
            except ValueError:
                raise DimacsError(f"line {lineno}: bad literal {tok!r}") from None
            if lit == 0:
                clauses.append(tuple(cur))
                cur = []
                continue
            if abs(lit) > n_vars:
                raise DimacsError(f"line {lineno}: literal {lit} out of range 1..{n_vars}")
            cur.append(lit)
    if n_vars is None:
        raise DimacsError("missing 'p cnf' header")
    if cur:
        clauses.append(tuple(cur))
    if len(clauses) != n_clauses:
        raise DimacsError(f"header declares {n_clauses} clauses, found {len(clauses)}")
    if any(not c for c in clauses):
        raise DimacsError("empty clause")
    if require_3sat:
        for c in clauses:
            if len(c) != 3:
                raise DimacsError(f"clause {c} has {len(c)} literals; this backend needs 3-SAT")
    return CnfProblem(n_vars, tuple(clauses))


def write_dimacs_cnf(p: CnfProblem, comment: str | None = None) -> str:
    lines = [f"c {comment}"] if comment else []
    lines.append(f"p cnf {p.num_vars} {p.num_clauses}")
    lines.extend(" ".join(map(str, c)) + " 0" for c in p.clauses)
    return "\n".join(lines) + "\n"


def parse_dimacs_col(text: str, k: int = 3, name: str = "") -> ColoringProblem:
    """Parse a DIMACS graph (``p edge N M`` plus ``e u v`` lines, 1-based).

    Duplicate and reversed edges collapse to one undirected edge, so the
    header's edge count is not checked.
    """
    n = None
    edges = set()
    for lineno, raw in enumerate(text.splitlines(), 1):
        parts = raw.split()
        if not parts or parts[0] == "c":
            continue
        if parts[0] == "p":
            if len(parts) < 3 or parts[1] not in ("edge", "edges", "col"):
                raise DimacsError(f"line {lineno}: bad header {raw.strip()!r}")
            n = int(parts[2])
        elif parts[0] == "e":
            if n is None:
                raise DimacsError(f"line {lineno}: edge before header")
            if len(parts) != 3:
                raise DimacsError(f"line {lineno}: malformed edge line")
            u, v = int(parts[1]), int(parts[2])
            if not (1 <= u <= n and 1 <= v <= n):
                raise DimacsError(f"line {lineno}: vertex out of range 1..{n}")
            if u == v:
                raise DimacsError(f"line {lineno}: self-loop at vertex {u}")
            edges.add((min(u, v) - 1, max(u, v) - 1))
    if n is None:
        raise DimacsError("missing 'p edge' header")
    return ColoringProblem(n, frozenset(edges), k, name)


def write_dimacs_col(p: ColoringProblem, comment: str | None = None) -> str:
    lines = [f"c {comment}"] if comment else []
    lines.append(f"p edge {p.num_vertices} {p.num_edges}")
    lines.extend(f"e {u + 1} {v + 1}" for u, v in sorted(p.edges))
    return "\n".join(lines) + "\n"
