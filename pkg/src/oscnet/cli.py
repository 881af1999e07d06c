"""Command-line entry point: ``oscnet <subcommand> ...``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

from . import bench
from .coloring import ColoringProblem
from .dimacs import DimacsError, parse_dimacs_cnf, parse_dimacs_col
from .engine import ChannelModel
from .instances import complete_graph, data_path, mycielski, queen_graph
from .sat import CnfProblem
from .tsp import read_distance_matrix, sample_tours, summary, tour_rows

EXIT_OK, EXIT_NONE_CONVERGED, EXIT_USAGE = 0, 1, 2

BUILTIN_GRAPHS = {
    "myciel3": lambda k: mycielski(3, k),
    "myciel4": lambda k: mycielski(4, k),
    "queen5_5": lambda k: queen_graph(5, k),
    "triangle": lambda k: complete_graph(3, k or 3),
}


class UsageError(Exception):
    pass


# --------------------------------------------------------------------------
# input resolution


def _read(path: str) -> str:
    p = Path(path)
    if not p.exists():
        bundled = data_path(path)
        if bundled.is_file():
            return bundled.read_text()
    try:
        return p.read_text()
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e.strerror or e}") from None


def _expand_cnf(paths: list[str]) -> list[str]:
    out = []
    for path in paths:
        p = Path(path)
        if not p.exists() and data_path(path).is_dir():
            p = Path(str(data_path(path)))
        if p.is_dir():
            found = sorted(str(f) for f in p.glob("*.cnf"))
            if not found:
                raise UsageError(f"no .cnf files in {path}")
            out.extend(found)
        else:
            out.append(path)
    return out


def _load_cnf(paths: list[str], require_3sat: bool) -> list[tuple[str, CnfProblem]]:
    out = []
    for path in _expand_cnf(paths):
        try:
            out.append((Path(path).name, parse_dimacs_cnf(_read(path), require_3sat)))
        except (DimacsError, ValueError) as e:
            raise UsageError(f"{path}: {e}") from None
    return out


def _load_graph(path: str, k: int | None) -> ColoringProblem:
    if path in BUILTIN_GRAPHS and not Path(path).exists():
        return BUILTIN_GRAPHS[path](k)
    try:
        return parse_dimacs_col(_read(path), k or 3, Path(path).stem)
    except (DimacsError, ValueError) as e:
        raise UsageError(f"{path}: {e}") from None


def _channel(args) -> ChannelModel:
    if args.channel == "ideal":
        return ChannelModel.ideal()
    return ChannelModel.lossy(args.loss_prob, args.delay_frac, args.delay_ref)


# --------------------------------------------------------------------------
# output


def _clean(obj):
    """Replace non-finite floats with None so the JSON stays standard."""
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def _emit(args, payload: dict, rows: list[dict]) -> None:
    if args.format == "csv":
        buf = io.StringIO()
        if rows:
            w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
            w.writeheader()
            w.writerows(rows)
        text = buf.getvalue()
    else:
        text = json.dumps(_clean(payload), indent=2, sort_keys=True) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _settings(args, **extra) -> dict:
    s = {"command": args.command, "seed": args.seed, "trials": args.trials}
    s.update(extra)
    return s


# --------------------------------------------------------------------------
# subcommands


def _sat(args, configs: list[str]) -> int:
    instances = _load_cnf(args.files, require_3sat=configs != ["sequential"])
    res = bench.benchmark_sat(
        instances, args.trials, configs, args.seed, x=args.x, y=args.y,
        max_flips=args.max_flips, max_cycles=args.max_cycles,
        check_interval=args.check_interval, loss_prob=args.loss_prob,
        delay_frac=args.delay_frac, workers=args.workers, hist=args.hist)
    payload = {
        "settings": _settings(args, configs=configs, instances=[n for n, _ in instances],
                              x=args.x, y=args.y, max_flips=args.max_flips,
                              max_cycles=args.max_cycles, check_interval=args.check_interval,
                              loss_prob=args.loss_prob, delay_frac=args.delay_frac),
        **res,
    }
    if args.routing:
        _write_routing(args.routing, instances[0][1], configs)
    _emit(args, payload, res["rows"])
    return EXIT_OK if any(r["converged"] for r in res["rows"]) else EXIT_NONE_CONVERGED


def _write_routing(path: str, p, configs) -> None:
    from .hw import build_hw_sat
    from .sat import build_sat_network

    if "hw" in configs:
        text = build_hw_sat(p).routing_text()
    else:
        text = build_sat_network(p).net.routing_text()
    Path(path).write_text(text + "\n")


def cmd_sat_seq(args) -> int:
    return _sat(args, ["sequential"])


def cmd_sat_net(args) -> int:
    return _sat(args, [args.channel])


def cmd_hw_sat(args) -> int:
    return _sat(args, ["hw"])


def cmd_bench(args) -> int:
    return _sat(args, args.configs.split(","))


def _color(args, hw: bool) -> int:
    p = _load_graph(args.graph, args.k)
    ch = None if hw and args.channel == "ideal" else _channel(args)
    rows = bench.benchmark_coloring([(p.name or args.graph, p)], args.trials, args.seed,
                                    hw=hw, max_cycles=args.max_cycles,
                                    check_interval=args.check_interval, channel=ch,
                                    workers=args.workers)
    cycles = [r["cycles"] if r["converged"] else math.inf for r in rows]
    summ = {
        "vertices": p.num_vertices, "edges": p.num_edges, "k": p.k,
        "trials": len(rows), "converged": sum(r["converged"] for r in rows),
        "median_cycles": bench.finite_median(cycles),
        "all_proper": all(r["proper"] for r in rows if r["converged"]),
    }
    if args.hist:
        summ["cycles_histogram"] = bench.log2_histogram(cycles)
    if args.routing:
        from .coloring import build_coloring_network
        from .hw import build_hw_coloring

        net = build_hw_coloring(p).net if hw else build_coloring_network(p).net
        Path(args.routing).write_text(net.routing_text() + "\n")
    payload = {"settings": _settings(args, graph=args.graph, channel=args.channel,
                                     max_cycles=args.max_cycles,
                                     check_interval=args.check_interval),
               "rows": rows, "summary": summ}
    _emit(args, payload, rows)
    return EXIT_OK if summ["converged"] else EXIT_NONE_CONVERGED


def cmd_color(args) -> int:
    return _color(args, hw=False)


def cmd_hw_color(args) -> int:
    return _color(args, hw=True)


def cmd_tsp(args) -> int:
    try:
        p = read_distance_matrix(_read(args.matrix))
    except ValueError as e:
        raise UsageError(f"{args.matrix}: {e}") from None
    ch = _channel(args) if args.channel == "lossy" else None
    rows, results = [], []
    for t in range(args.trials):
        seed = bench.trial_seed(args.seed, t)
        sample = sample_tours(p, args.num_tours, args.K, args.eta, seed, channel=ch)
        s = summary(sample)
        s.update(trial=t, seed=seed)
        if args.hist:
            s["tours"] = [{"tour": "-".join(map(str, tour)), "length": length, "count": c}
                          for tour, length, c in sample.table()]
        results.append(s)
        rows.extend({"trial": t, **r} for r in tour_rows(sample))
    payload = {"settings": _settings(args, matrix=args.matrix, num_tours=args.num_tours,
                                     K=args.K, eta=args.eta, channel=args.channel),
               "trials": results}
    _emit(args, payload, rows)
    return EXIT_OK


# --------------------------------------------------------------------------
# parser


def _common(p: argparse.ArgumentParser, cycles_default: float) -> None:
    p.add_argument("--seed", type=int, default=0, help="master seed")
    p.add_argument("--trials", type=_positive_int, default=1)
    p.add_argument("--channel", choices=("ideal", "lossy"), default="ideal")
    p.add_argument("--loss-prob", type=_probability, default=0.1)
    p.add_argument("--delay-frac", type=_nonneg_float, default=0.1,
                   help="max delay as a fraction of the reference period")
    p.add_argument("--delay-ref", choices=("mean", "target"), default="mean",
                   help="reference period: network mean or the receiving node's own")
    p.add_argument("--check-interval", type=_positive_float, default=20.0,
                   help="cycles between convergence checks")
    p.add_argument("--max-cycles", type=_positive_float, default=cycles_default)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--hist", action="store_true", help="add log2-binned histograms")
    p.add_argument("--out", help="write to this file instead of stdout")
    p.add_argument("--workers", type=_positive_int, default=1)


def _sat_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("files", nargs="+", help="DIMACS CNF files or directories")
    p.add_argument("--x", type=_positive_float, default=1.0, help="probSAT make base")
    p.add_argument("--y", type=_positive_float, default=2.06, help="probSAT break base")
    p.add_argument("--max-flips", type=_positive_int, default=10**6)
    p.add_argument("--routing", help="write the routing table of the first instance here")


def _positive_int(s: str) -> int:
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _positive_float(s: str) -> float:
    v = float(s)
    if not v > 0 or not math.isfinite(v):
        raise argparse.ArgumentTypeError("must be a positive number")
    return v


def _nonneg_float(s: str) -> float:
    v = float(s)
    if not v >= 0 or not math.isfinite(v):
        raise argparse.ArgumentTypeError("must be >= 0")
    return v


def _probability(s: str) -> float:
    v = float(s)
    if not 0 <= v < 1:
        raise argparse.ArgumentTypeError("must lie in [0, 1)")
    return v


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="oscnet",
                                 description="Oscillator-network solvers and benchmarks.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sat-seq", help="sequential probSAT")
    _common(p, 1e6)
    _sat_flags(p)
    p.set_defaults(func=cmd_sat_seq)

    p = sub.add_parser("sat-net", help="probSAT oscillator network")
    _common(p, 1e6)
    _sat_flags(p)
    p.set_defaults(func=cmd_sat_net)

    p = sub.add_parser("hw-sat", help="3-SAT on the emulated chip")
    _common(p, 1e5)
    _sat_flags(p)
    p.set_defaults(func=cmd_hw_sat)

    p = sub.add_parser("bench", help="sequential vs network SAT benchmark")
    _common(p, 1e6)
    _sat_flags(p)
    p.add_argument("--configs", default="sequential,ideal,lossy",
                   help="comma list from sequential,ideal,lossy,hw")
    p.set_defaults(func=cmd_bench)

    for name, func, cap in (("color", cmd_color, 1e4), ("hw-color", cmd_hw_color, 1e5)):
        p = sub.add_parser(name, help=("graph coloring network" if name == "color"
                                       else "graph coloring on the emulated chip"))
        _common(p, cap)
        p.add_argument("graph", help="DIMACS .col file or one of " + ", ".join(BUILTIN_GRAPHS))
        p.add_argument("--k", type=_positive_int, default=None, help="number of colors")
        p.add_argument("--routing", help="write the routing table here")
        p.set_defaults(func=func)

    p = sub.add_parser("tsp", help="sample tours from the TSP network")
    _common(p, 1e6)
    p.add_argument("matrix", help="distance matrix (plain or TSPLIB EXPLICIT)")
    p.add_argument("--num-tours", type=_positive_int, default=10**4)
    p.add_argument("--K", type=_positive_float, default=1.0, help="frequency scale")
    p.add_argument("--eta", type=_nonneg_float, default=1e-3,
                   help="relative frequency noise width")
    p.set_defaults(func=cmd_tsp)
    return ap


def run_cli(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    if getattr(args, "configs", None):
        bad = set(args.configs.split(",")) - set(bench.SAT_CONFIGS + ("hw",))
        if bad:
            print(f"oscnet: unknown config(s) {', '.join(sorted(bad))}", file=sys.stderr)
            return EXIT_USAGE
    try:
        return args.func(args)
    except UsageError as e:
        print(f"oscnet: {e}", file=sys.stderr)
        return EXIT_USAGE


def main() -> None:
    sys.exit(run_cli())
