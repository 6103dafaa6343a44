"""Command line driver: ``geodock {dock,bench,profile,gen}``.

Exit codes: 0 success, 1 runtime failure, 2 usage or input error.
"""
from __future__ import annotations

import argparse
import logging
import sys
from contextlib import contextmanager

from . import io as gio
from .bench import sweep
from .docking import DockParams, Profile, dock_ligand, expected_visits
from .errors import ContractError, LigandValidationError, ParseError
from .pipeline import SUMMARY_COLUMNS, NodeConfig, run_screening
from .synth import make_library, make_pocket

DEFAULTS = DockParams()
DEFAULT_NODE = NodeConfig(n_workers=1)


class UsageError(Exception):
    pass


def _positive(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def _non_negative(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {v}")
    return v


def _steps(text):
    try:
        steps = tuple(int(t) for t in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a,b,c got {text!r}") from None
    if len(steps) != 3 or min(steps) < 1:
        raise argparse.ArgumentTypeError(f"expected three counts >= 1, got {text!r}")
    return steps


def _span(low):
    def parse(text):
        a, sep, b = text.partition("..")
        try:
            lo, hi = int(a), int(b if sep else a)
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected A..B, got {text!r}") from None
        if lo < low or hi < lo:
            raise argparse.ArgumentTypeError(f"invalid range {text!r} (need {low} <= A <= B)")
        return range(lo, hi + 1)
    return parse


def _dock_flags(p):
    g = p.add_argument_group("docking")
    g.add_argument("--restarts", type=_positive, default=DEFAULTS.n_restarts, help="restarts N (default %(default)s)")
    g.add_argument("--reps", type=_positive, default=DEFAULTS.num_repetitions,
                   help="optimization passes per restart (default %(default)s)")
    g.add_argument("--rot-steps", type=_steps, default=DEFAULTS.rotation_steps, metavar="A,B,C",
                   help="Euler ZYZ grid steps (default 16,16,8)")
    g.add_argument("--dihedral-steps", type=_positive, default=DEFAULTS.dihedral_steps,
                   help="dihedral candidates per rotamer (default %(default)s)")
    g.add_argument("--clash", type=float, default=DEFAULTS.clash_factor,
                   help="bump-check clash factor (default %(default)s)")
    g.add_argument("--seed", type=int, default=DEFAULTS.seed, help="restart seed (default %(default)s)")


def _node_flags(p, workers_type=_positive):
    g = p.add_argument_group("node")
    g.add_argument("--workers", type=workers_type, default=None,
                   help="worker threads (default $GEODOCK_WORKERS or CPU count)")
    g.add_argument("--devices", type=_non_negative, default=DEFAULT_NODE.n_devices,
                   help="device lanes (default %(default)s)")
    g.add_argument("--lane-width", type=_positive, default=DEFAULT_NODE.lane_width,
                   help="threads per device lane (default %(default)s)")
    g.add_argument("--mode", choices=("real", "synthetic"), default="real")
    g.add_argument("--t-align", type=float, default=DEFAULT_NODE.t_align_device,
                   help="synthetic device alignment time (default %(default)s)")
    g.add_argument("--t-opt", type=float, default=DEFAULT_NODE.t_opt_cpu,
                   help="synthetic CPU optimization time (default %(default)s)")
    g.add_argument("--t-align-cpu", type=float, default=DEFAULT_NODE.t_align_cpu,
                   help="synthetic CPU alignment time (default %(default)s)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="geodock", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("dock", help="dock a ligand library into a pocket")
    p.add_argument("--pocket", required=True, help="pocket file (.pkt)")
    p.add_argument("--ligands", required=True, help="ligand library (.lgd)")
    p.add_argument("--out", default="-", help="results CSV (default stdout)")
    p.add_argument("--metrics", default=None, help="metrics CSV")
    p.add_argument("--timings", action="store_true",
                   help="fill per-ligand timing columns (results are then not byte-stable)")
    _dock_flags(p)
    _node_flags(p)

    p = sub.add_parser("bench", help="sweep worker/device counts and report throughput")
    p.add_argument("--pocket", help="pocket file (real mode)")
    p.add_argument("--ligands", help="ligand library (real mode)")
    p.add_argument("--out", default="-", help="sweep CSV (default stdout)")
    p.add_argument("--sweep-workers", type=_span(1), default=range(1, 17), metavar="A..B")
    p.add_argument("--sweep-devices", type=_span(0), default=range(1, 2), metavar="A..B")
    p.add_argument("--n-ligands", type=_positive, default=1500,
                   help="simulated batch size in synthetic mode (default %(default)s)")
    _dock_flags(p)
    _node_flags(p)

    p = sub.add_parser("profile", help="per-kernel time share and visit counts")
    p.add_argument("--pocket", required=True)
    p.add_argument("--ligands", required=True)
    p.add_argument("--sample", type=_positive, default=1, help="ligands to profile (default %(default)s)")
    p.add_argument("--out", default=None, help="also write the table as CSV")
    _dock_flags(p)

    p = sub.add_parser("gen", help="write a synthetic pocket and ligand library")
    p.add_argument("--ligands", type=_positive, default=100, help="library size (default %(default)s)")
    p.add_argument("--atoms", type=_positive, default=12, help="atoms per ligand (default %(default)s)")
    p.add_argument("--rotamers", type=_non_negative, default=3, help="rotamers per ligand (default %(default)s)")
    p.add_argument("--dims", type=_steps, default=(24, 24, 24), metavar="NX,NY,NZ")
    p.add_argument("--spacing", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="ligand library path (.lgd)")
    p.add_argument("--pocket", required=True, help="pocket path (.pkt)")
    return parser


@contextmanager
def _open_out(path):
    if path in (None, "-"):
        yield sys.stdout
        return
    try:
        f = open(path, "w", encoding="utf-8", newline="")
    except OSError as exc:
        raise UsageError(f"cannot open {path}: {exc.strerror}") from None
    with f:
        yield f


def _read(path, parse):
    try:
        with open(path, encoding="utf-8") as f:
            return parse(f)
    except OSError as exc:
        raise UsageError(f"cannot open {path}: {exc.strerror}") from None
    except ParseError as exc:
        raise UsageError(f"{path}: {exc}") from None


def _params(args) -> DockParams:
    return DockParams(
        n_restarts=args.restarts,
        num_repetitions=args.reps,
        rotation_steps=args.rot_steps,
        dihedral_steps=args.dihedral_steps,
        clash_factor=args.clash,
        seed=args.seed,
    )


def _node(args, **override) -> NodeConfig:
    kw = dict(
        n_workers=args.workers,
        n_devices=args.devices,
        lane_width=args.lane_width,
        mode=args.mode,
        t_align_device=args.t_align,
        t_opt_cpu=args.t_opt,
        t_align_cpu=args.t_align_cpu,
    )
    kw.update(override)
    return NodeConfig(**kw)


def cmd_dock(args) -> int:
    if args.mode != "real":
        raise UsageError("dock runs in real mode only; use bench for synthetic runs")
    pocket = _read(args.pocket, gio.parse_pocket)
    library = _read(args.ligands, gio.parse_ligand_library)
    if not library:
        raise UsageError(f"{args.ligands}: empty ligand library")
    results, metrics = run_screening(library, pocket, _params(args), _node(args))
    with _open_out(args.out) as f:
        gio.write_results(results, f, timings=args.timings)
    if args.metrics:
        with _open_out(args.metrics) as f:
            gio.write_metrics(metrics, f)
    for err in metrics.errors:
        print(f"warning: {err}", file=sys.stderr)
    return 0


def cmd_bench(args) -> int:
    params = library = pocket = None
    if args.mode == "real":
        if not (args.pocket and args.ligands):
            raise UsageError("real-mode bench needs --pocket and --ligands")
        pocket = _read(args.pocket, gio.parse_pocket)
        library = _read(args.ligands, gio.parse_ligand_library)
        params = _params(args)
    base = _node(args, n_workers=1)
    rows = sweep(args.sweep_workers, args.sweep_devices, base, args.n_ligands, library, pocket, params)
    with _open_out(args.out) as f:
        gio.write_rows(
            [{**r, "throughput": f"{r['throughput']:.6g}",
              "device_utilization": f"{r['device_utilization']:.6g}",
              "mean_wait": f"{r['mean_wait']:.6g}"} for r in rows],
            SUMMARY_COLUMNS, f,
        )
    return 0


PROFILE_COLUMNS = ("function", "percent_time", "visits", "expected_visits")


def profile_table(library, pocket, params: DockParams) -> list[dict]:
    """Exclusive time share and call counts per kernel over ``library``."""
    prof = Profile()
    visits = {"generate_starting_pose": 0, "align_score": 0, "optimize_pose": 0,
              "fragment_rotation": 0, "bump_check": 0, "optimize_score": 0}
    expected = dict.fromkeys(visits, 0)
    for ligand in library:
        res = dock_ligand(ligand, pocket, params, profile=prof)
        n_rot = len(ligand.rotamers)
        exp = expected_visits(params, n_rot)
        passes = params.n_restarts * params.num_repetitions
        for key in ("align_score", "fragment_rotation", "bump_check", "optimize_score"):
            visits[key] += res.visits[key]
            expected[key] += exp[key]
        visits["generate_starting_pose"] += params.n_restarts
        expected["generate_starting_pose"] += params.n_restarts
        visits["optimize_pose"] += passes
        expected["optimize_pose"] += passes
    s = prof.seconds
    inner = s.get("rotate", 0.0) + s.get("bump_check", 0.0) + s.get("score", 0.0)
    times = {
        "generate_starting_pose": s.get("generate_starting_pose", 0.0),
        "align_score": s.get("align_ligand", 0.0),
        "optimize_pose": max(s.get("optimize_pose", 0.0) - inner, 0.0),
        "fragment_rotation": s.get("rotate", 0.0),
        "bump_check": s.get("bump_check", 0.0),
        "optimize_score": s.get("score", 0.0),
    }
    labels = {
        "generate_starting_pose": "generate_starting_pose",
        "align_score": "align_ligand (rotate+score)",
        "optimize_pose": "optimize_pose (self)",
        "fragment_rotation": "Rotate",
        "bump_check": "BumpCheck",
        "optimize_score": "Score",
    }
    total = sum(times.values()) or 1.0
    return [
        {"function": labels[k], "percent_time": 100.0 * times[k] / total,
         "visits": visits[k], "expected_visits": expected[k]}
        for k in labels
    ]


def cmd_profile(args) -> int:
    pocket = _read(args.pocket, gio.parse_pocket)
    library = _read(args.ligands, gio.parse_ligand_library)[: args.sample]
    if not library:
        raise UsageError(f"{args.ligands}: empty ligand library")
    rows = profile_table(library, pocket, _params(args))
    print(f"{'function':<30} {'% time':>8} {'visits':>12}")
    for r in rows:
        mark = "" if r["visits"] == r["expected_visits"] else f"  (expected {r['expected_visits']})"
        print(f"{r['function']:<30} {r['percent_time']:8.2f} {r['visits']:12d}{mark}")
    score_total = rows[1]["visits"] + rows[5]["visits"]
    print(f"{'score calls (total)':<30} {'':>8} {score_total:12d}")
    if args.out:
        with _open_out(args.out) as f:
            gio.write_rows(
                [{**r, "percent_time": f"{r['percent_time']:.3f}"} for r in rows], PROFILE_COLUMNS, f
            )
    return 0


def cmd_gen(args) -> int:
    pocket = make_pocket(args.seed, args.dims, args.spacing)
    library = make_library(args.ligands, args.atoms, args.rotamers, args.seed)
    with _open_out(args.pocket) as f:
        gio.write_pocket(pocket, f)
    with _open_out(args.out) as f:
        gio.write_ligand_library(library, f)
    return 0


COMMANDS = {"dock": cmd_dock, "bench": cmd_bench, "profile": cmd_profile, "gen": cmd_gen}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (UsageError, ContractError, LigandValidationError) as exc:
        print(f"geodock {args.command}: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        print(f"geodock {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
