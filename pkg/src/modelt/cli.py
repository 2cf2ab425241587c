"""``modelt`` command line.

Exit codes: 0 success, 2 argument or validation error, 3 graph error,
4 numeric failure.  Result files go to ``--out``; stdout only carries a JSON
verdict or a one-line summary.  Every run that writes files also writes a
manifest (``--manifest`` or ``<out>.manifest.json``) that ``modelt replay``
turns back into byte-identical outputs.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from ._accel import BACKEND
from .dynamics import (
    Explicit,
    Params,
    TrajectoryPolicy,
    initial_wealth,
    run,
    write_trajectory_csv,
)
from .errors import GraphError, ModelTError, NumericError
from .graph import (
    DENSE_CAP,
    FAMILIES,
    Graph,
    build_family,
    build_gnp_connected,
    from_edge_list,
    largest_eigenvalue,
    neighborhood_union_bound,
    require_connected,
    spectrum,
)
from .meanfield import deviation_rate, meanfield_run
from .stability import asymptotic_classify, classify, phase_grid

EXIT_OK, EXIT_USAGE, EXIT_GRAPH, EXIT_NUMERIC = 0, 2, 3, 4


class UsageError(Exception):
    pass


# --------------------------------------------------------------------------
# argument helpers
# --------------------------------------------------------------------------

def parse_graph_spec(spec: str) -> Graph:
    """Build a graph from ``star:N``, ``complete:N``, ``path:N``, ``cycle:N``,
    ``gnp:N:P:SEED`` or ``file:PATH``."""
    kind, _, rest = spec.partition(":")
    if kind == "file":
        path = Path(rest)
        if not rest or not path.is_file():
            raise UsageError(f"graph file not found: {rest}")
        return from_edge_list(path.read_text(encoding="utf-8"))
    try:
        if kind in FAMILIES:
            return build_family(kind, int(rest))
        if kind == "gnp":
            n, p, seed = rest.split(":")
            return build_gnp_connected(int(n), float(p), int(seed))
    except ValueError as exc:
        if isinstance(exc, ModelTError):
            raise
        raise UsageError(f"bad graph spec {spec!r}: {exc}") from None
    raise UsageError(f"bad graph spec {spec!r}; expected one of "
                     "star:N complete:N path:N cycle:N gnp:N:P:SEED file:PATH")


def _load_schedule(path: str) -> Explicit:
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"schedule file not found: {path}")
    text = p.read_text(encoding="utf-8")
    values = np.loadtxt(text.splitlines(), delimiter="," if "," in text else None, ndmin=1)
    if values.ndim == 2 and values.shape[1] == 1:
        values = values[:, 0]
    return Explicit(values)


def _params(args, allow_files: bool = True) -> Params:
    fields = {}
    for name in ("eta", "mu", "k"):
        path = getattr(args, f"{name}_file", None) if allow_files else None
        value = getattr(args, name)
        if path is not None and value is not None:
            raise UsageError(f"give either --{name} or --{name}-file, not both")
        if path is not None:
            fields[name] = _load_schedule(path)
        elif value is not None:
            fields[name] = value
        else:
            raise UsageError(f"--{name} is required")
    return Params(**fields)


def _analysis_params(args) -> Params:
    p = _params(args, allow_files=False)
    if not p.nonzero_constant:
        raise UsageError("eta, mu and k must be nonzero constants")
    return p


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _threads() -> int:
    raw = os.environ.get("MODEL_T_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            raise UsageError(f"MODEL_T_THREADS must be an integer, got {raw!r}")
    return os.cpu_count() or 1


def _write_text(path: str, text: str):
    Path(path).write_text(text, encoding="utf-8")


def _write_manifest(args, argv: list[str], outputs: list[str]):
    target = args.manifest or (f"{args.out}.manifest.json" if getattr(args, "out", None) else None)
    if target is None:
        return
    resolved = {k: v for k, v in vars(args).items() if k != "handler"}
    manifest = {
        "tool": "modelt",
        "version": __version__,
        "backend": BACKEND,
        "command": args.command,
        "argv": argv,
        "resolved": resolved,
        "outputs": outputs,
    }
    _write_text(target, json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _emit_json(obj: dict, args):
    text = json.dumps(obj)
    print(text)
    if getattr(args, "out", None):
        _write_text(args.out, text + "\n")


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------

def cmd_simulate(args, argv):
    g = parse_graph_spec(args.graph)
    require_connected(g)
    p = _params(args)
    state0 = initial_wealth(args.w0, g.n, args.seed)
    policy = TrajectoryPolicy.SUMMARY if args.summary else TrajectoryPolicy.FULL
    result = run(state0, g, p, args.steps, args.seed, record=policy,
                 keep_records=args.records is not None)
    outputs = []
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            result.write_trajectory_csv(fh)
        outputs.append(args.out)
    if args.records:
        with open(args.records, "w", encoding="utf-8", newline="\n") as fh:
            result.write_records_csv(fh)
        outputs.append(args.records)
    _write_manifest(args, argv, outputs)
    w = result.final.w
    print(f"steps={result.steps} final_total={float(np.sum(w)):.17g} "
          f"debt_count={int(np.sum(w < 0))}")
    return EXIT_OK


def cmd_meanfield(args, argv):
    g = parse_graph_spec(args.graph)
    require_connected(g)
    if args.deviation_rate:
        p = _params(args, allow_files=False)
        rate = deviation_rate(g, p, epsilon=args.epsilon, steps=args.steps,
                              direction=args.direction, seed=args.seed)
        _emit_json(json.loads(rate.to_json()), args)
        _write_manifest(args, argv, [args.out] if args.out else [])
        return EXIT_OK
    p = _params(args)
    state0 = initial_wealth(args.w0, g.n, args.seed)
    policy = TrajectoryPolicy.SUMMARY if args.summary else TrajectoryPolicy.FULL
    rows = meanfield_run(state0, g, p, args.steps, record=policy)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            write_trajectory_csv(fh, policy, state0.t, rows)
    _write_manifest(args, argv, [args.out] if args.out else [])
    final_total = rows[-1].sum() if policy is TrajectoryPolicy.FULL else rows[-1, 4]
    print(f"steps={args.steps} final_total={float(final_total):.17g}")
    return EXIT_OK


def cmd_stability(args, argv):
    p = _analysis_params(args)
    if args.asymptotic:
        if args.graph:
            raise UsageError("--asymptotic and --graph are mutually exclusive")
        verdict = asymptotic_classify(p, args.tol)
    else:
        if not args.graph:
            raise UsageError("give --graph SPEC or --asymptotic")
        verdict = classify(parse_graph_spec(args.graph), p, args.tol)
    _emit_json(verdict.to_dict(), args)
    _write_manifest(args, argv, [args.out] if args.out else [])
    return EXIT_OK


def cmd_spectrum(args, argv):
    g = parse_graph_spec(args.graph)
    require_connected(g)
    if args.lambda1_only:
        lam1 = largest_eigenvalue(g)
        bound = neighborhood_union_bound(g)
        report = {"n": g.n, "eigenvalues": None, "lambda1": lam1, "lemma2_bound": bound,
                  "bound_holds": bool(lam1 <= bound + args.tol)}
    else:
        if g.n > DENSE_CAP:
            raise UsageError(f"n={g.n} exceeds the dense cap {DENSE_CAP}; use --lambda1-only")
        report = spectrum(g, tol=args.tol).to_dict(args.tol)
    _emit_json(report, args)
    _write_manifest(args, argv, [args.out] if args.out else [])
    return EXIT_OK


def cmd_phase_diagram(args, argv):
    if args.resolution < 2:
        raise UsageError("--resolution must be at least 2")
    graph = None
    if args.mode == "graph":
        if not args.graph:
            raise UsageError("--mode graph needs --graph SPEC")
        graph = parse_graph_spec(args.graph)
    grid = phase_grid(args.k, tuple(args.eta_range), tuple(args.mu_range), args.resolution,
                      mode=args.mode, graph=graph, tol=args.tol)
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        grid.write_csv(fh)
    _write_manifest(args, argv, [args.out])
    counts = " ".join(f"{k}={v}" for k, v in sorted(grid.counts().items()))
    print(f"cells={grid.value.size} {counts}")
    return EXIT_OK


SWEEP_HEADER = ("eta,mu,k,seed,steps,final_total,expected_total,"
                "final_mean,final_var,final_min,final_max,debt_count")


def cmd_sweep(args, argv):
    g = parse_graph_spec(args.graph)
    require_connected(g)
    seeds = args.seeds if args.seeds else list(range(args.replicates))
    jobs = [(e, m, k, s) for e in args.eta for m in args.mu for k in args.k for s in seeds]
    for e, m, k, _ in jobs:
        Params(e, m, k)  # validate before any work starts

    def one(job):
        e, m, k, s = job
        state0 = initial_wealth(args.w0, g.n, s)
        res = run(state0, g, Params(e, m, k), args.steps, s,
                  record=TrajectoryPolicy.SUMMARY, keep_records=False)
        expected = float(np.sum(state0.w)) * m ** args.steps
        return job, res.rows[-1], expected

    with ThreadPoolExecutor(max_workers=min(_threads(), max(1, len(jobs)))) as pool:
        results = list(pool.map(one, jobs))

    lines = [SWEEP_HEADER]
    for (e, m, k, s), row, expected in results:
        mean, var, lo, hi, total, debt = row.tolist()
        fields = [e, m, k]
        lines.append(",".join(format(x, ".17g") for x in fields)
                     + f",{s},{args.steps},{total:.17g},{expected:.17g},"
                     f"{mean:.17g},{var:.17g},{lo:.17g},{hi:.17g},{int(debt)}")
    _write_text(args.out, "\n".join(lines) + "\n")
    _write_manifest(args, argv, [args.out])
    print(f"runs={len(results)} out={args.out}")
    return EXIT_OK


def cmd_replay(args, argv):
    path = Path(args.manifest_file)
    if not path.is_file():
        raise UsageError(f"manifest not found: {args.manifest_file}")
    manifest = json.loads(path.read_text(encoding="utf-8"))
    if manifest.get("tool") != "modelt" or "argv" not in manifest:
        raise UsageError(f"{args.manifest_file} is not a modelt manifest")
    parser = build_parser()
    replayed = parser.parse_args(manifest["argv"])
    for key, value in manifest.get("resolved", {}).items():
        setattr(replayed, key, value)
    return replayed.handler(replayed, manifest["argv"])


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="modelt", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"modelt {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="64-bit seed")
    common.add_argument("--tol", type=float, default=1e-9, help="marginal band around 1")
    common.add_argument("--out", help="output path")
    common.add_argument("--manifest", help="run manifest path (default: <out>.manifest.json)")

    def param_flags(p, files: bool):
        p.add_argument("--eta", type=float, help="Fermi sharpness eta")
        p.add_argument("--mu", type=float, help="multiplicative factor mu")
        p.add_argument("--k", type=float, help="transaction amount k")
        if files:
            p.add_argument("--eta-file", help="per-step eta values, one per line")
            p.add_argument("--mu-file", help="per-step mu values (one row per step, "
                                             "optionally one column per agent)")
            p.add_argument("--k-file", help="per-step k values, one per line")

    s = sub.add_parser("simulate", parents=[common], help="stochastic Model T run")
    s.add_argument("--graph", required=True)
    param_flags(s, files=True)
    s.add_argument("--steps", type=int, required=True)
    s.add_argument("--w0", default="uniform:0:10",
                   help="initial wealth: const:C | uniform:LO:HI | list:v1,v2,...")
    s.add_argument("--summary", action="store_true", help="write per-step summary rows")
    s.add_argument("--records", help="step-record CSV path")
    s.set_defaults(handler=cmd_simulate)

    m = sub.add_parser("meanfield", parents=[common], help="iterate the mean-field map")
    m.add_argument("--graph", required=True)
    param_flags(m, files=True)
    m.add_argument("--steps", type=int, default=200)
    m.add_argument("--w0", default="uniform:0:10")
    m.add_argument("--summary", action="store_true")
    m.add_argument("--deviation-rate", action="store_true",
                   help="print the measured growth rate of a small deviation as JSON")
    m.add_argument("--epsilon", type=float, default=1e-6)
    m.add_argument("--direction", choices=("lambda1", "random"), default="lambda1")
    m.set_defaults(handler=cmd_meanfield)

    st = sub.add_parser("stability", parents=[common], help="equal-wealth stability verdict")
    st.add_argument("--graph")
    st.add_argument("--asymptotic", action="store_true")
    param_flags(st, files=False)
    st.set_defaults(handler=cmd_stability)

    sp = sub.add_parser("spectrum", parents=[common], help="Laplacian spectrum report")
    sp.add_argument("--graph", required=True)
    sp.add_argument("--lambda1-only", action="store_true")
    sp.set_defaults(handler=cmd_spectrum)

    ph = sub.add_parser("phase-diagram", parents=[common], help="(eta, mu) stability grid")
    ph.add_argument("--k", type=float, default=1.0)
    ph.add_argument("--eta-range", type=float, nargs=2, default=[-10.0, 10.0],
                    metavar=("LO", "HI"))
    ph.add_argument("--mu-range", type=float, nargs=2, default=[-2.0, 2.0],
                    metavar=("LO", "HI"))
    ph.add_argument("--resolution", type=int, default=400)
    ph.add_argument("--mode", choices=("asymptotic", "graph"), default="asymptotic")
    ph.add_argument("--graph")
    ph.set_defaults(handler=cmd_phase_diagram)

    sw = sub.add_parser("sweep", parents=[common], help="ensemble of stochastic runs")
    sw.add_argument("--graph", required=True)
    sw.add_argument("--eta", type=_float_list, required=True, help="comma-separated values")
    sw.add_argument("--mu", type=_float_list, required=True)
    sw.add_argument("--k", type=_float_list, required=True)
    sw.add_argument("--steps", type=int, required=True)
    sw.add_argument("--seeds", type=_int_list, help="comma-separated seeds")
    sw.add_argument("--replicates", type=int, default=1, help="seeds 0..R-1 when --seeds absent")
    sw.add_argument("--w0", default="uniform:0:10")
    sw.set_defaults(handler=cmd_sweep)

    rp = sub.add_parser("replay", help="re-run a manifest")
    rp.add_argument("manifest_file")
    rp.set_defaults(handler=cmd_replay)
    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.command in ("phase-diagram", "sweep") and not args.out:
        print(f"modelt {args.command}: --out is required", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.handler(args, argv)
    except UsageError as exc:
        print(f"modelt {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except GraphError as exc:
        print(f"modelt {args.command}: graph error: {exc}", file=sys.stderr)
        return EXIT_GRAPH
    except NumericError as exc:
        print(f"modelt {args.command}: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ModelTError as exc:
        print(f"modelt {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"modelt {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
