"""Command-line front end: ``chunglu {moments,sample,eig,predict,experiment}``.

Exit codes: 0 pass, 1 statistical-acceptance failure, 2 input error,
3 non-graphical degrees, 4 detachment failure, 5 replica hard-failure.
Vertex labels on the command line and in output are 1-based.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .degrees import DegreeSequence, check_assumptions, degree_vector_e, moments, read_degree_file
from .errors import ChungLuError, InvalidInput, ReplicaFailure
from .experiment import (ExperimentConfig, default_tracked, load_config, run_experiment, write_outputs,
                         write_replica_csv)
from .sampler import (CHUNG_LU, Model, SampleSeed, expected_edge_count, read_edge_list, row_sums,
                      sample_fast, write_edge_list)
from .spectral import (CenteredOperator, expansion_diagnostics, eigvec_from_resolvent,
                       power_iteration_top, secular_solve, spectral_norm_H)
from .theory import predict


def _add_degree_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_mutually_exclusive_group()
    g.add_argument("--file", help="degree file, one value per line")
    g.add_argument("--constant", type=float, help="every vertex gets this degree")
    g.add_argument("--uniform", nargs=2, type=int, metavar=("A", "B"), help="i.i.d. integer degrees in [A, B]")
    p.add_argument("--n", type=int, help="number of vertices")
    p.add_argument("--model", default=None, help="chung_lu (default), grg or erdos_renyi:<p>")
    p.add_argument("--seed", type=int, default=None, help="master seed (default 0)")
    p.add_argument("--xi", type=float, default=None, help="log-power exponent, must exceed 2 (default 2.1)")
    p.add_argument("--json", action="store_true", help="machine-readable output")


def _degrees(args) -> DegreeSequence:
    model = Model.parse(args.model or "chung_lu")
    seed = args.seed or 0
    if args.file:
        return read_degree_file(args.file)
    if args.n is None:
        raise InvalidInput("--n is required unless --file is given")
    if args.constant is not None:
        return DegreeSequence.constant(args.n, args.constant)
    if args.uniform:
        return DegreeSequence.uniform_integers(args.n, args.uniform[0], args.uniform[1], seed)
    if model.kind == "erdos_renyi":
        return DegreeSequence.constant(args.n, args.n * model.p)
    raise InvalidInput("no degree source: give --file, --constant or --uniform")


def _emit(args, data: dict, lines: list[str]) -> None:
    if args.json:
        print(json.dumps(data, indent=2, default=_jsonable))
    else:
        print("\n".join(lines))


def _jsonable(x):
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(type(x).__name__)


def _table(pairs) -> list[str]:
    width = max(len(k) for k, _ in pairs)
    return [f"{k:<{width}}  {_fmt(v)}" for k, v in pairs]


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.10g}"
    return str(v)


def cmd_moments(args) -> int:
    seq = _degrees(args)
    mom = moments(seq)
    rep = check_assumptions(seq, 2.1 if args.xi is None else args.xi)
    data = {"moments": dict(mom.__dict__), "rank_one_eigenvalue": mom.rank_one_eigenvalue,
            "assumptions": rep.as_dict()}
    pairs = list(mom.__dict__.items()) + [("m2/m1", mom.rank_one_eigenvalue)]
    pairs += [("D1 lower ratio", rep.d1_lower_ratio), ("D1 lower", rep.d1_lower_verdict),
              ("D1 upper ratio", rep.d1_upper_ratio), ("D1 upper", rep.d1_upper_verdict),
              ("D2 ratio", rep.d2_ratio), ("D2", rep.d2_verdict), ("graphical", rep.graphical)]
    _emit(args, data, _table(pairs))
    return 0


def cmd_sample(args) -> int:
    seq = _degrees(args)
    mom = moments(seq)
    model = Model.parse(args.model) if args.model else CHUNG_LU
    loops = not args.no_self_loops
    adj = sample_fast(seq, mom, loops, SampleSeed(args.seed or 0, args.replica), model)
    mean, var = expected_edge_count(seq, mom, model, loops)
    deg = row_sums(adj)
    if args.out:
        write_edge_list(adj, args.out)
    data = {"n": adj.n, "edges": adj.edge_count, "expected_edges": mean, "edge_count_sd": var ** 0.5,
            "edges_z": (adj.edge_count - mean) / var ** 0.5 if var > 0 else 0.0,
            "realized_degree": {"min": int(deg.min()), "mean": float(deg.mean()), "max": int(deg.max())},
            "output": args.out}
    lines = _table([("n", adj.n), ("edges", adj.edge_count), ("expected edges", mean),
                    ("edge count sd", var ** 0.5), ("edges z", data["edges_z"]),
                    ("realized degree min", int(deg.min())), ("realized degree mean", float(deg.mean())),
                    ("realized degree max", int(deg.max())), ("written to", args.out or "-")])
    _emit(args, data, lines)
    return 0


def cmd_eig(args) -> int:
    if args.graph:
        adj = read_edge_list(args.graph)
        if args.file or args.constant is not None or args.uniform:
            seq = _degrees(args)
            if seq.n != adj.n:
                raise InvalidInput(f"degree sequence has {seq.n} entries, graph has {adj.n} vertices")
        else:
            # without a degree sequence, centre at the realized degrees
            seq = DegreeSequence(row_sums(adj).astype(float))
    else:
        seq = _degrees(args)
        model = Model.parse(args.model) if args.model else CHUNG_LU
        adj = sample_fast(seq, moments(seq), True, SampleSeed(args.seed or 0, 0), model)
    mom = moments(seq)
    e = degree_vector_e(seq, mom)
    op = CenteredOperator(adj, e)
    norm_h = spectral_norm_H(op)
    data = {"n": adj.n, "norm_H": norm_h}
    power = secular = None
    if args.solver in ("power", "both"):
        power = power_iteration_top(adj, start=e / np.linalg.norm(e))
        data["power"] = {"lambda1": power.value, "iterations": power.iterations, "residual": power.residual}
    if args.solver in ("secular", "both"):
        res = secular_solve(op, e, norm_h)
        secular = eigvec_from_resolvent(res, op)
        data["secular"] = {"lambda1": res.lam, "newton_steps": res.newton_steps,
                           "bisection_steps": res.bisection_steps, "residual": res.residual}
    eig = power if power is not None else secular
    if power is not None and secular is not None:
        data["cross_gap"] = abs(power.value - secular.value)
        data["cross_angle"] = float(np.linalg.norm(power.vector - (power.vector @ secular.vector) * secular.vector))
    diag = expansion_diagnostics(op, e, eig, norm_h)
    data["expansion"] = {"L": diag.L, "partial_sum": diag.partial_sum, "gap": diag.gap,
                         "ratio_norm": diag.ratio_norm, "tail_bound": diag.tail_bound,
                         "qforms": [float(q) for q in diag.qforms]}
    data["lambda1"] = eig.value
    k = min(adj.n, args.show)
    data["v1_head"] = [float(x) for x in eig.vector[:k]]
    pairs = [("n", adj.n), ("lambda1", eig.value), ("||H||", norm_h)]
    if power is not None:
        pairs += [("power lambda1", power.value), ("power iterations", power.iterations)]
    if secular is not None:
        pairs += [("secular lambda1", secular.value), ("secular newton steps", data["secular"]["newton_steps"])]
    if "cross_gap" in data:
        pairs += [("cross-method gap", data["cross_gap"]), ("cross-method angle", data["cross_angle"])]
    pairs += [("expansion depth L", diag.L), ("partial sum", diag.partial_sum), ("expansion gap", diag.gap),
              ("tail bound", diag.tail_bound), ("||H||/lambda1", diag.ratio_norm)]
    pairs += [(f"v1({i + 1})", float(eig.vector[i])) for i in range(k)]
    _emit(args, data, _table(pairs))
    return 0


def cmd_predict(args) -> int:
    seq = _degrees(args)
    xi = 2.1 if args.xi is None else args.xi
    rep = predict(seq, None, xi)
    coords = default_tracked(seq) if not args.coords else tuple(c - 1 for c in args.coords)
    if min(coords) < 0 or max(coords) >= seq.n:
        raise InvalidInput("coordinate out of range")
    data = rep.to_dict(coords)
    data["coordinates"] = [c + 1 for c in coords]
    pairs = [(k, v) for k, v in data.items() if not isinstance(v, list)]
    for pos, c in enumerate(coords):
        pairs += [(f"v1_mean({c + 1})", data["v1_mean"][pos]), (f"v1_z_scale({c + 1})", data["v1_z_scale"][pos])]
    _emit(args, data, _table(pairs))
    return 0


def _experiment_config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig(degree_source="auto")
    over = {}
    if args.file:
        over.update(degree_source="file", degree_file=args.file)
    elif args.constant is not None:
        over.update(degree_source="constant", constant=args.constant)
    elif args.uniform:
        over.update(degree_source="uniform", uniform_low=args.uniform[0], uniform_high=args.uniform[1])
    for name in ("n", "model", "xi", "replicas", "solver", "alpha"):
        if getattr(args, name) is not None:
            over[name] = getattr(args, name)
    if args.seed is not None:
        over["master_seed"] = args.seed
    if args.coords:
        over["tracked"] = tuple(c - 1 for c in args.coords)
    if args.timing:
        over["record_timing"] = True
    return replace(cfg, **over)


def cmd_experiment(args) -> int:
    cfg = _experiment_config(args)
    try:
        summary = run_experiment(cfg, workers=args.workers)
    except ReplicaFailure as exc:
        if args.out and exc.partial:
            Path(args.out).mkdir(parents=True, exist_ok=True)
            write_replica_csv(cfg, exc.partial, Path(args.out) / "replicas.partial.csv")
        raise
    paths = write_outputs(summary, args.out) if args.out else {}
    if args.json:
        print(summary.to_json(), end="")
    else:
        width = max(len(k) for k in summary.checks)
        print(f"{'check':<{width}}  {'value':>14}  {'threshold':>12}  verdict")
        for name, c in summary.checks.items():
            verdict = {True: "PASS", False: "FAIL", None: "n/a"}[c["passed"]]
            value = c["value"]
            shown = f"{value:.6g}" if isinstance(value, float) else str(value)
            thr = c["threshold"]
            thr = f"{thr:.6g}" if isinstance(thr, float) else str(thr)
            print(f"{name:<{width}}  {shown:>14}  {thr:>12}  {verdict}")
        lam = summary.sections.get("lambda1", {})
        if "gap_in_se" in lam:
            print(f"mean lambda1 {lam['mean']:.6f} +- {lam['se_mean']:.6f}, predicted {lam['predicted_mean']:.6f}, "
                  f"rank-one {lam['rank_one_value']:.6f}")
        for kind, path in paths.items():
            print(f"wrote {kind}: {path}")
        print("overall:", "PASS" if summary.passed else "FAIL")
    return 0 if summary.passed else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="chunglu", description="Principal eigenpair statistics of Chung-Lu graphs.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("moments", help="degree moments and assumption diagnostics")
    _add_degree_flags(p)
    p.set_defaults(func=cmd_moments)

    p = sub.add_parser("sample", help="sample one graph and write its edge list")
    _add_degree_flags(p)
    p.add_argument("--replica", type=int, default=0, help="replica index within the seed")
    p.add_argument("--no-self-loops", action="store_true")
    p.add_argument("--out", help="edge-list file to write")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("eig", help="principal eigenpair and expansion diagnostics")
    _add_degree_flags(p)
    p.add_argument("--graph", help="edge-list file; sampled from the degree source if omitted")
    p.add_argument("--solver", choices=("power", "secular", "both"), default="power")
    p.add_argument("--show", type=int, default=5, help="number of leading eigenvector entries shown")
    p.set_defaults(func=cmd_eig)

    p = sub.add_parser("predict", help="closed-form predictions")
    _add_degree_flags(p)
    p.add_argument("--coords", type=int, nargs="+", help="1-based vertices to report")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("experiment", help="Monte Carlo campaign with verdict table")
    _add_degree_flags(p)
    p.add_argument("--config", help="flat JSON config; flags override its values")
    p.add_argument("--replicas", type=int)
    p.add_argument("--solver", choices=("power", "secular", "both"))
    p.add_argument("--alpha", type=float)
    p.add_argument("--coords", type=int, nargs="+", help="1-based tracked vertices")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--timing", action="store_true", help="record wall-clock per replica")
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ChungLuError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
