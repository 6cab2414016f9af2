"""Command-line interface.

Subcommands: threshold (print the critical size), sample (write a hypergraph
file), run (one percolation, JSON), trajectory (recurrence CSV), classify
(fixed-point JSON), gw (branching-process coupling estimate), sweep (trial
grid CSV), decay (misclassification scan CSV).
"""

import argparse
import json
import sys

from .analytics import (
    branching_spec,
    fixed_point_classify,
    increment_diagnostics,
    simulate_total_progeny,
    trajectory_closed_form,
    trajectory_incremental,
)
from .lab import (
    ExperimentConfig,
    compare_to_analytics,
    failure_decay_scan,
    mix_seed,
    run_sweep,
)
from .model import ModelParams, critical_size, sample_hypergraph, sample_initial_set
from .percolation import run_bootstrap


def _add_model_args(p, need_r=True):
    p.add_argument("--n", type=int, required=True, help="vertex count")
    p.add_argument("--k", type=int, default=2, help="edge uniformity (default 2)")
    if need_r:
        p.add_argument("--r", type=int, default=2, help="infection threshold (default 2)")
    prob = p.add_mutually_exclusive_group(required=True)
    prob.add_argument("--p", type=float, help="edge probability")
    prob.add_argument(
        "--p-exponent", type=float, help="c such that p = n^-c", dest="p_exponent"
    )


def _add_initial_args(p):
    grp = p.add_mutually_exclusive_group(required=True)
    grp.add_argument("--a", type=int, help="initially infected vertex count")
    grp.add_argument(
        "--a-over-b", type=float, dest="a_over_b",
        help="initial size as a multiple of the critical size",
    )


def _params(args) -> ModelParams:
    p = args.p if args.p is not None else float(args.n) ** (-args.p_exponent)
    return ModelParams(n=args.n, k=args.k, r=getattr(args, "r", 2), p=p)


def _initial_size(args, params) -> int:
    if args.a is not None:
        return args.a
    return int(round(args.a_over_b * critical_size(params).value))


def _float_list(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x]


def _int_list(text: str) -> list[int]:
    return [int(float(x)) for x in text.split(",") if x]


def _emit(text: str, out: str | None):
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        with open(out, "w") as fh:
            fh.write(text)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="hyperboot",
        description="Bootstrap percolation laboratory on binomial random hypergraphs",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("threshold", help="print the critical initial-set size")
    _add_model_args(p)
    p.add_argument("--json", action="store_true", help="emit JSON with regime info")

    p = sub.add_parser("sample", help="sample a hypergraph and write its text form")
    _add_model_args(p, need_r=False)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-expected-edges", type=float, default=5e7)
    p.add_argument("--out", default=None)

    p = sub.add_parser("run", help="run one percolation; JSON outcome")
    _add_model_args(p)
    _add_initial_args(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--snapshot", action="store_true", help="record per-round class sizes")
    p.add_argument("--max-expected-edges", type=float, default=5e7)
    p.add_argument("--out", default=None)

    p = sub.add_parser("trajectory", help="deterministic recurrence trajectory CSV")
    _add_model_args(p)
    _add_initial_args(p)
    p.add_argument(
        "--variant", choices=("closed_form", "incremental"), default="closed_form"
    )
    p.add_argument("--t-max", type=int, default=400, dest="t_max")
    p.add_argument("--out", default=None)

    p = sub.add_parser("classify", help="fixed-point classification JSON")
    _add_model_args(p)
    _add_initial_args(p)
    p.add_argument("--out", default=None)

    p = sub.add_parser("gw", help="branching-process estimate of the infection tail")
    _add_model_args(p)
    _add_initial_args(p)
    p.add_argument("--delta", type=float, default=0.1, help="coupling inflation margin")
    p.add_argument("--eta", type=float, default=0.01, help="tau stopping tolerance")
    p.add_argument("--trials", type=int, default=2000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--t-max", type=int, default=400, dest="t_max")
    p.add_argument("--out", default=None)

    p = sub.add_parser("sweep", help="grid of seeded percolation trials, CSV")
    _add_model_args(p)
    grid = p.add_mutually_exclusive_group(required=True)
    grid.add_argument(
        "--a-over-b", type=_float_list, dest="a_over_b",
        help="comma-separated multiples of the critical size",
    )
    grid.add_argument("--a", type=_int_list, help="comma-separated absolute sizes")
    p.add_argument("--trials", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--zeta", type=float, default=0.1, help="near-full slack fraction")
    p.add_argument("--small-multiple", type=float, default=10.0)
    p.add_argument("--epsilon", type=float, default=0.2)
    p.add_argument("--snapshot", action="store_true")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--max-expected-edges", type=float, default=5e7)
    p.add_argument("--compare", action="store_true", help="also print the analytics comparison to stderr")
    p.add_argument("--out", default=None)

    p = sub.add_parser("decay", help="misclassification scan across sizes, CSV")
    p.add_argument("--n-grid", type=_int_list, required=True, dest="n_grid")
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--r", type=int, default=2)
    p.add_argument("--p-exponent", type=float, required=True, dest="p_exponent")
    p.add_argument(
        "--a-over-b", type=_float_list, required=True, dest="a_over_b",
        help="comma-separated ratios, each clear of 1 by at least epsilon",
    )
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epsilon", type=float, default=0.2)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--max-expected-edges", type=float, default=5e7)
    p.add_argument("--out", default=None)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    cmd = args.command

    if cmd == "threshold":
        params = _params(args)
        thr = critical_size(params)
        if args.json:
            _emit(
                json.dumps(
                    {
                        "b": thr.value,
                        "regime_label": thr.regime_label,
                        "regime_ok": params.regime_ok,
                    }
                )
                + "\n",
                None,
            )
        else:
            print(repr(thr.value))
        return 0

    if cmd == "sample":
        params = _params(args)  # r defaults to 2; sampling never uses it
        h = sample_hypergraph(params, args.seed, max_expected_edges=args.max_expected_edges)
        _emit(h.to_text(), args.out)
        return 0

    if cmd == "run":
        params = _params(args)
        a = _initial_size(args, params)
        graph_seed, init_seed = mix_seed(args.seed, 1), mix_seed(args.seed, 2)
        h = sample_hypergraph(params, graph_seed, max_expected_edges=args.max_expected_edges)
        initial = sample_initial_set(params.n, a, init_seed)
        outcome = run_bootstrap(h, initial, params.r, snapshot=args.snapshot)
        obj = json.loads(outcome.to_json())
        obj["config"] = {
            "n": params.n, "k": params.k, "r": params.r, "p": params.p,
            "a": a, "seed": args.seed, "regime_ok": params.regime_ok,
        }
        _emit(json.dumps(obj) + "\n", args.out)
        return 0

    if cmd == "trajectory":
        params = _params(args)
        a = _initial_size(args, params)
        fn = trajectory_closed_form if args.variant == "closed_form" else trajectory_incremental
        traj = fn(params, float(a), t_max=args.t_max)
        _emit(traj.to_csv(), args.out)
        return 0

    if cmd == "classify":
        params = _params(args)
        a = _initial_size(args, params)
        cls = fixed_point_classify(params, float(a))
        _emit(cls.to_json() + "\n", args.out)
        return 0

    if cmd == "gw":
        params = _params(args)
        a = _initial_size(args, params)
        b = critical_size(params).value
        traj = trajectory_closed_form(params, float(a), t_max=args.t_max)
        diag = increment_diagnostics(traj, b, eta=args.eta)
        if diag.tau is None:
            print(
                "error: increments never fell to eta*b; the run looks "
                "supercritical and the coupling does not apply",
                file=sys.stderr,
            )
            return 1
        tau = diag.tau
        roots = max(1, int(round(traj.deltas[tau]))) if traj.deltas.size > tau else 1
        spec = branching_spec(params, traj.a[tau], args.delta, roots=roots)
        if not spec.subcritical:
            print(
                f"error: mean offspring {spec.mean_offspring:.4g} >= 1",
                file=sys.stderr,
            )
            return 1
        wald = spec.roots / (1.0 - spec.mean_offspring)
        res = simulate_total_progeny(
            spec, args.trials, mix_seed(args.seed, 3), thresholds=(args.delta * traj.a[tau][params.r],)
        )
        obj = {
            "tau": tau,
            "roots": spec.roots,
            "mu": spec.mean_offspring,
            "q": list(map(float, spec.success_probs)),
            "mean_total": res.mean,
            "wald_mean": wald,
            "std_error": res.std_error,
            "exceed_prob": {repr(k): v for k, v in res.exceed.items()},
            "overflowed": res.overflowed,
        }
        _emit(json.dumps(obj) + "\n", args.out)
        return 0

    if cmd == "sweep":
        params = _params(args)
        config = ExperimentConfig(
            params=params,
            trials_per_point=args.trials,
            master_seed=args.seed,
            a_over_b_grid=args.a_over_b,
            a_grid=args.a,
            near_full_fraction=args.zeta,
            small_multiple=args.small_multiple,
            epsilon=args.epsilon,
            snapshot=args.snapshot,
            p_exponent=args.p_exponent,
            workers=args.workers,
            max_expected_edges=args.max_expected_edges,
        )
        result = run_sweep(config)
        _emit(result.to_csv(), args.out)
        if args.compare:
            report = compare_to_analytics(result)
            print(json.dumps(report.to_json_obj()), file=sys.stderr)
        return 0

    if cmd == "decay":
        n0 = args.n_grid[0]
        params = ModelParams(
            n=n0, k=args.k, r=args.r, p=float(n0) ** (-args.p_exponent)
        )
        config = ExperimentConfig(
            params=params,
            trials_per_point=args.trials,
            master_seed=args.seed,
            a_over_b_grid=args.a_over_b,
            epsilon=args.epsilon,
            p_exponent=args.p_exponent,
            workers=args.workers,
            max_expected_edges=args.max_expected_edges,
        )
        scan = failure_decay_scan(config, args.n_grid)
        _emit(scan.to_csv(), args.out)
        return 0

    raise AssertionError(f"unhandled command {cmd}")


if __name__ == "__main__":
    raise SystemExit(main())
