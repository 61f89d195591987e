"""Command-line entry point: ``lrsao {run,bench,verify,compare,theory}``.

JSON goes to stdout, diagnostics to stderr. Exit codes: 0 success,
1 invalid input, 2 censored runs, 3 invariant violations.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import _kernels
from .agent import Hyperparams, default_hyperparams, validate_hyperparams
from .analysis import theory_summary
from .engine import KERNELS, RunConfig, default_max_iters, run_lrsao, simulate
from .errors import LrsaoError
from .harness import ALGOS, ELL_RULES, ExperimentConfig, parse_earl_cutoff, run_experiment
from .invariants import CHECKERS, run_all_checkers
from .objectives import ProblemParams, validate_params
from .rng import mix64

EXIT_OK, EXIT_INVALID, EXIT_CENSORED, EXIT_VIOLATION = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _emit(obj) -> None:
    sys.stdout.write(json.dumps(obj, default=_json_default) + "\n")


def _json_default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def _log(msg: str) -> None:
    print(msg, file=sys.stderr)


def _master_seed(value) -> int:
    if value is not None:
        return value
    env = os.environ.get("LRSAO_SEED")
    if env is None:
        return 0
    try:
        return int(env, 0)
    except ValueError:
        raise LrsaoError(f"LRSAO_SEED must be an integer, got {env!r}") from None


def _params(args) -> ProblemParams:
    validate_params(args.n, args.ell)
    return ProblemParams(args.n, args.ell)


def _hyper(p: ProblemParams, alpha, gamma, penalty) -> Hyperparams:
    alpha = 0.8 if alpha is None else alpha
    if gamma is None:
        h = default_hyperparams(p, alpha)
        gamma = h.gamma
    if penalty is None:
        penalty = p.n * (1.0 / (alpha * (1.0 - gamma)) - 1.0)
    return validate_hyperparams(Hyperparams(alpha, gamma, penalty), p)


# --- subcommands --------------------------------------------------------------


def cmd_run(args) -> int:
    p = _params(args)
    h = _hyper(p, args.alpha, args.gamma, args.penalty)
    cfg = RunConfig(p, h, max_iters=args.max_iters, kernel=args.kernel,
                    record_trace=args.trace is not None)
    seed = _master_seed(args.seed)
    result, trace = run_lrsao(cfg, seed)
    if trace is not None:
        trace.write_jsonl(args.trace)
        _log(f"wrote {len(trace)} trace records to {args.trace}")
    out = result.to_dict()
    out.update(n=p.n, ell=p.ell, seed=seed, alpha=h.alpha, gamma=h.gamma, penalty_r=h.penalty_r)
    _emit(out)
    if result.censored:
        _log(f"run censored at {result.T} iterations")
        return EXIT_CENSORED
    return EXIT_OK


def _experiment(args, **kw) -> ExperimentConfig:
    return ExperimentConfig(
        runs_per_point=args.runs, master_seed=_master_seed(args.seed),
        parallelism=args.jobs, earl_cutoff=parse_earl_cutoff(args.earl_cutoff),
        earl_reward=args.earl_reward, max_iters=args.max_iters, **kw,
    ).validate()


def _rows_json(rows):
    return [r.as_record() for r in rows]


def cmd_bench(args) -> int:
    algos = tuple(a.strip() for a in args.algos.split(",") if a.strip())
    cfg = _experiment(args, n_min=args.n_min, n_max=args.n_max, n_step=args.n_step,
                      ell_rule=args.ell_rule, algos=algos, out_path=args.out)
    rows = run_experiment(cfg)
    if args.out:
        _log(f"wrote {len(rows)} rows to {args.out}")
    if args.figure:
        from .plotting import plot_runtime

        plot_runtime(rows, args.figure, log=args.log,
                     title=f"ell rule: {cfg.ell_rule}")
        _log(f"wrote figure {args.figure}")
    _emit({"rows": _rows_json(rows), "earl": cfg.metadata()["earl"] if "earl" in algos else None})
    censored = sum(r.censored for r in rows)
    if censored:
        _log(f"{censored} censored runs")
        return EXIT_CENSORED
    return EXIT_OK


def cmd_compare(args) -> int:
    p = _params(args)
    cfg = _experiment(args, n_min=p.n, n_max=p.n, n_step=1, ell_fixed=p.ell,
                      algos=ALGOS, out_path=args.out)
    rows = run_experiment(cfg)
    by = {r.algo: r for r in rows}
    a, b = by["lrsao"], by["earl"]
    out = {
        "n": p.n, "ell": p.ell, "runs": args.runs,
        "lrsao": a.as_record(), "earl": b.as_record(),
        "earl_config": cfg.metadata()["earl"],
        "lrsao_faster": bool(a.mean_T < b.mean_T),
        "ci_disjoint": bool(a.ci95_hi_T < b.ci95_lo_T or b.ci95_hi_T < a.ci95_lo_T),
        "ratio_earl_over_lrsao": b.mean_T / a.mean_T if a.mean_T > 0 else math.nan,
    }
    _emit(out)
    if a.censored or b.censored:
        _log(f"censored runs: lrsao={a.censored}, earl={b.censored}")
        return EXIT_CENSORED
    return EXIT_OK


def cmd_verify(args) -> int:
    p = _params(args)
    if args.runs < 1:
        raise LrsaoError(f"--runs must be >= 1, got {args.runs}")
    h = default_hyperparams(p)
    validate_hyperparams(h, p)
    master = _master_seed(args.seed)
    penalty = -h.penalty_r if args.plant_bug == "penalty-sign" else h.penalty_r
    max_iters = args.max_iters
    if max_iters is None:
        max_iters = 100 * p.n * p.n if args.plant_bug else default_max_iters(p.n)
    counts = {c: 0 for c in CHECKERS}
    n_viol = 0
    censored = 0
    shown = 0
    for run in range(args.runs):
        seed = mix64(master, 0, run)
        result, trace = simulate(p, h.alpha, h.gamma, penalty, True, _kernels.SELECTED, 0,
                                 max_iters, "weight", seed, True)
        censored += int(result.censored)
        for v in run_all_checkers(trace, result, p, h):
            counts[v.lemma_id] += 1
            n_viol += 1
            if shown < args.show:
                d = {"lemma_id": v.lemma_id, "t": v.t, "detail": v.detail, "run": run}
                _emit(d)
                shown += 1
    _emit({"n": p.n, "ell": p.ell, "runs": args.runs, "seed": master, "violations": n_viol,
           "by_checker": counts, "censored": censored, "planted_bug": args.plant_bug})
    if n_viol:
        _log(f"{n_viol} violations")
        return EXIT_VIOLATION
    if censored:
        _log(f"{censored} censored runs")
        return EXIT_CENSORED
    return EXIT_OK


def cmd_theory(args) -> int:
    p = _params(args)
    summary = theory_summary(p)
    _emit(summary)
    return EXIT_OK


# --- parser -------------------------------------------------------------------


def _add_problem(sp) -> None:
    sp.add_argument("--n", type=int, required=True, help="bit-string length")
    sp.add_argument("--ell", type=int, required=True, help="plateau width")


def _add_grid_common(sp, runs: int) -> None:
    sp.add_argument("--runs", type=int, default=runs, help=f"runs per point and algorithm (default {runs})")
    sp.add_argument("--seed", type=int, default=None, help="master seed (fallback: $LRSAO_SEED, then 0)")
    sp.add_argument("--jobs", type=int, default=1, help="worker processes")
    sp.add_argument("--max-iters", type=int, default=None, help="iteration cap per run (default 10^4 n^2)")
    sp.add_argument("--earl-cutoff", default="n2",
                    help="EA+RL restart cutoff: 'n2', 'none' or an iteration count")
    sp.add_argument("--earl-reward", choices=("target_delta", "selected_delta"), default="target_delta",
                    help="EA+RL reward")
    sp.add_argument("--out", default=None, help="CSV output (JSON-lines if it ends in .jsonl)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lrsao", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sp = sub.add_parser("run", help="one LRSAO run, result as JSON")
    _add_problem(sp)
    sp.add_argument("--alpha", type=float, default=None, help="learning rate (default 0.8)")
    sp.add_argument("--gamma", type=float, default=None, help="discount (default 1/(n+1))")
    sp.add_argument("--penalty", type=float, default=None,
                    help="plateau penalty r (default n(1/(alpha(1-gamma))-1))")
    sp.add_argument("--seed", type=int, default=None, help="run seed (fallback: $LRSAO_SEED, then 0)")
    sp.add_argument("--kernel", choices=KERNELS, default="weight")
    sp.add_argument("--trace", default=None, metavar="PATH", help="write the step trace as JSON-lines")
    sp.add_argument("--max-iters", type=int, default=None, help="iteration cap (default 10^4 n^2)")
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("bench", help="grid of seeded runs, aggregated per point")
    sp.add_argument("--n-min", type=int, required=True)
    sp.add_argument("--n-max", type=int, required=True)
    sp.add_argument("--n-step", type=int, default=50)
    sp.add_argument("--ell-rule", choices=ELL_RULES, default="const2")
    sp.add_argument("--algos", default="lrsao", help="comma-separated subset of lrsao,earl")
    _add_grid_common(sp, 2000)
    sp.add_argument("--figure", default=None, metavar="PATH", help="also render mean T vs n to PATH")
    sp.add_argument("--log", action="store_true", help="log-log axes for --figure")
    sp.set_defaults(func=cmd_bench)

    sp = sub.add_parser("compare", help="LRSAO against EA+RL at one point")
    _add_problem(sp)
    _add_grid_common(sp, 20000)
    sp.set_defaults(func=cmd_compare)

    sp = sub.add_parser("verify", help="traced runs checked against every invariant")
    _add_problem(sp)
    sp.add_argument("--runs", type=int, default=1000)
    sp.add_argument("--seed", type=int, default=None, help="master seed (fallback: $LRSAO_SEED, then 0)")
    sp.add_argument("--max-iters", type=int, default=None)
    sp.add_argument("--show", type=int, default=20, help="violations printed individually")
    sp.add_argument("--plant-bug", choices=("penalty-sign",), default=None, help=argparse.SUPPRESS)
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("theory", help="closed-form expectations and bounds")
    _add_problem(sp)
    sp.set_defaults(func=cmd_theory)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except LrsaoError as exc:
        _log(f"error: {type(exc).__name__}: {exc}")
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
