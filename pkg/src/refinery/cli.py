"""Command-line experiment runner: ``refinery <subcommand> [options]``.

Every subcommand writes a header row plus data rows as CSV (default) or a
JSON array.  Exit codes: 0 success, 2 invalid input, 3 runtime failure
(including a failed ``--verify`` comparison).
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import bargaining as bg
from . import games as gm
from . import multivalue as mv
from . import single_agent as sa
from .algebra import problem_from_dict
from .errors import RefineryError
from .models import Point, RefinementModel, TwoPoint, check_rrp
from .oracles import grid_maximize
from .serialize import emit

SE_BAND = 4.0
GRID_TOL = 1e-4


class VerificationFailed(RuntimeError):
    pass


class UsageError(RefineryError):
    pass


# -- defaults matching the desk-scale experiments --------------------------------

DEFAULT_PROBLEM = {"atoms": ["A", "not-A"], "credence": [0.5, 0.5], "desirability": [0.0, -1.0], "acts": [[0], [1]]}
DEFAULT_MODEL = {"u0": 0.0, "p0": 0.5, "q": {"kind": "point", "value": 0.5}, "spread": {"kind": "two-point", "a": 2.0}}
DEFAULT_PROFILE = {
    "atoms": ["A", "not-A"],
    "credence": [0.5, 0.5],
    "acts": [[0], [1]],
    "values": [[2.0, 1.0], [0.0, 1.0]],
}
DEFAULT_JOINT = {
    "q": {"kind": "point", "value": 0.5},
    "coupling": "explicit-two-point-joint",
    "magnitudes": [1.0, 4.0],
    "table": [
        {"prob": 0.25, "signs": [1, 1]},
        {"prob": 0.375, "signs": [1, -1]},
        {"prob": 0.375, "signs": [-1, 1]},
        {"prob": 0.0, "signs": [-1, -1]},
    ],
}


def _json_arg(text, default):
    """Inline JSON, ``@path`` or a path to a JSON file; ``None`` gives ``default``."""
    if text is None:
        return default
    stripped = text.strip()
    if stripped.startswith("@"):
        stripped = Path(stripped[1:]).read_text(encoding="utf-8")
    elif not stripped.startswith(("{", "[")):
        stripped = Path(stripped).read_text(encoding="utf-8")
    try:
        return json.loads(stripped)
    except json.JSONDecodeError as exc:
        raise UsageError(f"invalid JSON: {exc}") from None


def _floats(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"expected comma-separated numbers, got {text!r}") from None


def _need_seed(args):
    if args.seed is None:
        raise UsageError("--seed is required for stochastic runs")


def _within(est, se, exact, what):
    band = SE_BAND * se + 1e-12 * max(1.0, abs(exact))
    if abs(est - exact) > band:
        raise VerificationFailed(f"{what}: estimate {est!r} differs from exact {exact!r} by more than {SE_BAND} SE")


# -- subcommands ------------------------------------------------------------------


def cmd_refine_value(args):
    _need_seed(args)
    problem = problem_from_dict(_json_arg(args.problem, DEFAULT_PROBLEM))
    model = RefinementModel.from_dict(_json_arg(args.model, DEFAULT_MODEL))
    g = sa.value_of_refinement(problem, args.act, model, args.n, args.seed, args.criterion)
    lo, hi = g.ci(0.99)
    exact = None
    if args.verify:
        rep = check_rrp(model, max(args.n, 1000), args.seed)
        if not rep.passed:
            raise VerificationFailed("model violates reflection")
        try:
            exact = sa.exact_value_of_refinement(problem, args.act, model, args.criterion)
        except RefineryError:
            exact = None
        if exact is not None:
            _within(g.v1_mean, g.std_error, exact, "expected refined value")
    return [
        {
            "seed": args.seed,
            "n": args.n,
            "act": args.act,
            "criterion": args.criterion,
            "v0": g.v0,
            "v1_mean": g.v1_mean,
            "se": g.std_error,
            "gain": g.gain,
            "ci99_lo": float(lo),
            "ci99_hi": float(hi),
            "exact_v1": exact,
        }
    ]


def cmd_refine_chain(args):
    _need_seed(args)
    problem = problem_from_dict(_json_arg(args.problem, DEFAULT_PROBLEM))
    doc = _json_arg(args.models, None)
    if doc is None:
        # halve the spread at every stage
        templates = [RefinementModel(0.0, 0.5, Point(0.5), TwoPoint(2.0 / 2**j)) for j in range(args.stages)]
    else:
        docs = doc if isinstance(doc, list) else [doc] * args.stages
        templates = [RefinementModel.from_dict(d) for d in docs]
    stages = sa.sequential_refinement(problem, templates, args.seed, args.n, criterion=args.criterion)
    try:
        exact = sa.exact_chain(problem, templates, args.criterion)
    except RefineryError:
        exact = [None] * len(stages)
    if args.verify:
        for j, (g, e) in enumerate(zip(stages, exact)):
            if e is not None:
                _within(g.v1_mean, g.std_error, e, f"stage {j + 1}")
    return [
        {
            "seed": args.seed,
            "n": args.n,
            "stage": j + 1,
            "v_prev": g.v0,
            "mean": g.v1_mean,
            "se": g.std_error,
            "gain": g.gain,
            "exact_mean": e,
        }
        for j, (g, e) in enumerate(zip(stages, exact))
    ]


def cmd_stopping(args):
    if args.deltas is not None:
        deltas = _floats(args.deltas)
    elif args.geometric is not None:
        first, ratio, count = _floats(args.geometric)
        deltas = sa.geometric_deltas(first, ratio, int(count))
    else:
        raise UsageError("give --deltas or --geometric")
    plan = sa.optimal_stopping(deltas, args.cost)
    if args.verify:
        nets = [sa.net_gain_through(plan, t) for t in range(-1, len(deltas))]
        if max(nets) != plan.net_gain:
            raise VerificationFailed("stopping index does not maximize the net gain")
    return [
        {
            "cost": plan.cost,
            "n_steps": len(deltas),
            "t_star": plan.t_star,
            "refines": plan.refines,
            "net_gain": plan.net_gain,
        }
    ]


def cmd_dilemma(args):
    profile = mv.ValueProfile.from_dict(_json_arg(args.profile, DEFAULT_PROFILE))
    joint = mv.JointRefinementModel.from_dict(_json_arg(args.joint, DEFAULT_JOINT))
    exact = None
    if args.method == "exhaustive":
        exact = mv.exact_resolution_probability(profile, args.act_a, args.act_not_a, joint)
        prob, se, n, o1, o2 = exact, 0.0, None, None, None
    else:
        _need_seed(args)
        est = mv.resolution_probability(profile, args.act_a, args.act_not_a, joint, args.n, args.seed)
        prob, se, n, o1, o2 = est.prob, est.std_error, est.n, est.omega1, est.omega2
        if args.verify:
            try:
                exact = mv.exact_resolution_probability(profile, args.act_a, args.act_not_a, joint)
            except RefineryError:
                exact = None
            if exact is not None:
                _within(prob, se, exact, "resolution probability")
    return [
        {
            "seed": args.seed,
            "n": n,
            "method": args.method,
            "prob": prob,
            "se": se,
            "omega1": o1,
            "omega2": o2,
            "exact_prob": exact,
        }
    ]


def _zero_sum_spec(text):
    if text == "matching-pennies":
        return gm.MATCHING_PENNIES
    vals = _floats(text)
    if len(vals) != 4:
        raise UsageError("--base takes 'matching-pennies' or v,alpha,beta,gamma")
    return gm.ZeroSumSpec(*vals)


def cmd_zerosum(args):
    spec = _zero_sum_spec(args.base)
    pm = gm.PerturbationModel(args.mag, args.rho, args.family)
    if args.method == "monte-carlo":
        _need_seed(args)
    rep = gm.expected_refined_welfare(spec, pm, args.n, args.seed or 0, args.method)
    if args.verify:
        if rep.max_br_gap > gm.BR_TOL:
            raise VerificationFailed(f"an equilibrium fails best-response verification ({rep.max_br_gap})")
        if args.method == "monte-carlo" and pm.family == "two-point":
            exact = gm.expected_refined_welfare(spec, pm, method="exhaustive")
            _within(rep.mean, rep.std_error, exact.mean, "expected welfare")
    return [
        {
            "seed": args.seed,
            "rho": args.rho,
            "magnitude": args.mag,
            "method": args.method,
            "mean_w": rep.mean,
            "se": rep.std_error,
            "p_full_agreement": rep.p_full_agreement,
            "p_E1": rep.p_e1,
        }
    ]


def _bargain_spec(args, rho):
    v1 = bg.parse_value_function(args.v1 or args.v)
    v2 = bg.parse_value_function(args.v2 or args.v)
    return bg.BargainingSpec(v1, v2, args.sigma, rho, (args.d, args.d), args.weights)


def _family_label(args):
    a, b = args.v1 or args.v, args.v2 or args.v
    return a if a == b else f"{a}/{b}"


def verify_against_grid(spec, weights, solution, resolution=2001):
    """Compare a 2-d solution with the dense-grid oracle; returns the payoff gap."""
    d1, d2 = spec.d

    def product(x1, x2):
        u1, u2 = spec.utilities(weights, x1, x2)
        g1, g2 = u1 - d1, u2 - d2
        return np.where((g1 > 0) & (g2 > 0), g1 * g2, -np.inf)

    res = grid_maximize(product, ((0.0, 1.0), (0.0, 1.0)), resolution)
    x1, x2 = res.point
    grid_pay = [float(v) for v in spec.utilities(weights, x1, x2)]
    if res.value > solution.nash_product + res.step_bound:
        raise VerificationFailed(f"grid oracle beats the solver at weights {weights}")
    return max(abs(a - b) for a, b in zip(grid_pay, solution.payoffs))


def _verify_realizations(spec, report):
    for _, w, sol in report.realizations:
        gap = verify_against_grid(spec, w, sol)
        if gap > GRID_TOL:
            raise VerificationFailed(f"solver payoffs differ from the grid oracle by {gap} at weights {w}")


def _bargain_row(args, spec, rep):
    return {
        "rho": spec.rho,
        "sigma": spec.sigma,
        "family": _family_label(args),
        "gain1_mean": rep.gain[0],
        "gain1_se": rep.std_error[0],
        "gain2_mean": rep.gain[1],
        "gain2_se": rep.std_error[1],
        "baseline1": rep.baseline[0],
        "baseline2": rep.baseline[1],
    }


def cmd_bargain(args):
    spec = _bargain_spec(args, args.rho)
    if args.method == "monte-carlo":
        _need_seed(args)
    rep = bg.expected_refined_payoffs(spec, args.n, args.seed or 0, args.method)
    if args.verify:
        if args.method == "exhaustive":
            _verify_realizations(spec, rep)
        elif spec.weight_model == "two-point":
            exact = bg.expected_refined_payoffs(spec, method="exhaustive")
            for i in (0, 1):
                _within(rep.mean[i], rep.std_error[i], exact.mean[i], f"agent {i + 1} payoff")
    return [_bargain_row(args, spec, rep)]


def cmd_sweep(args):
    spec = _bargain_spec(args, 0.0)
    rows = bg.correlation_sweep(spec, _floats(args.rhos))
    if args.verify:
        for _, rep in rows:
            _verify_realizations(spec, rep)
    return [_bargain_row(args, spec.with_rho(rho), rep) for rho, rep in rows]


# -- parser -----------------------------------------------------------------------


def _seed(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {text!r}") from None
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _count(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"n must be an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError("n must be >= 1")
    return v


def _common(p, n_default):
    p.add_argument("--seed", type=_seed, default=None, help="unsigned 64-bit seed (required for sampling)")
    p.add_argument("--n", type=_count, default=n_default, help="Monte Carlo sample count")
    p.add_argument("--out", default=None, help="output path (default: stdout)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--verify", action="store_true", help="re-run the oracle comparison; exit 3 on disagreement")


def build_parser():
    parser = argparse.ArgumentParser(prog="refinery", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("refine-value", help="expected value of refining one act")
    _common(p, 100_000)
    p.add_argument("--problem", help="decision problem JSON (inline, @file or path)")
    p.add_argument("--model", help="refinement model JSON")
    p.add_argument("--act", type=int, default=0)
    p.add_argument("--criterion", choices=sa.CRITERIA, default="utility")
    p.set_defaults(func=cmd_refine_value)

    p = sub.add_parser("refine-chain", help="expected optimum after successive refinements")
    _common(p, 10_000)
    p.add_argument("--problem")
    p.add_argument("--models", help="refinement model JSON, or a list with one per stage")
    p.add_argument("--stages", type=_count, default=2)
    p.add_argument("--criterion", choices=sa.CRITERIA, default="utility")
    p.set_defaults(func=cmd_refine_chain)

    p = sub.add_parser("stopping", help="when to stop refining under a fixed cost")
    _common(p, 1)
    p.add_argument("--deltas", help="expected marginal gains, comma separated")
    p.add_argument("--geometric", help="first,ratio,count")
    p.add_argument("--cost", type=float, required=True)
    p.set_defaults(func=cmd_stopping)

    p = sub.add_parser("dilemma", help="probability that refinement resolves a value dilemma")
    _common(p, 100_000)
    p.add_argument("--profile", help="value profile JSON")
    p.add_argument("--joint", help="joint refinement model JSON")
    p.add_argument("--act-a", type=int, default=0)
    p.add_argument("--act-not-a", type=int, default=1)
    p.add_argument("--method", choices=("monte-carlo", "exhaustive"), default="monte-carlo")
    p.set_defaults(func=cmd_dilemma)

    p = sub.add_parser("zerosum", help="welfare after refinement in a zero-sum game")
    _common(p, 100_000)
    p.add_argument("--base", default="matching-pennies", help="'matching-pennies' or v,alpha,beta,gamma")
    p.add_argument("--rho", type=float, default=0.0)
    p.add_argument("--family", choices=("two-point", "gaussian"), default="two-point")
    p.add_argument("--mag", type=float, default=0.5)
    p.add_argument("--method", choices=("monte-carlo", "exhaustive"), default="monte-carlo")
    p.set_defaults(func=cmd_zerosum)

    for name, func, helptext in (
        ("bargain", cmd_bargain, "Nash bargaining gains from refining the good"),
        ("sweep-correlation", cmd_sweep, "bargaining gains across weight correlations"),
    ):
        p = sub.add_parser(name, help=helptext)
        _common(p, 10_000)
        p.add_argument("--sigma", type=float, default=0.5)
        p.add_argument("--v", default="linear", help="value function: linear, sqrt or power:<a>")
        p.add_argument("--v1", default=None)
        p.add_argument("--v2", default=None)
        p.add_argument("--d", type=float, default=0.0, help="symmetric disagreement payoff")
        p.add_argument("--weights", choices=bg.WEIGHT_MODELS, default="two-point")
        if name == "bargain":
            p.add_argument("--rho", type=float, default=0.0)
            p.add_argument("--method", choices=("monte-carlo", "exhaustive"), default="monte-carlo")
        else:
            p.add_argument("--rhos", default="-1,-0.5,0,0.5,1")
        p.set_defaults(func=func)
    return parser


def run(argv=None):
    """Parse ``argv``, run the subcommand and return the exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 2
    try:
        rows = args.func(args)
        text = emit(rows, args.format, args.out)
    except (VerificationFailed, OSError, RuntimeError) as exc:
        print(f"refinery: error: {exc}", file=sys.stderr)
        return 3
    except (RefineryError, ValueError, KeyError, TypeError) as exc:
        print(f"refinery: invalid input: {exc}", file=sys.stderr)
        return 2
    if args.out in (None, "-"):
        sys.stdout.write(text)
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
