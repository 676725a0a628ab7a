"""Value of refining one act, chains of refinements, and the fixed-cost stopping rule."""

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy import stats

from .algebra import SplitSpec, desirability, probability, refine_binary
from .errors import RefineryError
from .models import outcome_space, sample_outcome, sample_outcomes
from .oracles import DiscreteOutcomeSpace, exact_expectation
from .streams import BLOCK, block_rng, map_blocks, mean_and_se

CRITERIA = ("utility", "probability-weighted")
MATCH_TOL = 1e-9


class ModelMismatch(RefineryError):
    pass


class NotVanishingReturns(RefineryError):
    pass


@dataclass(frozen=True)
class RefinementGain:
    v0: float
    v1_mean: float
    std_error: float
    n: int

    @property
    def gain(self):
        return self.v1_mean - self.v0

    def ci(self, level=0.99):
        """Two-sided normal confidence interval for the gain."""
        z = stats.norm.ppf(0.5 + level / 2)
        return self.gain - z * self.std_error, self.gain + z * self.std_error


def best_act(problem):
    """Lowest-index act of maximal desirability, with that desirability."""
    values = problem.act_desirabilities()
    top = max(values)
    i = values.index(top)
    return i, top


def _act_values(problem, criterion):
    if criterion not in CRITERIA:
        raise RefineryError(f"criterion must be one of {CRITERIA}")
    u = problem.act_desirabilities()
    if criterion == "utility":
        return u
    return [p * x for p, x in zip(problem.act_probabilities(), u)]


def problem_value(problem, criterion="utility"):
    """Best act value: max desirability, or max probability times desirability."""
    return max(_act_values(problem, criterion))


def refined_value(problem, act, outcome, criterion="utility"):
    """Post-refinement optimum for one realized outcome, via an explicit split."""
    refined = refine_binary(problem, SplitSpec(act, outcome))
    return problem_value(refined, criterion)


def _check_model(problem, act, model):
    u = desirability(problem, problem.acts[act])
    p = probability(problem, problem.acts[act])
    if abs(model.u0 - u) > MATCH_TOL or abs(model.p0 - p) > MATCH_TOL:
        raise ModelMismatch(
            f"model (u0={model.u0}, p0={model.p0}) does not match act {act} (U={u}, P={p})"
        )


def value_of_refinement(problem, act, model, n, seed, criterion="utility", workers=None):
    """Monte Carlo estimate of the expected best value after refining ``act``.

    Only the refined act changes desirability, and every credence shares the
    factor ``1/Z``, so the refined optimum is evaluated in closed form over
    the whole sample batch.
    """
    if not 0 <= act < problem.n_acts:
        raise RefineryError(f"act index {act} out of range")
    if criterion not in CRITERIA:
        raise RefineryError(f"criterion must be one of {CRITERIA}")
    if n < 1:
        raise RefineryError("n must be >= 1")
    _check_model(problem, act, model)
    v0 = problem_value(problem, criterion)
    batch = sample_outcomes(model, n, seed, workers, tag=("value",))
    others = [v for i, v in enumerate(_act_values(problem, criterion)) if i != act]
    rest = max(others) if others else -math.inf
    if criterion == "utility":
        v1 = np.maximum(np.maximum(batch.u1, batch.u2), rest)
    else:
        z = 1.0 - model.p0 + batch.p1 + batch.p2
        v1 = np.maximum(np.maximum(batch.p1 * batch.u1, batch.p2 * batch.u2), rest) / z
    mean, se = mean_and_se(v1)
    return RefinementGain(v0, mean, se, n)


def exact_value_of_refinement(problem, act, model, criterion="utility"):
    """Expected post-refinement optimum by enumerating a finite-support model."""
    _check_model(problem, act, model)
    space = DiscreteOutcomeSpace(outcome_space(model))
    return exact_expectation(space, lambda o: refined_value(problem, act, o, criterion))


def _stage(entry):
    if isinstance(entry, tuple):
        rule, template = entry
    else:
        rule, template = None, entry
    if rule is None or rule == "best":
        rule = lambda p: best_act(p)[0]  # noqa: E731
    return rule, template


def _rebased(problem, act, template):
    region = problem.acts[act]
    return template.rebase(desirability(problem, region), probability(problem, region))


def sequential_refinement(problem, schedule, seed, n=10_000, n_inner=1, criterion="utility", workers=None):
    """Nested Monte Carlo over a chain of refinements.

    ``schedule`` lists stages as ``template`` or ``(rule, template)``; ``rule``
    maps a problem to the act to refine (default: the best act) and the
    template is re-centred on that act's current value and mass.  Each of the
    ``n`` outer paths draws ``n_inner`` outcomes per stage, scores the stage by
    their mean post-refinement optimum and continues from the first one.

    Returns one :class:`RefinementGain` per stage whose ``v0`` is the previous
    stage's estimate, so ``gain`` is the estimated marginal return.
    """
    stages = [_stage(e) for e in schedule]
    if n < 1 or n_inner < 1:
        raise RefineryError("sample counts must be >= 1")

    def run(_rng, start, stop):
        b = start // BLOCK
        paths = [problem] * (stop - start)
        scores = np.empty((len(stages), stop - start))
        for j, (rule, template) in enumerate(stages):
            rng = block_rng(seed, b, ("chain", j))
            for k, current in enumerate(paths):
                act = rule(current)
                model = _rebased(current, act, template)
                draws = [sample_outcome(model, rng) for _ in range(n_inner)]
                scores[j, k] = np.mean([refined_value(current, act, o, criterion) for o in draws])
                paths[k] = refine_binary(current, SplitSpec(act, draws[0]))
        return scores

    scores = np.concatenate(map_blocks(run, n, seed, ("chain",), workers), axis=1)
    out = []
    prev = problem_value(problem, criterion)
    for row in scores:
        mean, se = mean_and_se(row)
        out.append(RefinementGain(prev, mean, se, n))
        prev = mean
    return out


def exact_chain(problem, schedule, criterion="utility"):
    """Exact expected optimum after each stage, enumerating every outcome path."""
    stages = [_stage(e) for e in schedule]
    totals = [0.0] * len(stages)

    def walk(current, j, weight):
        if j == len(stages):
            return
        rule, template = stages[j]
        act = rule(current)
        for p, o in outcome_space(_rebased(current, act, template)):
            if p == 0:
                continue
            nxt = refine_binary(current, SplitSpec(act, o))
            totals[j] += weight * p * problem_value(nxt, criterion)
            walk(nxt, j + 1, weight * p)

    walk(problem, 0, 1.0)
    return totals


@dataclass(frozen=True)
class StoppingPlan:
    """``t_star`` is the last refinement to perform, or ``None`` to never refine."""

    t_star: object
    net_gain: float
    per_step: tuple
    cost: float

    @property
    def refines(self):
        return self.t_star is not None


def geometric_deltas(first, ratio, count):
    """``first * ratio**i`` for ``i < count``; a vanishing-returns sequence for ``0 < ratio < 1``."""
    return [first * ratio**i for i in range(count)]


def optimal_stopping(deltas, cost):
    """Refine while the expected marginal gain covers the fixed cost.

    ``deltas`` must be strictly decreasing and nonnegative.  Arithmetic on the
    net gains is exact (rational) and rounded once, so boundary cases such as
    ``cost == deltas[0]`` give exactly zero.
    """
    deltas = [float(d) for d in deltas]
    cost = float(cost)
    if not cost > 0 or not math.isfinite(cost):
        raise NotVanishingReturns(f"cost must be positive, got {cost}")
    if not deltas:
        raise NotVanishingReturns("need at least one expected gain")
    for i, d in enumerate(deltas):
        if not (d >= 0 and math.isfinite(d)):
            raise NotVanishingReturns(f"gain {i} = {d} is negative or non-finite")
        if i and not d < deltas[i - 1]:
            raise NotVanishingReturns(f"gains must strictly decrease; step {i} has {d} >= {deltas[i - 1]}")
    c = Fraction(cost)
    per_step = tuple((d, float(Fraction(d) - c)) for d in deltas)
    if cost > deltas[0]:
        return StoppingPlan(None, 0.0, per_step, cost)
    t_star = max(i for i, d in enumerate(deltas) if d >= cost)
    net = sum((Fraction(d) - c for d in deltas[: t_star + 1]), Fraction(0))
    return StoppingPlan(t_star, float(net), per_step, cost)


def net_gain_through(plan, t):
    """Exact net gain of performing refinements ``0..t`` (``t = -1`` means none)."""
    c = Fraction(plan.cost)
    return float(sum((Fraction(d) - c for d, _ in plan.per_step[: t + 1]), Fraction(0)))
