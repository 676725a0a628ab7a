from fractions import Fraction

import numpy as np
import pytest

from refinery.algebra import make_problem
from refinery.models import Point, RefinementModel, TwoPoint, Uniform, sample_outcomes
from refinery.single_agent import (
    ModelMismatch,
    NotVanishingReturns,
    best_act,
    exact_chain,
    exact_value_of_refinement,
    geometric_deltas,
    net_gain_through,
    optimal_stopping,
    sequential_refinement,
    value_of_refinement,
)

TWO_POINT = RefinementModel(0.0, 0.5, Point(0.5), TwoPoint(2.0))


def problem_with(values):
    n = len(values)
    return make_problem([f"a{i}" for i in range(n)], [[i] for i in range(n)], [1 / n] * n, values)


@pytest.mark.parametrize("values, expected", [([1, 3, 2], (1, 3.0)), ([2, 2], (0, 2.0)), ([5], (0, 5.0))])
def test_best_act(values, expected):
    assert best_act(problem_with(values)) == expected


def test_two_point_gain_is_one(coin_problem):
    assert exact_value_of_refinement(coin_problem, 0, TWO_POINT) == 1.0
    g = value_of_refinement(coin_problem, 0, TWO_POINT, 10_000, 1)
    assert (g.v0, g.v1_mean, g.gain) == (0.0, 1.0, 1.0)


def test_uniform_spread_matches_closed_form(coin_problem):
    # E[|delta| / 2] for delta ~ U(-1, 1)
    m = RefinementModel(0.0, 0.5, Point(0.5), Uniform(-1, 1))
    g = value_of_refinement(coin_problem, 0, m, 100_000, 2)
    assert abs(g.gain - 0.25) <= 4 * g.std_error


def test_degenerate_model_gains_nothing(coin_problem):
    m = RefinementModel(0.0, 0.5, Point(0.5), Point(0.0))
    g = value_of_refinement(coin_problem, 0, m, 5_000, 3)
    assert g.gain == 0.0 and g.std_error == 0.0


def test_model_mismatch(coin_problem):
    with pytest.raises(ModelMismatch):
        value_of_refinement(coin_problem, 0, RefinementModel(0.3, 0.5, Point(0.5), Point(0.0)), 10, 0)


def test_pointwise_dominance():
    m = RefinementModel(0.0, 0.5, Uniform(0.1, 0.9), Uniform(-1, 1))
    b = sample_outcomes(m, 50_000, 8)
    top = np.maximum(b.u1, b.u2)
    assert np.all(top >= b.reflected - 1e-15)
    differ = b.u1 != b.u2
    assert np.all(top[differ] > b.reflected[differ] - 1e-15)


def test_probability_weighted_matches_explicit_refinement(coin_problem):
    # the vectorized closed form must equal refine_binary + max(P*U) sample by sample
    m = RefinementModel(0.0, 0.5, Uniform(0.2, 0.8), Uniform(-2, 2), mass=Uniform(0.3, 0.7))
    exact_like = value_of_refinement(coin_problem, 0, m, 4_000, 5, criterion="probability-weighted")
    from refinery.single_agent import refined_value

    b = sample_outcomes(m, 4_000, 5, tag=("value",))
    direct = np.mean([refined_value(coin_problem, 0, b.outcome(i), "probability-weighted") for i in range(4_000)])
    assert exact_like.v1_mean == pytest.approx(direct, abs=1e-12)


def test_single_stage_chain_reduces_to_value(coin_problem):
    [g] = sequential_refinement(coin_problem, [TWO_POINT], seed=4, n=500)
    assert g.v1_mean == 1.0


def test_flat_chain_for_degenerate_templates(coin_problem):
    flat = RefinementModel(0.0, 0.5, Point(0.5), Point(0.0))
    chain = sequential_refinement(coin_problem, [flat, flat], seed=4, n=300)
    assert [g.gain for g in chain] == [0.0, 0.0]


def test_two_stage_chain_increases(coin_problem):
    templates = [TWO_POINT, RefinementModel(0.0, 0.5, Point(0.5), TwoPoint(1.0))]
    assert exact_chain(coin_problem, templates) == [1.0, 1.5]


def test_stochastic_chain_is_ci_separated(coin_problem):
    templates = [
        RefinementModel(0.0, 0.5, Point(0.5), Uniform(-2, 2)),
        RefinementModel(0.0, 0.5, Point(0.5), Uniform(-2, 2)),
    ]
    a, b = sequential_refinement(coin_problem, templates, seed=9, n=3000)
    assert b.v1_mean - a.v1_mean > 4 * np.hypot(a.std_error, b.std_error)


@pytest.mark.parametrize(
    "deltas, cost, t_star, net",
    [([1, 0.5, 0.25], 0.3, 1, 0.9), ([1, 0.5], 1.5, None, 0.0), ([1, 0.4], 1, 0, 0.0)],
)
def test_stopping_examples(deltas, cost, t_star, net):
    plan = optimal_stopping(deltas, cost)
    assert plan.t_star == t_star and plan.net_gain == net


@pytest.mark.parametrize("deltas", [[1, 1], [0.5, 1], [1, -0.1], []])
def test_stopping_requires_vanishing_returns(deltas):
    with pytest.raises(NotVanishingReturns):
        optimal_stopping(deltas, 0.1)


@pytest.mark.parametrize("seed", range(20))
def test_stopping_is_locally_optimal(seed):
    rng = np.random.default_rng(seed)
    deltas = sorted(rng.uniform(0, 2, size=6), reverse=True)
    cost = float(rng.uniform(0.05, 2.5))
    plan = optimal_stopping(deltas, cost)
    t = -1 if plan.t_star is None else plan.t_star
    here = Fraction(net_gain_through(plan, t))
    for other in (t - 1, t + 1):
        if -1 <= other < len(deltas):
            assert Fraction(net_gain_through(plan, other)) <= here
    assert plan.net_gain >= 0
    if cost < deltas[0]:
        assert plan.net_gain > 0


def test_geometric_deltas():
    assert geometric_deltas(1.0, 0.5, 3) == [1.0, 0.5, 0.25]
