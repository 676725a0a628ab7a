import math
import warnings

import numpy as np
import pytest

from refinery.errors import ExhaustiveUnavailable
from refinery.games import (
    BR_TOL,
    MATCHING_PENNIES,
    BimatrixGame,
    GameTooLarge,
    PerturbationModel,
    PureSaddle,
    ZeroSumSpec,
    best_response_gap,
    classify_agreement,
    enumerate_equilibria,
    expected_refined_welfare,
    refine_game,
    solve_zero_sum_2x2,
    transpose_game,
    welfare_optimal_equilibrium,
)

nashpy = pytest.importorskip("nashpy")

# Pinned from the exhaustive enumeration (16 and 256 sign patterns) and
# confirmed independently with nashpy's vertex enumeration.
GOLDEN_RHO_PLUS = 0.1875
GOLDEN_RHO_ZERO = 0.12890625


def test_closed_form_examples():
    value, prof = solve_zero_sum_2x2(MATCHING_PENNIES)
    assert value == 0 and prof.row_mix == (0.5, 0.5) and prof.col_mix == (0.5, 0.5)
    value, prof = solve_zero_sum_2x2(ZeroSumSpec(2, 0, 0, 2))
    assert value == 1 and prof.row_mix == (0.5, 0.5)
    with pytest.raises(PureSaddle):
        solve_zero_sum_2x2(ZeroSumSpec(1, 0, 0, 0))


def random_interior_spec(rng):
    while True:
        s = ZeroSumSpec(*rng.uniform(-5, 5, size=4))
        if s.interior and abs(s.v - s.alpha - s.beta + s.gamma) > 1e-3:
            return s


def test_closed_form_equals_enumeration():
    rng = np.random.default_rng(0)
    for _ in range(200):
        spec = random_interior_spec(rng)
        value, prof = solve_zero_sum_2x2(spec)
        eqs = enumerate_equilibria(spec.base_game())
        assert len(eqs) == 1
        assert eqs[0].payoffs[0] == pytest.approx(value, abs=1e-9)
        assert np.allclose(eqs[0].profile.row_mix, prof.row_mix, atol=1e-9)


def test_matching_pennies_and_prisoners_dilemma():
    eqs = enumerate_equilibria(MATCHING_PENNIES.base_game())
    assert len(eqs) == 1 and eqs[0].profile.row_mix == (0.5, 0.5)
    pd = BimatrixGame([[3, 0], [5, 1]], [[3, 5], [0, 1]])
    [eq] = enumerate_equilibria(pd)
    assert eq.profile.row_mix == (0.0, 1.0) and eq.profile.col_mix == (0.0, 1.0)


def test_duplicated_rows_game():
    g = refine_game(MATCHING_PENNIES, np.zeros((2, 2)), np.zeros((2, 2)))
    assert np.array_equal(g.payoff1[0], g.payoff1[1])
    assert np.all(g.payoff1 + g.payoff2 == 0)
    eqs = enumerate_equilibria(g)
    assert eqs.degenerate
    for e in eqs:
        assert e.payoffs[0] == pytest.approx(0.0, abs=1e-12)
        assert e.profile.row_mix[0] + e.profile.row_mix[1] == pytest.approx(0.5)
        assert e.profile.col_mix == pytest.approx((0.5, 0.5))
    assert welfare_optimal_equilibrium(g)[1] == 0.0


def test_refined_layout_follows_table():
    e1 = np.array([[0.1, 0.2], [0.3, 0.4]])  # [column][branch]
    e2 = np.array([[1.0, 2.0], [3.0, 4.0]])
    s = ZeroSumSpec(1, 2, 3, 4)
    g = refine_game(s, e1, e2)
    assert g.payoff1.tolist() == [[1.1, 2.3], [1.2, 2.4], [3, 4]]
    assert g.payoff2.tolist() == [[0.0, 1.0], [1.0, 2.0], [-3, -4]]


def test_all_plus_signs_with_rho_one():
    a = 0.5 * np.ones((2, 2))
    g = refine_game(MATCHING_PENNIES, a, a)
    assert (g.payoff1 + g.payoff2).tolist() == [[1, 1], [1, 1], [0, 0]]


def test_dominant_positive_cell():
    g = BimatrixGame([[1, -5], [-5, -5]], [[1, -5], [-5, -5]])
    prof, w = welfare_optimal_equilibrium(g)
    assert w == 2.0 and prof.row_mix == (1.0, 0.0)


def test_zero_sum_welfare_is_exactly_zero():
    rng = np.random.default_rng(1)
    for _ in range(50):
        a = rng.normal(size=(3, 2))
        assert welfare_optimal_equilibrium(BimatrixGame(a, -a))[1] == 0.0


def nashpy_extremes(game):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return list(nashpy.Game(game.payoff1, game.payoff2).vertex_enumeration())


@pytest.mark.parametrize("seed", range(30))
def test_matches_nashpy_on_random_games(seed):
    rng = np.random.default_rng(seed)
    shape = tuple(rng.integers(2, 5, size=2))
    g = BimatrixGame(rng.normal(size=shape), rng.normal(size=shape))
    ours = enumerate_equilibria(g)
    theirs = nashpy_extremes(g)
    assert len(ours) == len(theirs)
    for x, y in theirs:
        assert any(np.allclose(e.profile.row_mix, x, atol=1e-7) and np.allclose(e.profile.col_mix, y, atol=1e-7) for e in ours)
    for e in ours:
        assert best_response_gap(g, np.array(e.profile.row_mix), np.array(e.profile.col_mix)) <= BR_TOL


def test_refined_games_match_nashpy_welfare():
    for p, (e1, e2) in PerturbationModel(0.5, 0.0).space():
        g = refine_game(MATCHING_PENNIES, e1, e2)
        ours = welfare_optimal_equilibrium(g)[1]
        theirs = max(float(x @ (g.payoff1 + g.payoff2) @ y) for x, y in nashpy_extremes(g))
        assert ours == pytest.approx(theirs, abs=1e-9)


def test_size_bound():
    with pytest.raises(GameTooLarge):
        enumerate_equilibria(BimatrixGame(np.zeros((5, 2)), np.zeros((5, 2))))


def test_transpose_swaps_roles():
    rng = np.random.default_rng(3)
    g = BimatrixGame(rng.normal(size=(3, 2)), rng.normal(size=(3, 2)))
    a = sorted(e.payoffs for e in enumerate_equilibria(g))
    b = sorted(e.payoffs[::-1] for e in enumerate_equilibria(transpose_game(g)))
    assert np.allclose(a, b)


def test_perturbation_marginals():
    for rho in (-1.0, -0.3, 0.0, 0.6, 1.0):
        for fam in ("two-point", "gaussian"):
            e1, e2 = PerturbationModel(0.5, rho, fam).sample(np.random.default_rng(2), 100_000)
            assert abs(e1.mean()) < 0.01 and abs(e2.mean()) < 0.01
            c = np.corrcoef(e1.ravel(), e2.ravel())[0, 1]
            assert c == pytest.approx(rho, abs=0.01)
    e1, e2 = PerturbationModel(0.5, -1.0, "gaussian").sample(np.random.default_rng(2), 100)
    assert np.array_equal(e2, -e1)


def test_space_sizes():
    assert len(PerturbationModel(0.5, 1.0).space()) == 16
    assert len(PerturbationModel(0.5, -1.0).space()) == 16
    assert len(PerturbationModel(0.5, 0.2).space()) == 256
    with pytest.raises(ExhaustiveUnavailable):
        PerturbationModel(0.5, 0.0, "gaussian").space()


def test_exhaustive_welfare_values():
    mp = MATCHING_PENNIES
    assert expected_refined_welfare(mp, PerturbationModel(0.5, -1.0), method="exhaustive").mean == 0.0
    plus = expected_refined_welfare(mp, PerturbationModel(0.5, 1.0), method="exhaustive")
    zero = expected_refined_welfare(mp, PerturbationModel(0.5, 0.0), method="exhaustive")
    assert plus.mean == GOLDEN_RHO_PLUS and zero.mean == GOLDEN_RHO_ZERO
    assert plus.max_br_gap <= BR_TOL and zero.max_br_gap <= BR_TOL


@pytest.mark.parametrize("rho", [0.0, 0.5, 1.0])
def test_positive_covariance_raises_welfare(rho):
    rep = expected_refined_welfare(MATCHING_PENNIES, PerturbationModel(0.5, rho), method="exhaustive")
    assert rep.mean > 0


def test_conditional_filter_on_e1():
    rep = expected_refined_welfare(MATCHING_PENNIES, PerturbationModel(0.5, 0.0), method="exhaustive")
    assert rep.p_e1 > 0
    assert all(x > 0 for x in rep.cond_eps_star)
    assert rep.p_full_agreement == pytest.approx(rep.p_e0 + rep.p_e1)


def test_agreement_classification():
    plus = 0.5 * np.array([[1, -1], [1, -1]])
    full, e1, star = classify_agreement(MATCHING_PENNIES, plus, plus)
    assert full and e1 and star == 0
    assert classify_agreement(MATCHING_PENNIES, plus, -plus) == (False, False, None)


def test_monte_carlo_agrees_with_golden():
    rep = expected_refined_welfare(MATCHING_PENNIES, PerturbationModel(0.5, 1.0), n=30_000, seed=8)
    assert abs(rep.mean - GOLDEN_RHO_PLUS) <= 4 * rep.std_error


def test_gaussian_anticorrelated_is_zero():
    rep = expected_refined_welfare(MATCHING_PENNIES, PerturbationModel(0.5, -1.0, "gaussian"), n=300, seed=1)
    assert rep.mean == 0.0


def test_welfare_worker_independence():
    pm = PerturbationModel(0.5, 0.0)
    a = expected_refined_welfare(MATCHING_PENNIES, pm, n=9000, seed=4, workers=1)
    b = expected_refined_welfare(MATCHING_PENNIES, pm, n=9000, seed=4, workers=3)
    assert a == b
