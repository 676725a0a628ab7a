import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from refinery.bargaining import (
    LINEAR,
    SQRT,
    BargainingSpec,
    InfeasibleDisagreement,
    SweepNotMonotone,
    ValueFunction,
    correlation_sweep,
    expected_refined_payoffs,
    nash_solution_1d,
    nash_solution_2d,
    parse_value_function,
)
from refinery.errors import ExhaustiveUnavailable, RefineryError
from refinery.oracles import grid_maximize


def grid_payoffs(spec, w, resolution=2001):
    d1, d2 = spec.d

    def product(x1, x2):
        u1, u2 = spec.utilities(w, x1, x2)
        return np.where((u1 > d1) & (u2 > d2), (u1 - d1) * (u2 - d2), -np.inf)

    res = grid_maximize(product, ((0.0, 1.0), (0.0, 1.0)), resolution)
    return [float(v) for v in spec.utilities(w, *res.point)], res


def test_one_dimension_examples():
    s = nash_solution_1d(LINEAR)
    assert s.allocation == 0.5 and s.payoffs == (0.5, 0.5)
    s = nash_solution_1d(SQRT)
    assert s.allocation == 0.5 and s.payoffs[0] == math.sqrt(0.5)
    with pytest.raises(InfeasibleDisagreement):
        nash_solution_1d(LINEAR, d=(0.9, 0.9))


def test_one_dimension_asymmetric_against_grid():
    cube = ValueFunction("power", 1 / 3)
    s = nash_solution_1d(SQRT, u2=cube)
    x = np.linspace(0, 1, 200_001)
    i = np.argmax(np.sqrt(x) * np.cbrt(1 - x))
    assert s.allocation == pytest.approx(x[i], abs=1e-5)
    # analytic: d/dx [0.5 ln x + 1/3 ln(1-x)] = 0 -> x = 3/5; a line search on a
    # smooth maximum resolves x only to about sqrt(machine eps)
    assert s.allocation == pytest.approx(0.6, abs=1e-7)


def test_value_function_parsing():
    assert parse_value_function("linear") == LINEAR
    assert parse_value_function("sqrt") == SQRT
    assert parse_value_function("power:0.25").exponent == 0.25
    with pytest.raises(RefineryError):
        parse_value_function("log")
    assert ValueFunction.from_dict(SQRT.to_dict()) == SQRT


def test_linear_extreme_weights():
    spec = BargainingSpec(sigma=0.5, rho=-1.0)
    s = nash_solution_2d(spec, (1.0, 0.0))
    assert s.allocation == (1.0, 0.0) and s.payoffs == (1.0, 1.0)
    s = nash_solution_2d(spec, (0.0, 1.0))
    assert s.allocation == (0.0, 1.0) and s.payoffs == (1.0, 1.0)


def test_equal_weights_keep_bundled_split():
    for spec in (BargainingSpec(SQRT, SQRT, 0.25), BargainingSpec()):
        for w in (0.25, 0.5, 0.75):
            s = nash_solution_2d(spec, (w, w))
            assert s.allocation == (0.5, 0.5)
            assert s.payoffs == spec.baseline().payoffs


@pytest.mark.parametrize("w", [(0.75, 0.25), (0.25, 0.75), (0.6, 0.3), (0.7, 0.55)])
@pytest.mark.parametrize("vf", [LINEAR, SQRT])
def test_two_dimension_against_grid(w, vf):
    spec = BargainingSpec(vf, vf, 0.25)
    s = nash_solution_2d(spec, w)
    pay, res = grid_payoffs(spec, w)
    assert res.value <= s.nash_product + res.step_bound
    assert np.allclose(pay, s.payoffs, atol=1e-4)


def test_asymmetric_value_functions_against_grid():
    spec = BargainingSpec(SQRT, LINEAR, 0.25, d=(0.1, 0.1))
    for w in ((0.75, 0.25), (0.25, 0.25)):
        s = nash_solution_2d(spec, w)
        pay, _ = grid_payoffs(spec, w)
        assert np.allclose(pay, s.payoffs, atol=1e-4)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_pareto_optimal(w1, w2):
    spec = BargainingSpec(SQRT, SQRT, 0.5)
    s = nash_solution_2d(spec, (w1, w2))
    x = np.linspace(0, 1, 201)
    u1, u2 = spec.utilities((w1, w2), x[:, None], x[None, :])
    dominated = (u1 >= s.payoffs[0] + 1e-7) & (u2 >= s.payoffs[1] + 1e-7)
    assert not dominated.any()


def test_scale_covariance():
    # scaling both value functions scales payoffs and leaves the split alone
    w = (0.7, 0.2)
    base = nash_solution_2d(BargainingSpec(SQRT, SQRT, 0.25), w)
    spec = BargainingSpec(SQRT, SQRT, 0.25)
    scaled = ValueFunction("custom-grid", grid=3 * np.sqrt(np.linspace(0, 1, 20_001)))
    s = nash_solution_2d(BargainingSpec(scaled, scaled, 0.25), w)
    assert np.allclose(s.payoffs, 3 * np.array(base.payoffs), atol=1e-4)
    assert np.allclose(s.allocation, base.allocation, atol=1e-3)
    assert spec.baseline().payoffs[0] == math.sqrt(0.5)


def test_refined_never_below_baseline():
    spec = BargainingSpec(SQRT, SQRT, 0.25)
    base = spec.baseline().payoffs
    rng = np.random.default_rng(5)
    for w in rng.uniform(0.25, 0.75, size=(15, 2)):
        s = nash_solution_2d(spec, tuple(w))
        assert s.nash_product >= base[0] * base[1] - 1e-12


def test_exhaustive_linear_gain():
    rep = expected_refined_payoffs(BargainingSpec(sigma=0.5, rho=-1.0), method="exhaustive")
    assert rep.baseline == (0.5, 0.5)
    assert rep.mean == (1.0, 1.0) and rep.gain == (0.5, 0.5)


def test_monte_carlo_matches_exhaustive():
    spec = BargainingSpec(SQRT, SQRT, 0.25, 0.0)
    exact = expected_refined_payoffs(spec, method="exhaustive")
    mc = expected_refined_payoffs(spec, n=4000, seed=3)
    for i in (0, 1):
        assert abs(mc.mean[i] - exact.mean[i]) <= 4 * mc.std_error[i]
    assert exact.gain[0] > 0


def test_perfect_correlation_gives_no_gain():
    rep = expected_refined_payoffs(BargainingSpec(SQRT, SQRT, 0.25, 1.0), method="exhaustive")
    assert rep.gain == (0.0, 0.0)


def test_correlation_sweep_linear():
    rows = correlation_sweep(BargainingSpec(sigma=0.5), [-1, -0.5, 0, 0.5, 1])
    gains = [rep.gain for _, rep in rows]
    assert gains == [(g, g) for g in (0.5, 0.375, 0.25, 0.125, 0.0)]


def test_sweep_rejects_unsorted_and_flat():
    with pytest.raises(RefineryError):
        correlation_sweep(BargainingSpec(), [0, -1])
    with pytest.raises(SweepNotMonotone):
        # rho = 1 twice over would not be strictly increasing; use a tiny step instead
        correlation_sweep(BargainingSpec(sigma=0.5), [1 - 1e-12, 1])


def test_spec_validation():
    with pytest.raises(RefineryError):
        BargainingSpec(d=(0.0, 0.1))
    with pytest.raises(RefineryError):
        BargainingSpec(sigma=0.6)
    with pytest.raises(RefineryError):
        BargainingSpec(rho=1.5)
    with pytest.raises(RefineryError):
        BargainingSpec(weight_model="independent-uniform", rho=0.5, sigma=0.1)
    with pytest.raises(ExhaustiveUnavailable):
        BargainingSpec(weight_model="independent-uniform", sigma=0.1).weight_space()
    spec = BargainingSpec(SQRT, LINEAR, 0.3, -0.2, (0.05, 0.05))
    assert BargainingSpec.from_dict(spec.to_dict()) == spec


def test_weight_sampling():
    w = BargainingSpec(sigma=0.25, rho=0.5).sample_weights(np.random.default_rng(0), 100_000)
    assert set(np.unique(w)) == {0.25, 0.75}
    assert np.mean(w[:, 0] == w[:, 1]) == pytest.approx(0.75, abs=0.01)
    u = BargainingSpec(sigma=0.1, weight_model="independent-uniform").sample_weights(np.random.default_rng(0), 100_000)
    assert u.std(axis=0) == pytest.approx([0.1, 0.1], abs=0.002)


def test_workers_do_not_change_estimates():
    spec = BargainingSpec(SQRT, SQRT, 0.25, 0.3)
    a = expected_refined_payoffs(spec, n=5000, seed=1, workers=1)
    b = expected_refined_payoffs(spec, n=5000, seed=1, workers=2)
    assert a == b
