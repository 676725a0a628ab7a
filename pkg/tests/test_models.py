import math

import numpy as np
import pytest

from refinery.models import (
    DegenerateMass,
    DegenerateSplit,
    Gaussian,
    Point,
    RefinementModel,
    TwoPoint,
    Uniform,
    builtin_models,
    check_rrp,
    check_uncertainty,
    outcome_space,
    sample_outcome,
    sample_outcomes,
)
from refinery.streams import BLOCK


def test_no_uncertainty_model():
    m = RefinementModel(1.0, 0.5, Point(0.5), Point(0.0))
    o = sample_outcome(m, np.random.default_rng(0))
    assert (o.u1, o.u2) == (1.0, 1.0)
    assert check_uncertainty(m, 1000, 1) == 0.0


def test_two_point_outcomes():
    m = RefinementModel(0.0, 0.5, Point(0.5), TwoPoint(2.0))
    space = outcome_space(m)
    pairs = sorted((o.u1, o.u2, p) for p, o in space)
    assert pairs == [(-1.0, 1.0, 0.5), (1.0, -1.0, 0.5)]
    assert check_uncertainty(m, 1000, 1) == 1.0


def test_uniform_spread_uncertainty():
    m = RefinementModel(0.0, 0.5, Point(0.5), Uniform(-1, 1))
    assert check_uncertainty(m, 5000, 3) >= 1 - 1 / 5000


@pytest.mark.parametrize("name", sorted(builtin_models()))
def test_builtin_reflection_holds(name):
    m = builtin_models(u0=0.7, p0=0.4)[name]
    b = sample_outcomes(m, 20_000, 11)
    q = b.q
    assert np.all((q > 0) & (q < 1))
    assert np.all((b.p1 + b.p2 > 0) & (b.p1 + b.p2 < 1))
    if m.mode == "per-sample":
        scale = np.abs(b.u1) + np.abs(b.u2) + abs(m.u0)
        assert np.all(np.abs(b.reflected - m.u0) <= 8 * np.finfo(float).eps * scale)
    assert check_rrp(m, 20_000, 5).passed


def test_biased_model_is_flagged():
    m = RefinementModel(0.0, 0.5, Point(0.5), TwoPoint(2.0), bias=0.5)
    rep = check_rrp(m, 10_000, 1)
    assert not rep.passed
    assert rep.mean == pytest.approx(0.25)


def test_expectation_mode_passes_at_1e5():
    m = builtin_models()["expectation-uniform"]
    assert check_rrp(m, 100_000, 4).passed


def test_determinism_and_worker_independence():
    m = builtin_models()["gaussian-q-gaussian-spread"]
    n = 3 * BLOCK + 17
    a = sample_outcomes(m, n, 99, workers=1)
    b = sample_outcomes(m, n, 99, workers=4)
    for x, y in zip((a.u1, a.u2, a.p1, a.p2), (b.u1, b.u2, b.p1, b.p2)):
        assert x.tobytes() == y.tobytes()
    c = sample_outcomes(m, BLOCK + 5, 99)
    assert c.u1.tobytes() == a.u1[: BLOCK + 5].tobytes()


def test_validation():
    with pytest.raises(DegenerateMass):
        RefinementModel(0.0, 1.0, Point(0.5), Point(0.0))
    with pytest.raises(DegenerateSplit):
        RefinementModel(0.0, 0.5, Point(1.0), Point(0.0))
    with pytest.raises(DegenerateMass):
        RefinementModel(0.0, 0.5, Point(0.5), Point(0.0), mass=Point(0.4))


def test_model_json_roundtrip():
    for m in builtin_models(0.2, 0.3).values():
        assert RefinementModel.from_dict(m.to_dict()) == m


def test_truncated_gaussian_moments():
    g = Gaussian(0.5, 0.15, 0.05, 0.95)
    x = g.sample(np.random.default_rng(0), 200_000)
    assert x.min() >= 0.05 and x.max() <= 0.95
    assert abs(x.mean() - g.mean) < 4 * x.std() / math.sqrt(x.size)


def test_rebase_keeps_shape():
    m = builtin_models()["uniform-mass"].rebase(2.0, 0.2)
    assert m.u0 == 2.0 and m.mass.mean == pytest.approx(0.2)
