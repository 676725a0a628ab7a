"""Seeded distributions over refinement outcomes.

A :class:`RefinementModel` describes the agent's uncertainty about how an act
will split.  In ``per-sample`` mode every draw is a mean-preserving spread of
the current value::

    u1 = u0 + (1 - q) * delta
    u2 = u0 - q * delta

so ``q*u1 + (1-q)*u2 == u0`` holds draw by draw.  In ``expectation`` mode the
split point uses the analytic mean of ``q`` instead, so the identity holds
only on average.  Branch masses are ``p1 = q*s`` and ``p2 = (1-q)*s`` with
``s`` drawn from the mass distribution (mean ``p0``).
"""

import math
from dataclasses import dataclass, field, replace
from itertools import product

import numpy as np
from scipy import stats

from .algebra import RefinementOutcome
from .errors import ExhaustiveUnavailable, RefineryError
from .streams import mean_and_se, sample_blocks

__all__ = [
    "Point",
    "TwoPoint",
    "Uniform",
    "Gaussian",
    "RefinementOutcome",
    "RefinementModel",
    "DegenerateMass",
    "DegenerateSplit",
    "sample_outcome",
    "sample_outcomes",
    "check_rrp",
    "check_uncertainty",
    "outcome_space",
    "builtin_models",
]

MODES = ("per-sample", "expectation")
_MODE_ALIASES = {
    "per-sample": "per-sample",
    "per-sample-reflection": "per-sample",
    "expectation": "expectation",
    "expectation-reflection": "expectation",
}


class DegenerateMass(RefineryError):
    pass


class DegenerateSplit(RefineryError):
    pass


class DistributionError(RefineryError):
    pass


# -- distribution vocabulary -------------------------------------------------


@dataclass(frozen=True)
class Point:
    value: float

    @property
    def mean(self):
        return self.value

    @property
    def bounds(self):
        return self.value, self.value

    def sample(self, rng, size):
        return np.full(size, float(self.value))

    def support(self):
        return [(1.0, float(self.value))]

    def scaled(self, factor):
        return Point(self.value * factor)

    def to_dict(self):
        return {"kind": "point", "value": self.value}


@dataclass(frozen=True)
class TwoPoint:
    """``center + a`` with probability ``prob``, otherwise ``center - a``."""

    a: float
    prob: float = 0.5
    center: float = 0.0

    def __post_init__(self):
        if not 0 <= self.prob <= 1:
            raise DistributionError(f"two-point probability {self.prob} outside [0, 1]")
        if not self.a >= 0:
            raise DistributionError("two-point half-width must be nonnegative")

    @property
    def mean(self):
        return self.center + self.a * (2 * self.prob - 1)

    @property
    def bounds(self):
        return self.center - self.a, self.center + self.a

    def sample(self, rng, size):
        hi = rng.random(size) < self.prob
        return np.where(hi, self.center + self.a, self.center - self.a)

    def support(self):
        pts = []
        if self.prob > 0:
            pts.append((self.prob, self.center + self.a))
        if self.prob < 1:
            pts.append((1.0 - self.prob, self.center - self.a))
        return pts

    def scaled(self, factor):
        return TwoPoint(self.a * factor, self.prob, self.center * factor)

    def to_dict(self):
        return {"kind": "two-point", "a": self.a, "prob": self.prob, "center": self.center}


@dataclass(frozen=True)
class Uniform:
    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo < self.hi:
            raise DistributionError(f"uniform needs lo < hi, got {self.lo}, {self.hi}")

    @property
    def mean(self):
        return 0.5 * (self.lo + self.hi)

    @property
    def bounds(self):
        return self.lo, self.hi

    def sample(self, rng, size):
        return rng.uniform(self.lo, self.hi, size)

    def support(self):
        raise ExhaustiveUnavailable("uniform distribution has continuous support")

    def scaled(self, factor):
        lo, hi = sorted((self.lo * factor, self.hi * factor))
        return Uniform(lo, hi)

    def to_dict(self):
        return {"kind": "uniform", "lo": self.lo, "hi": self.hi}


@dataclass(frozen=True)
class Gaussian:
    """Normal(mu, sd) truncated to ``[lo, hi]``."""

    mu: float
    sd: float
    lo: float = -math.inf
    hi: float = math.inf
    _dist: object = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.sd > 0:
            raise DistributionError("gaussian sd must be positive")
        if not self.lo < self.hi:
            raise DistributionError("gaussian truncation needs lo < hi")
        a, b = (self.lo - self.mu) / self.sd, (self.hi - self.mu) / self.sd
        object.__setattr__(self, "_dist", stats.truncnorm(a, b, loc=self.mu, scale=self.sd))

    @property
    def mean(self):
        if math.isinf(self.lo) and math.isinf(self.hi):
            return self.mu
        return float(self._dist.mean())

    @property
    def bounds(self):
        return self.lo, self.hi

    def sample(self, rng, size):
        if math.isinf(self.lo) and math.isinf(self.hi):
            return self.mu + self.sd * rng.standard_normal(size)
        return np.asarray(self._dist.rvs(size=size, random_state=rng), dtype=float)

    def support(self):
        raise ExhaustiveUnavailable("gaussian distribution has continuous support")

    def scaled(self, factor):
        lo, hi = sorted((self.lo * factor, self.hi * factor))
        return Gaussian(self.mu * factor, self.sd * abs(factor), lo, hi)

    def to_dict(self):
        return {
            "kind": "gaussian",
            "mean": self.mu,
            "sd": self.sd,
            "lo": None if math.isinf(self.lo) else self.lo,
            "hi": None if math.isinf(self.hi) else self.hi,
        }


def dist_from_dict(doc):
    kind = doc.get("kind")
    if kind == "point":
        return Point(float(doc["value"]))
    if kind == "two-point":
        return TwoPoint(float(doc["a"]), float(doc.get("prob", 0.5)), float(doc.get("center", 0.0)))
    if kind == "uniform":
        return Uniform(float(doc["lo"]), float(doc["hi"]))
    if kind == "gaussian":
        lo = doc.get("lo")
        hi = doc.get("hi")
        return Gaussian(
            float(doc["mean"]),
            float(doc["sd"]),
            -math.inf if lo is None else float(lo),
            math.inf if hi is None else float(hi),
        )
    raise DistributionError(f"unknown distribution kind {kind!r}")


# -- model ---------------------------------------------------------------------


@dataclass(frozen=True)
class RefinementModel:
    """Uncertainty about one act's refinement.

    ``bias`` is an uncorrected shift added to ``u1`` after construction.  It
    breaks reflection on purpose and exists so violations can be exercised.
    """

    u0: float
    p0: float
    q: object
    spread: object
    mass: object = None
    mode: str = "per-sample"
    bias: float = 0.0

    def __post_init__(self):
        if self.mass is None:
            object.__setattr__(self, "mass", Point(self.p0))
        mode = _MODE_ALIASES.get(self.mode)
        if mode is None:
            raise RefineryError(f"mode must be one of {MODES}, got {self.mode!r}")
        object.__setattr__(self, "mode", mode)
        if not 0 < self.p0 < 1:
            raise DegenerateMass(f"p0 = {self.p0} outside (0, 1)")
        if not math.isfinite(self.u0):
            raise RefineryError("u0 must be finite")
        lo, hi = self.q.bounds
        if not (lo >= 0 and hi <= 1) or isinstance(self.q, (Point, TwoPoint)) and not (lo > 0 and hi < 1):
            raise DegenerateSplit(f"split probability support [{lo}, {hi}] must lie inside (0, 1)")
        lo, hi = self.mass.bounds
        if not (lo >= 0 and hi <= 1):
            raise DegenerateMass(f"mass support [{lo}, {hi}] must lie inside (0, 1)")
        if abs(self.mass.mean - self.p0) > 1e-9:
            raise DegenerateMass(f"mass distribution mean {self.mass.mean} differs from p0 = {self.p0}")

    def rebase(self, u0, p0):
        """Same shape of uncertainty re-centred on a new act value and mass."""
        if isinstance(self.mass, Point):
            mass = Point(p0)
        else:
            mass = self.mass.scaled(p0 / self.mass.mean)
        return replace(self, u0=float(u0), p0=float(p0), mass=mass)

    def to_dict(self):
        doc = {
            "u0": self.u0,
            "p0": self.p0,
            "q": self.q.to_dict(),
            "spread": self.spread.to_dict(),
            "mass": self.mass.to_dict(),
            "mode": self.mode,
        }
        if self.bias:
            doc["bias"] = self.bias
        return doc

    @classmethod
    def from_dict(cls, doc):
        mass = doc.get("mass")
        return cls(
            u0=float(doc["u0"]),
            p0=float(doc["p0"]),
            q=dist_from_dict(doc["q"]),
            spread=dist_from_dict(doc["spread"]),
            mass=None if mass is None else dist_from_dict(mass),
            mode=doc.get("mode", "per-sample"),
            bias=float(doc.get("bias", 0.0)),
        )


def _construct(model, q, delta, s):
    """Map draws of (q, delta, s) to branch utilities and masses."""
    split = q if model.mode == "per-sample" else model.q.mean
    u1 = model.u0 + (1 - split) * delta + model.bias
    u2 = model.u0 - split * delta
    return u1, u2, q * s, (1 - q) * s


def _draw(model, rng, size):
    q = model.q.sample(rng, size)
    delta = model.spread.sample(rng, size)
    s = model.mass.sample(rng, size)
    if np.any((q <= 0) | (q >= 1)):
        raise DegenerateSplit("sampled split probability outside (0, 1)")
    if np.any((s <= 0) | (s >= 1)):
        raise DegenerateMass("sampled act mass outside (0, 1)")
    return _construct(model, q, delta, s)


@dataclass(frozen=True)
class OutcomeBatch:
    u1: np.ndarray
    u2: np.ndarray
    p1: np.ndarray
    p2: np.ndarray

    def __len__(self):
        return len(self.u1)

    @property
    def q(self):
        return self.p1 / (self.p1 + self.p2)

    @property
    def reflected(self):
        """``q*u1 + (1-q)*u2`` for every sample."""
        q = self.q
        return q * self.u1 + (1 - q) * self.u2

    def outcome(self, i):
        return RefinementOutcome(float(self.u1[i]), float(self.u2[i]), float(self.p1[i]), float(self.p2[i]))


def sample_outcome(model, rng):
    """Draw one :class:`RefinementOutcome` from a numpy ``Generator``."""
    u1, u2, p1, p2 = _draw(model, rng, 1)
    return RefinementOutcome(float(u1[0]), float(u2[0]), float(p1[0]), float(p2[0]))


def sample_outcomes(model, n, seed, workers=None, tag=("outcomes",)):
    """Draw ``n`` outcomes; sample ``i`` depends only on ``(seed, i)``."""
    cols = sample_blocks(lambda rng, size: tuple(_draw(model, rng, size)), n, seed, tag, workers)
    return OutcomeBatch(*cols)


@dataclass(frozen=True)
class RRPReport:
    mean: float
    std_error: float
    mass_mean: float
    mass_std_error: float
    n: int
    passed: bool


def check_rrp(model, n, seed, workers=None):
    """Monte Carlo test of reflection on the utility and the act mass.

    Passes when both sample means sit within four standard errors of their
    targets.  A floor of ``1e-12`` (relative to ``max(1, |u0|)``) absorbs the
    rounding noise of exactly-reflecting models whose standard error is zero.
    """
    if n < 1000:
        raise RefineryError("check_rrp needs n >= 1000")
    batch = sample_outcomes(model, n, seed, workers, tag=("rrp",))
    mean, se = mean_and_se(batch.reflected)
    mass_mean, mass_se = mean_and_se(batch.p1 + batch.p2)
    floor = 1e-12 * max(1.0, abs(model.u0))
    ok_u = abs(mean - model.u0) <= 4 * se + floor
    ok_p = abs(mass_mean - model.p0) <= 4 * mass_se + 1e-12
    return RRPReport(mean, se, mass_mean, mass_se, n, bool(ok_u and ok_p))


def check_uncertainty(model, n, seed, workers=None):
    """Estimated probability that the two branches differ in utility."""
    if n < 1000:
        raise RefineryError("check_uncertainty needs n >= 1000")
    batch = sample_outcomes(model, n, seed, workers, tag=("uncertainty",))
    return float(np.mean(np.abs(batch.u1 - batch.u2) > 1e-12))


def outcome_space(model):
    """Exact finite outcome distribution for point/two-point models.

    Returns a list of ``(probability, RefinementOutcome)``; raises
    :class:`ExhaustiveUnavailable` for continuous components.
    """
    out = []
    for (pq, q), (pd, d), (ps, s) in product(model.q.support(), model.spread.support(), model.mass.support()):
        u1, u2, p1, p2 = _construct(model, np.float64(q), np.float64(d), np.float64(s))
        out.append((pq * pd * ps, RefinementOutcome(float(u1), float(u2), float(p1), float(p2))))
    return out


def builtin_models(u0=0.0, p0=0.5):
    """Named models used by the statistical battery; all have refinement uncertainty."""
    gauss_q = Gaussian(0.5, 0.15, 0.05, 0.95)
    m = {
        "twopoint-sym": RefinementModel(u0, p0, Point(0.5), TwoPoint(2.0)),
        "twopoint-skew-q": RefinementModel(u0, p0, Point(0.3), TwoPoint(1.0)),
        "twopoint-asym-spread": RefinementModel(u0, p0, Point(0.5), TwoPoint(0.5, prob=0.2, center=0.3)),
        "twopoint-q": RefinementModel(u0, p0, TwoPoint(0.2, center=0.5), TwoPoint(1.0)),
        "uniform-spread": RefinementModel(u0, p0, Point(0.5), Uniform(-1.0, 1.0)),
        "uniform-q-uniform-spread": RefinementModel(u0, p0, Uniform(0.1, 0.9), Uniform(-2.0, 2.0)),
        "gaussian-spread": RefinementModel(u0, p0, Point(0.5), Gaussian(0.0, 1.0)),
        "gaussian-q-gaussian-spread": RefinementModel(u0, p0, gauss_q, Gaussian(0.0, 0.5)),
        "uniform-mass": RefinementModel(
            u0, p0, Point(0.5), TwoPoint(1.0), mass=Uniform(p0 * 0.5, p0 * 1.5)
        ),
        "gaussian-mass": RefinementModel(
            u0, p0, Uniform(0.2, 0.8), Uniform(-1.0, 1.0), mass=Gaussian(p0, 0.05, p0 - 0.2, p0 + 0.2)
        ),
        "expectation-twopoint": RefinementModel(u0, p0, TwoPoint(0.2, center=0.5), TwoPoint(1.0), mode="expectation"),
        "expectation-uniform": RefinementModel(u0, p0, Uniform(0.2, 0.8), Uniform(-1.0, 1.0), mode="expectation"),
        "small-spread": RefinementModel(u0, p0, Point(0.5), Uniform(-0.05, 0.05)),
    }
    return m
