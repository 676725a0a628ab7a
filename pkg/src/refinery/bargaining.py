"""Nash bargaining over one good and over a refined two-dimensional good.

Before refinement the parties split one good: agent 1 gets ``u(x)``, agent 2
gets ``u(1 - x)``.  Refinement separates the good into two dimensions valued
by ``v1`` and ``v2`` with agent-specific weights, so agent ``i`` gets
``w_i v1(x1) + (1 - w_i) v2(x2)`` (agent 2 on the complements).  Weights are
drawn with mean 1/2 so the bundled split ``x1 = x2`` reproduces the baseline.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import ExhaustiveUnavailable, RefineryError
from .oracles import DiscreteOutcomeSpace
from .streams import mean_and_se, sample_blocks

INVPHI = (math.sqrt(5) - 1) / 2
LINE_TOL = 1e-12
PAYOFF_TOL = 1e-9
REPLACE_MARGIN = 1e-12


class InfeasibleDisagreement(RefineryError):
    pass


class SweepNotMonotone(RuntimeError):
    pass


@dataclass(frozen=True)
class ValueFunction:
    """Increasing value function on [0, 1] with ``v(0) = 0``.

    ``power`` is ``x**exponent`` with exponent in (0, 1]; ``custom-grid``
    interpolates linearly through ``grid`` values at equally spaced points.
    """

    family: str = "linear"
    exponent: float = 1.0
    grid: tuple = None

    def __post_init__(self):
        if self.family == "power":
            if not 0 < self.exponent <= 1:
                raise RefineryError(f"power exponent {self.exponent} outside (0, 1]")
        elif self.family == "custom-grid":
            g = np.asarray(self.grid, dtype=float)
            if g.ndim != 1 or g.size < 2 or not np.all(np.isfinite(g)):
                raise RefineryError("custom grid needs at least two finite values")
            if g[0] != 0:
                raise RefineryError("custom grid must start at v(0) = 0")
            slopes = np.diff(g)
            if np.any(slopes <= 0):
                raise RefineryError("custom grid must be strictly increasing")
            if np.any(np.diff(slopes) > 1e-12 * max(1.0, float(np.max(slopes)))):
                raise RefineryError("custom grid must be concave")
            object.__setattr__(self, "grid", tuple(g.tolist()))
            g.setflags(write=False)
            object.__setattr__(self, "_knots", (np.linspace(0.0, 1.0, g.size), g))
        elif self.family != "linear":
            raise RefineryError(f"unknown value-function family {self.family!r}")

    def __call__(self, x):
        if self.family == "linear":
            return x
        if self.family == "power":
            return np.power(x, self.exponent) if self.exponent != 1 else x
        return np.interp(x, *self._knots)

    @property
    def strictly_concave(self):
        if self.family == "power":
            return self.exponent < 1
        if self.family == "custom-grid":
            return bool(np.all(np.diff(np.diff(self.grid)) < 0))
        return False

    def to_dict(self):
        doc = {"family": self.family}
        if self.family == "power":
            doc["exponent"] = self.exponent
        if self.family == "custom-grid":
            doc["grid"] = list(self.grid)
        return doc

    @classmethod
    def from_dict(cls, doc):
        if isinstance(doc, str):
            return parse_value_function(doc)
        return cls(doc.get("family", "linear"), float(doc.get("exponent", 1.0)), doc.get("grid"))


LINEAR = ValueFunction("linear")
SQRT = ValueFunction("power", 0.5)


def parse_value_function(text):
    """``linear``, ``sqrt`` or ``power:<a>``."""
    text = text.strip().lower()
    if text == "linear":
        return LINEAR
    if text == "sqrt":
        return SQRT
    if text.startswith("power:"):
        return ValueFunction("power", float(text.split(":", 1)[1]))
    raise RefineryError(f"unknown value function {text!r}")


@dataclass(frozen=True)
class BargainingSolution:
    allocation: object
    payoffs: tuple
    nash_product: float


def _golden(f, lo, hi):
    """Maximize a unimodal ``f`` on ``[lo, hi]``."""
    a, b = lo, hi
    c = b - INVPHI * (b - a)
    d = a + INVPHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > LINE_TOL:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INVPHI * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def _line_max(g1, g2):
    """Maximize ``g1(t) * g2(t)`` on [0, 1] over ``g1, g2 > 0``.

    ``g1`` must be nondecreasing and ``g2`` nonincreasing, both concave, so the
    feasible set is an interval and the log-product is concave on it.
    Returns ``(t, product)`` or ``None`` when nothing is feasible.
    """
    lo, hi = 0.0, 1.0
    if g1(0.0) <= 0:
        if g1(1.0) <= 0:
            return None
        lo = brentq(g1, 0.0, 1.0, xtol=1e-15)
    if g2(1.0) <= 0:
        if g2(0.0) <= 0:
            return None
        hi = brentq(g2, 0.0, 1.0, xtol=1e-15)
    if lo >= hi:
        return None

    def logp(t):
        a, b = g1(t), g2(t)
        return math.log(a) + math.log(b) if a > 0 and b > 0 else -math.inf

    best = None
    for t in (_golden(logp, lo, hi), lo, hi):
        a, b = g1(t), g2(t)
        if a > 0 and b > 0 and (best is None or a * b > best[1]):
            best = (t, a * b)
    return best


def nash_solution_1d(u, d=(0.0, 0.0), u2=None):
    """Split one good: maximize ``(u(x) - d1) * (u2(1 - x) - d2)`` over ``x`` in [0, 1].

    ``u2`` defaults to ``u``.  With one value function and ``d1 == d2`` the
    problem is symmetric and the maximizer is exactly 1/2.
    """
    d1, d2 = map(float, d)
    other = u if u2 is None else u2
    g1 = lambda x: float(u(x)) - d1  # noqa: E731
    g2 = lambda x: float(other(1.0 - x)) - d2  # noqa: E731
    if (u2 is None or u2 == u) and d1 == d2:
        if g1(0.5) <= 0:
            raise InfeasibleDisagreement(f"d = {d} is not below the frontier")
        x = 0.5
    else:
        best = _line_max(g1, g2)
        if best is None:
            raise InfeasibleDisagreement(f"d = {d} is not below the frontier")
        x = best[0]
    p1, p2 = float(u(x)), float(other(1.0 - x))
    return BargainingSolution(x, (p1, p2), (p1 - d1) * (p2 - d2))


WEIGHT_MODELS = ("two-point", "independent-uniform")


@dataclass(frozen=True)
class BargainingSpec:
    """Two-dimension bargaining problem with random weights on the first dimension.

    ``two-point``: ``w_i`` in ``{1/2 - sigma, 1/2 + sigma}`` with both agents on
    the same side with probability ``(1 + rho) / 2``.  ``independent-uniform``:
    independent uniform weights with standard deviation ``sigma`` (``rho`` must be 0).
    """

    v1: ValueFunction = LINEAR
    v2: ValueFunction = LINEAR
    sigma: float = 0.5
    rho: float = 0.0
    d: tuple = (0.0, 0.0)
    weight_model: str = "two-point"

    def __post_init__(self):
        object.__setattr__(self, "d", tuple(float(x) for x in self.d))
        if len(self.d) != 2 or self.d[0] != self.d[1]:
            raise RefineryError("disagreement point must be symmetric (d1 == d2)")
        if self.weight_model not in WEIGHT_MODELS:
            raise RefineryError(f"weight model must be one of {WEIGHT_MODELS}")
        if not 0 < self.sigma <= 0.5:
            raise RefineryError(f"sigma = {self.sigma} outside (0, 1/2]")
        if not -1 <= self.rho <= 1:
            raise RefineryError(f"rho = {self.rho} outside [-1, 1]")
        if self.weight_model == "independent-uniform":
            if self.rho != 0:
                raise RefineryError("independent-uniform weights need rho = 0")
            if math.sqrt(3) * self.sigma > 0.5:
                raise RefineryError("uniform weights with this sigma leave [0, 1]")

    def with_rho(self, rho):
        return BargainingSpec(self.v1, self.v2, self.sigma, rho, self.d, self.weight_model)

    def baseline(self):
        """Bundled pre-refinement solution on ``u = (v1 + v2) / 2``."""
        v1, v2 = self.v1, self.v2
        u = v1 if v1 == v2 else (lambda x: 0.5 * (v1(x) + v2(x)))
        return nash_solution_1d(u, self.d)

    def utilities(self, weights, x1, x2):
        w1, w2 = weights
        u1 = w1 * self.v1(x1) + (1 - w1) * self.v2(x2)
        u2 = w2 * self.v1(1 - x1) + (1 - w2) * self.v2(1 - x2)
        return u1, u2

    def weight_space(self):
        if self.weight_model != "two-point":
            raise ExhaustiveUnavailable("exhaustive evaluation needs the two-point weight model")
        hi, lo = 0.5 + self.sigma, 0.5 - self.sigma
        same, diff = (1 + self.rho) / 4, (1 - self.rho) / 4
        pts = [(same, (hi, hi)), (diff, (hi, lo)), (diff, (lo, hi)), (same, (lo, lo))]
        return DiscreteOutcomeSpace(pts).drop_null()

    def sample_weights(self, rng, size):
        if self.weight_model == "two-point":
            s1 = np.where(rng.random(size) < 0.5, 1.0, -1.0)
            s2 = np.where(rng.random(size) < (1 + self.rho) / 2, s1, -s1)
            return np.stack([0.5 + self.sigma * s1, 0.5 + self.sigma * s2], axis=1)
        half = math.sqrt(3) * self.sigma
        return rng.uniform(0.5 - half, 0.5 + half, size=(size, 2))

    def to_dict(self):
        return {
            "v1": self.v1.to_dict(),
            "v2": self.v2.to_dict(),
            "sigma": self.sigma,
            "rho": self.rho,
            "d": list(self.d),
            "weight_model": self.weight_model,
        }

    @classmethod
    def from_dict(cls, doc):
        return cls(
            ValueFunction.from_dict(doc.get("v1", "linear")),
            ValueFunction.from_dict(doc.get("v2", "linear")),
            float(doc.get("sigma", 0.5)),
            float(doc.get("rho", 0.0)),
            tuple(doc.get("d", (0.0, 0.0))),
            doc.get("weight_model", "two-point"),
        )


def _bundled(spec, weights):
    d1, d2 = spec.d
    if weights[0] == weights[1] or spec.v1 == spec.v2:
        # the diagonal problem is symmetric between the agents
        t = 0.5
    else:
        best = _line_max(
            lambda t: float(spec.utilities(weights, t, t)[0]) - d1,
            lambda t: float(spec.utilities(weights, t, t)[1]) - d2,
        )
        if best is None:
            return None
        t = best[0]
    p1, p2 = map(float, spec.utilities(weights, t, t))
    if p1 <= d1 or p2 <= d2:
        return None
    return (t, t), (p1 - d1) * (p2 - d2)


SCAN = 101


def _inner(spec, weights, x1):
    """Best ``x2`` for fixed ``x1``: ``(x2, product)`` or ``None``."""
    d1, d2 = spec.d
    return _line_max(
        lambda t: float(spec.utilities(weights, x1, t)[0]) - d1,
        lambda t: float(spec.utilities(weights, x1, t)[1]) - d2,
    )


def _nested(spec, weights):
    """Maximize the Nash product by golden-section over ``x1`` of the inner optimum over ``x2``.

    The inner maximum of a jointly concave log-product is concave in ``x1``,
    so a coarse scan brackets the optimum and golden-section refines it.
    """

    def h(x1):
        best = _inner(spec, weights, x1)
        return math.log(best[1]) if best is not None else -math.inf

    grid = np.linspace(0.0, 1.0, SCAN)
    vals = [h(x) for x in grid]
    i = int(np.argmax(vals))
    if vals[i] == -math.inf:
        return None
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, SCAN - 1)]
    cands = [_golden(h, lo, hi), float(grid[i]), float(lo), float(hi)]
    x1 = float(max(cands, key=h))
    x2, prod = _inner(spec, weights, x1)
    return (x1, x2), prod


def nash_solution_2d(spec, weights):
    """Nash bargaining solution after refinement for realized weights ``(w_1, w_2)``.

    Nested golden-section search on the concave log Nash product.  The
    bundled optimum is the first candidate and is replaced only by a point
    beating it by a relative margin, so ties keep the bundled split.
    """
    w = tuple(float(x) for x in weights)
    if len(w) != 2 or not all(0 <= x <= 1 for x in w):
        raise RefineryError(f"weights {weights} must lie in [0, 1]")
    best = _bundled(spec, w)
    cand = _nested(spec, w)
    if cand is not None and (best is None or cand[1] > best[1] * (1 + REPLACE_MARGIN)):
        best = cand
    if best is None:
        raise InfeasibleDisagreement(f"d = {spec.d} is not below the frontier")
    x = best[0]
    payoffs = tuple(map(float, spec.utilities(w, x[0], x[1])))
    return BargainingSolution(x, payoffs, best[1])


@dataclass(frozen=True)
class BargainingReport:
    mean: tuple
    std_error: tuple
    baseline: tuple
    n: int
    method: str
    realizations: tuple = ()
    """Exhaustive only: ``(prob, weights, BargainingSolution)`` per joint weight outcome."""

    @property
    def gain(self):
        return tuple(m - b for m, b in zip(self.mean, self.baseline))


def expected_refined_payoffs(spec, n=10_000, seed=0, method="monte-carlo", workers=None):
    """Expected post-refinement Nash payoffs per agent against the bundled baseline."""
    base = spec.baseline().payoffs
    if method == "exhaustive":
        reals = tuple((p, w, nash_solution_2d(spec, w)) for p, w in spec.weight_space())
        mean = tuple(math.fsum(p * s.payoffs[i] for p, _, s in reals) for i in (0, 1))
        return BargainingReport(mean, (0.0, 0.0), base, len(reals), method, reals)
    if method != "monte-carlo":
        raise RefineryError(f"unknown method {method!r}")
    if n < 1:
        raise RefineryError("n must be >= 1")
    w = sample_blocks(spec.sample_weights, n, seed, ("bargain",), workers)
    uniq, inverse = np.unique(w, axis=0, return_inverse=True)
    pays = np.array([nash_solution_2d(spec, tuple(row)).payoffs for row in uniq])
    pays = pays[np.asarray(inverse).reshape(-1)]
    stats = [mean_and_se(pays[:, i]) for i in (0, 1)]
    return BargainingReport(tuple(s[0] for s in stats), tuple(s[1] for s in stats), base, n, method)


def correlation_sweep(spec, rho_list):
    """Exhaustive per-agent expected gains for each ``rho``; gains must strictly fall as ``rho`` rises."""
    rhos = [float(r) for r in rho_list]
    if not rhos or any(b <= a for a, b in zip(rhos, rhos[1:])):
        raise RefineryError("rho list must be nonempty and strictly increasing")
    rows = []
    for rho in rhos:
        rep = expected_refined_payoffs(spec.with_rho(rho), method="exhaustive")
        rows.append((rho, rep))
    for (ra, a), (rb, b) in zip(rows, rows[1:]):
        for i in (0, 1):
            if not a.gain[i] - b.gain[i] > PAYOFF_TOL:
                raise SweepNotMonotone(f"gain of agent {i + 1} does not fall from rho={ra} to rho={rb}")
    return rows
