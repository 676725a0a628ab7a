"""Brute-force evaluators used to cross-check the estimators and solvers.

Nothing here shares code paths with the Monte Carlo estimators or the
golden-section/coordinate-ascent solvers they validate.
"""

import math
from dataclasses import dataclass
from itertools import product

import numpy as np

from .errors import RefineryError


@dataclass(frozen=True)
class DiscreteOutcomeSpace:
    """Finite distribution: a tuple of ``(probability, payload)`` pairs."""

    outcomes: tuple

    def __post_init__(self):
        object.__setattr__(self, "outcomes", tuple((float(p), x) for p, x in self.outcomes))
        if any(p < 0 for p, _ in self.outcomes):
            raise RefineryError("outcome probabilities must be nonnegative")
        total = math.fsum(p for p, _ in self.outcomes)
        if abs(total - 1.0) > 1e-12:
            raise RefineryError(f"outcome probabilities sum to {total!r}")

    def __iter__(self):
        return iter(self.outcomes)

    def __len__(self):
        return len(self.outcomes)

    def product(self, other):
        """Independent product; payloads become pairs."""
        return DiscreteOutcomeSpace(
            (pa * pb, (xa, xb)) for (pa, xa), (pb, xb) in product(self.outcomes, other.outcomes)
        )

    def drop_null(self):
        return DiscreteOutcomeSpace((p, x) for p, x in self.outcomes if p > 0)


def exact_expectation(space, f):
    """``sum(p * f(payload))`` over the space, with compensated summation."""
    return math.fsum(p * f(x) for p, x in space)


def exact_probability(space, event):
    return math.fsum(p for p, x in space if event(x))


@dataclass(frozen=True)
class GridResult:
    point: object
    value: float
    step_bound: float
    """Largest change of ``f`` between adjacent lattice points; the true
    maximum can exceed ``value`` by roughly this much."""


def _lattice(lo, hi, resolution):
    if resolution < 101:
        raise RefineryError("grid resolution must be at least 101 per axis")
    return np.linspace(lo, hi, int(resolution))


def _step_bound(values):
    diffs = []
    for axis in range(values.ndim):
        with np.errstate(invalid="ignore"):
            d = np.abs(np.diff(values, axis=axis))
        d = d[np.isfinite(d)]
        if d.size:
            diffs.append(d.max())
    return float(max(diffs)) if diffs else math.inf


def grid_maximize(f, box, resolution=2001):
    """Maximize ``f`` over a regular lattice on a 1-d interval or a 2-d box.

    ``f`` must accept numpy arrays: one array for a 1-d box ``(lo, hi)``, two
    broadcastable arrays for a 2-d box ``((lo1, hi1), (lo2, hi2))``.  Ties go
    to the lowest lattice index.
    """
    if np.ndim(box[0]) == 0:
        xs = _lattice(box[0], box[1], resolution)
        vals = np.asarray(f(xs), dtype=float)
        vals = np.where(np.isnan(vals), -np.inf, vals)
        i = int(np.argmax(vals))
        return GridResult(float(xs[i]), float(vals[i]), _step_bound(vals))
    (a0, b0), (a1, b1) = box
    x1 = _lattice(a0, b0, resolution)
    x2 = _lattice(a1, b1, resolution)
    vals = np.asarray(f(x1[:, None], x2[None, :]), dtype=float)
    vals = np.where(np.isnan(vals), -np.inf, vals)
    i, j = np.unravel_index(int(np.argmax(vals)), vals.shape)
    return GridResult((float(x1[i]), float(x2[j])), float(vals[i, j]), _step_bound(vals))


def grid_fraction(indicator, box, resolution=1001):
    """Share of cell midpoints in a 1-d or 2-d box where ``indicator`` holds.

    Approximates the probability of an event under a uniform law on the box.
    """
    def mids(lo, hi):
        edges = np.linspace(lo, hi, int(resolution) + 1)
        return 0.5 * (edges[:-1] + edges[1:])

    if np.ndim(box[0]) == 0:
        return float(np.mean(indicator(mids(*box))))
    (a0, b0), (a1, b1) = box
    g1, g2 = mids(a0, b0), mids(a1, b1)
    return float(np.mean(indicator(g1[:, None], g2[None, :])))
