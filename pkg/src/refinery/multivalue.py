"""Several value dimensions over one act partition: dilemmas and multi-value dominance.

Refining an act splits every dimension at once with a single shared
probability ``q``.  Each dimension ``i`` gets its own spread ``delta_i`` and
the branch values follow the same mean-preserving construction as the
single-value models::

    v[i, 1] = V_i(A) + (1 - q) * delta_i
    v[i, 2] = V_i(A) - q * delta_i
"""

import math
from dataclasses import dataclass
from itertools import product

import numpy as np

from .algebra import LengthMismatch, make_problem, problem_from_dict, problem_to_dict
from .errors import RefineryError
from .models import DegenerateSplit, Point, TwoPoint, dist_from_dict
from .oracles import DiscreteOutcomeSpace
from .streams import mean_and_se, sample_blocks

COUPLINGS = ("independent", "common-spread", "explicit-two-point-joint")


class NotADilemma(RefineryError):
    pass


class BadSimplex(RefineryError):
    pass


@dataclass(frozen=True, eq=False)
class ValueProfile:
    """``values[i][atom_id]`` is dimension ``i`` on one atom of ``problem``."""

    problem: object
    values: tuple

    def __post_init__(self):
        if len(self.values) < 2:
            raise LengthMismatch("a value profile needs at least two dimensions")
        ids = self.problem.all_atoms()
        for dim in self.values:
            if set(dim) != ids:
                raise LengthMismatch("every dimension must be defined on every atom")

    @property
    def k(self):
        return len(self.values)

    def act_value(self, dim, act):
        atoms = self.problem.acts[act]
        cred = self.problem.credence
        mass = math.fsum(cred[a] for a in atoms)
        if len(atoms) == 1:
            (a,) = atoms
            return self.values[dim][a]
        return math.fsum(cred[a] * self.values[dim][a] for a in atoms) / mass

    def act_vector(self, act):
        return np.array([self.act_value(i, act) for i in range(self.k)])

    def to_dict(self):
        doc = problem_to_dict(self.problem)
        doc["values"] = [[dim[a.id] for a in self.problem.atoms] for dim in self.values]
        return doc

    @classmethod
    def from_dict(cls, doc):
        doc = dict(doc)
        values = doc.pop("values")
        doc.setdefault("desirability", [0.0] * len(doc["atoms"]))
        problem = problem_from_dict(doc)
        return cls(problem, tuple({a.id: float(v[i]) for i, a in enumerate(problem.atoms)} for v in values))


def make_profile(atom_labels, act_groups, credence, values):
    n = len(atom_labels)
    if any(len(v) != n for v in values):
        raise LengthMismatch("each value dimension needs one entry per atom")
    problem = make_problem(atom_labels, act_groups, credence, [0.0] * n)
    return ValueProfile(problem, tuple({i: float(x) for i, x in enumerate(v)} for v in values))


def dominates_vectors(candidate, others):
    """Weakly above the rivals' maximum on every dimension, strictly on at least one."""
    c = np.asarray(candidate, dtype=float)
    others = np.atleast_2d(np.asarray(others, dtype=float))
    if others.size == 0:
        return True
    best = others.max(axis=0)
    return bool(np.all(c >= best) and np.any(c > best))


def multi_value_dominates(candidate, others, profile):
    if candidate in others:
        raise RefineryError("candidate must not be among the rivals")
    return dominates_vectors(profile.act_vector(candidate), [profile.act_vector(o) for o in others])


def detect_dilemma(profile, act_a, act_not_a):
    """Two dimensions: ``V1`` favours ``act_a`` and ``V2`` favours ``act_not_a``.

    With more dimensions: neither act weakly dominates the other.
    """
    a = profile.act_vector(act_a)
    b = profile.act_vector(act_not_a)
    if profile.k == 2:
        return bool(a[0] > b[0] and a[1] < b[1])
    return bool(not np.all(a >= b) and not np.all(b >= a))


def aggregate_utility(values, weights):
    w = np.asarray(weights, dtype=float)
    v = np.asarray(values, dtype=float)
    if w.shape != v.shape:
        raise BadSimplex("one weight per value dimension")
    if np.any(w < 0) or abs(math.fsum(w) - 1.0) > 1e-12:
        raise BadSimplex(f"weights {w.tolist()} are not on the simplex")
    return float(np.dot(w, v))


def simplex_grid(k, step=0.01):
    """All weight vectors on the ``k``-simplex whose entries are multiples of ``step``."""
    m = round(1 / step)
    if abs(m * step - 1) > 1e-9:
        raise BadSimplex("1/step must be an integer")

    def compositions(total, parts):
        if parts == 1:
            yield (total,)
            return
        for head in range(total + 1):
            for rest in compositions(total - head, parts - 1):
                yield (head,) + rest

    return np.array([c for c in compositions(m, k)], dtype=float) / m


def argmax_invariance(candidate, others, step=0.01):
    """Count grid weights where a rival aggregates above ``candidate``.

    Returns ``(violations, max_margin)``, the margin being the largest lead of
    the candidate over its best rival anywhere on the grid.
    """
    c = np.asarray(candidate, dtype=float)
    o = np.atleast_2d(np.asarray(others, dtype=float))
    grid = simplex_grid(len(c), step)
    lead = grid @ c - (grid @ o.T).max(axis=1)
    return int(np.sum(lead < 0)), float(lead.max())


# -- joint refinement model ----------------------------------------------------


@dataclass(frozen=True)
class JointRefinementModel:
    """Joint uncertainty over how one act splits across all value dimensions.

    ``spreads`` holds one spread distribution per dimension.  Couplings:

    * ``independent``: each ``delta_i`` drawn separately from ``spreads[i]``;
    * ``common-spread``: one draw ``d`` from ``spreads[0]`` and ``delta_i = scales[i] * d``;
    * ``explicit-two-point-joint``: ``delta_i = signs[i] * magnitudes[i]`` with the sign
      pattern drawn from ``table``, a tuple of ``(probability, signs)``.
    """

    q: object
    spreads: tuple = ()
    coupling: str = "independent"
    scales: tuple = ()
    magnitudes: tuple = ()
    table: tuple = ()

    def __post_init__(self):
        if self.coupling not in COUPLINGS:
            raise RefineryError(f"coupling must be one of {COUPLINGS}")
        lo, hi = self.q.bounds
        if not (lo >= 0 and hi <= 1) or isinstance(self.q, (Point, TwoPoint)) and not (lo > 0 and hi < 1):
            raise DegenerateSplit("shared split probability must lie inside (0, 1)")
        if self.coupling == "explicit-two-point-joint":
            if not self.table:
                raise RefineryError("explicit joint needs a sign table")
            k = len(self.magnitudes)
            for p, signs in self.table:
                if p < 0 or len(signs) != k or any(s not in (-1, 1) for s in signs):
                    raise RefineryError("table rows are (probability >= 0, one +/-1 sign per dimension)")
            total = math.fsum(p for p, _ in self.table)
            if abs(total - 1) > 1e-12:
                raise RefineryError(f"sign table probabilities sum to {total}")
        elif not self.spreads:
            raise RefineryError("spreads required")

    def dims(self):
        if self.coupling == "explicit-two-point-joint":
            return len(self.magnitudes)
        if self.coupling == "common-spread":
            return len(self.scales) if self.scales else None
        return len(self.spreads)

    def draw_spreads(self, rng, size, k):
        if self.coupling == "independent":
            return np.stack([d.sample(rng, size) for d in self.spreads], axis=1)
        if self.coupling == "common-spread":
            scales = np.asarray(self.scales or (1.0,) * k, dtype=float)
            return self.spreads[0].sample(rng, size)[:, None] * scales[None, :]
        probs = np.array([p for p, _ in self.table])
        signs = np.array([s for _, s in self.table], dtype=float)
        idx = rng.choice(len(probs), size=size, p=probs / probs.sum())
        return signs[idx] * np.asarray(self.magnitudes, dtype=float)[None, :]

    def spread_support(self, k):
        """Finite joint support of the spread vector, as ``(probability, deltas)``."""
        if self.coupling == "independent":
            per_dim = [d.support() for d in self.spreads]
            return [
                (math.prod(p for p, _ in combo), tuple(x for _, x in combo)) for combo in product(*per_dim)
            ]
        if self.coupling == "common-spread":
            scales = self.scales or (1.0,) * k
            return [(p, tuple(s * x for s in scales)) for p, x in self.spreads[0].support()]
        return [(p, tuple(s * m for s, m in zip(signs, self.magnitudes))) for p, signs in self.table]

    def to_dict(self):
        doc = {"q": self.q.to_dict(), "coupling": self.coupling}
        if self.spreads:
            doc["spreads"] = [d.to_dict() for d in self.spreads]
        if self.scales:
            doc["scales"] = list(self.scales)
        if self.magnitudes:
            doc["magnitudes"] = list(self.magnitudes)
        if self.table:
            doc["table"] = [{"prob": p, "signs": list(s)} for p, s in self.table]
        return doc

    @classmethod
    def from_dict(cls, doc):
        return cls(
            q=dist_from_dict(doc["q"]),
            spreads=tuple(dist_from_dict(d) for d in doc.get("spreads", ())),
            coupling=doc.get("coupling", "independent"),
            scales=tuple(float(s) for s in doc.get("scales", ())),
            magnitudes=tuple(float(m) for m in doc.get("magnitudes", ())),
            table=tuple((float(r["prob"]), tuple(int(s) for s in r["signs"])) for r in doc.get("table", ())),
        )


def split_values(base, q, deltas):
    """Branch value arrays ``(v1, v2)``, each of shape ``(samples, k)``."""
    q = np.asarray(q, dtype=float)[:, None]
    v1 = base[None, :] + (1 - q) * deltas
    v2 = base[None, :] - q * deltas
    return v1, v2


def classify(v1, v2, rival):
    """Per-sample flags for branch 1 dominating and branch 2 dominating.

    Dominance of a branch is over ``{rival act, other branch}``: weakly above
    both on every dimension and strictly above their maximum on at least one.
    """
    best_vs_1 = np.maximum(rival[None, :], v2)
    best_vs_2 = np.maximum(rival[None, :], v1)
    omega1 = np.all(v1 >= best_vs_1, axis=1) & np.any(v1 > best_vs_1, axis=1)
    omega2 = np.all(v2 >= best_vs_2, axis=1) & np.any(v2 > best_vs_2, axis=1)
    return omega1, omega2


@dataclass(frozen=True)
class ResolutionEstimate:
    prob: float
    std_error: float
    n: int
    omega1: int
    omega2: int


def _setup(profile, act_a, act_not_a, joint):
    if not detect_dilemma(profile, act_a, act_not_a):
        raise NotADilemma(f"acts {act_a} and {act_not_a} do not form a dilemma")
    k = profile.k
    if joint.dims() not in (None, k):
        raise LengthMismatch(f"joint model has {joint.dims()} dimensions, profile has {k}")
    return profile.act_vector(act_a), profile.act_vector(act_not_a), k


def sample_split_values(profile, act_a, act_not_a, joint, n, seed, workers=None):
    """Sampled ``(q, v1, v2)`` for refining ``act_a``; rows are samples."""
    base, _, k = _setup(profile, act_a, act_not_a, joint)

    def draw(rng, m):
        q = joint.q.sample(rng, m)
        if np.any((q <= 0) | (q >= 1)):
            raise DegenerateSplit("sampled split probability outside (0, 1)")
        deltas = joint.draw_spreads(rng, m, k)
        return (q, *split_values(base, q, deltas))

    return sample_blocks(draw, n, seed, ("dilemma",), workers)


def resolution_probability(profile, act_a, act_not_a, joint, n, seed, workers=None):
    """Monte Carlo probability that refining ``act_a`` reveals a dominating branch."""
    rival = profile.act_vector(act_not_a)
    q, v1, v2 = sample_split_values(profile, act_a, act_not_a, joint, n, seed, workers)
    omega1, omega2 = classify(v1, v2, rival)
    if np.any(omega1 & omega2):
        raise AssertionError("both branches classified as dominating in one sample")
    hit = (omega1 | omega2).astype(float)
    mean, se = mean_and_se(hit)
    return ResolutionEstimate(mean, se, n, int(omega1.sum()), int(omega2.sum()))


def resolution_space(profile, act_a, act_not_a, joint):
    """Exact outcome space with payloads ``(q, v1, v2, omega1, omega2)``."""
    base, rival, k = _setup(profile, act_a, act_not_a, joint)
    out = []
    for (pq, q), (pd, deltas) in product(joint.q.support(), joint.spread_support(k)):
        v1, v2 = split_values(base, np.array([q]), np.array([deltas], dtype=float))
        o1, o2 = classify(v1, v2, rival)
        out.append((pq * pd, (q, v1[0], v2[0], bool(o1[0]), bool(o2[0]))))
    return DiscreteOutcomeSpace(out)


def exact_resolution_probability(profile, act_a, act_not_a, joint):
    space = resolution_space(profile, act_a, act_not_a, joint)
    return math.fsum(p for p, (_, _, _, o1, o2) in space if o1 or o2)


def per_dimension_reflection_error(profile, act_a, act_not_a, joint, n, seed):
    """Largest ``|q*v[i,1] + (1-q)*v[i,2] - V_i(A)|`` over samples, per dimension."""
    base = profile.act_vector(act_a)
    q, v1, v2 = sample_split_values(profile, act_a, act_not_a, joint, n, seed)
    q = q[:, None]
    return np.abs(q * v1 + (1 - q) * v2 - base[None, :]).max(axis=0)
