"""Finite Jeffrey-Bolker decision problems and the act-refinement operation.

A :class:`DecisionProblem` is a finite atom set with per-atom credence and
desirability, partitioned into acts.  Propositions are sets of atom ids;
their probability is additive and their desirability is the
credence-weighted average of the atom desirabilities.

Refinement never mutates a problem.  Splitting an act replaces all of its
atoms with one fresh atom per branch and rescales every other credence by
the normalizing factor ``Z = 1 - P0(A) + p1 + p2``.
"""

import json
import math
from dataclasses import dataclass, field

from .errors import RefineryError
from .serialize import dumps

MASS_TOL = 1e-12
INPUT_MASS_TOL = 1e-9


class OverlappingActs(RefineryError):
    pass


class IncompleteCover(RefineryError):
    pass


class EmptyAct(RefineryError):
    pass


class NegativeCredence(RefineryError):
    pass


class LengthMismatch(RefineryError):
    pass


class UnnormalizedCredence(LengthMismatch):
    """Credences do not carry unit mass."""


class UnknownAtom(RefineryError):
    pass


class BottomProposition(RefineryError):
    pass


class NullProbability(RefineryError):
    pass


class InvalidTarget(RefineryError):
    pass


class OutcomeMassOutOfRange(RefineryError):
    pass


class MassOutOfRange(RefineryError):
    pass


@dataclass(frozen=True)
class Atom:
    id: int
    label: str


@dataclass(frozen=True)
class RefinementOutcome:
    """One realized refinement: branch utilities ``u1, u2`` and branch masses ``p1, p2``."""

    u1: float
    u2: float
    p1: float
    p2: float

    def __post_init__(self):
        for name in ("u1", "u2", "p1", "p2"):
            if not math.isfinite(getattr(self, name)):
                raise OutcomeMassOutOfRange(f"{name} must be finite")
        if not (self.p1 > 0 and self.p2 > 0):
            raise OutcomeMassOutOfRange(f"branch masses must be positive, got {self.p1}, {self.p2}")
        if not 0 < self.p1 + self.p2 < 1:
            raise OutcomeMassOutOfRange(f"p1 + p2 = {self.p1 + self.p2} outside (0, 1)")

    @property
    def mass(self):
        return self.p1 + self.p2

    @property
    def q(self):
        """Post-refinement probability of the first branch given the refined act."""
        return self.p1 / (self.p1 + self.p2)


@dataclass(frozen=True)
class SplitSpec:
    target: int
    outcome: RefinementOutcome
    labels: tuple = None


@dataclass(frozen=True, eq=False)
class DecisionProblem:
    """Atoms, act partition, credence and desirability.

    ``acts`` is an ordered tuple of frozensets of atom ids.  ``credence`` and
    ``desirability`` map atom id to float and must not be mutated.
    """

    atoms: tuple
    acts: tuple
    credence: dict = field(repr=False)
    desirability: dict = field(repr=False)

    def __post_init__(self):
        ids = [a.id for a in self.atoms]
        if len(set(ids)) != len(ids):
            raise LengthMismatch("atom ids must be unique")
        idset = set(ids)
        if set(self.credence) != idset or set(self.desirability) != idset:
            raise LengthMismatch("every atom needs exactly one credence and one desirability")
        _check_partition(self.acts, idset)
        for v in self.credence.values():
            if not v >= 0:
                raise NegativeCredence(f"credence {v} is negative")
        for v in self.desirability.values():
            if not math.isfinite(v):
                raise LengthMismatch("desirabilities must be finite")
        total = math.fsum(self.credence.values())
        if abs(total - 1.0) > MASS_TOL:
            raise UnnormalizedCredence(f"credences sum to {total!r}, not 1")

    @property
    def n_acts(self):
        return len(self.acts)

    def label(self, atom_id):
        for a in self.atoms:
            if a.id == atom_id:
                return a.label
        raise UnknownAtom(atom_id)

    def act_probabilities(self):
        return [probability(self, act) for act in self.acts]

    def act_desirabilities(self):
        return [desirability(self, act) for act in self.acts]

    def all_atoms(self):
        return frozenset(a.id for a in self.atoms)

    def __eq__(self, other):
        if not isinstance(other, DecisionProblem):
            return NotImplemented
        return (
            self.atoms == other.atoms
            and self.acts == other.acts
            and self.credence == other.credence
            and self.desirability == other.desirability
        )

    __hash__ = None


def _check_partition(acts, idset):
    seen = set()
    for act in acts:
        if not act:
            raise EmptyAct("acts must be nonempty")
        if seen & act:
            raise OverlappingActs(f"atoms {sorted(seen & act)} appear in more than one act")
        if not act <= idset:
            raise UnknownAtom(f"acts reference unknown atoms {sorted(act - idset)}")
        seen |= act
    if seen != idset:
        raise IncompleteCover(f"atoms {sorted(idset - seen)} belong to no act")


def make_problem(atom_labels, act_groups, credence, desirability):
    """Build a validated problem from parallel lists; credences are renormalized to unit mass."""
    n = len(atom_labels)
    if len(credence) != n or len(desirability) != n:
        raise LengthMismatch(
            f"{n} atoms but {len(credence)} credences and {len(desirability)} desirabilities"
        )
    cred = [float(c) for c in credence]
    for c in cred:
        if not c >= 0:
            raise NegativeCredence(f"credence {c} is negative")
    groups = [frozenset(int(i) for i in g) for g in act_groups]
    for g, raw in zip(groups, act_groups):
        if len(g) != len(raw):
            raise OverlappingActs("an act lists the same atom twice")
        if any(i < 0 or i >= n for i in g):
            raise IncompleteCover(f"act {sorted(g)} references atoms outside 0..{n - 1}")
    _check_partition(groups, set(range(n)))
    total = math.fsum(cred)
    if abs(total - 1.0) > INPUT_MASS_TOL:
        raise UnnormalizedCredence(f"credences carry mass {total!r}, expected 1")
    atoms = tuple(Atom(i, str(lbl)) for i, lbl in enumerate(atom_labels))
    return DecisionProblem(
        atoms=atoms,
        acts=tuple(groups),
        credence={i: c / total for i, c in enumerate(cred)},
        desirability={i: float(u) for i, u in enumerate(desirability)},
    )


def _atoms_of(problem, x):
    x = frozenset(x)
    unknown = x - problem.all_atoms()
    if unknown:
        raise UnknownAtom(f"atoms {sorted(unknown)} are not in the problem")
    return x


def probability(problem, x):
    """Credence of the proposition ``x`` (any iterable of atom ids)."""
    x = _atoms_of(problem, x)
    return math.fsum(problem.credence[a] for a in x)


def desirability(problem, x):
    """Jeffrey desirability: the credence-weighted mean of atom desirabilities over ``x``."""
    x = _atoms_of(problem, x)
    if not x:
        raise BottomProposition("desirability is undefined on the empty proposition")
    mass = probability(problem, x)
    if mass <= 0:
        raise NullProbability(f"proposition {sorted(x)} has zero probability")
    if len(x) == 1:
        (a,) = x
        return problem.desirability[a]
    return math.fsum(problem.credence[a] * problem.desirability[a] for a in x) / mass


def _check_target(problem, target):
    if isinstance(target, bool) or not isinstance(target, int) or not 0 <= target < problem.n_acts:
        raise InvalidTarget(f"act index {target!r} out of range for {problem.n_acts} acts")


def _default_labels(problem, target, k):
    act = problem.acts[target]
    base = problem.label(next(iter(act))) if len(act) == 1 else f"act{target}"
    return tuple(f"{base}&B{i + 1}" for i in range(k))


def _replace_act(problem, target, branches, labels):
    """Swap act ``target`` for fresh single-atom acts; ``branches`` is a list of (u, p)."""
    old = problem.acts[target]
    z = 1.0 - probability(problem, old) + math.fsum(p for _, p in branches)
    next_id = max(a.id for a in problem.atoms) + 1
    new_ids = list(range(next_id, next_id + len(branches)))

    atoms = [a for a in problem.atoms if a.id not in old]
    atoms += [Atom(i, str(lbl)) for i, lbl in zip(new_ids, labels)]
    credence = {a: c / z for a, c in problem.credence.items() if a not in old}
    desir = {a: u for a, u in problem.desirability.items() if a not in old}
    for i, (u, p) in zip(new_ids, branches):
        credence[i] = p / z
        desir[i] = float(u)
    acts = (
        problem.acts[:target]
        + tuple(frozenset([i]) for i in new_ids)
        + problem.acts[target + 1 :]
    )
    return DecisionProblem(tuple(atoms), acts, credence, desir)


def refine_binary(problem, spec):
    """Split act ``spec.target`` into two branches carrying ``spec.outcome``.

    The branches take credences ``p_i / Z`` and desirabilities ``u_i``; every
    other atom's credence is divided by ``Z``.  The two new acts occupy
    positions ``target`` and ``target + 1``.
    """
    _check_target(problem, spec.target)
    o = spec.outcome
    if not isinstance(o, RefinementOutcome):
        o = RefinementOutcome(*o)
    labels = spec.labels or _default_labels(problem, spec.target, 2)
    if len(labels) != 2:
        raise LengthMismatch("binary refinement needs exactly two labels")
    return _replace_act(problem, spec.target, [(o.u1, o.p1), (o.u2, o.p2)], labels)


def refine_kary(problem, target, outcomes, labels=None):
    """Split an act into ``k >= 2`` branches given as ``(u_i, p_i)`` pairs.

    Produces the same partition as ``k - 1`` successive binary refinements of
    the residual act, but in one step.
    """
    _check_target(problem, target)
    branches = [(float(u), float(p)) for u, p in outcomes]
    k = len(branches)
    if k < 2:
        raise InvalidTarget(f"a k-ary refinement needs k >= 2 branches, got {k}")
    if any(not (p > 0 and math.isfinite(u)) for u, p in branches):
        raise OutcomeMassOutOfRange("branch masses must be positive and utilities finite")
    total = math.fsum(p for _, p in branches)
    if not 0 < total < 1:
        raise OutcomeMassOutOfRange(f"branch masses sum to {total}, outside (0, 1)")
    labels = tuple(labels) if labels is not None else _default_labels(problem, target, k)
    if len(labels) != k:
        raise LengthMismatch(f"{k} branches but {len(labels)} labels")
    return _replace_act(problem, target, branches, labels)


def add_catch_all(problem, credence, desirability=0.0, label="catch-all"):
    """Append a catch-all act of the given mass; all prior credences shrink by ``1 - credence``."""
    credence = float(credence)
    if not 0 < credence < 1:
        raise MassOutOfRange(f"catch-all credence {credence} outside (0, 1)")
    new_id = max(a.id for a in problem.atoms) + 1
    cred = {a: c * (1.0 - credence) for a, c in problem.credence.items()}
    cred[new_id] = credence
    desir = dict(problem.desirability)
    desir[new_id] = float(desirability)
    return DecisionProblem(
        problem.atoms + (Atom(new_id, str(label)),),
        problem.acts + (frozenset([new_id]),),
        cred,
        desir,
    )


def problem_to_dict(problem):
    index = {a.id: i for i, a in enumerate(problem.atoms)}
    return {
        "atoms": [a.label for a in problem.atoms],
        "credence": [problem.credence[a.id] for a in problem.atoms],
        "desirability": [problem.desirability[a.id] for a in problem.atoms],
        "acts": [sorted(index[a] for a in act) for act in problem.acts],
    }


def problem_to_json(problem):
    return dumps(problem_to_dict(problem))


def problem_from_dict(doc):
    missing = {"atoms", "credence", "desirability", "acts"} - set(doc)
    if missing:
        raise LengthMismatch(f"problem document lacks {sorted(missing)}")
    return make_problem(doc["atoms"], doc["acts"], doc["credence"], doc["desirability"])


def problem_from_json(text):
    return problem_from_dict(json.loads(text))
