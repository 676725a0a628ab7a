"""Bimatrix games, equilibrium enumeration and welfare after unilateral refinement.

The row player refines its first action of a 2x2 zero-sum base game into two
variants.  Both players' payoffs on the refined rows are perturbed by
mean-zero noise; ``eps[j, k]`` is the perturbation in column ``j`` for refined
branch ``k`` (the same index order as the published payoff table, where the
column index comes first).
"""

import math
from dataclasses import dataclass
from itertools import combinations, product

import numpy as np

from .errors import ExhaustiveUnavailable, RefineryError
from .oracles import DiscreteOutcomeSpace
from .streams import mean_and_se, sample_blocks

BR_TOL = 1e-9
DEDUP_TOL = 1e-7
MAX_STRATEGIES = 4


class PureSaddle(RefineryError):
    pass


class NoEquilibriumFound(RuntimeError):
    pass


class GameTooLarge(RefineryError):
    pass


@dataclass(frozen=True, eq=False)
class BimatrixGame:
    payoff1: np.ndarray
    payoff2: np.ndarray

    def __post_init__(self):
        a = np.array(self.payoff1, dtype=float)
        b = np.array(self.payoff2, dtype=float)
        if a.ndim != 2 or a.shape != b.shape:
            raise RefineryError(f"payoff shapes {a.shape} and {b.shape} disagree")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            raise RefineryError("payoffs must be finite")
        a.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "payoff1", a)
        object.__setattr__(self, "payoff2", b)

    @property
    def rows(self):
        return self.payoff1.shape[0]

    @property
    def cols(self):
        return self.payoff1.shape[1]

    @property
    def welfare(self):
        return self.payoff1 + self.payoff2

    def key(self):
        return self.payoff1.tobytes() + self.payoff2.tobytes()

    def to_dict(self):
        return {"payoff1": self.payoff1.tolist(), "payoff2": self.payoff2.tolist()}

    @classmethod
    def from_dict(cls, doc):
        return cls(np.asarray(doc["payoff1"], dtype=float), np.asarray(doc["payoff2"], dtype=float))


def transpose_game(game):
    """Swap the players' roles, so column-player refinements reuse row-player code."""
    return BimatrixGame(game.payoff2.T, game.payoff1.T)


@dataclass(frozen=True)
class MixedProfile:
    row_mix: tuple
    col_mix: tuple

    def __post_init__(self):
        for mix in (self.row_mix, self.col_mix):
            if any(p < 0 for p in mix) or abs(math.fsum(mix) - 1) > 1e-12:
                raise RefineryError(f"{mix} is not a probability vector")


@dataclass(frozen=True)
class Equilibrium:
    profile: MixedProfile
    payoffs: tuple
    welfare: float


@dataclass(frozen=True)
class EquilibriumSet:
    equilibria: tuple
    degenerate: bool

    def __iter__(self):
        return iter(self.equilibria)

    def __len__(self):
        return len(self.equilibria)

    def __getitem__(self, i):
        return self.equilibria[i]


@dataclass(frozen=True)
class ZeroSumSpec:
    """Row-player payoffs ``[[v, alpha], [beta, gamma]]``; the column player gets the negation."""

    v: float
    alpha: float
    beta: float
    gamma: float

    @property
    def interior(self):
        v, a, b, g = self.v, self.alpha, self.beta, self.gamma
        return (v - b) * (g - a) > 0 and (v - a) * (g - b) > 0

    def base_game(self):
        a = np.array([[self.v, self.alpha], [self.beta, self.gamma]], dtype=float)
        return BimatrixGame(a, -a)


MATCHING_PENNIES = ZeroSumSpec(1.0, -1.0, -1.0, 1.0)


def solve_zero_sum_2x2(spec):
    """Closed-form interior equilibrium: returns ``(value, MixedProfile)``."""
    if not spec.interior:
        raise PureSaddle(f"{spec} has a pure saddle point; no interior mixed equilibrium")
    v, a, b, g = spec.v, spec.alpha, spec.beta, spec.gamma
    d = v - a - b + g
    x = (g - b) / d
    y = (g - a) / d
    value = (v * g - a * b) / d
    return value, MixedProfile((x, 1 - x), (y, 1 - y))


# -- equilibrium enumeration ---------------------------------------------------


def _nonempty_subsets(n):
    for size in range(1, n + 1):
        yield from combinations(range(n), size)


def _vertices(payoff_opp, own_n, opp_n):
    """Mixed strategies ``x`` of one player that make a set of opponent replies indifferent.

    ``payoff_opp[i, j]`` is the opponent's payoff when this player plays ``i``
    and the opponent plays ``j``.  For every support ``I`` and reply set ``K``
    solve ``sum_I x_i payoff_opp[i, j] = u`` for ``j in K`` with ``sum x = 1``;
    keep unique, nonnegative solutions under which ``K`` are best replies.
    Returns the candidates and whether a square system was singular.
    """
    found = []
    singular = False
    for supp in _nonempty_subsets(own_n):
        for reply in _nonempty_subsets(opp_n):
            m = np.zeros((len(reply) + 1, len(supp) + 1))
            m[:-1, :-1] = payoff_opp[np.ix_(supp, reply)].T
            m[:-1, -1] = -1.0
            m[-1, :-1] = 1.0
            rhs = np.zeros(len(reply) + 1)
            rhs[-1] = 1.0
            sol, _, rank, _ = np.linalg.lstsq(m, rhs, rcond=None)
            if rank < len(supp) + 1:
                singular |= len(supp) == len(reply)
                continue
            if np.max(np.abs(m @ sol - rhs)) > BR_TOL:
                continue
            xs = sol[:-1]
            if np.any(xs < -BR_TOL):
                continue
            x = np.zeros(own_n)
            x[list(supp)] = np.clip(xs, 0.0, None)
            x /= x.sum()
            if np.max(x @ payoff_opp) > sol[-1] + BR_TOL * max(1.0, abs(sol[-1])):
                continue
            if not any(np.allclose(x, f, atol=DEDUP_TOL, rtol=0) for f in found):
                found.append(x)
    return found, singular


def best_response_gap(game, x, y):
    """Largest gain either player could get from a pure deviation."""
    a, b = game.payoff1, game.payoff2
    u1 = x @ a @ y
    u2 = x @ b @ y
    return max(float(np.max(a @ y) - u1), float(np.max(x @ b) - u2))


def enumerate_equilibria(game):
    """All extreme Nash equilibria of a game with at most 4 strategies per player.

    Generalized support enumeration: candidate strategies are the unique
    solutions of indifference systems over every (support, reply set) pair,
    which covers degenerate games where supports have unequal sizes.  Every
    returned equilibrium passes a best-response check at ``1e-9``.
    """
    m, n = game.rows, game.cols
    if m > MAX_STRATEGIES or n > MAX_STRATEGIES:
        raise GameTooLarge(f"{m}x{n} exceeds the {MAX_STRATEGIES}x{MAX_STRATEGIES} bound")
    a, b = game.payoff1, game.payoff2
    xs, sing1 = _vertices(b, m, n)
    ys, sing2 = _vertices(a.T, n, m)
    out = []
    degenerate = sing1 or sing2
    for x in xs:
        pay2 = x @ b
        br2 = pay2 >= pay2.max() - BR_TOL
        for y in ys:
            if np.any((y > BR_TOL) & ~br2):
                continue
            pay1 = a @ y
            br1 = pay1 >= pay1.max() - BR_TOL
            if np.any((x > BR_TOL) & ~br1):
                continue
            if best_response_gap(game, x, y) > BR_TOL:
                continue
            if br1.sum() > np.sum(y > BR_TOL) or br2.sum() > np.sum(x > BR_TOL):
                degenerate = True
            u1 = float(x @ a @ y)
            u2 = float(x @ b @ y)
            w = float(x @ game.welfare @ y)
            out.append(Equilibrium(MixedProfile(tuple(x.tolist()), tuple(y.tolist())), (u1, u2), w))
    out.sort(key=lambda e: (e.profile.row_mix, e.profile.col_mix))
    return EquilibriumSet(tuple(out), bool(degenerate))


def welfare_optimal_equilibrium(game):
    """Equilibrium with the largest payoff sum; ties go to the lexicographically first profile."""
    eqs = enumerate_equilibria(game)
    if not len(eqs):
        raise NoEquilibriumFound("equilibrium enumeration returned nothing")
    top = max(e.welfare for e in eqs)
    best = next(e for e in eqs if e.welfare >= top - 1e-12)
    return best.profile, best.welfare


# -- refinement and perturbations ----------------------------------------------


def refine_game(spec, eps1, eps2):
    """3x2 game with rows (A&B1, A&B2, notA) from the base game and the perturbations."""
    e1 = np.asarray(eps1, dtype=float).reshape(2, 2)
    e2 = np.asarray(eps2, dtype=float).reshape(2, 2)
    v, al, be, ga = spec.v, spec.alpha, spec.beta, spec.gamma
    p1 = np.array(
        [
            [v + e1[0, 0], al + e1[1, 0]],
            [v + e1[0, 1], al + e1[1, 1]],
            [be, ga],
        ]
    )
    p2 = np.array(
        [
            [-v + e2[0, 0], -al + e2[1, 0]],
            [-v + e2[0, 1], -al + e2[1, 1]],
            [-be, -ga],
        ]
    )
    return BimatrixGame(p1, p2)


@dataclass(frozen=True)
class PerturbationModel:
    """Mean-zero cellwise perturbations for the two players.

    ``two-point``: ``eps1 = +/-magnitude`` equiprobable per cell; ``eps2`` has
    the same sign with probability ``(1 + rho) / 2``.  ``gaussian``:
    ``eps1 ~ N(0, magnitude^2)`` and ``eps2 = rho*eps1 + sqrt(1 - rho^2)*eta``.
    """

    magnitude: float
    rho: float = 0.0
    family: str = "two-point"

    def __post_init__(self):
        if self.family not in ("two-point", "gaussian"):
            raise RefineryError(f"unknown perturbation family {self.family!r}")
        if not -1 <= self.rho <= 1:
            raise RefineryError(f"rho = {self.rho} outside [-1, 1]")
        if not self.magnitude >= 0:
            raise RefineryError("magnitude must be nonnegative")

    def sample(self, rng, size):
        """Arrays ``(eps1, eps2)`` of shape ``(size, 2, 2)``."""
        a = self.magnitude
        if self.family == "two-point":
            s1 = np.where(rng.random((size, 2, 2)) < 0.5, 1.0, -1.0)
            same = rng.random((size, 2, 2)) < (1 + self.rho) / 2
            return a * s1, a * np.where(same, s1, -s1)
        e1 = a * rng.standard_normal((size, 2, 2))
        eta = a * rng.standard_normal((size, 2, 2))
        return e1, self.rho * e1 + math.sqrt(1 - self.rho**2) * eta

    def space(self):
        """Exact distribution over ``(eps1, eps2)`` pairs (two-point family only)."""
        if self.family != "two-point":
            raise ExhaustiveUnavailable("exhaustive enumeration needs the two-point family")
        a = self.magnitude
        p_same = (1 + self.rho) / 2
        out = []
        for signs in product((1.0, -1.0), repeat=4):
            s1 = np.array(signs).reshape(2, 2)
            for same in product((True, False), repeat=4):
                p = 1 / 16
                for flag in same:
                    p *= p_same if flag else 1 - p_same
                if p == 0:
                    continue
                s2 = np.where(np.array(same).reshape(2, 2), s1, -s1)
                out.append((p, (a * s1, a * s2)))
        return DiscreteOutcomeSpace(out)


def classify_agreement(spec, eps1, eps2):
    """Classify a realization for the zero-sum escape argument.

    Returns ``(full, e1, star)``: ``full`` when both players rank the refined
    branches the same way against both columns, ``e1`` when additionally the
    agreed branch beats notA for the row player against some column, and the
    agreed branch index (or ``None``).
    """
    e1 = np.asarray(eps1).reshape(2, 2)
    e2 = np.asarray(eps2).reshape(2, 2)
    signs = np.concatenate([np.sign(e1[:, 0] - e1[:, 1]), np.sign(e2[:, 0] - e2[:, 1])])
    if not (np.all(signs > 0) or np.all(signs < 0)):
        return False, False, None
    star = 0 if signs[0] > 0 else 1
    row_star = np.array([spec.v + e1[0, star], spec.alpha + e1[1, star]])
    e_one = bool(np.any(row_star > np.array([spec.beta, spec.gamma])))
    return True, e_one, star


@dataclass(frozen=True)
class WelfareReport:
    mean: float
    std_error: float
    n: int
    method: str
    p_full_agreement: float
    p_e0: float
    p_e1: float
    cond_eps_star: tuple = None
    """Exhaustive only: E[eps1 on the agreed branch | E1] per column, then the same for eps2."""
    max_br_gap: float = 0.0


def _realization(spec, e1, e2):
    game = refine_game(spec, e1, e2)
    eqs = enumerate_equilibria(game)
    if not len(eqs):
        raise NoEquilibriumFound("no equilibrium found for a refined game")
    w = max(e.welfare for e in eqs)
    gap = max(best_response_gap(game, np.array(e.profile.row_mix), np.array(e.profile.col_mix)) for e in eqs)
    full, e_one, _ = classify_agreement(spec, e1, e2)
    return w, full, e_one, gap


def expected_refined_welfare(spec, pm, n=100_000, seed=0, method="monte-carlo", workers=None):
    """Expected welfare of the best equilibrium after the row player refines its first action."""
    if method == "exhaustive":
        space = pm.space()
        w_sum = p_full = p_e1 = 0.0
        terms, gaps = [], []
        cond = np.zeros(4)
        for p, (e1, e2) in space:
            w, full, e_one, gap = _realization(spec, e1, e2)
            terms.append(p * w)
            gaps.append(gap)
            if full:
                p_full += p
            if e_one:
                p_e1 += p
                _, _, star = classify_agreement(spec, e1, e2)
                cond += p * np.array([e1[0, star], e1[1, star], e2[0, star], e2[1, star]])
        w_sum = math.fsum(terms)
        cond_eps = tuple((cond / p_e1).tolist()) if p_e1 > 0 else None
        return WelfareReport(w_sum, 0.0, len(space), method, p_full, p_full - p_e1, p_e1, cond_eps, max(gaps))
    if method != "monte-carlo":
        raise RefineryError(f"unknown method {method!r}")
    if n < 1:
        raise RefineryError("n must be >= 1")
    e1, e2 = sample_blocks(pm.sample, n, seed, ("zerosum",), workers)
    flat = np.concatenate([e1.reshape(n, 4), e2.reshape(n, 4)], axis=1)
    uniq, inverse = np.unique(flat, axis=0, return_inverse=True)
    inverse = np.asarray(inverse).reshape(-1)
    results = [_realization(spec, row[:4].reshape(2, 2), row[4:].reshape(2, 2)) for row in uniq]
    w = np.array([r[0] for r in results])[inverse]
    full = np.array([r[1] for r in results])[inverse]
    e_one = np.array([r[2] for r in results])[inverse]
    mean, se = mean_and_se(w)
    return WelfareReport(
        mean,
        se,
        n,
        method,
        float(full.mean()),
        float((full & ~e_one).mean()),
        float(e_one.mean()),
        None,
        float(max(r[3] for r in results)),
    )
