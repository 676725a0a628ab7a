"""Value refinement for Jeffrey-Bolker decision problems.

Submodules: ``algebra`` (decision problems and act refinement), ``models``
(refinement-outcome distributions), ``single_agent``, ``multivalue``,
``games``, ``bargaining``, ``oracles`` (brute-force cross-checks) and ``cli``.
"""

from .algebra import (
    Atom,
    DecisionProblem,
    RefinementOutcome,
    SplitSpec,
    add_catch_all,
    desirability,
    make_problem,
    probability,
    refine_binary,
    refine_kary,
)
from .bargaining import BargainingSpec, ValueFunction, expected_refined_payoffs, nash_solution_1d, nash_solution_2d
from .errors import ExhaustiveUnavailable, RefineryError
from .games import (
    BimatrixGame,
    PerturbationModel,
    ZeroSumSpec,
    enumerate_equilibria,
    expected_refined_welfare,
    refine_game,
    solve_zero_sum_2x2,
    welfare_optimal_equilibrium,
)
from .models import Gaussian, Point, RefinementModel, TwoPoint, Uniform, check_rrp, sample_outcomes
from .multivalue import JointRefinementModel, ValueProfile, resolution_probability
from .single_agent import optimal_stopping, sequential_refinement, value_of_refinement

__version__ = "0.1.0"
