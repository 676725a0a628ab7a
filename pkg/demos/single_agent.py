"""Refining one act of a two-act problem, then chaining and stopping.

Run: python3 demos/single_agent.py
"""

from refinery import make_problem, optimal_stopping, sequential_refinement, value_of_refinement
from refinery.models import Point, RefinementModel, TwoPoint, Uniform, builtin_models
from refinery.single_agent import exact_chain, exact_value_of_refinement

problem = make_problem(["A", "not-A"], [[0], [1]], [0.5, 0.5], [0.0, -1.0])

# A is worth 0 now; thinking harder splits it into two sub-acts whose values
# average back to 0.  The best sub-act can only help.
two_point = RefinementModel(0.0, 0.5, Point(0.5), TwoPoint(2.0))
print("two-point exact gain:", exact_value_of_refinement(problem, 0, two_point))

for name in ("uniform-spread", "gaussian-spread", "small-spread"):
    g = value_of_refinement(problem, 0, builtin_models()[name], 100_000, seed=1)
    lo, hi = g.ci(0.99)
    print(f"{name:16s} gain {g.gain:.4f}  99% CI [{lo:.4f}, {hi:.4f}]")

# halve the spread each stage: gains shrink but stay positive
schedule = [RefinementModel(0.0, 0.5, Point(0.5), TwoPoint(2.0 / 2**j)) for j in range(4)]
exact = exact_chain(problem, schedule)
mc = sequential_refinement(problem, schedule, seed=2, n=5000)
for j, (e, g) in enumerate(zip(exact, mc)):
    print(f"stage {j + 1}: exact {e:.4f}  MC {g.v1_mean:.4f}")

deltas = [b - a for a, b in zip([0.0] + exact, exact)]
for cost in (0.1, 0.3, 0.6, 1.5):
    plan = optimal_stopping(deltas, cost)
    print(f"cost {cost}: last refinement {plan.t_star}, net gain {plan.net_gain:.3f}")

# a continuous q is fine too, reflection holds sample by sample
m = RefinementModel(0.0, 0.5, Uniform(0.1, 0.9), Uniform(-2.0, 2.0))
print("uniform q gain:", round(value_of_refinement(problem, 0, m, 50_000, seed=3).gain, 4))
