"""Two value dimensions, two acts that each win on one: how often does refinement settle it?

Run: python3 demos/dilemma.py
"""

import numpy as np

from refinery.models import Point, Uniform
from refinery.multivalue import (
    JointRefinementModel,
    argmax_invariance,
    exact_resolution_probability,
    make_profile,
    resolution_probability,
)

profile = make_profile(["A", "not-A"], [[0], [1]], [0.5, 0.5], [[2.0, 1.0], [0.0, 1.0]])

explicit = JointRefinementModel(
    Point(0.5),
    coupling="explicit-two-point-joint",
    magnitudes=(1.0, 4.0),
    table=((0.25, (1, 1)), (0.375, (1, -1)), (0.375, (-1, 1)), (0.0, (-1, -1))),
)
print("explicit joint, exact:", exact_resolution_probability(profile, 0, 1, explicit))
est = resolution_probability(profile, 0, 1, explicit, 100_000, seed=1)
print(f"explicit joint, MC: {est.prob:.4f} +- {est.std_error:.4f}")

for width in (1.0, 2.0, 4.0, 8.0):
    joint = JointRefinementModel(Point(0.5), spreads=(Uniform(-width, width), Uniform(-width, width)))
    est = resolution_probability(profile, 0, 1, joint, 50_000, seed=2)
    print(f"independent uniform spreads, width {width}: {est.prob:.4f}")

# a dominant sub-act stays on top under every weighting of the two values
violations, margin = argmax_invariance([2.5, 3.0], [[1.5, -1.0], [1.0, 1.0]], 0.01)
print("grid violations:", violations, "smallest lead:", round(float(np.min(margin)), 3))
