"""Refinement between two agents: a perturbed zero-sum game and a two-good bargain.

Run: python3 demos/games_and_bargaining.py
"""

from refinery.bargaining import SQRT, BargainingSpec, correlation_sweep, expected_refined_payoffs
from refinery.games import MATCHING_PENNIES, PerturbationModel, expected_refined_welfare, solve_zero_sum_2x2

value, prof = solve_zero_sum_2x2(MATCHING_PENNIES)
print("matching pennies value", value, "row mix", prof.row_mix)

# the row player splits its first strategy; both players see correlated perturbations
for rho in (-1.0, -0.5, 0.0, 0.5, 1.0):
    rep = expected_refined_welfare(MATCHING_PENNIES, PerturbationModel(0.5, rho), method="exhaustive")
    print(f"rho {rho:+.1f}: E[W*] = {rep.mean:.6f}, P(agreement) = {rep.p_full_agreement:.4f}")

mc = expected_refined_welfare(MATCHING_PENNIES, PerturbationModel(0.5, 0.0, "gaussian"), n=20_000, seed=1)
print(f"gaussian perturbations, rho 0: {mc.mean:.4f} +- {mc.std_error:.4f}")

# opposed tastes: refining the good lets each agent take the part it cares about
for rho, rep in correlation_sweep(BargainingSpec(sigma=0.5), [-1.0, -0.5, 0.0, 0.5, 1.0]):
    print(f"linear, rho {rho:+.1f}: gain per agent {rep.gain[0]:.3f}")

rep = expected_refined_payoffs(BargainingSpec(SQRT, SQRT, 0.25, 0.0), method="exhaustive")
for p, w, sol in rep.realizations:
    x = tuple(round(a, 3) for a in sol.allocation)
    print(f"sqrt, weights {w}: split {x}, payoffs {sol.payoffs[0]:.4f}")
print("baseline", round(rep.baseline[0], 4), "expected gain", round(rep.gain[0], 4))
