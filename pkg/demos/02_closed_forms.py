"""Two-point closed forms and how they react to perturbed counts."""
# %%
import math

from vardist import (
    ParametricModel,
    exp_rate_classical_two_point,
    exp_rate_two_point,
    normal_mean_two_point,
    normal_sigma_two_point,
    perturbation_sweep,
)

# A count ratio of e between y=0 and y=1 pins the exponential rate to 1.
r = exp_rate_two_point(0, 1, math.e, 1)
print(r["rate"], r.status.value, "exact:", r.exact)

# The complete-sample likelihood answers differently on the same table.
print("classical:", exp_rate_classical_two_point(0, 1, math.e, 1)["rate"])

# %%
# Counts that grow along the support have no exponential fit; this is reported, not clamped.
bad = exp_rate_two_point(0, 1, 5, 7)
print(bad.status.value, "-", bad.diagnostics["reason"])

# %%
# Normal mean with sd known, and sd with mean known.
x, y = -1.5331, 0.03869
for n1 in (23000, 24000, 26000, 27000, 27500):
    m = normal_mean_two_point(x, y, n1, 89000, 1.0)["mean"]
    s = normal_sigma_two_point(x, y, n1, 89000, 0.0)["sd"]
    print(f"n1={n1}: mean {m:+.5f}  sd {s:.5f}")

# %%
# Equal counts: either any sd fits or none does.
print(normal_sigma_two_point(-1, 1, 5, 5, 0.0).status.value)
print(normal_sigma_two_point(-1, 2, 5, 5, 0.0).status.value)

# %%
# Estimates move linearly with a small error in the count ratio.
sweep = perturbation_sweep(ParametricModel("exponential", (1.0,)), (0, 1), [10.0**-p for p in range(1, 7)])
print("slope", round(sweep.slope, 4), "R^2", round(sweep.r_squared, 6))
for e, err in zip(sweep.epsilons, sweep.errors):
    print(f"  eps={e:.0e}  |error|={err:.2e}")
