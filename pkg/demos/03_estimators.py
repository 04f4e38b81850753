"""Comparing estimators on grouped and truncated normal data."""
# %%
import numpy as np

from vardist import (
    FrequencyTable,
    ParametricModel,
    auxiliary_of,
    classical_truncated_mle,
    min_dv,
    new_mle,
    new_moments,
    normal_mean_two_point,
)

y = np.array([-1.5331, 0.03869])
table = FrequencyTable(y, [23000, 89000])
region = "[-1.7951,-1.2712),[-0.22335,0.30055)"

# %%
# Four routes to the mean with sd = 1 known.
print("closed form     ", normal_mean_two_point(*y, 23000, 89000, 1.0)["mean"])
print("renormalized MLE", new_mle(table, "normal", known={"sd": 1.0})["mean"])
print("min dv          ", min_dv(table, "normal", known={"sd": 1.0})["mean"])
print("truncated MLE   ", classical_truncated_mle(table, "normal", region, known={"sd": 1.0})["mean"])

# %%
# With three points and exact frequencies, both parameters come back.
ys = np.array([-1.5331, 0.03869, 1.0863])
exact = FrequencyTable(ys, 89000 * auxiliary_of(ParametricModel("normal", (0, 1)), ys).probs)
for fit in (min_dv(exact, "normal"), new_moments(exact, "normal")):
    print(fit.method.value, np.round(fit.params, 8), "exact:", fit.exact)

# %%
# Estimation results serialize cleanly.
print(min_dv(exact, "normal").to_dict())
