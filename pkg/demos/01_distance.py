"""Distance in variations: ratios, not levels."""
# %%
import math

import numpy as np

from vardist import FrequencyTable, ParametricModel, auxiliary_of, dv_model, dv_tables, pairwise_terms

# Two tables that differ pointwise but share every ratio sit at distance zero.
a = FrequencyTable([0, 1], [1, 2])
b = FrequencyTable([0, 1], [2, 4])
print("proportional tables:", dv_tables(a, b))

# %%
# Against a model, only the density's ratios on the support matter.
table = FrequencyTable([0, 1], [2, 1])
model = ParametricModel("exponential", (math.log(4),))
print("auxiliary table:", auxiliary_of(model, table.support).probs)
print("dv(table, Exp(ln 4)) =", dv_model(table, model))

# %%
# The exact rate for this table makes the distance vanish.
print("dv(table, Exp(ln 2)) =", dv_model(table, ParametricModel("exponential", (math.log(2),))))

# %%
# Which pairs of support points drive the distance?
t = FrequencyTable([-1, 0, 1, 2], [3, 9, 2, 1])
for term in pairwise_terms(t, ParametricModel("normal", (0, 1)), top=4):
    print(f"y[{term.i}] / y[{term.j}]: {term.value:.4f}")

# %%
# Rescaling counts never moves the distance.
print(np.isclose(dv_model(t.scaled(1e6), ParametricModel("normal", (0, 1))),
                 dv_model(t, ParametricModel("normal", (0, 1)))))
