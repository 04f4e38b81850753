"""Picking a model by smallest distance, one replicate at a time and in bulk."""
# %%
from vardist import ParametricModel, Region, from_samples, sample, select, truncate
from vardist.harness import run_binomial_identification, run_weibull_gamma

b8 = ParametricModel("binomial", (8, 0.1))
b15 = ParametricModel("binomial", (15, 0.15))

# One sample of 100 draws, keeping only values 0..3.
x = truncate(sample(b8, 100, seed=3), Region.of_values([0, 1, 2, 3]))
table = from_samples(x, "discrete")
print(table.support, table.counts)
report = select(table, [b8, b15])
print("winner:", report.winner, "margin:", round(report.margin, 4))

# %%
# The same thing 2000 times per generator.
rep = run_binomial_identification(2000, seed=1)
for gen, res in rep.results.items():
    print(gen, res["accuracy"], "inconclusive:", rep.inconclusive[gen])

# %%
# Weibull against Gamma on truncated, binned data. The Gamma's second
# parameter is ambiguous, so both readings are run.
for conv in ("rate", "scale"):
    res = run_weibull_gamma(500, seed=2, gamma_convention=conv)
    print(conv, res.spec.candidates, next(iter(res.results.values()))["accuracy"])
