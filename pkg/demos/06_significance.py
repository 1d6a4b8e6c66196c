import numpy as np

from placenames.stats import mann_whitney, pearson, pooled_t, welch_t

rng = np.random.default_rng(2)
oe = np.clip(rng.normal(0.90, 0.08, 80), 0, 1)
on = np.clip(rng.normal(0.80, 0.15, 40), 0, 1)

#%%
for test in (welch_t, pooled_t, mann_whitney):
    r = test(oe, on)
    print(f"{r.method:13} stat={r.statistic:8.3f} p={r.p_value:.2e}")

#%%
# small samples use the exact permutation distribution
print(mann_whitney([0.91, 0.88, 0.95], [0.70, 0.82, 0.79, 0.66]))

#%%
x = rng.normal(size=200)
print(pearson(x, 0.8 * x + rng.normal(scale=0.5, size=200)))
