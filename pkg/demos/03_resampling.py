import numpy as np

from placenames.resample import SYNTHETIC, ResampleConfig, ResampledSet, enn_clean, smote

rng = np.random.default_rng(0)
X = np.vstack([rng.normal(0, 1, (60, 2)), rng.normal(2, 1, (12, 2))])
y = np.r_[np.ones(60, int), np.zeros(12, int)]

#%%
cfg = ResampleConfig(seed=1)
grown = smote(ResampledSet.from_arrays(X, y), cfg)
print("after SMOTE", grown.class_counts(), "synthetic rows:", int((grown.origin == SYNTHETIC).sum()))

#%%
cleaned = enn_clean(grown, cfg)
print("after ENN  ", cleaned.class_counts(), "removed:", len(cleaned.removed))

#%%
import matplotlib.pyplot as plt

fig, ax = plt.subplots()
ax.scatter(*grown.X[grown.y == 1].T, s=8, label="majority")
ax.scatter(*grown.X[grown.y == 0].T, s=8, label="minority + synthetic")
ax.scatter(*grown.X[cleaned.removed].T, marker="x", c="k", label="removed by ENN")
ax.legend()
fig.savefig("resampling.png")
