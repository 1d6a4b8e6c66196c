import numpy as np

from placenames.forest import ForestConfig, fit_forest, fit_tree, predict_proba

rng = np.random.default_rng(0)
X = np.vstack([rng.normal(0, 1, (300, 8)), rng.normal(1.2, 1, (300, 8))])
y = np.r_[np.zeros(300, int), np.ones(300, int)]

#%%
tree = fit_tree(X, y, ForestConfig(n_trees=1, max_features=None, bootstrap=False))
print("single tree:", tree.n_nodes, "nodes, depth", tree.depth())

#%%
model = fit_forest(X, y, ForestConfig(n_trees=100, seed=3))
X_new = np.vstack([rng.normal(0, 1, (5, 8)), rng.normal(1.2, 1, (5, 8))])
print(np.round(predict_proba(model, X_new), 3))

#%%
model.save("forest.npz")
