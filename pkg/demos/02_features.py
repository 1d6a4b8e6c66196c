import numpy as np

from placenames.features import SCHEMA, extract
from placenames.stats import benford_probability, letter_position_frequencies

#%%
x = extract("harlington")
for i in np.flatnonzero(x):
    print(f"{SCHEMA.names[i]:12} {x[i]:.3f}")

#%%
print(SCHEMA.kind_counts())

#%%
# leading digits are far from uniform, and so are leading letters
print([round(benford_probability(d), 3) for d in range(1, 10)])

names = ["ashton", "acton", "ely", "york", "harlington", "anna", "bray", "brompton"]
print(letter_position_frequencies(names, "first"))
print(letter_position_frequencies(names, "last"))
