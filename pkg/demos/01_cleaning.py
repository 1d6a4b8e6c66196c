from placenames.corpus import RawEntry, build_clean_corpus, normalize, Rejected

#%%
# folding to a-z
for raw in ["Køln", "Straße", "Þingvellir", "Ærøskøbing", "St.Ives", "Aix-en-Provence", "Москва"]:
    try:
        print(f"{raw:18} -> {normalize(raw)}")
    except Rejected as rej:
        print(f"{raw:18} -> dropped ({rej.reason.value})")

#%%
raw = [RawEntry(n, "ENG", i) for i, n in enumerate(["York", "Bray", "York", "West Ham"], 1)]
raw += [RawEntry(n, "IRE", i) for i, n in enumerate(["Bray", "Cork", "Galway"], 1)]
corpus = build_clean_corpus(raw)

print(corpus.counts)
for d in corpus.drop_log:
    print(d.entry.country, d.entry.text, d.reason.value)
