from placenames.forest import ForestConfig
from placenames.pipeline import PipelineConfig, run_all
from placenames.report import rank_names, render, similarity_order
from placenames.stats import correlation_matrix
from placenames.synthetic import suffix_grammar_corpus

# England names end in -ton/-den/..., everyone else in -a/-i
corpus = suffix_grammar_corpus(n_eng=300, n_other=600, seed=4)
print(corpus.counts)

#%%
cfg = PipelineConfig(k_folds=5, forest=ForestConfig(n_trees=25))
run = run_all(corpus, cfg, pairs=["DEN", "NOR", "SWE", "ROM"])
print(render("accuracy", metrics=run.metrics)[1])
print("ensemble accuracy", run.ensemble_accuracy)

#%%
ranking = rank_names(run.table)
print(render("top_bottom", ranking=ranking, n=5)[1])
print(similarity_order(run.table).rows)

#%%
print(render("correlations", correlations=correlation_matrix(run.table))[1])
