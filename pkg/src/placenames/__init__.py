"""Stochastic provenance scoring of English place names.

Each English place name is compared with the place names of ten other
countries through letter-placement features, SMOTE-ENN balanced training
sets and random-forest classifiers scored out of fold.
"""

__version__ = "0.1.0"

from .corpus import COUNTRIES, ENGLAND, OTHERS, CleanCorpus, PlaceName, build_clean_corpus, normalize
from .features import SCHEMA, extract, extract_batch, extract_many
from .forest import ForestConfig, ForestModel, fit_forest, predict_proba
from .pipeline import PipelineConfig, ScoreTable, run_all, run_pair, score_external
from .resample import ResampleConfig, smote, enn_clean, smote_enn

__all__ = [
    "COUNTRIES", "ENGLAND", "OTHERS", "CleanCorpus", "PlaceName", "build_clean_corpus", "normalize",
    "SCHEMA", "extract", "extract_batch", "extract_many",
    "ForestConfig", "ForestModel", "fit_forest", "predict_proba",
    "PipelineConfig", "ScoreTable", "run_all", "run_pair", "score_external",
    "ResampleConfig", "smote", "enn_clean", "smote_enn",
]
