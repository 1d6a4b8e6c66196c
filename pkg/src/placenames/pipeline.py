"""Cross-validated England-vs-other scoring.

For every comparison country a binary dataset is built (England = 1), rows
are split into stratified folds, and each fold is scored by a forest trained
on SMOTE-ENN-resampled data from the remaining folds. Each row therefore gets
exactly one out-of-fold probability. England names get one score per
comparison country and an ensemble score, the mean of those scores.

All randomness flows from one integer seed through :func:`derive_seed`, so a
run is reproducible regardless of how folds are scheduled.
"""

from __future__ import annotations

import csv
import io
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .corpus import COUNTRIES, ENGLAND, OTHERS, CleanCorpus, PlaceName
from .errors import ConfigError, ContractError
from .features import SCHEMA_VERSION, LabeledDataset, extract_batch, extract_many
from .forest import ForestConfig, ForestModel, fit_forest, predict_proba
from .resample import SYNTHETIC, ResampleConfig, resample_training

log = logging.getLogger(__name__)

_FOLDS, _RESAMPLE, _FOREST, _SUBSAMPLE = range(4)


def derive_seed(seed: int, *keys: int) -> int:
    """Independent 63-bit seed for the stream identified by ``keys``."""
    ss = np.random.SeedSequence([seed, *keys])
    return int(ss.generate_state(1, np.uint64)[0] >> np.uint64(1))


@dataclass(frozen=True)
class PipelineConfig:
    k_folds: int = 10
    resample: ResampleConfig = field(default_factory=ResampleConfig)
    forest: ForestConfig = field(default_factory=ForestConfig)
    cutpoint: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.k_folds < 2:
            raise ConfigError("k_folds must be >= 2")


# --------------------------------------------------------------------------
# folds


@dataclass
class FoldPlan:
    k: int
    assignments: np.ndarray
    seed: int

    def test_index(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignments == fold)

    def train_index(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignments != fold)


def make_folds(y, k: int, seed: int) -> FoldPlan:
    """Stratified assignment of rows to ``k`` folds.

    Within each class, fold sizes differ by at most one. The second class
    continues the round-robin where the first left off so total fold sizes
    stay even too.
    """
    y = np.asarray(y)
    rng = np.random.default_rng(seed)
    assign = np.full(len(y), -1, dtype=np.int64)
    offset = 0
    for label in np.unique(y):
        idx = np.flatnonzero(y == label)
        if len(idx) < k:
            raise ConfigError(f"class {label} has {len(idx)} rows, fewer than k={k} folds")
        perm = rng.permutation(idx)
        assign[perm] = (offset + np.arange(len(perm))) % k
        offset += len(perm)
    return FoldPlan(k, assign, seed)


# --------------------------------------------------------------------------
# metrics


@dataclass(frozen=True)
class PairMetrics:
    pair: str
    tp: int
    fn: int
    tn: int
    fp: int

    @property
    def accuracy(self) -> float:
        return (self.tp + self.tn) / (self.tp + self.fn + self.tn + self.fp)

    @property
    def sensitivity(self) -> float:
        return self.tp / (self.tp + self.fn) if self.tp + self.fn else float("nan")

    @property
    def specificity(self) -> float:
        return self.tn / (self.tn + self.fp) if self.tn + self.fp else float("nan")

    @classmethod
    def from_scores(cls, pair: str, y, scores, cutpoint: float = 0.5) -> "PairMetrics":
        y = np.asarray(y).astype(bool)
        pred = np.asarray(scores) >= cutpoint
        return cls(pair, int((pred & y).sum()), int((~pred & y).sum()),
                   int((~pred & ~y).sum()), int((pred & ~y).sum()))

    def as_dict(self) -> dict:
        return {"pair": self.pair, "accuracy": self.accuracy, "sensitivity": self.sensitivity,
                "specificity": self.specificity, "tp": self.tp, "fn": self.fn,
                "tn": self.tn, "fp": self.fp}


# --------------------------------------------------------------------------
# one comparison country


@dataclass
class FoldInfo:
    fold: int
    n_train: int
    n_test: int
    n_synthetic: int
    n_removed: int
    seconds: float


@dataclass
class PairResult:
    pair: str
    names: list[PlaceName]
    y: np.ndarray
    scores: np.ndarray
    metrics: PairMetrics
    folds: list[FoldInfo]
    models: list[ForestModel] | None = None
    external: dict[str, np.ndarray] = field(default_factory=dict)
    seconds: float = 0.0


def _fit_fold(X, y, train, test, resample_cfg, forest_cfg, external):
    t0 = time.perf_counter()
    res = resample_training(X[train], y[train], resample_cfg)
    real = res.source[res.source >= 0]
    # resampled rows must all trace back to training rows
    assert real.max(initial=-1) < len(train)
    model = fit_forest(res, cfg=forest_cfg, schema_version=SCHEMA_VERSION)
    scores = predict_proba(model, X[test], SCHEMA_VERSION)
    ext = {k: predict_proba(model, v, SCHEMA_VERSION) for k, v in external.items()}
    info = (len(train), len(test), int((res.origin == SYNTHETIC).sum()), len(res.removed),
            time.perf_counter() - t0)
    return scores, ext, model, info


def run_pair(
    corpus: CleanCorpus,
    pair: str,
    cfg: PipelineConfig = PipelineConfig(),
    external: Mapping[str, Sequence[PlaceName]] | None = None,
    model_dir=None,
    keep_models: bool = False,
    jobs: int = 1,
) -> PairResult:
    """Out-of-fold scores and metrics for England vs ``pair``.

    ``external`` name lists (which belong to no fold) are scored by every fold
    model and averaged. Fold models are written to ``model_dir/<pair>/`` when
    given, and returned when ``keep_models`` is set.
    """
    if pair not in OTHERS:
        raise ConfigError(f"unknown comparison country {pair!r}")
    t_pair = time.perf_counter()
    data = extract_batch(corpus, pair)
    norm = [p.normalized for p in data.names]
    if len(set(norm)) != len(norm):
        raise ContractError(f"ENG-{pair} dataset repeats a normalized name; clean the corpus first")

    pkey = COUNTRIES.index(pair)
    plan = make_folds(data.y, cfg.k_folds, derive_seed(cfg.seed, pkey, _FOLDS))
    ext_X = {label: extract_many([p.normalized for p in names])
             for label, names in (external or {}).items()}

    jobs_args = []
    for f in range(cfg.k_folds):
        rcfg = replace(cfg.resample, seed=derive_seed(cfg.seed, pkey, f, _RESAMPLE))
        fcfg = replace(cfg.forest, seed=derive_seed(cfg.seed, pkey, f, _FOREST))
        jobs_args.append((data.X, data.y, plan.train_index(f), plan.test_index(f), rcfg, fcfg, ext_X))

    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outputs = list(pool.map(_fit_fold, *zip(*jobs_args)))
    else:
        outputs = [_fit_fold(*a) for a in jobs_args]

    scores = np.full(len(data), np.nan)
    scored = np.zeros(len(data), dtype=np.int64)
    ext_sum = {k: np.zeros(len(v)) for k, v in ext_X.items()}
    folds, models = [], []
    if model_dir is not None:
        pair_dir = Path(model_dir) / pair
        pair_dir.mkdir(parents=True, exist_ok=True)
    for f, (fold_scores, ext, model, info) in enumerate(outputs):
        test = plan.test_index(f)
        scores[test] = fold_scores
        scored[test] += 1
        for k in ext_sum:
            ext_sum[k] += ext[k]
        folds.append(FoldInfo(f, *info))
        if model_dir is not None:
            model.save(pair_dir / f"fold_{f:02d}.npz")
        if keep_models:
            models.append(model)
        log.info("ENG-%s fold %d: train=%d synthetic=%d removed=%d %.1fs",
                 pair, f, info[0], info[2], info[3], info[4])
    assert (scored == 1).all()

    metrics = PairMetrics.from_scores(pair, data.y, scores, cfg.cutpoint)
    return PairResult(
        pair, data.names, data.y, scores, metrics, folds,
        models if keep_models else None,
        {k: v / cfg.k_folds for k, v in ext_sum.items()},
        time.perf_counter() - t_pair,
    )


# --------------------------------------------------------------------------
# score table


@dataclass
class ScoreTable:
    """Per-name scores. Missing pair scores are NaN; ensemble is NaN off England."""

    names: list[str]
    countries: list[str]
    pairs: tuple[str, ...]
    pair_scores: dict[str, np.ndarray]
    ensemble: np.ndarray

    def __len__(self):
        return len(self.names)

    @property
    def eng_mask(self) -> np.ndarray:
        return np.array([c == ENGLAND for c in self.countries], dtype=bool)

    def eng_names(self) -> list[str]:
        return [n for n, c in zip(self.names, self.countries) if c == ENGLAND]

    def eng_matrix(self) -> np.ndarray:
        """England rows x pairs, in ``self.pairs`` order."""
        m = self.eng_mask
        return np.column_stack([self.pair_scores[p][m] for p in self.pairs])

    def row(self, name: str) -> int:
        for i, n in enumerate(self.names):
            if n == name and self.countries[i] == ENGLAND:
                return i
        raise KeyError(name)

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["name", "country", *self.pairs, "ensemble"])
        fmt = lambda v: "" if math.isnan(v) else repr(float(v))
        for i, (n, c) in enumerate(zip(self.names, self.countries)):
            w.writerow([n, c, *(fmt(self.pair_scores[p][i]) for p in self.pairs), fmt(self.ensemble[i])])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text, encoding="utf-8")
        return text

    @classmethod
    def from_csv(cls, path) -> "ScoreTable":
        try:
            text = Path(path).read_text("utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read score table {path}: {exc}") from exc
        rows = list(csv.reader(io.StringIO(text)))
        header = rows[0]
        if header[:2] != ["name", "country"] or header[-1] != "ensemble":
            raise ConfigError(f"{path} is not a score table")
        pairs = tuple(header[2:-1])
        body = rows[1:]
        val = lambda s: float(s) if s else float("nan")
        cols = {p: np.array([val(r[2 + j]) for r in body]) for j, p in enumerate(pairs)}
        return cls([r[0] for r in body], [r[1] for r in body], pairs, cols,
                   np.array([val(r[-1]) for r in body]))


def build_score_table(results: Sequence[PairResult]) -> ScoreTable:
    pairs = tuple(r.pair for r in results)
    eng = [p.normalized for p in results[0].names if p.country == ENGLAND]
    names = list(eng)
    countries = [ENGLAND] * len(eng)
    for r in results:
        others = [p.normalized for p in r.names if p.country == r.pair]
        names += others
        countries += [r.pair] * len(others)
    n, n_eng = len(names), len(eng)
    cols = {}
    offset = n_eng
    for r in results:
        col = np.full(n, np.nan)
        y = r.y.astype(bool)
        if [p.normalized for p in r.names if p.country == ENGLAND] != eng:
            raise ContractError("pair results disagree on the England rows")
        col[:n_eng] = r.scores[y]
        k = int((~y).sum())
        col[offset:offset + k] = r.scores[~y]
        offset += k
        cols[r.pair] = col
    ensemble = np.full(n, np.nan)
    ensemble[:n_eng] = np.mean([cols[p][:n_eng] for p in pairs], axis=0)
    return ScoreTable(names, countries, pairs, cols, ensemble)


# --------------------------------------------------------------------------
# all pairs


@dataclass
class RunResult:
    table: ScoreTable
    metrics: list[PairMetrics]
    pairs: list[PairResult]
    cutpoint: float
    external: dict[str, "ExternalScores"] = field(default_factory=dict)

    @property
    def ensemble_accuracy(self) -> float:
        e = self.table.ensemble[self.table.eng_mask]
        return float((e >= self.cutpoint).mean())


def run_all(
    corpus: CleanCorpus,
    cfg: PipelineConfig = PipelineConfig(),
    pairs: Iterable[str] | None = None,
    external: Mapping[str, Sequence[PlaceName]] | None = None,
    model_dir=None,
    jobs: int = 1,
) -> RunResult:
    pairs = list(OTHERS if pairs is None else pairs)
    if not pairs:
        raise ConfigError("no comparison countries selected")
    present = set(corpus.countries())
    missing = [c for c in [ENGLAND, *pairs] if c not in present]
    if missing:
        raise ConfigError(f"corpus lacks countries: {', '.join(missing)}")
    results = []
    for p in pairs:
        log.info("training ENG-%s", p)
        results.append(run_pair(corpus, p, cfg, external=external, model_dir=model_dir, jobs=jobs))
        log.info("ENG-%s accuracy %.3f (%.0fs)", p, results[-1].metrics.accuracy, results[-1].seconds)
    table = build_score_table(results)
    ext_tables = {}
    for label, names in (external or {}).items():
        ext_tables[label] = ExternalScores(
            [p.normalized for p in names], tuple(pairs),
            {r.pair: r.external[label] for r in results})
    return RunResult(table, [r.metrics for r in results], results, cfg.cutpoint, ext_tables)


# --------------------------------------------------------------------------
# external names


@dataclass
class ExternalScores:
    names: list[str]
    pairs: tuple[str, ...]
    pair_scores: dict[str, np.ndarray]

    @property
    def ensemble(self) -> np.ndarray:
        if not self.names:
            return np.empty(0)
        return np.mean([self.pair_scores[p] for p in self.pairs], axis=0)


def load_models(model_dir, pairs: Iterable[str] | None = None) -> dict[str, list[ForestModel]]:
    model_dir = Path(model_dir)
    if not model_dir.is_dir():
        raise ConfigError(f"model directory not found: {model_dir}")
    if pairs is None:
        pairs = [p for p in OTHERS if (model_dir / p).is_dir()]
    out = {}
    for p in pairs:
        files = sorted((model_dir / p).glob("fold_*.npz"))
        if not files:
            raise ConfigError(f"no fold models for {p} under {model_dir}")
        out[p] = [ForestModel.load(f) for f in files]
    if not out:
        raise ConfigError(f"no models found under {model_dir}")
    return out


def score_external(models: Mapping[str, Sequence[ForestModel]], names: Sequence[PlaceName | str]) -> ExternalScores:
    """Score names that were in no fold: mean over each pair's fold models.

    Names identical to training names are scored like any other.
    """
    norm = [n.normalized if isinstance(n, PlaceName) else n for n in names]
    pairs = tuple(p for p in OTHERS if p in models) + tuple(p for p in models if p not in OTHERS)
    if not norm:
        return ExternalScores([], pairs, {p: np.empty(0) for p in pairs})
    X = extract_many(norm)
    cols = {}
    for p in pairs:
        fold_models = models[p]
        cols[p] = np.mean([predict_proba(m, X, SCHEMA_VERSION) for m in fold_models], axis=0)
    return ExternalScores(norm, pairs, cols)


def subsample_corpus(corpus: CleanCorpus, fraction: float, seed: int) -> CleanCorpus:
    """Per-country random subsample keeping corpus order."""
    if not 0 < fraction <= 1:
        raise ConfigError("subsample fraction must be in (0, 1]")
    if fraction == 1:
        return corpus
    keep = []
    for i, country in enumerate(corpus.countries()):
        rows = [j for j, p in enumerate(corpus.names) if p.country == country]
        rng = np.random.default_rng(derive_seed(seed, COUNTRIES.index(country) if country in COUNTRIES else 99 + i, _SUBSAMPLE))
        n = max(1, round(fraction * len(rows)))
        keep += list(rng.choice(rows, size=n, replace=False))
    keep.sort()
    return CleanCorpus([corpus.names[j] for j in keep])


def write_metrics(metrics: Sequence[PairMetrics], path) -> None:
    fields = ["pair", "accuracy", "sensitivity", "specificity", "tp", "fn", "tn", "fp"]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fields, lineterminator="\n")
        w.writeheader()
        for m in metrics:
            w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in m.as_dict().items()})


def read_metrics(path) -> list[PairMetrics]:
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            return [PairMetrics(r["pair"], int(r["tp"]), int(r["fn"]), int(r["tn"]), int(r["fp"]))
                    for r in csv.DictReader(fh)]
    except OSError as exc:
        raise ConfigError(f"cannot read metrics {path}: {exc}") from exc
