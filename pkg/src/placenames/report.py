"""Tables and rankings derived from a score table.

Every function here is a pure function of its inputs. Numbers are sorted
and compared at full precision and only rounded (3 decimals) when rendered.

Files written by :func:`write_reports` (``<stem>.csv`` and ``<stem>.md``):

=================  ==================================================
stem               content
=================  ==================================================
``rankings``       every England name by ensemble score, descending
``top_bottom``     the highest and lowest scoring England names
``similarity``     mean England score per classifier, ascending
``accuracy``       accuracy / sensitivity / specificity per classifier
``correlations``   inter-correlations of classifier scores + column means
``non_english``    England names below the cut point
``breakdown_<n>``  per-classifier scores of one name
``oe_on``          Old English vs Old Norse validation table
``counts``         names per country after cleaning
=================  ==================================================
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .corpus import COUNTRY_NAMES, Rejected, normalize
from .pipeline import ExternalScores, PairMetrics, ScoreTable
from .stats import CorrelationMatrix, correlation_matrix, mann_whitney, pooled_t, welch_t

REPORTS = ("rankings", "similarity", "accuracy", "correlations", "non-english", "breakdown", "oe-on")


def _f3(v: float) -> str:
    return "" if v is None or np.isnan(v) else f"{v:.3f}"


def _pair_label(pair: str) -> str:
    return f"England-{COUNTRY_NAMES.get(pair, pair)}"


def _markdown(header: Sequence[str], rows: Sequence[Sequence[str]], title: str = "") -> str:
    lines = [f"## {title}", ""] if title else []
    lines.append("| " + " | ".join(header) + " |")
    lines.append("|" + "|".join("---" for _ in header) + "|")
    lines += ["| " + " | ".join(str(c) for c in r) + " |" for r in rows]
    return "\n".join(lines) + "\n"


def _csv(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


# --------------------------------------------------------------------------
# rankings


@dataclass
class RankingReport:
    rows: list[tuple[int, str, float]]  # (rank, name, ensemble)

    def top(self, n: int) -> list[tuple[int, str, float]]:
        return self.rows[:n]

    def bottom(self, n: int) -> list[tuple[int, str, float]]:
        return self.rows[-n:] if n else []

    def rank_of(self, name: str) -> int:
        for rank, n, _ in self.rows:
            if n == name:
                return rank
        raise KeyError(name)


def rank_names(table: ScoreTable) -> RankingReport:
    """England names by descending ensemble score; equal scores sort by name."""
    mask = table.eng_mask
    names = [n for n, m in zip(table.names, mask) if m]
    scores = table.ensemble[mask]
    if np.isnan(scores).any():
        raise ValueError("ensemble score missing for some England rows")
    order = sorted(range(len(names)), key=lambda i: (-scores[i], names[i]))
    return RankingReport([(r, names[i], float(scores[i])) for r, i in enumerate(order, start=1)])


def name_breakdown(table: ScoreTable, name: str) -> list[tuple[str, float]]:
    """Per-classifier scores for one England name, ensemble last."""
    try:
        key = normalize(name)
    except Rejected:
        raise KeyError(name) from None
    i = table.row(key)
    return [(p, float(table.pair_scores[p][i])) for p in table.pairs] + [("ensemble", float(table.ensemble[i]))]


@dataclass
class SimilarityReport:
    rows: list[tuple[str, float]]  # (pair, mean England score), ascending


def similarity_order(table: ScoreTable) -> SimilarityReport:
    M = table.eng_matrix()
    means = M.mean(axis=0)
    order = sorted(range(len(table.pairs)), key=lambda j: (means[j], table.pairs[j]))
    return SimilarityReport([(table.pairs[j], float(means[j])) for j in order])


def count_non_english(table: ScoreTable, cutpoint: float = 0.5) -> int:
    e = table.ensemble[table.eng_mask]
    return int((e < cutpoint).sum())


def non_english_names(table: ScoreTable, cutpoint: float = 0.5) -> list[tuple[str, float]]:
    ranking = rank_names(table)
    return [(n, s) for _, n, s in reversed(ranking.rows) if s < cutpoint]


# --------------------------------------------------------------------------
# Old English / Old Norse validation


@dataclass
class OEONColumn:
    label: str
    oe_mean: float
    on_mean: float
    t_test: object  # TestResult
    mann_whitney: object


def oe_on_table(oe: ExternalScores, on: ExternalScores, scand=("DEN", "SWE", "NOR")) -> list[OEONColumn]:
    """Columns: each Scandinavian classifier, their average, and the ensemble.

    Scandinavian columns use Welch's t; the ensemble column uses the pooled
    t-test. All tests are two-tailed, and Mann-Whitney accompanies each.
    """
    def column(label, a, b, pooled=False):
        t = (pooled_t if pooled else welch_t)(a, b)
        return OEONColumn(label, float(np.mean(a)), float(np.mean(b)), t, mann_whitney(a, b))

    cols = []
    for p in scand:
        cols.append(column(f"Eng-{p.title()}", oe.pair_scores[p], on.pair_scores[p]))
    oe_s = np.mean([oe.pair_scores[p] for p in scand], axis=0)
    on_s = np.mean([on.pair_scores[p] for p in scand], axis=0)
    cols.append(column("Scand mean", oe_s, on_s))
    cols.append(column("Ensemble", oe.ensemble, on.ensemble, pooled=True))
    return cols


def _p_text(p: float) -> str:
    return "<.001" if p < 0.001 else f"{p:.3f}"


# --------------------------------------------------------------------------
# rendering


def render(kind: str, **kw) -> tuple[str, str]:
    """Return ``(csv_text, markdown_text)`` for one report."""
    if kind == "rankings":
        rows = kw["ranking"].rows
        return (_csv(["rank", "name", "ensemble"], [(r, n, repr(s)) for r, n, s in rows]),
                _markdown(["Rank", "Place name", "Ensemble score"],
                          [(r, n, _f3(s)) for r, n, s in rows], "England names by ensemble score"))
    if kind == "top_bottom":
        ranking, n = kw["ranking"], kw.get("n", 10)
        rows = ranking.top(n) + ranking.bottom(n)
        return (_csv(["rank", "name", "ensemble"], [(r, nm, repr(s)) for r, nm, s in rows]),
                _markdown(["Place name", "Ensemble score"],
                          [(nm.capitalize(), _f3(s)) for _, nm, s in rows],
                          f"Top and bottom {n} England names"))
    if kind == "similarity":
        rows = kw["similarity"].rows
        return (_csv(["pair", "mean_score"], [(p, repr(m)) for p, m in rows]),
                _markdown(["Classifier", "Mean score"], [(_pair_label(p), _f3(m)) for p, m in rows],
                          "Mean England score per classifier"))
    if kind == "accuracy":
        metrics: list[PairMetrics] = kw["metrics"]
        rows = [(m.pair, m.accuracy, m.sensitivity, m.specificity, m.tp, m.fn, m.tn, m.fp) for m in metrics]
        avg = [float(np.mean([r[i] for r in rows])) for i in (1, 2, 3)]
        md_rows = [(_pair_label(r[0]), *(_f3(v) for v in r[1:4])) for r in rows]
        md_rows.append(("Mean", *(_f3(v) for v in avg)))
        return (_csv(["pair", "accuracy", "sensitivity", "specificity", "tp", "fn", "tn", "fp"],
                     [(r[0], *(repr(v) for v in r[1:4]), *r[4:]) for r in rows]),
                _markdown(["", "Accuracy", "Sensitivity", "Specificity"], md_rows, "Cross-validated accuracy per pair"))
    if kind == "correlations":
        cm: CorrelationMatrix = kw["correlations"]
        labels = list(cm.labels)
        means = cm.column_means
        csv_rows = [(a, *(repr(float(v)) for v in cm.r[i])) for i, a in enumerate(labels)]
        csv_rows.append(("mean", *(repr(float(v)) for v in means)))
        md_rows = [(a, *("" if i == j else f"{cm.r[i, j]:.2f}" for j in range(len(labels))))
                   for i, a in enumerate(labels)]
        md_rows.append(("Mean", *(f"{v:.2f}" for v in means)))
        p_max = float(cm.p[~np.eye(len(labels), dtype=bool)].max()) if len(labels) > 1 else float("nan")
        md = _markdown(["", *labels], md_rows, "Pearson correlation of pair scores over England names")
        md += f"\nLargest off-diagonal p-value: {p_max:.3g}\n"
        return _csv(["", *labels], csv_rows), md
    if kind == "non_english":
        rows = kw["rows"]
        cut = kw.get("cutpoint", 0.5)
        return (_csv(["name", "ensemble"], [(n, repr(s)) for n, s in rows]),
                _markdown(["Place name", "Ensemble score"], [(n, _f3(s)) for n, s in rows],
                          f"{len(rows)} England names below cut point {cut}"))
    if kind == "breakdown":
        name, rows = kw["name"], kw["rows"]
        return (_csv(["classifier", "score"], [(p, repr(s)) for p, s in rows]),
                _markdown(["Classifier", name.capitalize()],
                          [("Ensemble" if p == "ensemble" else _pair_label(p), _f3(s))
                           for p, s in rows], f"Scores for {name!r}"))
    if kind == "oe_on":
        cols: list[OEONColumn] = kw["columns"]
        n_oe, n_on = kw["n_oe"], kw["n_on"]
        header = ["", *(c.label for c in cols)]
        md_rows = [
            (f"OE mean (n={n_oe})", *(_f3(c.oe_mean) for c in cols)),
            (f"ON mean (n={n_on})", *(_f3(c.on_mean) for c in cols)),
            ("T-test", *(_p_text(c.t_test.p_value) for c in cols)),
            ("Mann-Whitney", *(_p_text(c.mann_whitney.p_value) for c in cols)),
        ]
        csv_rows = [(c.label, repr(c.oe_mean), repr(c.on_mean), c.t_test.method, repr(c.t_test.statistic),
                     repr(c.t_test.p_value), repr(c.mann_whitney.statistic), repr(c.mann_whitney.p_value))
                    for c in cols]
        return (_csv(["column", "oe_mean", "on_mean", "t_method", "t", "t_p", "u", "mw_p"], csv_rows),
                _markdown(header, md_rows, "Old English vs Old Norse derived names"))
    if kind == "counts":
        counts: dict = kw["counts"]
        return (_csv(["country", "n"], counts.items()),
                _markdown(["Country", "Sample size"], [(COUNTRY_NAMES.get(c, c), n) for c, n in counts.items()],
                          "Names per country after cleaning"))
    raise ValueError(f"unknown report {kind!r}")


def write_report(out_dir, stem: str, kind: str, **kw) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_text, md_text = render(kind, **kw)
    paths = [out_dir / f"{stem}.csv", out_dir / f"{stem}.md"]
    paths[0].write_text(csv_text, encoding="utf-8")
    paths[1].write_text(md_text, encoding="utf-8")
    return paths


def write_reports(table: ScoreTable, out_dir, which: Sequence[str] = ("rankings", "similarity", "correlations",
                  "non-english"), metrics: Sequence[PairMetrics] | None = None, cutpoint: float = 0.5,
                  names: Sequence[str] = (), top_n: int = 10) -> list[Path]:
    """Write the score-table based reports selected by ``which``."""
    written: list[Path] = []
    for kind in which:
        if kind == "rankings":
            ranking = rank_names(table)
            written += write_report(out_dir, "rankings", "rankings", ranking=ranking)
            written += write_report(out_dir, "top_bottom", "top_bottom", ranking=ranking, n=top_n)
        elif kind == "similarity":
            written += write_report(out_dir, "similarity", "similarity", similarity=similarity_order(table))
        elif kind == "correlations":
            written += write_report(out_dir, "correlations", "correlations", correlations=correlation_matrix(table))
        elif kind == "non-english":
            written += write_report(out_dir, "non_english", "non_english",
                                    rows=non_english_names(table, cutpoint), cutpoint=cutpoint)
        elif kind == "accuracy":
            if metrics is None:
                raise ValueError("accuracy report needs pair metrics")
            written += write_report(out_dir, "accuracy", "accuracy", metrics=metrics)
        elif kind == "breakdown":
            for name in names:
                rows = name_breakdown(table, name)
                written += write_report(out_dir, f"breakdown_{normalize(name)}", "breakdown", name=name, rows=rows)
        else:
            raise ValueError(f"unknown report {kind!r}")
    return written
