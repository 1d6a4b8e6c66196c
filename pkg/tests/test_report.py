import numpy as np
import pytest

from placenames.pipeline import ExternalScores, PairMetrics, ScoreTable
from placenames.report import (
    count_non_english, name_breakdown, non_english_names, oe_on_table, rank_names, render,
    similarity_order, write_reports,
)
from placenames.stats import correlation_matrix

PAIRS = ("DEN", "ROM", "SCO")


def make_table():
    names = ["harlington", "anna", "bray", "ely", "acton", "roma", "perth"]
    countries = ["ENG"] * 5 + ["ROM", "SCO"]
    nan = float("nan")
    cols = {
        "DEN": np.array([0.99, 0.10, 0.40, 0.70, 0.80, nan, nan]),
        "ROM": np.array([1.00, 0.30, 0.60, 0.90, 0.80, 0.05, nan]),
        "SCO": np.array([0.98, 0.11, 0.20, 0.50, 0.80, nan, 0.20]),
    }
    ens = np.r_[np.mean([cols[p][:5] for p in PAIRS], axis=0), nan, nan]
    return ScoreTable(names, countries, PAIRS, cols, ens)


def test_ranking_order_and_ties():
    table = make_table()
    table.ensemble[3] = table.ensemble[4]  # ely ties acton
    r = rank_names(table)
    assert [n for _, n, _ in r.rows] == ["harlington", "acton", "ely", "bray", "anna"]
    assert r.rank_of("anna") == 5 and r.top(1)[0][1] == "harlington" and r.bottom(1)[0][1] == "anna"


def test_similarity_order():
    rows = similarity_order(make_table()).rows
    assert [p for p, _ in rows] == ["SCO", "DEN", "ROM"]
    assert rows[-1][1] == pytest.approx(np.mean([1.0, 0.3, 0.6, 0.9, 0.8]))


def test_non_english():
    table = make_table()
    assert count_non_english(table) == 2
    assert [n for n, _ in non_english_names(table)] == ["anna", "bray"]


def test_breakdown_normalizes_name():
    rows = name_breakdown(make_table(), "Harlington")
    assert [p for p, _ in rows] == [*PAIRS, "ensemble"]
    assert rows[-1][1] == pytest.approx(0.99)
    with pytest.raises(KeyError):
        name_breakdown(make_table(), "roma")
    with pytest.raises(KeyError):
        name_breakdown(make_table(), "New York")


def test_render_three_decimals_and_full_precision_csv():
    csv_text, md = render("rankings", ranking=rank_names(make_table()))
    assert "0.990" in md and "| 1 | harlington |" in md
    first = csv_text.splitlines()[1].split(",")
    assert first[:2] == ["1", "harlington"]
    assert float(first[2]) == rank_names(make_table()).rows[0][2]


def test_accuracy_report_mean_row():
    ms = [PairMetrics("ROM", 9, 1, 10, 0), PairMetrics("SCO", 7, 3, 6, 4)]
    csv_text, md = render("accuracy", metrics=ms)
    assert md.splitlines()[-1].startswith("| Mean | 0.800 | 0.800 | 0.800 |")
    assert csv_text.splitlines()[1].startswith("ROM,0.95,0.9,1.0")


def test_unknown_report():
    with pytest.raises(ValueError):
        render("nope")


def test_reports_are_pure_functions_of_the_table(tmp_path):
    table = make_table()
    table.to_csv(tmp_path / "scores.csv")
    back = ScoreTable.from_csv(tmp_path / "scores.csv")
    a = write_reports(table, tmp_path / "a", which=("rankings", "similarity", "correlations", "non-english"))
    b = write_reports(back, tmp_path / "b", which=("rankings", "similarity", "correlations", "non-english"))
    assert [p.name for p in a] == [p.name for p in b]
    assert {p.name for p in a} == {
        "rankings.csv", "rankings.md", "top_bottom.csv", "top_bottom.md", "similarity.csv",
        "similarity.md", "correlations.csv", "correlations.md", "non_english.csv", "non_english.md"}
    for pa, pb in zip(a, b):
        assert pa.read_bytes() == pb.read_bytes()


def test_correlation_report_has_mean_row():
    csv_text, md = render("correlations", correlations=correlation_matrix(make_table()))
    assert csv_text.splitlines()[0] == ",DEN,ROM,SCO"
    assert csv_text.splitlines()[-1].startswith("mean,")
    assert "Largest off-diagonal p-value" in md


def test_oe_on_table():
    rng = np.random.default_rng(0)
    pairs = ("DEN", "SWE", "NOR")
    oe = ExternalScores([f"o{i}" for i in range(40)], pairs,
                        {p: np.clip(rng.normal(0.9, 0.05, 40), 0, 1) for p in pairs})
    on = ExternalScores([f"n{i}" for i in range(30)], pairs,
                        {p: np.clip(rng.normal(0.7, 0.1, 30), 0, 1) for p in pairs})
    cols = oe_on_table(oe, on)
    assert [c.label for c in cols] == ["Eng-Den", "Eng-Swe", "Eng-Nor", "Scand mean", "Ensemble"]
    assert [c.t_test.method for c in cols] == ["welch_t"] * 4 + ["pooled_t"]
    for c in cols:
        assert c.oe_mean > c.on_mean
        assert c.t_test.p_value < 0.001 and c.mann_whitney.p_value < 0.001
    csv_text, md = render("oe_on", columns=cols, n_oe=40, n_on=30)
    assert "<.001" in md and "OE mean (n=40)" in md
    assert len(csv_text.splitlines()) == 6
