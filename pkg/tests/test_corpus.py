import unicodedata

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from placenames.corpus import (
    OLD_ENGLISH, OLD_NORSE, CleanCorpus, DerivationEntry, DropReason, PlaceName, RawEntry,
    Rejected, apply_recipe, as_entries, build_clean_corpus, filter_derivation,
    load_country_file, load_derivations, load_manifest, normalize, read_corpus, write_corpus,
    write_drop_log,
)
from placenames.errors import ConfigError


def entries(country, names):
    return [RawEntry(n, country, i) for i, n in enumerate(names, start=1)]


# --------------------------------------------------------------------------
# loading


def test_load_plain_file(tmp_path):
    p = tmp_path / "eng.txt"
    p.write_text("York\nLeeds\n", encoding="utf-8")
    got = load_country_file(p, "ENG")
    assert [(e.text, e.country, e.source_line) for e in got] == [("York", "ENG", 1), ("Leeds", "ENG", 2)]


def test_load_skips_blank_lines(tmp_path):
    p = tmp_path / "eng.txt"
    p.write_text("York\n\n   \nLeeds\n", encoding="utf-8")
    assert [e.text for e in load_country_file(p, "ENG")] == ["York", "Leeds"]


def test_load_keeps_multi_word_names(tmp_path):
    p = tmp_path / "eng.txt"
    p.write_text("West London\n", encoding="utf-8")
    assert [e.text for e in load_country_file(p, "ENG")] == ["West London"]


def test_load_delimited_with_type_filter(tmp_path):
    p = tmp_path / "dk.csv"
    p.write_text("navn;type\nAarhus;By\nStorebælt;Farvand\nVesterbro;Bydel\n", encoding="utf-8")
    got = load_country_file(p, "DEN", delimiter=";", column="navn", header=True,
                            type_column="type", type_values=["By", "Bydel"])
    assert [e.text for e in got] == ["Aarhus", "Vesterbro"]


def test_load_missing_file_is_config_error(tmp_path):
    with pytest.raises(ConfigError):
        load_country_file(tmp_path / "nope.txt", "ENG")


def test_malformed_utf8_line_is_logged_not_fatal(tmp_path):
    p = tmp_path / "eng.txt"
    p.write_bytes(b"York\n\xff\xfeBad\nLeeds\n")
    raw = load_country_file(p, "ENG")
    assert len(raw) == 3 and not raw[1].valid_encoding
    corpus = build_clean_corpus(raw)
    assert [n.normalized for n in corpus.names] == ["york", "leeds"]
    assert [d.reason for d in corpus.drop_log] == [DropReason.INVALID_ENCODING]


def test_manifest_resolves_relative_paths(tmp_path):
    (tmp_path / "e.txt").write_text("York\n", encoding="utf-8")
    (tmp_path / "r.txt").write_text("Roma\n", encoding="utf-8")
    (tmp_path / "m.json").write_text('{"countries": {"ENG": {"path": "e.txt"}, "ROM": {"path": "r.txt"}}}')
    got = load_manifest(tmp_path / "m.json")
    assert [(e.text, e.country) for e in got] == [("York", "ENG"), ("Roma", "ROM")]


def test_manifest_missing_file_names_the_path(tmp_path):
    (tmp_path / "m.json").write_text('{"countries": {"ENG": {"path": "gone.txt"}}}')
    with pytest.raises(ConfigError, match="gone.txt"):
        load_manifest(tmp_path / "m.json")


# --------------------------------------------------------------------------
# normalize


def test_sharp_s():
    assert normalize("Straße") == "strasse"


def test_hyphenated_rejected():
    with pytest.raises(Rejected) as exc:
        normalize("Aix-en-Provence")
    assert exc.value.reason is DropReason.HYPHENATED


def test_slash_variants_rejected():
    with pytest.raises(Rejected) as exc:
        normalize("Bolzano/Bozen")
    assert exc.value.reason is DropReason.MULTIPLE_VERSIONS


def test_multi_word_rejected():
    with pytest.raises(Rejected) as exc:
        normalize("West London")
    assert exc.value.reason is DropReason.MULTI_WORD


@pytest.mark.parametrize("raw, expected", [
    ("Køln", "koln"),
    ("Ærøskøbing", "aeroskobing"),
    ("Þingvellir", "thingvellir"),
    ("Łódź", "lodz"),
    ("Œuilly", "oeuilly"),
    ("Gävle", "gavle"),
    ("St.Ives", "stives"),
    ("Ta'Xbiex", "taxbiex"),
])
def test_folding_examples(raw, expected):
    assert normalize(raw) == expected


def test_unmappable_character_is_rejected_with_detail():
    with pytest.raises(Rejected) as exc:
        normalize("Москва")
    assert exc.value.reason is DropReason.EMPTY_AFTER_NORMALIZE
    assert "U+043C" in exc.value.detail


def test_decomposed_apostrophe_is_stripped():
    assert normalize("\u0149") == "n"


def test_punctuation_only_is_rejected():
    with pytest.raises(Rejected) as exc:
        normalize("'.")
    assert exc.value.reason is DropReason.EMPTY_AFTER_NORMALIZE


def _latin_letters():
    blocks = list(range(0x41, 0x5B)) + list(range(0x61, 0x7B)) + list(range(0xC0, 0x250)) + list(range(0x1E00, 0x1F00))
    return [chr(c) for c in blocks if unicodedata.category(chr(c)).startswith("L")]


LATIN = _latin_letters()


@settings(max_examples=300, deadline=None)
@given(st.text(alphabet=st.sampled_from(LATIN + ["'", "."]), min_size=1, max_size=12))
def test_normalize_output_alphabet(text):
    try:
        out = normalize(text)
    except Rejected:
        return
    assert out and all("a" <= c <= "z" for c in out)


def test_agrees_with_reference_transliterator():
    """Independent check against unidecode on the European Latin blocks."""
    unidecode = pytest.importorskip("unidecode").unidecode
    checked = 0
    for cp in list(range(0xC0, 0x180)) + list(range(0x1E00, 0x1F00)):
        ch = chr(cp)
        if not unicodedata.category(ch).startswith("L"):
            continue
        ref = unidecode(ch).lower().replace("'", "")
        if not ref.isascii() or not ref.isalpha():
            continue
        assert normalize(ch) == ref, ch
        checked += 1
    assert checked > 300


# --------------------------------------------------------------------------
# cleaning


def test_duplicate_within_country():
    corpus = build_clean_corpus(entries("ENG", ["Ash", "Ash"]) + entries("ROM", ["Roma"]))
    assert corpus.counts["ENG"] == 1
    assert [d.reason for d in corpus.drop_log] == [DropReason.DUPLICATE_WITHIN]


def test_duplicate_across_countries_removed_everywhere():
    corpus = build_clean_corpus(entries("ENG", ["Bray", "York"]) + entries("IRE", ["Bray", "Cork"]))
    assert sorted(n.normalized for n in corpus.names) == ["cork", "york"]
    assert [d.reason for d in corpus.drop_log] == [DropReason.DUPLICATE_CROSS] * 2


def test_cross_dedup_uses_normalized_form():
    corpus = build_clean_corpus(entries("GER", ["Köln", "Bonn"]) + entries("FRA", ["Koln", "Nice"]))
    assert sorted(n.normalized for n in corpus.names) == ["bonn", "nice"]


def test_country_left_empty_is_fatal():
    with pytest.raises(ConfigError, match="ROM"):
        build_clean_corpus(entries("ENG", ["York"]) + entries("ROM", ["West Roma"]))


names_strategy = st.lists(st.text(alphabet="abcde -", min_size=1, max_size=5).filter(lambda s: s.strip()),
                          max_size=25)


@settings(max_examples=100, deadline=None)
@given(names_strategy, names_strategy)
def test_cleaning_properties(eng, oth):
    raw = entries("ENG", eng + ["zzzq"]) + entries("DEN", oth + ["qqqz"])
    corpus = build_clean_corpus(raw)

    # kept + dropped accounts for every raw line, per country
    for c in ("ENG", "DEN"):
        kept = corpus.counts.get(c, 0)
        dropped = sum(d.entry.country == c for d in corpus.drop_log)
        assert kept + dropped == sum(e.country == c for e in raw)

    # uniqueness within and across countries
    norm = [n.normalized for n in corpus.names]
    assert len(norm) == len(set(norm))

    # names present (after normalizing) in both countries are in neither
    def norms(country):
        out = set()
        for e in raw:
            if e.country == country:
                try:
                    out.add(normalize(e.text))
                except Rejected:
                    pass
        return out
    assert not (norms("ENG") & norms("DEN")) & set(norm)

    # idempotence
    again = build_clean_corpus(as_entries(corpus.names))
    assert [(n.country, n.normalized) for n in again.names] == [(n.country, n.normalized) for n in corpus.names]
    assert again.drop_log == []


def test_corpus_file_round_trip(tmp_path):
    corpus = build_clean_corpus(entries("ENG", ["York", "Ash"]) + entries("ROM", ["Roma"]))
    write_corpus(corpus, tmp_path / "c.tsv")
    assert (tmp_path / "c.tsv").read_text() == "ENG\tyork\nENG\tash\nROM\troma\n"
    back = read_corpus(tmp_path / "c.tsv")
    assert [(n.country, n.normalized) for n in back.names] == [("ENG", "york"), ("ENG", "ash"), ("ROM", "roma")]


def test_drop_log_csv(tmp_path):
    corpus = build_clean_corpus(entries("ENG", ["York", "York", "West Ham"]) + entries("ROM", ["Roma"]))
    write_drop_log(corpus, tmp_path / "d.csv")
    lines = (tmp_path / "d.csv").read_text().splitlines()
    assert lines[0] == "raw,country,reason,detail"
    assert sorted(lines[1:]) == ["West Ham,ENG,multi_word,West Ham", "York,ENG,duplicate_within,york"]


# --------------------------------------------------------------------------
# derivation samples


DERIVATIONS = [
    DerivationEntry("Harlington", "Old English", "Old English personal name + -ingtūn"),
    DerivationEntry("Kirkby", "Old Norse", "Old Norse kirkja + bý"),
    DerivationEntry("Thorpe", "Old Danish", "Old Danish thorp, later Old English spelling"),
    DerivationEntry("Grimston", "Old English", "Old Scand pers. name + Old English tūn"),
    DerivationEntry("Ashby", "Old Norse", "Old Norse askr + bý"),
    DerivationEntry("Ashby", "Old Norse", "Old Norse askr + bý (another)"),
    DerivationEntry("Long Ditton", "Old English", "Old English dīc + tūn"),
    DerivationEntry("Acton/Aston", "Mercian", "Old English āc + tūn"),
    DerivationEntry("Wick", "Kentish", "Latin vicus"),
    DerivationEntry("Ely", "Northumbrian (incl. Old N)", "Old English ǣl + ēg"),
]


def test_old_english_recipe():
    got = [p.normalized for p in apply_recipe(DERIVATIONS, OLD_ENGLISH)]
    assert got == ["harlington", "ely"]


def test_old_norse_recipe():
    got = [p.normalized for p in apply_recipe(DERIVATIONS, OLD_NORSE)]
    assert got == ["kirkby", "ashby"]


def test_exclusion_not_triggered():
    got = filter_derivation([DerivationEntry("Kirkby", "Old Norse", "Old Norse bý")],
                            ["Old Norse"], exclude_in_derivation=["Saxon"])
    assert [p.normalized for p in got] == ["kirkby"]


def test_empty_derivation_result_warns(caplog):
    assert filter_derivation(DERIVATIONS, ["Cornish"]) == []
    assert "selected no names" in caplog.text


def test_load_derivations(tmp_path):
    p = tmp_path / "kepn.csv"
    p.write_text("name,languages,derivation\nKirkby,Old Norse,Old Norse kirkja\n,Old Norse,x\n", encoding="utf-8")
    assert load_derivations(p) == [DerivationEntry("Kirkby", "Old Norse", "Old Norse kirkja")]
