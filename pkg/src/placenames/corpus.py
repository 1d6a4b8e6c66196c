"""Loading, transliteration and de-duplication of per-country place-name lists.

Raw names go through three stages:

1. :func:`load_country_file` reads one name per line (optionally from a
   delimited column) into :class:`RawEntry` records.
2. :func:`normalize` folds each name to lowercase ``a-z`` or rejects it.
3. :func:`build_clean_corpus` removes repeats inside a country, then removes
   every name that survives in more than one country.

Every removed entry is accounted for in ``CleanCorpus.drop_log``.
"""

from __future__ import annotations

import csv
import enum
import hashlib
import io
import json
import logging
import re
import unicodedata
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

from .errors import ConfigError

log = logging.getLogger(__name__)

ENGLAND = "ENG"
#: Comparison countries, in the column order used by score tables.
OTHERS = ("DEN", "NOR", "SWE", "IRE", "SCO", "WAL", "ROM", "GER", "FRA", "NET")
COUNTRIES = (ENGLAND,) + OTHERS

COUNTRY_NAMES = {
    "ENG": "England",
    "DEN": "Denmark",
    "NOR": "Norway",
    "SWE": "Sweden",
    "IRE": "Ireland",
    "SCO": "Scotland",
    "WAL": "Wales",
    "ROM": "Ancient Rome",
    "GER": "Germany",
    "FRA": "France",
    "NET": "Netherlands",
}

_NAME_RE = re.compile(r"^[a-z]+$")


class DropReason(str, enum.Enum):
    MULTI_WORD = "multi_word"
    HYPHENATED = "hyphenated"
    DUPLICATE_WITHIN = "duplicate_within"
    DUPLICATE_CROSS = "duplicate_cross"
    EMPTY_AFTER_NORMALIZE = "empty_after_normalize"
    INVALID_ENCODING = "invalid_encoding"
    MULTIPLE_VERSIONS = "multiple_versions"


class Rejected(ValueError):
    """Raised by :func:`normalize` when a name cannot be used."""

    def __init__(self, reason: DropReason, detail: str = ""):
        super().__init__(f"{reason.value}: {detail}" if detail else reason.value)
        self.reason = reason
        self.detail = detail


@dataclass(frozen=True)
class RawEntry:
    text: str
    country: str
    source_line: int
    valid_encoding: bool = True

    def __post_init__(self):
        if not self.text.strip():
            raise ValueError("RawEntry text must be non-empty")


@dataclass(frozen=True)
class PlaceName:
    raw: str
    normalized: str
    country: str

    def __post_init__(self):
        if not _NAME_RE.match(self.normalized):
            raise ValueError(f"normalized name must match [a-z]+, got {self.normalized!r}")


@dataclass(frozen=True)
class DropRecord:
    entry: RawEntry
    reason: DropReason
    detail: str = ""


@dataclass
class CleanCorpus:
    names: list[PlaceName]
    drop_log: list[DropRecord] = field(default_factory=list)

    @property
    def counts(self) -> dict[str, int]:
        c = Counter(p.country for p in self.names)
        order = [k for k in COUNTRIES if k in c] + sorted(k for k in c if k not in COUNTRIES)
        return {k: c[k] for k in order}

    def by_country(self, country: str) -> list[PlaceName]:
        return [p for p in self.names if p.country == country]

    def countries(self) -> list[str]:
        seen = dict.fromkeys(p.country for p in self.names)
        return list(seen)

    def checksum(self) -> str:
        h = hashlib.sha256()
        for p in self.names:
            h.update(f"{p.country}\t{p.normalized}\n".encode())
        return h.hexdigest()


@dataclass(frozen=True)
class DerivationEntry:
    name: str
    languages: str
    derivation: str

    def __post_init__(self):
        if not self.name.strip():
            raise ValueError("DerivationEntry name must be non-empty")


# --------------------------------------------------------------------------
# transliteration


@lru_cache(maxsize=1)
def transliteration_table() -> dict:
    text = resources.files("placenames").joinpath("data/translit.json").read_text("utf-8")
    table = json.loads(text)
    table["strip"] = frozenset(table["strip"])
    return table


def _fold_char(ch: str, table: dict) -> str:
    if ch in table["strip"]:
        return ""
    mapped = table["overrides"].get(ch)
    if mapped is not None:
        return mapped
    strip = table["strip"]
    return "".join(
        c for c in unicodedata.normalize("NFKD", ch)
        if not unicodedata.combining(c) and c not in strip
    )


def _is_hyphen(ch: str) -> bool:
    return ch == "-" or unicodedata.category(ch) == "Pd"


def normalize(text: str) -> str:
    """Fold a place name to lowercase ``a-z``.

    Multi-word, hyphenated and slash-separated ("A/B") names are rejected
    before any folding. Raises
    :class:`Rejected` carrying a :class:`DropReason`.
    """
    s = text.strip()
    if any(ch.isspace() for ch in s):
        raise Rejected(DropReason.MULTI_WORD, text)
    if any(_is_hyphen(ch) for ch in s):
        raise Rejected(DropReason.HYPHENATED, text)
    if "/" in s:
        raise Rejected(DropReason.MULTIPLE_VERSIONS, text)
    table = transliteration_table()
    out = []
    for ch in s.lower():
        folded = _fold_char(ch, table)
        for c in folded:
            if not ("a" <= c <= "z"):
                raise Rejected(
                    DropReason.EMPTY_AFTER_NORMALIZE,
                    f"no mapping for {ch!r} (U+{ord(ch):04X})",
                )
        out.append(folded)
    result = "".join(out)
    if not result:
        raise Rejected(DropReason.EMPTY_AFTER_NORMALIZE, f"{text!r} folds to nothing")
    return result


# --------------------------------------------------------------------------
# loading


def _pick_column(row: Sequence[str], column: int | str, header: Sequence[str] | None) -> str:
    if isinstance(column, str):
        if header is None:
            raise ConfigError(f"column {column!r} given by name but the file has no header")
        try:
            column = list(header).index(column)
        except ValueError:
            raise ConfigError(f"column {column!r} not found in header {list(header)}") from None
    return row[column] if column < len(row) else ""


def load_country_file(
    path,
    country: str,
    delimiter: str | None = None,
    column: int | str = 0,
    header: bool = False,
    type_column: int | str | None = None,
    type_values: Iterable[str] | None = None,
) -> list[RawEntry]:
    """Read one place name per non-blank line.

    With ``delimiter`` set, each line is parsed as a CSV record and ``column``
    (index, or header name when ``header`` is true) picks the name. Rows whose
    ``type_column`` is not in ``type_values`` are skipped entirely; this
    reproduces supplier-side filtering such as keeping only towns and districts.
    Lines that are not valid UTF-8 are kept but flagged, so the cleaning stage
    logs them.
    """
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc

    keep_types = set(type_values) if type_values is not None else None
    entries: list[RawEntry] = []
    header_row = None
    for lineno, raw in enumerate(data.splitlines(), start=1):
        try:
            line = raw.decode("utf-8")
            valid = True
        except UnicodeDecodeError:
            line = raw.decode("utf-8", errors="replace")
            valid = False
        if lineno == 1:
            line = line.lstrip("﻿")
        if not line.strip():
            continue
        if delimiter is None:
            row = [line]
        else:
            row = next(csv.reader([line], delimiter=delimiter))
        if header and header_row is None:
            header_row = row
            continue
        if keep_types is not None and type_column is not None:
            if _pick_column(row, type_column, header_row).strip() not in keep_types:
                continue
        text = _pick_column(row, column, header_row)
        if not text.strip():
            continue
        entries.append(RawEntry(text.strip(), country, lineno, valid))
    return entries


def load_manifest(path) -> list[RawEntry]:
    """Load every country listed in a JSON manifest.

    Manifest layout::

        {"countries": {"ENG": {"path": "england.txt"},
                       "DEN": {"path": "dk.csv", "delimiter": ";", "column": "navn",
                               "header": true, "type_column": "type",
                               "type_values": ["By", "Bydel"]}}}

    Relative paths resolve against the manifest's directory.
    """
    path = Path(path)
    try:
        raw = json.loads(path.read_text("utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read manifest {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"manifest {path} is not valid JSON: {exc}") from exc
    countries = raw.get("countries")
    if not isinstance(countries, dict) or not countries:
        raise ConfigError(f"manifest {path} has no 'countries' mapping")
    entries: list[RawEntry] = []
    for code, opts in countries.items():
        if code not in COUNTRIES:
            raise ConfigError(f"unknown country code {code!r} in {path}")
        file_path = Path(opts["path"])
        if not file_path.is_absolute():
            file_path = path.parent / file_path
        if not file_path.exists():
            raise ConfigError(f"file for {code} not found: {file_path}")
        entries.extend(
            load_country_file(
                file_path,
                code,
                delimiter=opts.get("delimiter"),
                column=opts.get("column", 0),
                header=opts.get("header", False),
                type_column=opts.get("type_column"),
                type_values=opts.get("type_values"),
            )
        )
    return entries


# --------------------------------------------------------------------------
# cleaning


def build_clean_corpus(entries: Iterable[RawEntry]) -> CleanCorpus:
    """Normalize, then de-duplicate within and across countries.

    Within a country the first occurrence wins. A name left in two or more
    countries after that is removed from all of them.
    """
    drop_log: list[DropRecord] = []
    kept: list[tuple[RawEntry, str]] = []
    seen: dict[str, set[str]] = defaultdict(set)
    countries_seen: dict[str, None] = {}

    for entry in entries:
        countries_seen.setdefault(entry.country, None)
        if not entry.valid_encoding:
            drop_log.append(DropRecord(entry, DropReason.INVALID_ENCODING, "invalid UTF-8"))
            continue
        try:
            norm = normalize(entry.text)
        except Rejected as rej:
            drop_log.append(DropRecord(entry, rej.reason, rej.detail))
            continue
        if norm in seen[entry.country]:
            drop_log.append(DropRecord(entry, DropReason.DUPLICATE_WITHIN, norm))
            continue
        seen[entry.country].add(norm)
        kept.append((entry, norm))

    owners: dict[str, set[str]] = defaultdict(set)
    for entry, norm in kept:
        owners[norm].add(entry.country)

    names: list[PlaceName] = []
    for entry, norm in kept:
        if len(owners[norm]) > 1:
            detail = ",".join(sorted(owners[norm]))
            drop_log.append(DropRecord(entry, DropReason.DUPLICATE_CROSS, detail))
        else:
            names.append(PlaceName(entry.text, norm, entry.country))

    corpus = CleanCorpus(names, drop_log)
    counts = corpus.counts
    empty = [c for c in countries_seen if counts.get(c, 0) == 0]
    if empty:
        raise ConfigError(f"no names left after cleaning for: {', '.join(empty)}")
    return corpus


def as_entries(names: Iterable[PlaceName]) -> list[RawEntry]:
    """Turn cleaned names back into raw entries (used to re-run cleaning)."""
    return [RawEntry(p.normalized, p.country, i) for i, p in enumerate(names, start=1)]


# --------------------------------------------------------------------------
# derivation-based samples (Old English / Old Norse)


@dataclass(frozen=True)
class DerivationRecipe:
    label: str
    include_langs: tuple[str, ...]
    require_in_derivation: tuple[str, ...] = ()
    exclude_in_derivation: tuple[str, ...] = ()


OLD_ENGLISH = DerivationRecipe(
    "OE",
    ("Old English", "Anglian", "Kentish", "Mercian", "Northumbrian", "West-Saxon"),
    require_in_derivation=("Old English",),
    exclude_in_derivation=("Norse", "Scand"),
)
OLD_NORSE = DerivationRecipe(
    "ON",
    ("Old Norse", "Old Danish", "Old East Scandinavian", "Old Norwegian", "Old West Scandinavian"),
    exclude_in_derivation=("English", "Saxon", "Mercian", "Northumbrian", "Kentish", "Anglian"),
)


def filter_derivation(
    entries: Iterable[DerivationEntry],
    include_langs: Sequence[str],
    require_in_derivation: Sequence[str] = (),
    exclude_in_derivation: Sequence[str] = (),
    label: str = "EXT",
) -> list[PlaceName]:
    """Select names from a derivation dictionary extract.

    All matching is case-insensitive substring matching. Multi-word,
    hyphenated and slash-separated ("A/B") names are dropped before
    de-duplication on the normalized form.
    """
    inc = [s.lower() for s in include_langs]
    req = [s.lower() for s in require_in_derivation]
    exc = [s.lower() for s in exclude_in_derivation]
    out: list[PlaceName] = []
    seen: set[str] = set()
    for e in entries:
        langs = e.languages.lower()
        deriv = e.derivation.lower()
        if not any(t in langs for t in inc):
            continue
        if not all(t in deriv for t in req):
            continue
        if any(t in deriv for t in exc):
            continue
        try:
            norm = normalize(e.name)
        except Rejected:
            continue
        if norm in seen:
            continue
        seen.add(norm)
        out.append(PlaceName(e.name.strip(), norm, label))
    if not out:
        log.warning("derivation filter %r selected no names", label)
    return out


def apply_recipe(entries: Iterable[DerivationEntry], recipe: DerivationRecipe) -> list[PlaceName]:
    return filter_derivation(
        entries,
        recipe.include_langs,
        recipe.require_in_derivation,
        recipe.exclude_in_derivation,
        label=recipe.label,
    )


def load_derivations(
    path, name_col: str = "name", lang_col: str = "languages", deriv_col: str = "derivation",
    delimiter: str = ",",
) -> list[DerivationEntry]:
    """Read a derivation extract (CSV with a header row)."""
    path = Path(path)
    try:
        text = path.read_text("utf-8-sig")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    reader = csv.DictReader(io.StringIO(text), delimiter=delimiter)
    missing = {name_col, lang_col, deriv_col} - set(reader.fieldnames or ())
    if missing:
        raise ConfigError(f"{path} lacks columns: {', '.join(sorted(missing))}")
    out = []
    for row in reader:
        name = (row[name_col] or "").strip()
        if name:
            out.append(DerivationEntry(name, row[lang_col] or "", row[deriv_col] or ""))
    return out


# --------------------------------------------------------------------------
# canonical files


def write_corpus(corpus: CleanCorpus, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for p in corpus.names:
            fh.write(f"{p.country}\t{p.normalized}\n")


def read_corpus(path) -> CleanCorpus:
    path = Path(path)
    try:
        lines = path.read_text("utf-8").splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read corpus {path}: {exc}") from exc
    names = []
    for i, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            country, name = line.split("\t")
        except ValueError:
            raise ConfigError(f"{path}:{i}: expected 'COUNTRY<TAB>name'") from None
        names.append(PlaceName(name, name, country))
    return CleanCorpus(names)


def write_drop_log(corpus: CleanCorpus, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["raw", "country", "reason", "detail"])
        for rec in corpus.drop_log:
            w.writerow([rec.entry.text, rec.entry.country, rec.reason.value, rec.detail])


def read_names_file(path) -> list[str]:
    """Plain list of names, one per line; blanks skipped."""
    path = Path(path)
    try:
        text = path.read_text("utf-8-sig")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    return [ln.strip() for ln in text.splitlines() if ln.strip()]
