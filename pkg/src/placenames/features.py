"""Letter-placement feature vectors.

Each normalized name maps to 263 numbers:

* 8 position groups x 26 letters of one-hot indicators. The groups are the
  1st-4th letters and the last, 2nd-last, 3rd-last and 4th-last letters. A
  group is all zero when the name is too short to have that position.
* presence indicators for the 6 vowels (``aeiouy``) and the same indicators
  divided by name length, then the overall vowel share.
* presence indicators for the 20 consonants and the same divided by length.
* name length and Shannon entropy of the letter distribution (bits/letter).

Prefix and suffix groups are filled independently, so short names fire in
both (``"ash"``: 1st letter ``a`` and 3rd-last letter ``a``).
"""

from __future__ import annotations

import csv
import math
import string
from collections import Counter
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .corpus import ENGLAND, CleanCorpus, PlaceName, _NAME_RE
from .errors import ConfigError, ContractError

SCHEMA_VERSION = "1"

LETTERS = string.ascii_lowercase
VOWELS = "aeiouy"
CONSONANTS = "".join(c for c in LETTERS if c not in VOWELS)

#: (slot-name prefix, offset). Non-negative offsets index from the start,
#: negative ones from the end.
POSITIONS = (
    ("pos1", 0), ("pos2", 1), ("pos3", 2), ("pos4", 3),
    ("last", -1), ("last2", -2), ("last3", -3), ("last4", -4),
)


@dataclass(frozen=True)
class Slot:
    name: str
    kind: str  # pos_letter, vowel_binary, vowel_rate, ...
    letter: str | None = None
    position: int | None = None


@dataclass(frozen=True)
class FeatureSchema:
    slots: tuple[Slot, ...]
    version: str = SCHEMA_VERSION

    @property
    def names(self) -> list[str]:
        return [s.name for s in self.slots]

    def __len__(self):
        return len(self.slots)

    def index(self, name: str) -> int:
        return self._positions[name]

    @cached_property
    def _positions(self) -> dict[str, int]:
        return {s.name: i for i, s in enumerate(self.slots)}

    def kind_counts(self) -> dict[str, int]:
        return dict(Counter(s.kind for s in self.slots))


def _build_schema() -> FeatureSchema:
    slots: list[Slot] = []
    for prefix, offset in POSITIONS:
        slots += [Slot(f"{prefix}_{c}", "pos_letter", c, offset) for c in LETTERS]
    slots += [Slot(f"vbin_{c}", "vowel_binary", c) for c in VOWELS]
    slots += [Slot(f"vrate_{c}", "vowel_rate", c) for c in VOWELS]
    slots.append(Slot("vrate_total", "total_vowel_rate"))
    slots += [Slot(f"cbin_{c}", "consonant_binary", c) for c in CONSONANTS]
    slots += [Slot(f"crate_{c}", "consonant_rate", c) for c in CONSONANTS]
    slots.append(Slot("length", "length"))
    slots.append(Slot("entropy", "entropy"))
    return FeatureSchema(tuple(slots))


SCHEMA = _build_schema()
N_FEATURES = len(SCHEMA)

_POS_BASE = 0
_VBIN = 8 * 26
_VRATE = _VBIN + 6
_VTOTAL = _VRATE + 6
_CBIN = _VTOTAL + 1
_CRATE = _CBIN + 20
_LENGTH = _CRATE + 20
_ENTROPY = _LENGTH + 1

_VOWEL_IDX = {c: i for i, c in enumerate(VOWELS)}
_CONS_IDX = {c: i for i, c in enumerate(CONSONANTS)}

#: Slots that only ever hold 0 or 1; the tree builder uses a counting path for them.
BINARY_SLOTS = np.array(
    [s.kind in ("pos_letter", "vowel_binary", "consonant_binary") for s in SCHEMA.slots]
)


def entropy_bits(name: str) -> float:
    n = len(name)
    h = -sum((k / n) * math.log2(k / n) for k in Counter(name).values())
    return h + 0.0  # no negative zero


def _fill(row: np.ndarray, name: str) -> None:
    n = len(name)
    for g, (_, offset) in enumerate(POSITIONS):
        if (offset >= 0 and n > offset) or (offset < 0 and n >= -offset):
            row[_POS_BASE + 26 * g + ord(name[offset]) - 97] = 1.0
    present = set(name)
    n_vowels = 0
    for c in name:
        if c in _VOWEL_IDX:
            n_vowels += 1
    for c in present:
        if c in _VOWEL_IDX:
            i = _VOWEL_IDX[c]
            row[_VBIN + i] = 1.0
            row[_VRATE + i] = 1.0 / n
        else:
            i = _CONS_IDX[c]
            row[_CBIN + i] = 1.0
            row[_CRATE + i] = 1.0 / n
    row[_VTOTAL] = n_vowels / n
    row[_LENGTH] = n
    row[_ENTROPY] = entropy_bits(name)


def _check(name: str) -> None:
    if not isinstance(name, str) or not _NAME_RE.match(name):
        raise ContractError(f"feature extraction needs a name matching [a-z]+, got {name!r}")


def extract(name: str) -> np.ndarray:
    """Feature vector (length 263, float64) for one normalized name."""
    _check(name)
    row = np.zeros(N_FEATURES)
    _fill(row, name)
    return row


def extract_many(names: Sequence[str]) -> np.ndarray:
    X = np.zeros((len(names), N_FEATURES))
    for i, name in enumerate(names):
        _check(name)
        _fill(X[i], name)
    return X


@dataclass
class LabeledDataset:
    """Feature matrix with binary labels (1 = England) and name back-references."""

    X: np.ndarray
    y: np.ndarray
    names: list[PlaceName]
    schema_version: str = SCHEMA_VERSION

    def __len__(self):
        return len(self.y)

    def subset(self, idx) -> "LabeledDataset":
        idx = np.asarray(idx)
        return LabeledDataset(self.X[idx], self.y[idx], [self.names[i] for i in idx], self.schema_version)


def extract_batch(corpus: CleanCorpus, other: str) -> LabeledDataset:
    """England rows (label 1) followed by ``other`` rows (label 0)."""
    if other == ENGLAND:
        raise ConfigError("the comparison country must differ from England")
    eng = corpus.by_country(ENGLAND)
    oth = corpus.by_country(other)
    if not eng:
        raise ConfigError("corpus has no England names")
    if not oth:
        raise ConfigError(f"corpus has no names for {other!r}")
    names = eng + oth
    X = extract_many([p.normalized for p in names])
    y = np.r_[np.ones(len(eng), dtype=np.int8), np.zeros(len(oth), dtype=np.int8)]
    return LabeledDataset(X, y, names)


def write_feature_csv(names: Iterable[str], path) -> None:
    names = list(names)
    X = extract_many(names)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["name", *SCHEMA.names])
        for name, row in zip(names, X):
            w.writerow([name, *(repr(float(v)) for v in row)])
