"""Constructed corpora with a known answer, for checking the pipeline end to end."""

from __future__ import annotations

import numpy as np

from .corpus import ENGLAND, OTHERS, CleanCorpus, PlaceName

ENGLISH_SUFFIXES = ("ton", "don", "den", "son", "wen", "ern")
OTHER_SUFFIXES = ("a", "ia", "ra", "na", "i", "li", "ni", "ti")

_CONS = "bcdfghklmnprstvw"
_VOW = "aeiou"


def _stem(rng: np.random.Generator) -> str:
    n = int(rng.integers(2, 7))
    out = []
    for i in range(n):
        pool = _CONS if i % 2 == 0 else _VOW
        out.append(pool[int(rng.integers(len(pool)))])
    return "".join(out)


def suffix_grammar_corpus(n_eng: int = 1000, n_other: int = 1000, others=OTHERS, seed: int = 0) -> CleanCorpus:
    """England names ending in ``n``; every other country's names end in ``a``/``i``.

    Stems come from one shared generator, so only the suffix separates the
    classes. ``n_other`` names are split as evenly as possible over ``others``.
    All names are unique, so the corpus is already clean.
    """
    rng = np.random.default_rng(seed)
    seen: set[str] = set()

    def draw(suffixes, count, country):
        out = []
        while len(out) < count:
            name = _stem(rng) + suffixes[int(rng.integers(len(suffixes)))]
            if name not in seen:
                seen.add(name)
                out.append(PlaceName(name, name, country))
        return out

    names = draw(ENGLISH_SUFFIXES, n_eng, ENGLAND)
    base, extra = divmod(n_other, len(others))
    for i, c in enumerate(others):
        names += draw(OTHER_SUFFIXES, base + (i < extra), c)
    return CleanCorpus(names)
