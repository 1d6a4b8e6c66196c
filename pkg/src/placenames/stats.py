"""Two-sample tests, correlation and small diagnostics.

The Student-t CDF is evaluated through the regularized incomplete beta
function (Lentz continued fraction); the normal CDF uses ``math.erfc``.
"""

from __future__ import annotations

import itertools
import logging
import math
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ContractError

log = logging.getLogger(__name__)

_EPS = 1e-16
_TINY = 1e-300


# --------------------------------------------------------------------------
# distributions


def _betacf(a: float, b: float, x: float) -> float:
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _TINY:
        d = _TINY
    d = 1.0 / d
    h = d
    max_iter = 10000 + int(20 * math.sqrt(max(a, b)))
    for m in range(1, max_iter):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return h
    raise ArithmeticError(f"incomplete beta did not converge for a={a}, b={b}, x={x}")


def betainc_regularized(a: float, b: float, x: float) -> float:
    """I_x(a, b) for a, b > 0 and 0 <= x <= 1."""
    if a <= 0 or b <= 0:
        raise ContractError("incomplete beta needs a, b > 0")
    if not 0.0 <= x <= 1.0:
        raise ContractError("incomplete beta needs 0 <= x <= 1")
    if x == 0.0 or x == 1.0:
        return x
    log_front = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
                 + a * math.log(x) + b * math.log1p(-x))
    front = math.exp(log_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def t_sf(t: float, df: float) -> float:
    """Upper tail P(T > t) of Student's t with ``df`` degrees of freedom."""
    if df <= 0:
        raise ContractError("degrees of freedom must be positive")
    if math.isinf(t):
        return 0.0 if t > 0 else 1.0
    tail = 0.5 * betainc_regularized(df / 2.0, 0.5, df / (df + t * t))
    return tail if t >= 0 else 1.0 - tail


def t_cdf(t: float, df: float) -> float:
    if math.isinf(t):
        return 1.0 if t > 0 else 0.0
    tail = 0.5 * betainc_regularized(df / 2.0, 0.5, df / (df + t * t))
    return 1.0 - tail if t >= 0 else tail


def norm_cdf(z: float) -> float:
    return 0.5 * math.erfc(-z / math.sqrt(2.0))


def norm_sf(z: float) -> float:
    return 0.5 * math.erfc(z / math.sqrt(2.0))


# --------------------------------------------------------------------------
# tests


@dataclass(frozen=True)
class TestResult:
    statistic: float
    p_value: float
    method: str  # welch_t, pooled_t, mann_whitney
    n1: int
    n2: int
    two_tailed: bool = True
    df: float | None = None


def _t_p(t: float, df: float, two_tailed: bool) -> float:
    # one-tailed p is taken in the direction of the observed difference
    one = t_sf(abs(t), df)
    return min(1.0, 2.0 * one) if two_tailed else one


def _moments(sample, name):
    x = np.asarray(sample, dtype=np.float64)
    if x.ndim != 1 or len(x) < 2:
        raise ContractError(f"{name} needs at least two observations")
    return len(x), float(x.mean()), float(x.var(ddof=1))


def _degenerate(m1, m2, method, n1, n2, two_tailed):
    if m1 == m2:
        return TestResult(0.0, 1.0, method, n1, n2, two_tailed)
    log.warning("%s: both samples have zero variance and different means", method)
    return TestResult(math.copysign(math.inf, m1 - m2), 0.0, method, n1, n2, two_tailed)


def welch_t(sample1, sample2, two_tailed: bool = True) -> TestResult:
    """Unequal-variance t-test with Welch-Satterthwaite degrees of freedom."""
    n1, m1, v1 = _moments(sample1, "welch_t")
    n2, m2, v2 = _moments(sample2, "welch_t")
    if v1 == 0 and v2 == 0:
        return _degenerate(m1, m2, "welch_t", n1, n2, two_tailed)
    a, b = v1 / n1, v2 / n2
    t = (m1 - m2) / math.sqrt(a + b)
    df = (a + b) ** 2 / (a * a / (n1 - 1) + b * b / (n2 - 1))
    return TestResult(t, _t_p(t, df, two_tailed), "welch_t", n1, n2, two_tailed, df)


def pooled_t(sample1, sample2, two_tailed: bool = True) -> TestResult:
    """Student's t-test with pooled variance, ``n1 + n2 - 2`` degrees of freedom."""
    n1, m1, v1 = _moments(sample1, "pooled_t")
    n2, m2, v2 = _moments(sample2, "pooled_t")
    if v1 == 0 and v2 == 0:
        return _degenerate(m1, m2, "pooled_t", n1, n2, two_tailed)
    df = n1 + n2 - 2
    sp2 = ((n1 - 1) * v1 + (n2 - 1) * v2) / df
    t = (m1 - m2) / math.sqrt(sp2 * (1.0 / n1 + 1.0 / n2))
    return TestResult(t, _t_p(t, df, two_tailed), "pooled_t", n1, n2, two_tailed, float(df))


def rankdata(values) -> np.ndarray:
    """1-based ranks with ties sharing their mean rank."""
    x = np.asarray(values, dtype=np.float64)
    order = np.argsort(x, kind="mergesort")
    xs = x[order]
    ranks = np.empty(len(x))
    i = 0
    while i < len(xs):
        j = i
        while j + 1 < len(xs) and xs[j + 1] == xs[i]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


EXACT_MAX_N = 12


def mann_whitney(sample1, sample2, two_tailed: bool = True, exact: bool | None = None) -> TestResult:
    """Mann-Whitney U for ``sample1``; ``U1 + U2 = n1 * n2``.

    With ``n1 + n2 <= 12`` (or ``exact=True``) the p-value comes from
    enumerating every split of the pooled midranks. Otherwise a normal
    approximation with tie-corrected variance and 0.5 continuity correction
    is used. One-tailed p-values follow the direction of the observed effect.
    """
    x = np.asarray(sample1, dtype=np.float64)
    y = np.asarray(sample2, dtype=np.float64)
    n1, n2 = len(x), len(y)
    if n1 < 1 or n2 < 1:
        raise ContractError("mann_whitney needs at least one observation per sample")
    ranks = rankdata(np.r_[x, y])
    r1 = float(ranks[:n1].sum())
    u1 = r1 - n1 * (n1 + 1) / 2.0
    mu = n1 * n2 / 2.0
    if np.all(ranks == ranks[0]):
        return TestResult(u1, 1.0, "mann_whitney", n1, n2, two_tailed)

    n = n1 + n2
    if exact is None:
        exact = n <= EXACT_MAX_N
    if exact:
        base = n1 * (n1 + 1) / 2.0
        us = np.array([sum(ranks[i] for i in c) - base
                       for c in itertools.combinations(range(n), n1)])
        tol = 1e-9  # midranks are multiples of 0.5; guards float sums
        if two_tailed:
            p = np.mean(np.abs(us - mu) >= abs(u1 - mu) - tol)
        elif u1 >= mu:
            p = np.mean(us >= u1 - tol)
        else:
            p = np.mean(us <= u1 + tol)
        return TestResult(u1, min(1.0, float(p)), "mann_whitney", n1, n2, two_tailed)

    ties = Counter(ranks.tolist()).values()
    tie_term = sum(t ** 3 - t for t in ties) / (n * (n - 1))
    sigma = math.sqrt(n1 * n2 / 12.0 * ((n + 1) - tie_term))
    z = max(abs(u1 - mu) - 0.5, 0.0) / sigma
    one = norm_sf(z)
    p = min(1.0, 2.0 * one) if two_tailed else one
    return TestResult(u1, p, "mann_whitney", n1, n2, two_tailed)


# --------------------------------------------------------------------------
# correlation


def pearson(x, y) -> tuple[float, float]:
    """Sample correlation and its two-tailed p-value (t with n - 2 df)."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ContractError("pearson needs two 1-D samples of equal length")
    n = len(x)
    if n < 3:
        raise ContractError("pearson needs at least three pairs")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(dx @ dx)
    syy = float(dy @ dy)
    if sxx == 0 or syy == 0:
        raise ContractError("correlation undefined for a constant sample")
    r = float(dx @ dy) / math.sqrt(sxx * syy)
    r = max(-1.0, min(1.0, r))
    if abs(r) == 1.0:
        return r, 0.0
    t = r * math.sqrt((n - 2) / (1.0 - r * r))
    return r, min(1.0, 2.0 * t_sf(abs(t), n - 2))


@dataclass
class CorrelationMatrix:
    labels: tuple[str, ...]
    r: np.ndarray
    p: np.ndarray

    @property
    def column_means(self) -> np.ndarray:
        k = len(self.labels)
        off = ~np.eye(k, dtype=bool)
        return np.array([self.r[off[:, j], j].mean() for j in range(k)])

    def max_off_diagonal(self) -> tuple[str, str, float]:
        k = len(self.labels)
        best = (-2.0, 0, 0)
        for i in range(k):
            for j in range(i + 1, k):
                if self.r[i, j] > best[0]:
                    best = (self.r[i, j], i, j)
        return self.labels[best[1]], self.labels[best[2]], float(best[0])


def correlation_matrix(score_table) -> CorrelationMatrix:
    """Pearson correlations between the pair-score columns over England rows."""
    labels = tuple(score_table.pairs)
    M = score_table.eng_matrix()
    if np.isnan(M).any():
        raise ContractError("England score rows are incomplete")
    k = len(labels)
    r = np.eye(k)
    p = np.zeros((k, k))
    for i in range(k):
        for j in range(i + 1, k):
            r[i, j], p[i, j] = pearson(M[:, i], M[:, j])
            r[j, i], p[j, i] = r[i, j], p[i, j]
    return CorrelationMatrix(labels, r, p)


# --------------------------------------------------------------------------
# diagnostics


def benford_probability(d: int) -> float:
    """Benford's leading-digit probability ``log10(1 + 1/d)``."""
    if not isinstance(d, (int, np.integer)) or not 1 <= d <= 9:
        raise ContractError("digit must be an integer in 1..9")
    return math.log10(1.0 + 1.0 / d)


_POSITION_OFFSETS = {
    "first": 0, "second": 1, "third": 2, "fourth": 3,
    "last": -1, "second_last": -2, "third_last": -3, "fourth_last": -4,
}


def letter_position_frequencies(names: Sequence[str], position: str | int) -> list[tuple[str, float]]:
    """Share of each letter at ``position`` among names long enough to have it.

    ``position`` is a name from ``first``..``fourth_last`` or an offset
    (0-based from the start, negative from the end). Sorted by descending
    share, then alphabetically.
    """
    offset = _POSITION_OFFSETS[position] if isinstance(position, str) else position
    need = offset + 1 if offset >= 0 else -offset
    letters = [n[offset] for n in names if len(n) >= need]
    if not letters:
        return []
    counts = Counter(letters)
    total = len(letters)
    return sorted(((c, k / total) for c, k in counts.items()), key=lambda t: (-t[1], t[0]))
