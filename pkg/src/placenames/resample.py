"""SMOTE oversampling followed by Edited-Nearest-Neighbour cleaning.

Both stages use exact Euclidean nearest neighbours on the raw feature
vectors. Equal distances are broken by the lower row index, which keeps the
whole procedure a deterministic function of ``(X, y, config)``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import ResampleError

log = logging.getLogger(__name__)

REAL = 0
SYNTHETIC = 1

# Squared distances are rounded to this many decimals before ranking so that
# mathematically equal distances compare equal despite BLAS rounding.
_DIST_DECIMALS = 9
_CHUNK_BYTES = 64 * 2**20


@dataclass(frozen=True)
class ResampleConfig:
    smote_k: int = 5
    enn_k: int = 3
    seed: int = 0
    distance: str = "euclidean"

    def __post_init__(self):
        if self.smote_k < 1:
            raise ValueError("smote_k must be >= 1")
        if self.enn_k < 1 or self.enn_k % 2 == 0:
            raise ValueError("enn_k must be a positive odd number")
        if self.distance != "euclidean":
            raise ValueError(f"unsupported distance {self.distance!r}")


@dataclass
class ResampledSet:
    X: np.ndarray
    y: np.ndarray
    origin: np.ndarray  # REAL or SYNTHETIC per row
    source: np.ndarray  # index into the original rows, -1 for synthetic rows
    removed: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))

    @classmethod
    def from_arrays(cls, X, y) -> "ResampledSet":
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y)
        n = len(y)
        return cls(X, y, np.full(n, REAL, dtype=np.int8), np.arange(n, dtype=np.int64))

    def __len__(self):
        return len(self.y)

    def class_counts(self) -> dict[int, int]:
        labels, counts = np.unique(self.y, return_counts=True)
        return {int(k): int(v) for k, v in zip(labels, counts)}


def kneighbors(X_query: np.ndarray, X_ref: np.ndarray, k: int, exclude_self: bool = False) -> np.ndarray:
    """Indices (into ``X_ref``) of the ``k`` nearest rows for each query row.

    Neighbours come back ordered by distance, ties by lower index. With
    ``exclude_self`` the query set must be ``X_ref`` itself and a row is never
    its own neighbour.
    """
    nq, nr = len(X_query), len(X_ref)
    limit = nr - 1 if exclude_self else nr
    if k > limit:
        raise ValueError(f"asked for {k} neighbours among {limit} candidates")
    ref_sq = np.einsum("ij,ij->i", X_ref, X_ref)
    out = np.empty((nq, k), dtype=np.int64)
    chunk = max(1, _CHUNK_BYTES // (8 * max(nr, 1)))
    for start in range(0, nq, chunk):
        stop = min(nq, start + chunk)
        Q = X_query[start:stop]
        d = np.einsum("ij,ij->i", Q, Q)[:, None] + ref_sq[None, :] - 2.0 * (Q @ X_ref.T)
        np.maximum(d, 0.0, out=d)
        d = np.round(d, _DIST_DECIMALS)
        if exclude_self:
            d[np.arange(stop - start), np.arange(start, stop)] = np.inf
        kth = np.partition(d, k - 1, axis=1)[:, k - 1]
        for r in range(stop - start):
            cand = np.flatnonzero(d[r] <= kth[r])  # ascending index order
            order = np.argsort(d[r, cand], kind="stable")
            out[start + r] = cand[order[:k]]
    return out


def smote(data: ResampledSet, cfg: ResampleConfig, rng: np.random.Generator | None = None) -> ResampledSet:
    """Grow the minority class to the majority size by interpolation.

    Each synthetic row is ``x + lam * (x_nn - x)`` for a uniformly drawn
    minority row ``x``, one of its ``smote_k`` nearest minority neighbours
    ``x_nn`` and ``lam ~ U[0, 1)``.
    """
    rng = rng if rng is not None else np.random.default_rng(cfg.seed)
    counts = data.class_counts()
    if len(counts) != 2:
        raise ResampleError(f"SMOTE needs exactly two classes, got {sorted(counts)}")
    (lab_a, n_a), (lab_b, n_b) = sorted(counts.items())
    if n_a == n_b:
        return ResampledSet(data.X, data.y, data.origin, data.source)
    minority, n_min, n_maj = (lab_a, n_a, n_b) if n_a < n_b else (lab_b, n_b, n_a)
    if n_min < 2:
        raise ResampleError(f"minority class {minority} has {n_min} row(s); SMOTE needs >= 2")

    min_idx = np.flatnonzero(data.y == minority)
    X_min = data.X[min_idx]
    k = min(cfg.smote_k, n_min - 1)
    nn = kneighbors(X_min, X_min, k, exclude_self=True)

    n_new = n_maj - n_min
    base = rng.integers(0, n_min, size=n_new)
    pick = rng.integers(0, k, size=n_new)
    lam = rng.random(n_new)[:, None]
    x = X_min[base]
    x_nn = X_min[nn[base, pick]]
    synth = x + lam * (x_nn - x)

    return ResampledSet(
        np.vstack([data.X, synth]),
        np.r_[data.y, np.full(n_new, minority, dtype=data.y.dtype)],
        np.r_[data.origin, np.full(n_new, SYNTHETIC, dtype=np.int8)],
        np.r_[data.source, np.full(n_new, -1, dtype=np.int64)],
    )


def enn_clean(data: ResampledSet, cfg: ResampleConfig) -> ResampledSet:
    """Drop every row whose label differs from the majority of its neighbours.

    A single pass: neighbours are found among all other rows before anything
    is removed. Rows of both classes may go.
    """
    n = len(data)
    if n < cfg.enn_k + 1:
        raise ResampleError(f"ENN needs at least {cfg.enn_k + 1} rows, got {n}")
    nn = kneighbors(data.X, data.X, cfg.enn_k, exclude_self=True)
    votes = (data.y[nn] == 1).sum(axis=1)
    majority = (votes * 2 > cfg.enn_k).astype(data.y.dtype)
    keep = majority == data.y
    if len(np.unique(data.y[keep])) < len(np.unique(data.y)):
        raise ResampleError("ENN removed every row of one class")
    removed = np.flatnonzero(~keep)
    return ResampledSet(data.X[keep], data.y[keep], data.origin[keep], data.source[keep], removed)


def smote_enn(data: ResampledSet, cfg: ResampleConfig) -> ResampledSet:
    return enn_clean(smote(data, cfg), cfg)


def resample_training(X, y, cfg: ResampleConfig) -> ResampledSet:
    """SMOTE-ENN with the documented fallbacks.

    SMOTE failure leaves the data unchanged; ENN failure keeps the SMOTE
    output. Both log a warning.
    """
    data = ResampledSet.from_arrays(X, y)
    try:
        grown = smote(data, cfg)
    except ResampleError as exc:
        log.warning("SMOTE skipped: %s", exc)
        grown = data
    try:
        return enn_clean(grown, cfg)
    except ResampleError as exc:
        log.warning("ENN skipped: %s", exc)
        return grown
