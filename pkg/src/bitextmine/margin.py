"""Margin scoring and the multilingual similarity-search error rate.

A candidate pair (x, y) is scored as ``margin(cos(x, y), b)`` where the
penalty ``b`` averages the cosines of each side's k nearest neighbors
in the other language:

    b = sum(cos(x, z) for z in NN_k(x)) / 2k
      + sum(cos(y, z) for z in NN_k(y)) / 2k

Margin variants: absolute (ignore b), ratio (a / b), distance (a - b).
Neighbor sets are taken over the full other-language matrix; with
``include_self=False`` the candidate itself is excluded from the other
side's neighbor set (ablation only, slower path).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .embstore import EmbeddingMatrix, as_normalized
from .errors import (
    ArityMismatch,
    CountMismatch,
    DimMismatch,
    KTooLarge,
    RatioZeroDenominator,
)
from .knn import DEFAULT_QUERY_BLOCK, DEFAULT_TARGET_BLOCK, pair_scan

MARGIN_FUNCTIONS = ("absolute", "ratio", "distance")

_CODES = {
    "absolute": _kernels.MARGIN_ABSOLUTE,
    "ratio": _kernels.MARGIN_RATIO,
    "distance": _kernels.MARGIN_DISTANCE,
}


@dataclass(frozen=True)
class MarginConfig:
    """Neighborhood size, margin variant, and self-inclusion policy."""

    k: int = 4
    fn: str = "distance"
    include_self: bool = True

    def __post_init__(self):
        if self.k < 1:
            raise KTooLarge(f"k must be >= 1, got {self.k}")
        if self.fn not in MARGIN_FUNCTIONS:
            raise ValueError(f"unknown margin function {self.fn!r}")


@dataclass(frozen=True)
class XsimReport:
    """Similarity-search evaluation result over an aligned corpus."""

    error_rate: float  # percentage in [0, 100]
    n: int
    errors: tuple  # (source index, wrong target index, margin score)
    k: int
    fn: str

    def to_dict(self) -> dict:
        return {
            "error_rate": self.error_rate,
            "n": self.n,
            "k": self.k,
            "margin": self.fn,
            "errors": [
                {"source": s, "target": t, "score": sc} for s, t, sc in self.errors
            ],
        }


def apply_margin(a: float, b: float, fn: str) -> float:
    """Scalar margin: absolute -> a, ratio -> a/b, distance -> a-b."""
    if fn == "absolute":
        return float(a)
    if fn == "ratio":
        if b == 0.0:
            raise RatioZeroDenominator("ratio margin with zero penalty")
        return float(a) / float(b)
    if fn == "distance":
        return float(a) - float(b)
    raise ValueError(f"unknown margin function {fn!r}")


def neighbor_penalty(x_scores, y_scores, k: int) -> float:
    """Penalty term from the two k-neighbor cosine rows."""
    x_scores = np.asarray(x_scores, dtype=np.float64).ravel()
    y_scores = np.asarray(y_scores, dtype=np.float64).ravel()
    if x_scores.size != k or y_scores.size != k:
        raise ArityMismatch(
            f"expected {k} neighbor scores per side, got {x_scores.size} and {y_scores.size}"
        )
    return float(x_scores.sum() / (2 * k) + y_scores.sum() / (2 * k))


@dataclass(frozen=True)
class NeighborStats:
    """Penalty components and (for self-exclusion) neighbor membership."""

    r_src: np.ndarray  # (n,) sum of k best cosines / 2k, per source row
    r_tgt: np.ndarray  # (m,)
    k: int
    include_self: bool
    # top-(k+1) cosine lists, kept only when include_self is False
    row_top_s: np.ndarray | None = None
    row_top_i: np.ndarray | None = None
    col_top_s: np.ndarray | None = None
    col_top_i: np.ndarray | None = None


def _validate_pair(src: EmbeddingMatrix, tgt: EmbeddingMatrix, k: int, include_self: bool):
    if src.dim != tgt.dim:
        raise DimMismatch(f"embedding dims differ: {src.dim} vs {tgt.dim}")
    kk = k if include_self else k + 1
    if kk > tgt.count or kk > src.count:
        raise KTooLarge(
            f"k={k} (include_self={include_self}) needs at least {kk} rows on both "
            f"sides, have {src.count} and {tgt.count}"
        )


def neighbor_stats(
    src: EmbeddingMatrix,
    tgt: EmbeddingMatrix,
    cfg: MarginConfig,
    *,
    query_block: int = DEFAULT_QUERY_BLOCK,
    target_block: int = DEFAULT_TARGET_BLOCK,
) -> NeighborStats:
    """One bidirectional cosine sweep yielding both sides' penalties."""
    _validate_pair(src, tgt, cfg.k, cfg.include_self)
    s = as_normalized(src)
    t = as_normalized(tgt)
    kk = cfg.k if cfg.include_self else cfg.k + 1
    row_s, row_i, col_s, col_i = pair_scan(
        s.data,
        t.data,
        k_rows=kk,
        k_cols=kk,
        query_block=query_block,
        target_block=target_block,
    )
    r_src = row_s[:, : cfg.k].sum(axis=1) / (2 * cfg.k)
    r_tgt = col_s[:, : cfg.k].sum(axis=1) / (2 * cfg.k)
    if cfg.include_self:
        return NeighborStats(r_src, r_tgt, cfg.k, True)
    return NeighborStats(
        r_src, r_tgt, cfg.k, False,
        row_top_s=row_s, row_top_i=row_i, col_top_s=col_s, col_top_i=col_i,
    )


def _check_ratio_denominators(stats: NeighborStats) -> None:
    # b = r_src[i] + r_tgt[j] is zero only when r_src hits an exact
    # negated r_tgt value; a sorted scan finds that without the n*m grid.
    tgt_sorted = np.sort(stats.r_tgt)
    pos = np.searchsorted(tgt_sorted, -stats.r_src)
    hit = (pos < tgt_sorted.size) & (tgt_sorted[np.minimum(pos, tgt_sorted.size - 1)] == -stats.r_src)
    if np.any(hit):
        raise RatioZeroDenominator("ratio margin denominator is zero for some pair")


def _penalty_strip(stats: NeighborStats, q0: int, q1: int, m: int) -> np.ndarray:
    """Corrected penalty matrix for source rows [q0, q1) (self-exclusion path)."""
    k = stats.k
    pen = stats.r_src[q0:q1, None] + stats.r_tgt[None, :]
    # Row side: excluding neighbor j replaces its cosine with the (k+1)-th.
    rs = stats.row_top_s[q0:q1]
    ri = stats.row_top_i[q0:q1]
    delta = (rs[:, :k] - rs[:, [k]]) / (2 * k)
    rows = np.repeat(np.arange(q1 - q0), k)
    np.subtract.at(pen, (rows, ri[:, :k].ravel()), delta.ravel())
    # Column side: same correction where the excluded source sits in the
    # target's neighbor list.
    cs = stats.col_top_s
    ci = stats.col_top_i
    in_strip = (ci[:, :k] >= q0) & (ci[:, :k] < q1)
    cols_j, which = np.nonzero(in_strip)
    rows_i = ci[cols_j, which] - q0
    delta_c = (cs[cols_j, which] - cs[cols_j, k]) / (2 * k)
    np.subtract.at(pen, (rows_i, cols_j), delta_c)
    return pen


def score_matrix(
    src: EmbeddingMatrix,
    tgt: EmbeddingMatrix,
    cfg: MarginConfig,
) -> np.ndarray:
    """Dense margin-score matrix; O(n*m) memory, intended for small inputs."""
    stats = neighbor_stats(src, tgt, cfg)
    s = as_normalized(src)
    t = as_normalized(tgt)
    cos = s.data.astype(np.float64) @ t.data.astype(np.float64).T
    if cfg.fn == "absolute":
        return cos
    if cfg.include_self:
        pen = stats.r_src[:, None] + stats.r_tgt[None, :]
    else:
        pen = _penalty_strip(stats, 0, src.count, tgt.count)
    if cfg.fn == "ratio":
        if np.any(pen == 0.0):
            raise RatioZeroDenominator("ratio margin denominator is zero for some pair")
        return cos / pen
    return cos - pen


def margin_argmax(
    src: EmbeddingMatrix,
    tgt: EmbeddingMatrix,
    cfg: MarginConfig,
    *,
    candidates: int = 1,
    query_block: int = DEFAULT_QUERY_BLOCK,
    target_block: int = DEFAULT_TARGET_BLOCK,
):
    """Top margin-scored targets per source row (ties: smaller index).

    Returns ``(indices, scores)`` of shape (n, candidates). With the
    default ``candidates=1`` this is the per-query argmax.
    """
    res = scored_candidates(
        src, tgt, cfg,
        candidates_rows=candidates, candidates_cols=0,
        query_block=query_block, target_block=target_block,
    )
    return res[0], res[1]


def scored_candidates(
    src: EmbeddingMatrix,
    tgt: EmbeddingMatrix,
    cfg: MarginConfig,
    *,
    candidates_rows: int = 1,
    candidates_cols: int = 0,
    query_block: int = DEFAULT_QUERY_BLOCK,
    target_block: int = DEFAULT_TARGET_BLOCK,
):
    """Margin-score sweep keeping top candidates per row and/or column.

    The backward direction reuses the same score matrix: the penalty is
    symmetric in the pair, so the score of (x, y) does not depend on
    which side issued the query.
    """
    stats = neighbor_stats(src, tgt, cfg, query_block=query_block, target_block=target_block)
    s = as_normalized(src)
    t = as_normalized(tgt)
    if cfg.fn == "ratio" and cfg.include_self:
        _check_ratio_denominators(stats)

    if cfg.include_self:
        row_s, row_i, col_s, col_i = pair_scan(
            s.data,
            t.data,
            k_rows=candidates_rows,
            k_cols=candidates_cols,
            row_pen=stats.r_src,
            col_pen=stats.r_tgt,
            margin_code=_CODES[cfg.fn],
            query_block=query_block,
            target_block=target_block,
        )
        return row_i, row_s, col_i, col_s
    return _scored_candidates_excl(
        s, t, cfg, stats, candidates_rows, candidates_cols, query_block
    )


def _scored_candidates_excl(s, t, cfg, stats, cand_rows, cand_cols, query_block):
    """Self-exclusion path: per-pair corrected penalties, strip-wise NumPy."""
    from ._kernels import _scan_py

    n, m = s.count, t.count
    td = t.data.astype(np.float64)
    row_s = row_i = col_s = col_i = None
    if cand_rows:
        row_s = np.full((n, cand_rows), -np.inf)
        row_i = np.full((n, cand_rows), -1, dtype=np.int64)
    if cand_cols:
        col_s = np.full((m, cand_cols), -np.inf)
        col_i = np.full((m, cand_cols), -1, dtype=np.int64)
    dummy_s = np.zeros((1, 1))
    dummy_i = np.zeros((1, 1), dtype=np.int64)
    for q0 in range(0, n, query_block):
        q1 = min(q0 + query_block, n)
        cos = s.data[q0:q1].astype(np.float64) @ td.T
        if cfg.fn == "absolute":
            scores = cos
        else:
            pen = _penalty_strip(stats, q0, q1, m)
            if cfg.fn == "ratio":
                if np.any(pen == 0.0):
                    raise RatioZeroDenominator(
                        "ratio margin denominator is zero for some pair"
                    )
                scores = cos / pen
            else:
                scores = cos - pen
        _scan_py.scan_block(
            scores,
            None, None, _kernels.MARGIN_ABSOLUTE, q0, 0,
            row_s[q0:q1] if cand_rows else dummy_s,
            row_i[q0:q1] if cand_rows else dummy_i,
            col_s if cand_cols else dummy_s,
            col_i if cand_cols else dummy_i,
            bool(cand_rows),
            bool(cand_cols),
        )
    return row_i, row_s, col_i, col_s


def xsim_error_rate(
    src: EmbeddingMatrix,
    tgt: EmbeddingMatrix,
    cfg: MarginConfig = MarginConfig(),
    *,
    query_block: int = DEFAULT_QUERY_BLOCK,
    target_block: int = DEFAULT_TARGET_BLOCK,
) -> XsimReport:
    """Fraction of rows whose margin-argmax target is not the aligned one.

    Rows are aligned by index; the evaluation is directional and
    generally not symmetric under swapping src and tgt.
    """
    if src.count != tgt.count:
        raise CountMismatch(
            f"aligned evaluation needs equal counts, got {src.count} and {tgt.count}"
        )
    idx, scores = margin_argmax(
        src, tgt, cfg, query_block=query_block, target_block=target_block
    )
    best = idx[:, 0]
    best_s = scores[:, 0]
    wrong = np.flatnonzero(best != np.arange(src.count))
    errors = tuple((int(i), int(best[i]), float(best_s[i])) for i in wrong)
    n = src.count
    rate = 100.0 * len(errors) / n if n else 0.0
    return XsimReport(error_rate=rate, n=n, errors=errors, k=cfg.k, fn=cfg.fn)
