"""Exact batched top-k cosine retrieval.

All similarity scans run blockwise: a query block against a target
block, dot products accumulated in float64 (``dgemm``), then the block
is merged into running top lists by the scan kernel. Memory stays at
O(block area) regardless of matrix sizes, and results are identical for
any block size because each (query, target) dot product is computed in
a single GEMM call over the full width.

Blocks are visited in ascending index order, so equal scores always
resolve to the smaller target index.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .embstore import EmbeddingMatrix, as_normalized
from .errors import DimMismatch, KTooLarge, ZeroNorm

DEFAULT_QUERY_BLOCK = 1024
DEFAULT_TARGET_BLOCK = 8192


@dataclass(frozen=True)
class NeighborList:
    """Per-query top-k neighbors: row-sorted descending cosine scores."""

    k: int
    indices: np.ndarray  # (n, k) int64 into the target matrix
    scores: np.ndarray  # (n, k) float64, non-increasing per row

    def validate(self, target_count: int | None = None) -> None:
        assert self.indices.shape == self.scores.shape
        assert self.indices.shape[1] == self.k
        assert np.all(np.diff(self.scores, axis=1) <= 0), "rows must be non-increasing"
        assert np.all(self.scores >= -1 - 1e-5) and np.all(self.scores <= 1 + 1e-5)
        assert np.all(self.indices >= 0)
        if target_count is not None:
            assert np.all(self.indices < target_count)
        for row in self.indices:
            assert len(set(row.tolist())) == self.k, "duplicate index within a row"


def cosine(a, b) -> float:
    """Cosine similarity of two vectors, computed in float64."""
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.shape != b.shape:
        raise DimMismatch(f"vector dims differ: {a.shape[0]} vs {b.shape[0]}")
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise ZeroNorm("cosine is undefined for zero vectors")
    return float(np.dot(a, b) / (na * nb))


def pair_scan(
    src: np.ndarray,
    tgt: np.ndarray,
    *,
    k_rows: int = 0,
    k_cols: int = 0,
    row_pen: np.ndarray | None = None,
    col_pen: np.ndarray | None = None,
    margin_code: int = _kernels.MARGIN_ABSOLUTE,
    query_block: int = DEFAULT_QUERY_BLOCK,
    target_block: int = DEFAULT_TARGET_BLOCK,
):
    """Bidirectional blockwise sweep over all (src row, tgt row) pairs.

    Scores each pair as ``margin(cos, row_pen[i] + col_pen[j])`` and
    keeps the top ``k_rows`` columns per row and/or top ``k_cols`` rows
    per column. Returns ``(row_s, row_i, col_s, col_i)``; unused sides
    come back as None. Inputs must hold unit-norm rows.
    """
    n, d = src.shape
    m, d2 = tgt.shape
    if d != d2:
        raise DimMismatch(f"embedding dims differ: {d} vs {d2}")
    if k_rows > m:
        raise KTooLarge(f"k={k_rows} exceeds target count {m}")
    if k_cols > n:
        raise KTooLarge(f"k={k_cols} exceeds source count {n}")

    row_s = row_i = col_s = col_i = None
    dummy_s = np.zeros((1, 1), dtype=np.float64)
    dummy_i = np.zeros((1, 1), dtype=np.int64)
    if k_rows > 0:
        row_s = np.full((n, k_rows), -np.inf, dtype=np.float64)
        row_i = np.full((n, k_rows), -1, dtype=np.int64)
    if k_cols > 0:
        col_s = np.full((m, k_cols), -np.inf, dtype=np.float64)
        col_i = np.full((m, k_cols), -1, dtype=np.int64)
    if k_rows == 0 and k_cols == 0:
        return None, None, None, None

    row_pen = np.zeros(n) if row_pen is None else np.ascontiguousarray(row_pen, np.float64)
    col_pen = np.zeros(m) if col_pen is None else np.ascontiguousarray(col_pen, np.float64)

    for q0 in range(0, n, query_block):
        q1 = min(q0 + query_block, n)
        qblk = src[q0:q1].astype(np.float64, copy=False)
        for t0 in range(0, m, target_block):
            t1 = min(t0 + target_block, m)
            tblk = tgt[t0:t1].astype(np.float64, copy=False)
            cos = qblk @ tblk.T
            _kernels.scan_block(
                cos,
                row_pen[q0:q1],
                col_pen[t0:t1],
                margin_code,
                q0,
                t0,
                row_s[q0:q1] if k_rows else dummy_s,
                row_i[q0:q1] if k_rows else dummy_i,
                col_s[t0:t1] if k_cols else dummy_s,
                col_i[t0:t1] if k_cols else dummy_i,
                k_rows > 0,
                k_cols > 0,
            )
    return row_s, row_i, col_s, col_i


def topk(
    queries: EmbeddingMatrix,
    targets: EmbeddingMatrix,
    k: int,
    *,
    query_block: int = DEFAULT_QUERY_BLOCK,
    target_block: int = DEFAULT_TARGET_BLOCK,
) -> NeighborList:
    """Exact top-k cosine targets per query, ties broken by smaller index."""
    if queries.dim != targets.dim:
        raise DimMismatch(f"embedding dims differ: {queries.dim} vs {targets.dim}")
    if k < 1 or k > targets.count:
        raise KTooLarge(f"k={k} must be in [1, {targets.count}]")
    q = as_normalized(queries)
    t = as_normalized(targets)
    row_s, row_i, _, _ = pair_scan(
        q.data,
        t.data,
        k_rows=k,
        query_block=query_block,
        target_block=target_block,
    )
    return NeighborList(k=k, indices=row_i, scores=row_s)
