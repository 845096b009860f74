"""Global bitext mining: margin-score both directions, union, threshold.

Forward mining keeps the best-scored targets per source row, backward
mining the best sources per target row, and the union merges both
candidate sets. Margin scores are symmetric in the pair, so one
bidirectional sweep produces both directions without rescoring.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .embstore import EmbeddingMatrix
from .errors import IndexOutOfRange, IOFailure
from .knn import DEFAULT_QUERY_BLOCK, DEFAULT_TARGET_BLOCK
from .margin import MarginConfig, scored_candidates

DIRECTIONS = ("forward", "backward", "union")

#: Conventional ratio-margin mining threshold; distance and absolute
#: default to a neutral 0.
DEFAULT_THRESHOLDS = {"ratio": 1.06, "distance": 0.0, "absolute": 0.0}


@dataclass(frozen=True)
class MinedPair:
    src_idx: int
    tgt_idx: int
    score: float


@dataclass(frozen=True)
class MineConfig:
    margin: MarginConfig = field(default_factory=MarginConfig)
    threshold: float | None = None  # None -> per-margin default
    candidates_per_query: int = 1
    direction: str = "union"

    def __post_init__(self):
        if self.direction not in DIRECTIONS:
            raise ValueError(f"unknown direction {self.direction!r}")
        if self.candidates_per_query < 1:
            raise ValueError("candidates_per_query must be >= 1")
        if self.threshold is not None and not np.isfinite(self.threshold):
            raise ValueError("threshold must be finite")

    def resolved_threshold(self) -> float:
        if self.threshold is not None:
            return float(self.threshold)
        return DEFAULT_THRESHOLDS[self.margin.fn]


def _sort_pairs(pairs: list[MinedPair]) -> list[MinedPair]:
    return sorted(pairs, key=lambda p: (-p.score, p.src_idx, p.tgt_idx))


def _collect(idx, scores, threshold, swap: bool) -> list[MinedPair]:
    pairs = []
    for q in range(idx.shape[0]):
        for c in range(idx.shape[1]):
            j = int(idx[q, c])
            if j < 0:
                continue
            s = float(scores[q, c])
            if s >= threshold:
                pairs.append(
                    MinedPair(j, q, s) if swap else MinedPair(q, j, s)
                )
    return pairs


def mine_direction(
    src: EmbeddingMatrix,
    tgt: EmbeddingMatrix,
    cfg: MineConfig,
    *,
    query_block: int = DEFAULT_QUERY_BLOCK,
    target_block: int = DEFAULT_TARGET_BLOCK,
) -> list[MinedPair]:
    """Mine one direction (cfg.direction forward or backward)."""
    if cfg.direction == "union":
        return mine_union(src, tgt, cfg, query_block=query_block, target_block=target_block)
    threshold = cfg.resolved_threshold()
    fwd = cfg.direction == "forward"
    row_i, row_s, col_i, col_s = scored_candidates(
        src, tgt, cfg.margin,
        candidates_rows=cfg.candidates_per_query if fwd else 0,
        candidates_cols=0 if fwd else cfg.candidates_per_query,
        query_block=query_block, target_block=target_block,
    )
    if fwd:
        pairs = _collect(row_i, row_s, threshold, swap=False)
    else:
        pairs = _collect(col_i, col_s, threshold, swap=True)
    return _sort_pairs(pairs)


def mine_union(
    src: EmbeddingMatrix,
    tgt: EmbeddingMatrix,
    cfg: MineConfig,
    *,
    query_block: int = DEFAULT_QUERY_BLOCK,
    target_block: int = DEFAULT_TARGET_BLOCK,
) -> list[MinedPair]:
    """Union of forward and backward mining, one sweep, deduplicated.

    A pair found in both directions is kept once with the larger score
    (the two scores coincide here because the penalty is symmetric).
    """
    threshold = cfg.resolved_threshold()
    row_i, row_s, col_i, col_s = scored_candidates(
        src, tgt, cfg.margin,
        candidates_rows=cfg.candidates_per_query,
        candidates_cols=cfg.candidates_per_query,
        query_block=query_block, target_block=target_block,
    )
    best: dict[tuple[int, int], float] = {}
    for p in _collect(row_i, row_s, threshold, swap=False):
        key = (p.src_idx, p.tgt_idx)
        if key not in best or p.score > best[key]:
            best[key] = p.score
    for p in _collect(col_i, col_s, threshold, swap=True):
        key = (p.src_idx, p.tgt_idx)
        if key not in best or p.score > best[key]:
            best[key] = p.score
    return _sort_pairs([MinedPair(s, t, sc) for (s, t), sc in best.items()])


def mine(
    src: EmbeddingMatrix,
    tgt: EmbeddingMatrix,
    cfg: MineConfig,
    *,
    query_block: int = DEFAULT_QUERY_BLOCK,
    target_block: int = DEFAULT_TARGET_BLOCK,
) -> list[MinedPair]:
    """Dispatch on cfg.direction."""
    if cfg.direction == "union":
        return mine_union(src, tgt, cfg, query_block=query_block, target_block=target_block)
    return mine_direction(src, tgt, cfg, query_block=query_block, target_block=target_block)


def write_pairs(pairs, src_text, tgt_text, path) -> None:
    """Write ``score \\t src \\t tgt`` rows, scores to 4 decimals, descending."""
    src_text = list(src_text)
    tgt_text = list(tgt_text)
    lines = []
    for p in pairs:
        if not (0 <= p.src_idx < len(src_text)):
            raise IndexOutOfRange(f"source index {p.src_idx} outside text of {len(src_text)} lines")
        if not (0 <= p.tgt_idx < len(tgt_text)):
            raise IndexOutOfRange(f"target index {p.tgt_idx} outside text of {len(tgt_text)} lines")
        lines.append(f"{p.score:.4f}\t{src_text[p.src_idx]}\t{tgt_text[p.tgt_idx]}\n")
    try:
        Path(path).write_text("".join(lines), encoding="utf-8")
    except OSError as e:
        raise IOFailure(str(e)) from e


def read_pairs(path) -> list[tuple[float, str, str]]:
    """Parse a mined-pairs TSV back into (score, src, tgt) tuples."""
    out = []
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise IOFailure(str(e)) from e
    for line in text.splitlines():
        if not line:
            continue
        score, src, tgt = line.split("\t", 2)
        out.append((float(score), src, tgt))
    return out
