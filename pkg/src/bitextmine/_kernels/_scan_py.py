"""Pure-NumPy twin of the compiled scan kernel.

Same contract as ``_scan.scan_block``; used when the extension is not
built (or forced via ``BITEXTMINE_PURE_PYTHON=1``). The merge relies on
a stable argsort: running top entries carry indices smaller than every
incoming block column and are already ordered, so for equal scores the
stable sort keeps the smaller index first.
"""

import numpy as np

MARGIN_ABSOLUTE = 0
MARGIN_RATIO = 1
MARGIN_DISTANCE = 2


def _merge_rows(top_s, top_i, block, offset):
    k = top_s.shape[1]
    idx = np.arange(offset, offset + block.shape[1], dtype=np.int64)
    cand_s = np.concatenate([top_s, block], axis=1)
    cand_i = np.concatenate(
        [top_i, np.broadcast_to(idx, block.shape)], axis=1
    )
    order = np.argsort(-cand_s, axis=1, kind="stable")[:, :k]
    top_s[:] = np.take_along_axis(cand_s, order, axis=1)
    top_i[:] = np.take_along_axis(cand_i, order, axis=1)


def scan_block(cos, row_pen, col_pen, margin_code, row_offset, col_offset,
               row_s, row_i, col_s, col_i, update_rows, update_cols):
    if margin_code == MARGIN_RATIO:
        scores = cos / (row_pen[:, None] + col_pen[None, :])
    elif margin_code == MARGIN_DISTANCE:
        scores = cos - (row_pen[:, None] + col_pen[None, :])
    else:
        scores = cos
    if update_rows:
        _merge_rows(row_s, row_i, scores, col_offset)
    if update_cols:
        _merge_rows(col_s, col_i, np.ascontiguousarray(scores.T), row_offset)
