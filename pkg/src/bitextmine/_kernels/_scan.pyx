# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Streaming top-k merge over margin-scored similarity blocks.

One block scan updates the running per-row top list (best targets per
query) and, optionally, the running per-column top list (best queries
per target) in the same pass, so a bidirectional sweep reads each score
exactly once.

Determinism contract: callers feed blocks in ascending row/column order
and scores are finite, so equal scores resolve to the smaller index.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

ctypedef cnp.int64_t i64

cdef enum:
    _ABS = 0
    _RATIO = 1
    _DIST = 2

# Margin codes shared with the NumPy fallback.
MARGIN_ABSOLUTE = _ABS
MARGIN_RATIO = _RATIO
MARGIN_DISTANCE = _DIST


cdef inline void _insert(double* sc, i64* ix, int k, double s,
                         i64 idx) noexcept nogil:
    # Keep `sc` sorted descending. A candidate tying the current worst
    # loses: it arrived later, hence has the larger index.
    cdef int p
    if s <= sc[k - 1]:
        return
    p = k - 1
    while p > 0 and sc[p - 1] < s:
        sc[p] = sc[p - 1]
        ix[p] = ix[p - 1]
        p -= 1
    sc[p] = s
    ix[p] = idx


def scan_block(double[:, ::1] cos,
               double[::1] row_pen,
               double[::1] col_pen,
               int margin_code,
               i64 row_offset,
               i64 col_offset,
               double[:, ::1] row_s,
               i64[:, ::1] row_i,
               double[:, ::1] col_s,
               i64[:, ::1] col_i,
               bint update_rows,
               bint update_cols):
    """Merge one score block into the running top lists.

    ``cos`` holds raw cosine values for rows [row_offset, row_offset+nr)
    against columns [col_offset, col_offset+nc). The margin transform
    (none / ratio / distance, with penalty ``row_pen[r] + col_pen[c]``)
    is applied on the fly. ``row_s``/``row_i`` are the per-row tops for
    exactly this row block; ``col_s``/``col_i`` are the per-column tops
    for exactly this column block.
    """
    cdef Py_ssize_t nr = cos.shape[0]
    cdef Py_ssize_t nc = cos.shape[1]
    cdef Py_ssize_t r, c
    cdef double s, rp
    cdef int kr = 0, kc = 0
    if update_rows:
        kr = <int> row_s.shape[1]
    if update_cols:
        kc = <int> col_s.shape[1]

    with nogil:
        for r in range(nr):
            rp = row_pen[r] if margin_code != _ABS else 0.0
            if margin_code == _DIST:
                for c in range(nc):
                    s = cos[r, c] - (rp + col_pen[c])
                    if update_rows:
                        _insert(&row_s[r, 0], &row_i[r, 0], kr, s, col_offset + c)
                    if update_cols:
                        _insert(&col_s[c, 0], &col_i[c, 0], kc, s, row_offset + r)
            elif margin_code == _RATIO:
                for c in range(nc):
                    s = cos[r, c] / (rp + col_pen[c])
                    if update_rows:
                        _insert(&row_s[r, 0], &row_i[r, 0], kr, s, col_offset + c)
                    if update_cols:
                        _insert(&col_s[c, 0], &col_i[c, 0], kc, s, row_offset + r)
            else:
                for c in range(nc):
                    s = cos[r, c]
                    if update_rows:
                        _insert(&row_s[r, 0], &row_i[r, 0], kr, s, col_offset + c)
                    if update_cols:
                        _insert(&col_s[c, 0], &col_i[c, 0], kc, s, row_offset + r)
