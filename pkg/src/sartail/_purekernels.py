"""Pure numpy implementations of the hot kernels.

This is the fallback lane used when the compiled extension
(``sartail._ckernels``) is unavailable or explicitly disabled via
``SARTAIL_PURE_PYTHON=1``. Semantics are identical to the compiled lane:

* ``lee_window_stats``: per-pixel window mean and population variance with
  symmetric (edge-repeating) padding; windows whose values are all equal
  report mean == center value and variance == 0.0 exactly.
* ``BruteForceIndex``: exact k-nearest-neighbour search returning squared
  distances, ties broken by ascending row index.
"""

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

# Memory budget for the blocked (queries x points x dim) difference tensor.
_BLOCK_BYTES = 32 * 1024 * 1024


def lee_window_stats(img, window):
    """Window mean and population variance, mirrored at the borders.

    Returns two float64 arrays of the same shape as ``img``.
    """
    img = np.ascontiguousarray(img, dtype=np.float64)
    h, w = img.shape
    pad = window // 2
    padded = np.pad(img, pad, mode="symmetric")

    mean = np.empty((h, w), dtype=np.float64)
    var = np.empty((h, w), dtype=np.float64)

    # Row blocks keep the (rows, w, window, window) view bounded in memory.
    rows_per_block = max(1, _BLOCK_BYTES // (max(1, w) * window * window * 8))
    for r0 in range(0, h, rows_per_block):
        r1 = min(h, r0 + rows_per_block)
        view = sliding_window_view(padded[r0 : r1 + 2 * pad, :], (window, window))
        m = view.mean(axis=(2, 3))
        dev = view - m[..., None, None]
        v = np.mean(dev * dev, axis=(2, 3))
        flat = view.max(axis=(2, 3)) == view.min(axis=(2, 3))
        center = img[r0:r1, :]
        mean[r0:r1, :] = np.where(flat, center, m)
        var[r0:r1, :] = np.where(flat, 0.0, v)
    return mean, var


class BruteForceIndex:
    """Exact KNN by blocked direct distance computation.

    Squared euclidean distances are accumulated from explicit differences
    (never the expanded dot-product identity), so coincident rows yield an
    exact 0.0 and tie-breaking by index is reproducible.
    """

    lane = "pure"
    kind = "brute"

    def __init__(self, data):
        data = np.ascontiguousarray(data, dtype=np.float64)
        if data.ndim != 2 or data.shape[0] == 0:
            raise ValueError("index data must be a non-empty 2-D array")
        self.data = data
        self.n, self.dim = data.shape

    def query(self, queries, k):
        queries = np.ascontiguousarray(queries, dtype=np.float64)
        m = queries.shape[0]
        kk = min(int(k), self.n)
        out_d2 = np.empty((m, kk), dtype=np.float64)
        out_idx = np.empty((m, kk), dtype=np.int64)

        block = max(1, _BLOCK_BYTES // (self.n * self.dim * 8))
        for q0 in range(0, m, block):
            q1 = min(m, q0 + block)
            diff = queries[q0:q1, None, :] - self.data[None, :, :]
            d2 = np.einsum("qnd,qnd->qn", diff, diff)
            self._select(d2, kk, out_d2[q0:q1], out_idx[q0:q1])
        return out_d2, out_idx

    def _select(self, d2, kk, out_d2, out_idx):
        if kk == self.n:
            idx = np.broadcast_to(np.arange(self.n, dtype=np.int64), d2.shape)
            vals = d2
        else:
            idx = np.argpartition(d2, kk - 1, axis=1)[:, :kk]
            idx.sort(axis=1)
            vals = np.take_along_axis(d2, idx, axis=1)

        # Candidates are index-sorted, so a stable sort on distance breaks
        # ties by ascending index.
        order = np.argsort(vals, axis=1, kind="stable")
        sel_idx = np.take_along_axis(idx, order, axis=1)
        sel_d2 = np.take_along_axis(vals, order, axis=1)

        if kk < self.n:
            # argpartition splits boundary ties arbitrarily; rows where the
            # kth value also occurs past the cut need an exact re-selection.
            kth = sel_d2[:, -1]
            crossing = np.flatnonzero((d2 <= kth[:, None]).sum(axis=1) > kk)
            for r in crossing:
                row = d2[r]
                v = kth[r]
                less = np.flatnonzero(row < v)
                eq = np.flatnonzero(row == v)
                cand = np.concatenate([less, eq[: kk - less.size]])
                cand.sort()
                rvals = row[cand]
                rorder = np.argsort(rvals, kind="stable")
                sel_idx[r] = cand[rorder]
                sel_d2[r] = rvals[rorder]

        out_d2[...] = sel_d2
        out_idx[...] = sel_idx
