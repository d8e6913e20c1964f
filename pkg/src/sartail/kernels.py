"""Kernel lane selection.

The hot inner loops (exact KNN search, Lee window statistics) exist twice:
a Cython extension (``sartail._ckernels``) and a pure numpy fallback
(``sartail._purekernels``). The compiled lane is picked at import when the
extension built; setting ``SARTAIL_PURE_PYTHON=1`` forces the fallback.
Both lanes implement the same contracts, so everything above this module is
lane-agnostic.
"""

import os

from . import _purekernels

if os.environ.get("SARTAIL_PURE_PYTHON", "") not in ("", "0"):
    _ckernels = None
else:
    try:
        from . import _ckernels
    except ImportError:
        _ckernels = None

#: Tree search degrades past this dimensionality; fall back to brute force.
TREE_DIM_THRESHOLD = 32

#: Points per kd-tree leaf.
LEAF_SIZE = 64


def active_lane():
    """Name of the kernel lane in use: ``"compiled"`` or ``"pure"``."""
    return "pure" if _ckernels is None else "compiled"


def lee_window_stats(img, window):
    """Per-pixel window mean and population variance (mirrored borders)."""
    if _ckernels is not None:
        return _ckernels.lee_window_stats(img, int(window))
    return _purekernels.lee_window_stats(img, int(window))


def make_index(data, dim_threshold=TREE_DIM_THRESHOLD):
    """Build the exact-KNN backend for a float64 (n, dim) matrix.

    Compiled lane and dim <= threshold: balanced kd-tree. Otherwise the
    vectorized brute-force scan. Both return identical (dist2, index)
    results; only throughput differs.
    """
    if _ckernels is not None and data.shape[1] <= dim_threshold:
        return _ckernels.KdTree(data, LEAF_SIZE)
    return _purekernels.BruteForceIndex(data)


def make_brute_index(data):
    """Always the brute-force backend (used as benchmark baseline)."""
    return _purekernels.BruteForceIndex(data)
