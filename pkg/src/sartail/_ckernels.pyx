# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels: exact kd-tree KNN search and Lee-filter window statistics.

Semantics mirror ``sartail._purekernels`` exactly: squared distances are
accumulated from explicit coordinate differences, neighbour ties are broken
by ascending row index, and constant windows report variance 0.0 with the
center value as mean.
"""

import numpy as np

cimport numpy as cnp
from libc.stdlib cimport free, malloc

cnp.import_array()


cdef inline Py_ssize_t _reflect(Py_ssize_t c, Py_ssize_t n) noexcept nogil:
    # Symmetric padding: the edge pixel is repeated ([a b c] -> b a | a b c | c b).
    if c < 0:
        return -c - 1
    if c >= n:
        return 2 * n - 1 - c
    return c


def lee_window_stats(img, int window):
    """Per-pixel window mean and population variance with mirrored borders."""
    cdef double[:, ::1] src = np.ascontiguousarray(img, dtype=np.float64)
    cdef Py_ssize_t h = src.shape[0]
    cdef Py_ssize_t w = src.shape[1]
    cdef Py_ssize_t pad = window // 2
    cdef cnp.ndarray[cnp.float64_t, ndim=2] mean = np.empty((h, w), dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] var = np.empty((h, w), dtype=np.float64)
    cdef double[:, ::1] mv = mean
    cdef double[:, ::1] vv = var
    cdef Py_ssize_t x, y, wy, wx, my, mx
    cdef double v, s, ss, mu, vmin, vmax
    cdef double cnt = <double>(window * window)

    with nogil:
        for y in range(h):
            for x in range(w):
                s = 0.0
                vmin = src[_reflect(y - pad, h), _reflect(x - pad, w)]
                vmax = vmin
                for wy in range(y - pad, y + pad + 1):
                    my = _reflect(wy, h)
                    for wx in range(x - pad, x + pad + 1):
                        mx = _reflect(wx, w)
                        v = src[my, mx]
                        s += v
                        if v < vmin:
                            vmin = v
                        elif v > vmax:
                            vmax = v
                if vmin == vmax:
                    mv[y, x] = src[y, x]
                    vv[y, x] = 0.0
                    continue
                mu = s / cnt
                ss = 0.0
                for wy in range(y - pad, y + pad + 1):
                    my = _reflect(wy, h)
                    for wx in range(x - pad, x + pad + 1):
                        v = src[my, _reflect(wx, w)] - mu
                        ss += v * v
                mv[y, x] = mu
                vv[y, x] = ss / cnt
    return mean, var


# ---------------------------------------------------------------------------
# kd-tree
# ---------------------------------------------------------------------------

cdef struct Node:
    Py_ssize_t start
    Py_ssize_t end
    Py_ssize_t left
    Py_ssize_t right     # -1 for leaves
    Py_ssize_t split_dim
    double split_val


cdef inline bint _worse(double d2a, Py_ssize_t ia, double d2b, Py_ssize_t ib) noexcept nogil:
    # Lexicographic (distance, index) ordering; "worse" sits at the heap root.
    if d2a != d2b:
        return d2a > d2b
    return ia > ib


cdef void _heap_sift_down(double* hd, Py_ssize_t* hi, Py_ssize_t size, Py_ssize_t pos) noexcept nogil:
    cdef Py_ssize_t child
    cdef double td
    cdef Py_ssize_t ti
    while True:
        child = 2 * pos + 1
        if child >= size:
            return
        if child + 1 < size and _worse(hd[child + 1], hi[child + 1], hd[child], hi[child]):
            child += 1
        if not _worse(hd[child], hi[child], hd[pos], hi[pos]):
            return
        td = hd[pos]; hd[pos] = hd[child]; hd[child] = td
        ti = hi[pos]; hi[pos] = hi[child]; hi[child] = ti
        pos = child


cdef void _heap_push(double* hd, Py_ssize_t* hi, Py_ssize_t* size, double d2, Py_ssize_t idx) noexcept nogil:
    cdef Py_ssize_t pos = size[0]
    cdef Py_ssize_t parent
    cdef double td
    cdef Py_ssize_t ti
    hd[pos] = d2
    hi[pos] = idx
    size[0] = pos + 1
    while pos > 0:
        parent = (pos - 1) // 2
        if not _worse(hd[pos], hi[pos], hd[parent], hi[parent]):
            return
        td = hd[pos]; hd[pos] = hd[parent]; hd[parent] = td
        ti = hi[pos]; hi[pos] = hi[parent]; hi[parent] = ti
        pos = parent


cdef class KdTree:
    """Balanced space-partitioning tree over a float64 (n, dim) matrix.

    Exact search: results match brute force, ties broken by ascending index.
    Points are reordered into leaf-contiguous storage at build time so leaf
    scans run over sequential memory.
    """

    lane = "compiled"
    kind = "kdtree"

    cdef double[:, ::1] data            # original row order (build-time only)
    cdef double[:, ::1] points          # leaf-contiguous copy (query-time)
    cdef Py_ssize_t[::1] order          # points row -> original row
    cdef Node* nodes
    cdef double* bbox_min
    cdef double* bbox_max
    cdef Py_ssize_t n_nodes
    cdef Py_ssize_t cap_nodes
    cdef public Py_ssize_t n
    cdef public Py_ssize_t dim
    cdef Py_ssize_t leafsize
    cdef Py_ssize_t max_depth

    def __cinit__(self):
        self.nodes = NULL
        self.bbox_min = NULL
        self.bbox_max = NULL

    def __init__(self, data, Py_ssize_t leafsize=32):
        arr = np.ascontiguousarray(data, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] == 0:
            raise ValueError("index data must be a non-empty 2-D array")
        self.data = arr
        self.n = arr.shape[0]
        self.dim = arr.shape[1]
        self.leafsize = max(4, leafsize)
        self.order = np.arange(self.n, dtype=np.intp)

        # Median splits keep every leaf above leafsize // 2 points.
        self.cap_nodes = 4 * (self.n // (self.leafsize // 2 + 1) + 2)
        self.nodes = <Node*>malloc(self.cap_nodes * sizeof(Node))
        self.bbox_min = <double*>malloc(self.cap_nodes * self.dim * sizeof(double))
        self.bbox_max = <double*>malloc(self.cap_nodes * self.dim * sizeof(double))
        if self.nodes == NULL or self.bbox_min == NULL or self.bbox_max == NULL:
            raise MemoryError
        self.n_nodes = 0
        self.max_depth = 0
        self._build(0, self.n, 0)
        self.points = arr[np.asarray(self.order)].copy()

    def __dealloc__(self):
        if self.nodes != NULL:
            free(self.nodes)
        if self.bbox_min != NULL:
            free(self.bbox_min)
        if self.bbox_max != NULL:
            free(self.bbox_max)

    cdef Py_ssize_t _build(self, Py_ssize_t start, Py_ssize_t end, Py_ssize_t depth):
        cdef Py_ssize_t node_id = self.n_nodes
        self.n_nodes += 1
        if depth > self.max_depth:
            self.max_depth = depth
        cdef Node* nd = &self.nodes[node_id]
        nd.start = start
        nd.end = end
        nd.left = -1
        nd.right = -1
        nd.split_dim = 0
        nd.split_val = 0.0

        cdef double* bmin = self.bbox_min + node_id * self.dim
        cdef double* bmax = self.bbox_max + node_id * self.dim
        cdef Py_ssize_t i, j, row
        cdef double v
        for j in range(self.dim):
            bmin[j] = self.data[self.order[start], j]
            bmax[j] = bmin[j]
        for i in range(start + 1, end):
            row = self.order[i]
            for j in range(self.dim):
                v = self.data[row, j]
                if v < bmin[j]:
                    bmin[j] = v
                elif v > bmax[j]:
                    bmax[j] = v

        cdef Py_ssize_t split_dim = 0
        cdef double extent = bmax[0] - bmin[0]
        for j in range(1, self.dim):
            v = bmax[j] - bmin[j]
            if v > extent:
                extent = v
                split_dim = j

        # Leaf: small enough, or all points coincide (nothing left to split).
        if end - start <= self.leafsize or extent == 0.0:
            return node_id

        cdef Py_ssize_t mid = start + (end - start) // 2
        self._nth_element(start, end, mid, split_dim)
        self.nodes[node_id].split_dim = split_dim
        self.nodes[node_id].split_val = self.data[self.order[mid], split_dim]
        cdef Py_ssize_t left = self._build(start, mid, depth + 1)
        cdef Py_ssize_t right = self._build(mid, end, depth + 1)
        self.nodes[node_id].left = left
        self.nodes[node_id].right = right
        return node_id

    cdef void _nth_element(self, Py_ssize_t lo, Py_ssize_t hi, Py_ssize_t nth, Py_ssize_t dim):
        # Deterministic three-way quickselect on data[order, dim].
        cdef Py_ssize_t lt, gt, i, tmp
        cdef double pivot, a, b, c, v
        while hi - lo > 1:
            a = self.data[self.order[lo], dim]
            b = self.data[self.order[lo + (hi - lo) // 2], dim]
            c = self.data[self.order[hi - 1], dim]
            # median of three
            if a > b:
                a, b = b, a
            if b > c:
                b = c if a <= c else a
            pivot = b

            lt = lo
            gt = hi
            i = lo
            while i < gt:
                v = self.data[self.order[i], dim]
                if v < pivot:
                    tmp = self.order[i]; self.order[i] = self.order[lt]; self.order[lt] = tmp
                    lt += 1
                    i += 1
                elif v > pivot:
                    gt -= 1
                    tmp = self.order[i]; self.order[i] = self.order[gt]; self.order[gt] = tmp
                else:
                    i += 1
            if nth < lt:
                hi = lt
            elif nth >= gt:
                lo = gt
            else:
                return

    cdef void _query_one(self, const double* q, Py_ssize_t k, double* hd, Py_ssize_t* hi,
                         Py_ssize_t* stack_node, double* stack_bound,
                         double* out_d2, Py_ssize_t* out_idx) noexcept nogil:
        cdef Py_ssize_t size = 0
        cdef Py_ssize_t sp = 0
        cdef Py_ssize_t cur = 0
        cdef Node* nd
        cdef Py_ssize_t i, j, row, near, far
        cdef double d2, d, fb
        cdef double worst = 0.0
        cdef bint full = k == 0
        cdef bint resumed
        cdef const double* p

        while True:
            nd = &self.nodes[cur]
            if nd.left != -1:
                near = nd.left
                far = nd.right
                if q[nd.split_dim] >= nd.split_val:
                    near = nd.right
                    far = nd.left
                # Defer the far child with its box distance; it is re-tested
                # at pop time against the (possibly tighter) worst. Equality
                # descends so lower-index ties are never pruned away.
                fb = self._bbox_dist2(far, q)
                if not full or fb <= worst:
                    stack_node[sp] = far
                    stack_bound[sp] = fb
                    sp += 1
                cur = near
                continue

            for i in range(nd.start, nd.end):
                p = &self.points[i, 0]
                d2 = 0.0
                for j in range(self.dim):
                    d = q[j] - p[j]
                    d2 += d * d
                if full and d2 > worst:
                    continue
                row = self.order[i]
                if not full:
                    _heap_push(hd, hi, &size, d2, row)
                    if size == k:
                        full = True
                        worst = hd[0]
                elif _worse(hd[0], hi[0], d2, row):
                    hd[0] = d2
                    hi[0] = row
                    _heap_sift_down(hd, hi, size, 0)
                    worst = hd[0]

            resumed = False
            while sp > 0:
                sp -= 1
                if not full or stack_bound[sp] <= worst:
                    cur = stack_node[sp]
                    resumed = True
                    break
            if not resumed:
                break

        # Heap-sort into ascending (distance, index) order.
        cdef Py_ssize_t m = size
        cdef double td
        cdef Py_ssize_t ti
        while size > 1:
            size -= 1
            td = hd[0]; hd[0] = hd[size]; hd[size] = td
            ti = hi[0]; hi[0] = hi[size]; hi[size] = ti
            _heap_sift_down(hd, hi, size, 0)
        for i in range(m):
            out_d2[i] = hd[i]
            out_idx[i] = hi[i]

    cdef inline double _bbox_dist2(self, Py_ssize_t node_id, const double* q) noexcept nogil:
        cdef double* bmin = self.bbox_min + node_id * self.dim
        cdef double* bmax = self.bbox_max + node_id * self.dim
        cdef double acc = 0.0
        cdef double d
        cdef Py_ssize_t j
        for j in range(self.dim):
            if q[j] < bmin[j]:
                d = bmin[j] - q[j]
            elif q[j] > bmax[j]:
                d = q[j] - bmax[j]
            else:
                continue
            acc += d * d
        return acc

    def query(self, queries, Py_ssize_t k):
        """Exact k nearest rows for each query; returns (dist2, indices)."""
        cdef cnp.ndarray[cnp.float64_t, ndim=2] q = np.ascontiguousarray(queries, dtype=np.float64)
        if q.shape[1] != self.dim:
            raise ValueError("query dimensionality mismatch")
        cdef Py_ssize_t m = q.shape[0]
        cdef Py_ssize_t kk = k if k < self.n else self.n
        cdef cnp.ndarray[cnp.float64_t, ndim=2] out_d2 = np.empty((m, kk), dtype=np.float64)
        cdef cnp.ndarray[cnp.intp_t, ndim=2] out_idx = np.empty((m, kk), dtype=np.intp)
        cdef double[:, ::1] qv = q
        cdef double[:, ::1] dv = out_d2
        cdef Py_ssize_t[:, ::1] iv = out_idx
        cdef Py_ssize_t stack_cap = self.max_depth + 2
        cdef double* hd = <double*>malloc(kk * sizeof(double))
        cdef Py_ssize_t* hi = <Py_ssize_t*>malloc(kk * sizeof(Py_ssize_t))
        cdef Py_ssize_t* stack_node = <Py_ssize_t*>malloc(stack_cap * sizeof(Py_ssize_t))
        cdef double* stack_bound = <double*>malloc(stack_cap * sizeof(double))
        if hd == NULL or hi == NULL or stack_node == NULL or stack_bound == NULL:
            free(hd); free(hi); free(stack_node); free(stack_bound)
            raise MemoryError
        cdef Py_ssize_t r

        with nogil:
            for r in range(m):
                self._query_one(&qv[r, 0], kk, hd, hi, stack_node, stack_bound,
                                &dv[r, 0], &iv[r, 0])
        free(hd); free(hi); free(stack_node); free(stack_bound)
        return out_d2, np.asarray(out_idx, dtype=np.int64)
