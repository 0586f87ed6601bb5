# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled split search, partition and tree traversal.

Mirrors ``_splitter_py`` operation for operation so both backends grow
identical trees. A node is the segment ``order[:, start:end]``: row ``f`` of
``order`` lists the node's sample slots sorted by feature ``f``.
"""
import numpy as np
cimport numpy as cnp

cnp.import_array()

ctypedef cnp.intp_t intp
ctypedef long long i64

cdef double REL_TIE = 1e-12


cdef inline double _proxy(i64 n_left, i64 l1, i64 n, i64 n1) noexcept nogil:
    cdef i64 l0 = n_left - l1
    cdef i64 n_right = n - n_left
    cdef i64 r1 = n1 - l1
    cdef i64 r0 = n_right - r1
    return <double>(l0 * l0 + l1 * l1) / <double>n_left + <double>(r0 * r0 + r1 * r1) / <double>n_right


cdef inline bint _valid(i64 n_left, i64 l1, i64 n, i64 n1) noexcept nogil:
    # gini decrease > 0 exactly when the child attack fractions differ
    return l1 * (n - n_left) != (n1 - l1) * n_left


def best_split(const double[:, ::1] XT, const signed char[::1] y, const intp[:, ::1] order,
               Py_ssize_t start, Py_ssize_t end, const int[::1] features):
    """Return ``(feature, n_left, threshold)`` or ``None`` if no split lowers gini."""
    cdef Py_ssize_t n = end - start
    cdef Py_ssize_t fi, f, k
    cdef i64 n1 = 0, l1
    cdef double p, best = -1.0, cut
    cdef int found_f = -1
    cdef Py_ssize_t found_k = -1
    cdef const intp[:] row
    if n < 2:
        return None
    with nogil:
        for k in range(start, end):
            n1 += y[order[0, k]]
        if n1 == 0 or n1 == n:
            found_f = -2
        else:
            for fi in range(features.shape[0]):
                f = features[fi]
                l1 = 0
                for k in range(start, end - 1):
                    l1 += y[order[f, k]]
                    if XT[f, order[f, k]] < XT[f, order[f, k + 1]] and _valid(k - start + 1, l1, n, n1):
                        p = _proxy(k - start + 1, l1, n, n1)
                        if p > best:
                            best = p
            if best > 0:
                cut = best - best * REL_TIE
                for fi in range(features.shape[0]):
                    f = features[fi]
                    l1 = 0
                    for k in range(start, end - 1):
                        l1 += y[order[f, k]]
                        if XT[f, order[f, k]] < XT[f, order[f, k + 1]] and _valid(k - start + 1, l1, n, n1):
                            if _proxy(k - start + 1, l1, n, n1) >= cut:
                                found_f = <int>f
                                found_k = k
                                break
                    if found_f >= 0:
                        break
    if found_f < 0:
        return None
    cdef double a = XT[found_f, order[found_f, found_k]]
    cdef double b = XT[found_f, order[found_f, found_k + 1]]
    cdef double thr = 0.5 * (a + b)
    if thr >= b:
        thr = a
    return found_f, found_k - start + 1, thr


def partition(intp[:, ::1] order, Py_ssize_t start, Py_ssize_t end, int feature,
              Py_ssize_t n_left, unsigned char[::1] goes_left, intp[::1] tmp):
    """Stable in-place partition of every feature row into left | right."""
    cdef Py_ssize_t F = order.shape[0]
    cdef Py_ssize_t f, k, li, ri
    cdef intp s
    with nogil:
        for k in range(start, end):
            goes_left[order[feature, k]] = 1 if k < start + n_left else 0
        for f in range(F):
            if f == feature:
                continue
            li = start
            ri = 0
            for k in range(start, end):
                s = order[f, k]
                if goes_left[s]:
                    order[f, li] = s
                    li += 1
                else:
                    tmp[ri] = s
                    ri += 1
            for k in range(ri):
                order[f, li + k] = tmp[k]


def apply_tree(const int[::1] feature, const double[::1] threshold, const int[::1] left,
               const int[::1] right, const double[:, ::1] X):
    """Leaf index reached by each row of ``X``."""
    cdef Py_ssize_t n = X.shape[0], i
    cdef int node
    out = np.empty(n, dtype=np.int32)
    cdef int[::1] leaf = out
    with nogil:
        for i in range(n):
            node = 0
            while feature[node] >= 0:
                if X[i, feature[node]] <= threshold[node]:
                    node = left[node]
                else:
                    node = right[node]
            leaf[i] = node
    return out
