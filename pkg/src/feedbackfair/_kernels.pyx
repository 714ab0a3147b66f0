# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled loan-step kernels; bit-identical to ``_kernels_py``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport floor, fabs

cnp.import_array()


cdef inline Py_ssize_t _first_above(const double[::1] cum, double x) noexcept nogil:
    # first index i with cum[i] > x, or len(cum) when there is none
    cdef Py_ssize_t lo = 0, hi = cum.shape[0], mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if cum[mid] > x:
            hi = mid
        else:
            lo = mid + 1
    return lo


def assign_cells(cell_cum, capacity, u_pick, Py_ssize_t bins_per_group):
    cdef const double[::1] cum = np.ascontiguousarray(cell_cum, dtype=np.float64)
    cdef const cnp.int64_t[::1] cap = np.ascontiguousarray(capacity, dtype=np.int64)
    cdef const double[::1] u = np.ascontiguousarray(u_pick, dtype=np.float64)
    cdef Py_ssize_t n = u.shape[0], ncell = cum.shape[0]
    cdef Py_ssize_t i, c, d, lo, hi, last = -1
    cdef double total = cum[ncell - 1], prev = 0.0
    out = np.empty(n, dtype=np.int64)
    cdef cnp.int64_t[::1] cells = out
    cdef cnp.int64_t[::1] taken = np.zeros(ncell, dtype=np.int64)
    for c in range(ncell):
        if cum[c] > prev:
            last = c
        prev = cum[c]
    for i in range(n):
        c = _first_above(cum, u[i] * total)
        if c >= ncell:
            c = last
        if taken[c] >= cap[c]:
            lo = (c // bins_per_group) * bins_per_group
            hi = lo + bins_per_group - 1
            for d in range(1, bins_per_group):
                if c - d >= lo and taken[c - d] < cap[c - d]:
                    c = c - d
                    break
                if c + d <= hi and taken[c + d] < cap[c + d]:
                    c = c + d
                    break
            else:
                raise ValueError("group has no capacity left")
        taken[c] += 1
        cells[i] = c
    return out


def eqop_thresholds(n_cell, pos_cell, value_bin, double tol):
    cdef const cnp.int64_t[:, ::1] n = np.ascontiguousarray(n_cell, dtype=np.int64)
    cdef const cnp.int64_t[:, ::1] p = np.ascontiguousarray(pos_cell, dtype=np.int64)
    cdef const double[::1] v = np.ascontiguousarray(value_bin, dtype=np.float64)
    cdef Py_ssize_t nb = n.shape[1], g, j, k, best_j = 0, best_k = 0
    cdef double[:, ::1] val = np.zeros((2, nb + 1))
    cdef double[:, ::1] tpr = np.zeros((2, nb + 1))
    cdef cnp.int64_t[:, ::1] pos = np.zeros((2, nb + 1), dtype=np.int64)
    cdef double acc, best = 0.0, tot
    cdef cnp.int64_t pacc
    cdef bint found = False
    for g in range(2):
        acc = 0.0
        pacc = 0
        for j in range(nb - 1, -1, -1):
            acc = acc + <double>n[g, j] * v[j]
            pacc = pacc + p[g, j]
            val[g, j] = acc
            pos[g, j] = pacc
        if pos[g, 0] > 0:
            for j in range(nb + 1):
                tpr[g, j] = <double>pos[g, j] / <double>pos[g, 0]
    for j in range(nb + 1):
        for k in range(nb + 1):
            if fabs(tpr[0, j] - tpr[1, k]) <= tol:
                tot = val[0, j] + val[1, k]
                if not found or tot > best:
                    best = tot
                    best_j = j
                    best_k = k
                    found = True
    return best_j, best_k


def shift_population(hist, cells, approved_cell, repaid, z, u_round,
                     double delta_repay, double delta_default, double delta_reject,
                     double sigma, double low, double width):
    out = np.array(hist, dtype=np.int64, copy=True, order="C")
    cdef cnp.int64_t[:, ::1] h = out
    cdef const cnp.int64_t[::1] cl = np.ascontiguousarray(cells, dtype=np.int64)
    cdef const cnp.uint8_t[::1] appr = np.ascontiguousarray(approved_cell, dtype=np.uint8)
    cdef const cnp.uint8_t[::1] rep = np.ascontiguousarray(repaid, dtype=np.uint8)
    cdef const double[::1] zz = np.ascontiguousarray(z, dtype=np.float64)
    cdef const double[::1] ur = np.ascontiguousarray(u_round, dtype=np.float64)
    cdef Py_ssize_t nb = h.shape[1], n = cl.shape[0], i, c, g, b, nbin
    cdef double base, delta, score, pos, fl
    cdef double high = low + width * <double>(nb - 1)
    for i in range(n):
        c = cl[i]
        g = c // nb
        b = c - g * nb
        if appr[c]:
            base = delta_repay if rep[i] else delta_default
        else:
            base = delta_reject
        delta = base + sigma * zz[i]
        score = (low + width * <double>b) + delta
        if score < low:
            score = low
        if score > high:
            score = high
        pos = (score - low) / width
        fl = floor(pos)
        nbin = <Py_ssize_t>fl
        if ur[i] < pos - fl:
            nbin += 1
        if nbin > nb - 1:
            nbin = nb - 1
        h[g, b] -= 1
        h[g, nbin] += 1
    return out
