# cython: language_level=3
# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels for the hot inner loops.

One-to-one mirror of ``_kernels_py``; see that module for the executable
reference and the layer/storage conventions. Selection ties inside the heap
break on the smaller parent slot, matching the (key, handle) tuple order of
the reference implementation.
"""

from libc.math cimport INFINITY, ceil, fabs, floor
from libc.stdint cimport int64_t

import numpy as np

from .errors import IntegerOverflowError, IterationLimitError, RankDeficientError

BACKEND_NAME = "c"

DIAG_TOL = 1e-12

cdef double _DIAG_TOL = 1e-12
cdef double _T_LIMIT = 4611686018427387904.0  # 2**62


cdef inline double _round_half_away(double x) noexcept nogil:
    if x >= 0.0:
        return floor(x + 0.5)
    return ceil(x - 0.5)


cdef inline long _sign_pm_d(double x) noexcept nogil:
    return 1 if x >= 0.0 else -1


cdef inline int64_t _sign_pm_i(int64_t x) noexcept nogil:
    return 1 if x >= 0 else -1


# ---------------------------------------------------------------------------
# Binary min-heap over (key, slot) with lexicographic ordering.
# ---------------------------------------------------------------------------

cdef inline bint _heap_less(double ka, int64_t sa, double kb, int64_t sb) noexcept nogil:
    return ka < kb or (ka == kb and sa < sb)


cdef inline void _heap_siftdown(double* hk, int64_t* hs, Py_ssize_t size, Py_ssize_t pos) noexcept nogil:
    cdef double key = hk[pos]
    cdef int64_t slot = hs[pos]
    cdef Py_ssize_t child
    while True:
        child = 2 * pos + 1
        if child >= size:
            break
        if child + 1 < size and _heap_less(hk[child + 1], hs[child + 1], hk[child], hs[child]):
            child += 1
        if _heap_less(hk[child], hs[child], key, slot):
            hk[pos] = hk[child]
            hs[pos] = hs[child]
            pos = child
        else:
            break
    hk[pos] = key
    hs[pos] = slot


cdef int _layer_core(
    double[:, ::1] R,
    double[::1] ybreve,
    Py_ssize_t li,
    int64_t[:, ::1] parent_z,
    double[::1] parent_cost,
    Py_ssize_t K,
    int64_t[:, ::1] out_z,
    double[::1] out_cost,
    double[::1] resid,
    int64_t[::1] zcur,
    int64_t[::1] stepc,
    double[::1] hkey,
    int64_t[::1] hslot,
    long long* children,
    long long* updates,
    long long* fmadds,
) except -1:
    cdef Py_ssize_t n = R.shape[0]
    cdef Py_ssize_t nparent = parent_z.shape[0]
    cdef double rnn = R[li, li]
    cdef Py_ssize_t i, j, k
    cdef double acc, ratio, diff
    cdef int64_t zi
    if rnn <= _DIAG_TOL:
        raise RankDeficientError(f"R[{li},{li}] = {rnn!r} is not a usable pivot")
    for i in range(nparent):
        acc = ybreve[li]
        for j in range(li + 1, n):
            acc -= R[li, j] * parent_z[i, j]
        resid[i] = acc
        ratio = acc / rnn
        zi = <int64_t>_round_half_away(ratio)
        zcur[i] = zi
        stepc[i] = 1 if ratio - zi >= 0.0 else -1
        diff = acc - rnn * zi
        hkey[i] = parent_cost[i] + diff * diff
        hslot[i] = i
    fmadds[0] += <long long>nparent * (n - li - 1)
    children[0] += nparent
    for i in range(nparent // 2 - 1, -1, -1):
        _heap_siftdown(&hkey[0], &hslot[0], nparent, i)
    for k in range(K):
        i = <Py_ssize_t>hslot[0]
        for j in range(n):
            out_z[k, j] = parent_z[i, j]
        out_z[k, li] = zcur[i]
        out_cost[k] = hkey[0]
        zcur[i] += stepc[i]
        diff = resid[i] - rnn * zcur[i]
        stepc[i] = -stepc[i] - _sign_pm_i(stepc[i])
        hkey[0] = parent_cost[i] + diff * diff
        _heap_siftdown(&hkey[0], &hslot[0], nparent, 0)
    children[0] += K
    updates[0] += K
    return 0


def kbest_layer_kernel(
    double[:, ::1] R,
    double[::1] ybreve,
    Py_ssize_t li,
    int64_t[:, ::1] parent_z,
    double[::1] parent_cost,
    Py_ssize_t K,
    int64_t[:, ::1] out_z,
    double[::1] out_cost,
):
    """Expand one layer: the K cheapest children of all parents.

    Returns (children_generated, heap_updates, residual_fmadds).
    """
    cdef Py_ssize_t nparent = parent_z.shape[0]
    cdef long long children = 0, updates = 0, fmadds = 0
    scratch_f = np.empty(nparent, dtype=np.float64)
    scratch_z = np.empty(nparent, dtype=np.int64)
    scratch_s = np.empty(nparent, dtype=np.int64)
    heap_k = np.empty(nparent, dtype=np.float64)
    heap_s = np.empty(nparent, dtype=np.int64)
    _layer_core(
        R, ybreve, li, parent_z, parent_cost, K, out_z, out_cost,
        scratch_f, scratch_z, scratch_s, heap_k, heap_s,
        &children, &updates, &fmadds,
    )
    return int(children), int(updates), int(fmadds)


def kbest_search_kernel(double[:, ::1] R, double[::1] ybreve, Py_ssize_t K):
    """Breadth-first K-best search over all layers, root downward.

    Returns (Z, costs, children_generated, heap_updates, residual_fmadds).
    """
    cdef Py_ssize_t n = R.shape[0]
    cdef long long children = 0, updates = 0, fmadds = 0
    cdef Py_ssize_t li, which

    root_z = np.zeros((1, n), dtype=np.int64)
    root_cost = np.zeros(1, dtype=np.float64)
    buf_z = (np.empty((K, n), dtype=np.int64), np.empty((K, n), dtype=np.int64))
    buf_cost = (np.empty(K, dtype=np.float64), np.empty(K, dtype=np.float64))
    scratch_f = np.empty(K, dtype=np.float64)
    scratch_z = np.empty(K, dtype=np.int64)
    scratch_s = np.empty(K, dtype=np.int64)
    heap_k = np.empty(K, dtype=np.float64)
    heap_s = np.empty(K, dtype=np.int64)

    cur_z = root_z
    cur_cost = root_cost
    which = 0
    for li in range(n - 1, -1, -1):
        _layer_core(
            R, ybreve, li, cur_z, cur_cost, K, buf_z[which], buf_cost[which],
            scratch_f, scratch_z, scratch_s, heap_k, heap_s,
            &children, &updates, &fmadds,
        )
        cur_z = buf_z[which]
        cur_cost = buf_cost[which]
        which = 1 - which
    return cur_z, cur_cost, int(children), int(updates), int(fmadds)


# ---------------------------------------------------------------------------
# Exact sphere search over the finite grid {0..L-1}^n.
# ---------------------------------------------------------------------------

cdef int64_t MODE_ZIG = 0
cdef int64_t MODE_DOWN = 1
cdef int64_t MODE_UP = 2


cdef inline void _sphere_enter(
    double[:, ::1] R,
    double[::1] resid,
    int64_t[::1] kcur,
    int64_t[::1] raw,
    int64_t[::1] stepv,
    int64_t[::1] taken,
    int64_t[::1] mode,
    Py_ssize_t li,
    Py_ssize_t L,
) noexcept nogil:
    cdef double c = (resid[li] / R[li, li] + (L - 1)) / 2.0
    cdef int64_t k0
    taken[li] = 0
    if c >= L - 1:
        mode[li] = MODE_DOWN
        kcur[li] = L - 1
    elif c <= 0.0:
        mode[li] = MODE_UP
        kcur[li] = 0
    else:
        mode[li] = MODE_ZIG
        k0 = <int64_t>_round_half_away(c)
        kcur[li] = k0
        raw[li] = k0
        stepv[li] = _sign_pm_d(c - k0)


cdef inline bint _sphere_advance(
    int64_t[::1] kcur,
    int64_t[::1] raw,
    int64_t[::1] stepv,
    int64_t[::1] taken,
    int64_t[::1] mode,
    Py_ssize_t li,
    Py_ssize_t L,
) noexcept nogil:
    taken[li] += 1
    if taken[li] >= L:
        return False
    if mode[li] == MODE_DOWN:
        kcur[li] -= 1
    elif mode[li] == MODE_UP:
        kcur[li] += 1
    else:
        while True:
            raw[li] += stepv[li]
            stepv[li] = -stepv[li] - _sign_pm_i(stepv[li])
            if 0 <= raw[li] <= L - 1:
                kcur[li] = raw[li]
                break
    return True


def sphere_search_kernel(double[:, ::1] R, double[::1] ybreve, Py_ssize_t L):
    """Exact closest point over the finite grid {0..L-1}^n (symbol = 2k-L+1).

    Returns (kbest_indices, nodes_visited).
    """
    cdef Py_ssize_t n = R.shape[0]
    cdef Py_ssize_t li, j
    for li in range(n):
        if R[li, li] <= _DIAG_TOL:
            raise RankDeficientError(f"R[{li},{li}] is not a usable pivot")

    resid_arr = np.zeros(n, dtype=np.float64)
    dist_arr = np.zeros(n, dtype=np.float64)
    symv_arr = np.zeros(n, dtype=np.float64)
    kcur_arr = np.zeros(n, dtype=np.int64)
    raw_arr = np.zeros(n, dtype=np.int64)
    stepv_arr = np.zeros(n, dtype=np.int64)
    taken_arr = np.zeros(n, dtype=np.int64)
    mode_arr = np.zeros(n, dtype=np.int64)
    best_k_arr = np.zeros(n, dtype=np.int64)

    cdef double[::1] resid = resid_arr
    cdef double[::1] dist = dist_arr
    cdef double[::1] symv = symv_arr
    cdef int64_t[::1] kcur = kcur_arr
    cdef int64_t[::1] raw = raw_arr
    cdef int64_t[::1] stepv = stepv_arr
    cdef int64_t[::1] taken = taken_arr
    cdef int64_t[::1] mode = mode_arr
    cdef int64_t[::1] best_k = best_k_arr

    cdef double best = INFINITY
    cdef long long nodes = 0
    cdef double sym, d, acc
    cdef bint climbed

    li = n - 1
    resid[li] = ybreve[li]
    dist[li] = 0.0
    _sphere_enter(R, resid, kcur, raw, stepv, taken, mode, li, L)
    with nogil:
        while True:
            sym = 2.0 * kcur[li] - (L - 1)
            d = dist[li] + (resid[li] - R[li, li] * sym) * (resid[li] - R[li, li] * sym)
            nodes += 1
            if d < best:
                symv[li] = sym
                if li == 0:
                    best = d
                    for j in range(n):
                        best_k[j] = kcur[j]
                    if _sphere_advance(kcur, raw, stepv, taken, mode, li, L):
                        continue
                else:
                    li -= 1
                    acc = ybreve[li]
                    for j in range(li + 1, n):
                        acc -= R[li, j] * symv[j]
                    resid[li] = acc
                    dist[li] = d
                    _sphere_enter(R, resid, kcur, raw, stepv, taken, mode, li, L)
                    continue
            climbed = False
            while True:
                li += 1
                if li >= n:
                    climbed = True
                    break
                if _sphere_advance(kcur, raw, stepv, taken, mode, li, L):
                    break
            if climbed:
                break
    return best_k_arr, int(nodes)


# ---------------------------------------------------------------------------
# LLL reduction with exact int64 unimodular bookkeeping.
# ---------------------------------------------------------------------------

cdef int _size_reduce(
    double[:, ::1] bt,
    int64_t[:, ::1] T,
    double[:, ::1] mu,
    Py_ssize_t k,
    Py_ssize_t l,
    Py_ssize_t m,
    Py_ssize_t n,
) except -1:
    cdef double mukl = mu[k, l]
    cdef Py_ssize_t i
    cdef int64_t r, max_k, max_l, v, limit
    cdef double rd
    if fabs(mukl) <= 0.5:
        return 0
    if fabs(mukl) >= 4503599627370496.0:  # 2**52
        raise IntegerOverflowError("size-reduction coefficient exceeds exact float range")
    rd = _round_half_away(mukl)
    r = <int64_t>rd
    max_k = 0
    max_l = 0
    for i in range(n):
        v = T[i, k]
        if v < 0:
            v = -v
        if v > max_k:
            max_k = v
        v = T[i, l]
        if v < 0:
            v = -v
        if v > max_l:
            max_l = v
    limit = (<int64_t>_T_LIMIT - max_k) // (r if r > 0 else -r if r < 0 else 1)
    if max_l > limit:
        raise IntegerOverflowError("unimodular transform entry would exceed int64 range")
    for i in range(m):
        bt[k, i] -= rd * bt[l, i]
    for i in range(n):
        T[i, k] -= r * T[i, l]
    for i in range(l):
        mu[k, i] -= rd * mu[l, i]
    mu[k, l] -= rd
    return 0


def lll_reduce_kernel(double[:, ::1] basis, double delta, long long max_swaps):
    """In-place LLL reduction of the columns of ``basis``; returns (T, swaps)."""
    cdef Py_ssize_t m = basis.shape[0]
    cdef Py_ssize_t n = basis.shape[1]
    cdef Py_ssize_t i, j, k, l
    cdef double acc, mu_ij, rank_tol, maxcolsq, mubar, bbar, t
    cdef int64_t ti
    cdef long long swaps = 0

    # Row-major transpose: row i of bt is column i of the basis.
    bt_arr = np.empty((n, m), dtype=np.float64)
    cdef double[:, ::1] bt = bt_arr
    for i in range(n):
        for j in range(m):
            bt[i, j] = basis[j, i]

    T_arr = np.eye(n, dtype=np.int64)
    cdef int64_t[:, ::1] T = T_arr
    mu_arr = np.zeros((n, n), dtype=np.float64)
    cdef double[:, ::1] mu = mu_arr
    Bn_arr = np.zeros(n, dtype=np.float64)
    cdef double[::1] Bn = Bn_arr
    bstar_arr = np.zeros((n, m), dtype=np.float64)
    cdef double[:, ::1] bstar = bstar_arr

    maxcolsq = 0.0
    for i in range(n):
        acc = 0.0
        for j in range(m):
            acc += bt[i, j] * bt[i, j]
        if acc > maxcolsq:
            maxcolsq = acc
    rank_tol = 1e-20 * (maxcolsq if maxcolsq > 1.0 else 1.0)

    for i in range(n):
        for j in range(m):
            bstar[i, j] = bt[i, j]
        for k in range(i):
            acc = 0.0
            for j in range(m):
                acc += bstar[i, j] * bstar[k, j]
            mu_ij = acc / Bn[k]
            mu[i, k] = mu_ij
            for j in range(m):
                bstar[i, j] -= mu_ij * bstar[k, j]
        acc = 0.0
        for j in range(m):
            acc += bstar[i, j] * bstar[i, j]
        Bn[i] = acc
        if acc <= rank_tol:
            raise RankDeficientError(f"column {i} is linearly dependent")

    k = 1
    while k < n:
        _size_reduce(bt, T, mu, k, k - 1, m, n)
        if Bn[k] < (delta - mu[k, k - 1] * mu[k, k - 1]) * Bn[k - 1]:
            for j in range(m):
                acc = bt[k - 1, j]
                bt[k - 1, j] = bt[k, j]
                bt[k, j] = acc
            for i in range(n):
                ti = T[i, k - 1]
                T[i, k - 1] = T[i, k]
                T[i, k] = ti
            for j in range(k - 1):
                acc = mu[k - 1, j]
                mu[k - 1, j] = mu[k, j]
                mu[k, j] = acc
            mubar = mu[k, k - 1]
            bbar = Bn[k] + mubar * mubar * Bn[k - 1]
            if bbar <= rank_tol:
                raise RankDeficientError("basis degenerated during reduction")
            mu[k, k - 1] = mubar * Bn[k - 1] / bbar
            Bn[k] = Bn[k - 1] * Bn[k] / bbar
            Bn[k - 1] = bbar
            for i in range(k + 1, n):
                t = mu[i, k]
                mu[i, k] = mu[i, k - 1] - mubar * t
                mu[i, k - 1] = t + mu[k, k - 1] * mu[i, k]
            swaps += 1
            if swaps > max_swaps:
                raise IterationLimitError(f"LLL exceeded {max_swaps} swaps")
            k = k - 1 if k > 1 else 1
        else:
            for l in range(k - 2, -1, -1):
                _size_reduce(bt, T, mu, k, l, m, n)
            k += 1
    for i in range(n):
        for j in range(m):
            basis[j, i] = bt[i, j]
    return T_arr, int(swaps)
