"""Pure-Python reference kernels for the hot inner loops.

These mirror the compiled kernels in ``_ckernels`` one to one; the active
set is chosen in ``_backend``. Keep the arithmetic here boring and explicit:
this module is the executable reference the compiled code is tested against.

Layer convention: a search over ``n = 2*Nt`` coordinates runs layers
``li = n-1`` down to ``0`` (row ``li`` of the upper-triangular ``R``).
Partial candidates are stored as full-width int64 rows where only columns
``li .. n-1`` are meaningful once layer ``li`` has been processed.
"""

import heapq

import numpy as np

from .errors import IntegerOverflowError, IterationLimitError, RankDeficientError

BACKEND_NAME = "python"

# Diagonal of R below this signals a broken QR / rank-deficient basis.
DIAG_TOL = 1e-12

# Unimodular bookkeeping must stay comfortably inside int64.
_T_LIMIT = 2**62


def round_half_away(x):
    """Round to nearest integer, halves away from zero (platform independent)."""
    return np.where(x >= 0.0, np.floor(x + 0.5), np.ceil(x - 0.5))


def _sign_pm(x):
    """Sign with the tie convention sgn(0) = +1."""
    return 1 if x >= 0 else -1


class MinHeap:
    """Array-backed binary min-heap of (key, handle) pairs.

    Equal keys compare by handle, so selection order is stable in the
    handles' insertion order. Only the operations the K-best search needs
    are exposed: O(1) find-min and an O(log n) replace of the minimum key.
    """

    __slots__ = ("_heap",)

    def __init__(self, entries):
        self._heap = list(entries)
        heapq.heapify(self._heap)

    def __len__(self):
        return len(self._heap)

    @property
    def min_key(self):
        return self._heap[0][0]

    @property
    def min_handle(self):
        return self._heap[0][1]

    def replace_min_key(self, newkey):
        """Re-key the minimum entry. Requires newkey >= current minimum."""
        assert newkey >= self._heap[0][0], "replace_min_key requires a nondecreasing key"
        heapq.heapreplace(self._heap, (newkey, self._heap[0][1]))


def heap_init(keys):
    """Build a MinHeap over ``keys`` with handles 0..len-1 (linear time)."""
    keys = list(keys)
    if not keys:
        raise ValueError("heap_init requires at least one key")
    return MinHeap((float(k), i) for i, k in enumerate(keys))


def kbest_layer_kernel(R, ybreve, li, parent_z, parent_cost, K, out_z, out_cost):
    """Expand one layer: the K cheapest children of all parents.

    Children of a parent are the integers at coordinate ``li``, visited in
    nondecreasing cost order (zig-zag around the rounded unconstrained
    solution), and generated on demand: each selection spawns exactly one
    new sibling of the selected child.

    Returns (children_generated, heap_updates, residual_fmadds).
    """
    n = R.shape[0]
    nparent = parent_z.shape[0]
    rnn = R[li, li]
    if rnn <= DIAG_TOL:
        raise RankDeficientError(f"R[{li},{li}] = {rnn!r} is not a usable pivot")

    if li + 1 < n:
        resid = ybreve[li] - parent_z[:, li + 1 :].astype(np.float64) @ R[li, li + 1 :]
    else:
        resid = np.full(nparent, ybreve[li])
    fmadds = nparent * (n - li - 1)

    ratio = resid / rnn
    z = round_half_away(ratio).astype(np.int64)
    step = np.where(ratio - z >= 0.0, 1, -1).astype(np.int64)
    childcost = parent_cost + (resid - rnn * z) ** 2

    q = heap_init(childcost)
    children = nparent
    for k in range(K):
        i = q.min_handle
        out_z[k, :] = parent_z[i, :]
        out_z[k, li] = z[i]
        out_cost[k] = q.min_key
        z[i] += step[i]
        c = parent_cost[i] + (resid[i] - rnn * z[i]) ** 2
        step[i] = -step[i] - _sign_pm(step[i])
        q.replace_min_key(float(c))
        children += 1
    return children, K, fmadds


def kbest_search_kernel(R, ybreve, K):
    """Breadth-first K-best search over all layers, root downward.

    Returns (Z, costs, children_generated, heap_updates, residual_fmadds)
    where Z is (K, n) int64 and costs is (K,) nondecreasing.
    """
    n = R.shape[0]
    cur_z = np.zeros((1, n), dtype=np.int64)
    cur_cost = np.zeros(1)
    children = updates = fmadds = 0
    for li in range(n - 1, -1, -1):
        out_z = np.empty((K, n), dtype=np.int64)
        out_cost = np.empty(K)
        c, u, f = kbest_layer_kernel(R, ybreve, li, cur_z, cur_cost, K, out_z, out_cost)
        children += c
        updates += u
        fmadds += f
        cur_z, cur_cost = out_z, out_cost
    return cur_z, cur_cost, children, updates, fmadds


def sphere_search_kernel(R, ybreve, L):
    """Exact closest point over the finite grid {0..L-1}^n (symbol = 2k-L+1).

    Depth-first search with zig-zag child ordering and radius pruning;
    the radius starts infinite and shrinks at every leaf. Returns
    (kbest_indices, nodes_visited).
    """
    n = R.shape[0]
    for li in range(n):
        if R[li, li] <= DIAG_TOL:
            raise RankDeficientError(f"R[{li},{li}] is not a usable pivot")

    MODE_ZIG, MODE_DOWN, MODE_UP = 0, 1, 2
    resid = np.zeros(n)
    dist = np.zeros(n)  # cost accumulated strictly above each layer
    kcur = np.zeros(n, dtype=np.int64)
    raw = np.zeros(n, dtype=np.int64)
    stepv = np.zeros(n, dtype=np.int64)
    taken = np.zeros(n, dtype=np.int64)
    mode = np.zeros(n, dtype=np.int64)
    symv = np.zeros(n)

    def enter(li):
        c = (resid[li] / R[li, li] + (L - 1)) / 2.0
        taken[li] = 0
        if c >= L - 1:
            mode[li] = MODE_DOWN
            kcur[li] = L - 1
        elif c <= 0.0:
            mode[li] = MODE_UP
            kcur[li] = 0
        else:
            mode[li] = MODE_ZIG
            k0 = int(round_half_away(np.float64(c)))
            kcur[li] = raw[li] = k0
            stepv[li] = _sign_pm(c - k0)

    def advance(li):
        """Move layer li to its next valid index; False when exhausted."""
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
                stepv[li] = -stepv[li] - _sign_pm(stepv[li])
                if 0 <= raw[li] <= L - 1:
                    kcur[li] = raw[li]
                    break
        return True

    best = np.inf
    best_k = np.zeros(n, dtype=np.int64)
    nodes = 0

    li = n - 1
    resid[li] = ybreve[li]
    dist[li] = 0.0
    enter(li)
    while True:
        sym = 2.0 * kcur[li] - (L - 1)
        d = dist[li] + (resid[li] - R[li, li] * sym) ** 2
        nodes += 1
        if d < best:
            symv[li] = sym
            if li == 0:
                best = d
                best_k[:] = kcur
                if advance(li):
                    continue
            else:
                li -= 1
                resid[li] = ybreve[li] - R[li, li + 1 :] @ symv[li + 1 :]
                dist[li] = d
                enter(li)
                continue
        # Current child (and, by the visiting order, all its later siblings)
        # is outside the radius: climb until a level still has siblings.
        while True:
            li += 1
            if li >= n:
                return best_k, nodes
            if advance(li):
                break


def lll_reduce_kernel(basis, delta, max_swaps):
    """In-place LLL reduction of the columns of float64 ``basis``.

    Returns (T, swaps) with T int64 unimodular such that the reduced basis
    equals original @ T. Gram-Schmidt data is kept incrementally; the
    unimodular bookkeeping stays in exact int64 and aborts on overflow.
    """
    m, n = basis.shape
    T = np.eye(n, dtype=np.int64)
    mu = np.zeros((n, n))
    Bn = np.zeros(n)

    colsq = np.sum(basis * basis, axis=0)
    rank_tol = 1e-20 * max(1.0, float(np.max(colsq))) if n else 0.0

    bstar = np.zeros((m, n))
    for i in range(n):
        v = basis[:, i].copy()
        for j in range(i):
            mu_ij = (v @ bstar[:, j]) / Bn[j]
            mu[i, j] = mu_ij
            v -= mu_ij * bstar[:, j]
        Bn[i] = v @ v
        if Bn[i] <= rank_tol:
            raise RankDeficientError(f"column {i} is linearly dependent")
        bstar[:, i] = v
    del bstar  # incremental updates below keep mu/Bn consistent

    def size_reduce(k, l):
        if abs(mu[k, l]) <= 0.5:
            return
        if abs(mu[k, l]) >= 2.0**52:
            raise IntegerOverflowError("size-reduction coefficient exceeds exact float range")
        r = int(round_half_away(np.float64(mu[k, l])))
        limit = (_T_LIMIT - int(np.max(np.abs(T[:, k])))) // max(1, abs(r))
        if int(np.max(np.abs(T[:, l]))) > limit:
            raise IntegerOverflowError("unimodular transform entry would exceed int64 range")
        basis[:, k] -= r * basis[:, l]
        T[:, k] -= r * T[:, l]
        mu[k, :l] -= r * mu[l, :l]
        mu[k, l] -= r

    swaps = 0
    k = 1
    while k < n:
        size_reduce(k, k - 1)
        if Bn[k] < (delta - mu[k, k - 1] ** 2) * Bn[k - 1]:
            basis[:, [k - 1, k]] = basis[:, [k, k - 1]]
            T[:, [k - 1, k]] = T[:, [k, k - 1]]
            if k > 1:
                mu[[k - 1, k], : k - 1] = mu[[k, k - 1], : k - 1]
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
            k = max(k - 1, 1)
        else:
            for l in range(k - 2, -1, -1):
                size_reduce(k, l)
            k += 1
    return T, swaps
