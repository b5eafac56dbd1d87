"""Lenstra-Lenstra-Lovasz basis reduction and exact integer checks.

``lll_reduce`` reduces the columns of a real matrix and returns both the
reduced basis and the unimodular integer transform relating it to the input.
The transform is kept in 64-bit integers with overflow guards so that
unimodularity can be certified in exact arithmetic.
"""

from dataclasses import dataclass

import numpy as np

from . import _backend

__all__ = [
    "ReducedBasis",
    "ReductionDiagnostics",
    "lll_reduce",
    "gram_schmidt_profile",
    "log_orthogonality_defect",
    "integer_det",
    "is_unimodular",
    "reduction_diagnostics",
]

DEFAULT_DELTA = 0.99
MAX_SWAPS = 1_000_000


@dataclass(frozen=True)
class ReducedBasis:
    """Result of a reduction: ``basis == original @ transform``.

    ``basis`` is the reduced real basis, ``transform`` the unimodular integer
    matrix (int64), ``delta`` the Lovasz parameter used, and ``swaps`` the
    number of column swaps performed.
    """

    basis: np.ndarray
    transform: np.ndarray
    delta: float
    swaps: int


@dataclass(frozen=True)
class ReductionDiagnostics:
    """Quality measures of a reduced basis.

    ``max_size_mu`` is the largest off-diagonal Gram-Schmidt coefficient
    magnitude (size reduction demands <= 0.5).  ``lovasz_margin_rel`` is the
    minimum of ``(B[k] - (delta - mu**2) * B[k-1]) / B[k-1]`` over adjacent
    pairs (nonnegative when the Lovasz condition holds).  ``recon_error`` is
    ``max |basis - original @ transform|``.  ``log_defect_before/after`` are
    natural-log orthogonality defects.
    """

    max_size_mu: float
    lovasz_margin_rel: float
    recon_error: float
    log_defect_before: float
    log_defect_after: float


def lll_reduce(
    matrix: np.ndarray,
    delta: float = DEFAULT_DELTA,
    *,
    max_swaps: int = MAX_SWAPS,
) -> ReducedBasis:
    """Reduce the columns of ``matrix`` with the Lovasz parameter ``delta``.

    ``matrix`` must be tall or square with full column rank; ``delta`` must
    lie in ``(0.25, 1.0)``.  Raises :class:`IterationLimitError` if the swap
    budget is exhausted and :class:`IntegerOverflowError` if the integer
    transform would leave the certified 64-bit range.
    """
    a = np.asarray(matrix, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] < a.shape[1] or a.shape[1] == 0:
        raise ValueError(f"expected a tall or square 2-D matrix, got shape {a.shape}")
    if not np.isfinite(a).all():
        raise ValueError("matrix entries must be finite")
    if not 0.25 < delta < 1.0:
        raise ValueError(f"delta must lie in (0.25, 1.0), got {delta}")
    if max_swaps < 1:
        raise ValueError(f"max_swaps must be positive, got {max_swaps}")
    work = a.copy()
    transform, swaps = _backend.active.lll_reduce_kernel(work, float(delta), int(max_swaps))
    # The kernel maintains the basis incrementally in floating point; the
    # exact integer transform ties it back to the input (basis == input @ T
    # up to accumulated rounding, which the diagnostics measure).
    return ReducedBasis(basis=work, transform=transform, delta=float(delta), swaps=int(swaps))


def gram_schmidt_profile(matrix: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Return the Gram-Schmidt coefficients ``mu`` and squared norms.

    ``mu[i, j]`` (j < i) is the projection coefficient of column ``i`` on the
    ``j``-th orthogonalized direction; the second array holds the squared
    norms of the orthogonalized columns.
    """
    a = np.asarray(matrix, dtype=np.float64)
    n = a.shape[1]
    ortho = a.astype(np.float64, copy=True)
    mu = np.eye(n)
    norms_sq = np.zeros(n)
    for i in range(n):
        v = a[:, i].copy()
        for j in range(i):
            if norms_sq[j] <= 0.0:
                raise ValueError("matrix does not have full column rank")
            mu[i, j] = float(ortho[:, j] @ a[:, i]) / norms_sq[j]
            v -= mu[i, j] * ortho[:, j]
        ortho[:, i] = v
        norms_sq[i] = float(v @ v)
    return mu, norms_sq


def log_orthogonality_defect(matrix: np.ndarray) -> float:
    """Natural log of prod(column norms) / sqrt(det(gram))."""
    a = np.asarray(matrix, dtype=np.float64)
    col_sq = (a * a).sum(axis=0)
    if (col_sq <= 0.0).any():
        raise ValueError("matrix has a zero column")
    gram = a.T @ a
    sign, logdet = np.linalg.slogdet(gram)
    if sign <= 0.0:
        raise ValueError("matrix does not have full column rank")
    return float(0.5 * np.log(col_sq).sum() - 0.5 * logdet)


def _require_integer_entries(arr: np.ndarray) -> None:
    if arr.dtype == object:
        if not all(isinstance(v, (int, np.integer)) for v in arr.flat):
            raise ValueError("expected integer entries in object-dtype matrix")
    elif not np.issubdtype(arr.dtype, np.integer):
        raise ValueError(f"expected an integer matrix, got dtype {arr.dtype}")


def integer_det(matrix: np.ndarray) -> int:
    """Exact determinant of an integer matrix (fraction-free elimination).

    Accepts any integer dtype as well as object-dtype arrays of Python ints,
    so products that overflow int64 can still be checked exactly.
    """
    arr = np.asarray(matrix)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {arr.shape}")
    _require_integer_entries(arr)
    n = arr.shape[0]
    if n == 0:
        return 1
    a = [[int(v) for v in row] for row in arr]
    sign = 1
    prev = 1
    for k in range(n - 1):
        if a[k][k] == 0:
            for i in range(k + 1, n):
                if a[i][k] != 0:
                    a[k], a[i] = a[i], a[k]
                    sign = -sign
                    break
            else:
                return 0
        pivot = a[k][k]
        for i in range(k + 1, n):
            row_i = a[i]
            row_k = a[k]
            lead = row_i[k]
            for j in range(k + 1, n):
                row_i[j] = (row_i[j] * pivot - lead * row_k[j]) // prev
            row_i[k] = 0
        prev = pivot
    return sign * a[n - 1][n - 1]


def is_unimodular(matrix: np.ndarray) -> bool:
    """Exact check that an integer matrix has determinant +-1.

    Fast path: invert in floating point, round to an integer candidate, and
    certify ``matrix @ candidate == I`` in exact integer arithmetic.  Falls
    back to an exact integer determinant when the certificate fails — in
    particular a floating-point ``LinAlgError`` only means the fast path is
    unavailable, not that the matrix is singular over the integers.
    """
    arr = np.asarray(matrix)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {arr.shape}")
    _require_integer_entries(arr)
    n = arr.shape[0]
    if n == 0:
        return True
    if arr.dtype != object:
        t = arr.astype(np.int64)
        try:
            inv = np.linalg.inv(t.astype(np.float64))
        except np.linalg.LinAlgError:
            inv = None
        if inv is not None and np.isfinite(inv).all():
            cand = np.rint(inv)
            if np.abs(cand - inv).max() < 0.25 and np.abs(cand).max() < 2.0**62:
                s = cand.astype(np.int64)
                if _exact_product_is_identity(t, s):
                    return True
    return abs(integer_det(arr)) == 1


def _exact_product_is_identity(t: np.ndarray, s: np.ndarray) -> bool:
    n = t.shape[0]
    max_t = int(np.abs(t).max(initial=0))
    max_s = int(np.abs(s).max(initial=0))
    if n * max_t * max_s < 2**62:
        prod = t @ s
    else:
        prod = t.astype(object) @ s.astype(object)
    return bool(np.array_equal(prod, np.eye(n, dtype=np.int64)))


def reduction_diagnostics(original: np.ndarray, reduced: ReducedBasis) -> ReductionDiagnostics:
    """Measure size reduction, the Lovasz condition, and reconstruction."""
    a = np.asarray(original, dtype=np.float64)
    mu, norms_sq = gram_schmidt_profile(reduced.basis)
    n = mu.shape[0]
    max_size_mu = 0.0
    for i in range(1, n):
        max_size_mu = max(max_size_mu, float(np.abs(mu[i, :i]).max()))
    margin = np.inf
    for k in range(1, n):
        bound = (reduced.delta - mu[k, k - 1] ** 2) * norms_sq[k - 1]
        margin = min(margin, (norms_sq[k] - bound) / norms_sq[k - 1])
    recon = float(np.abs(reduced.basis - a @ reduced.transform.astype(np.float64)).max())
    return ReductionDiagnostics(
        max_size_mu=max_size_mu,
        lovasz_margin_rel=float(margin),
        recon_error=recon,
        log_defect_before=log_orthogonality_defect(a),
        log_defect_after=log_orthogonality_defect(reduced.basis),
    )
