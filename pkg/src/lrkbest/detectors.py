"""Symbol detectors for the real-stacked square-QAM model.

All detectors consume a :class:`~lrkbest.matstack.RealSystem` and return a
real symbol vector whose entries lie on the per-dimension PAM grid
``{-(L-1), ..., -1, +1, ..., L-1}`` with ``L = sqrt(M)``.  The exact
maximum-likelihood reference is a depth-first sphere search with a hard
enumeration budget; the remaining detectors trade optimality for speed.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import _backend
from ._kernels_py import round_half_away
from .errors import EnumerationBudgetError, RankDeficientError
from .instrument import DetectCounters
from .matstack import QRFactors, RealSystem, qr_decompose

__all__ = [
    "ConstellationSpec",
    "quantize",
    "mmse_linear_detect",
    "mmse_sic_detect",
    "lr_mmse_sic_detect",
    "sphere_decode_mld",
    "kbest_sdomain_detect",
    "MAX_ENUM_BITS",
]

MAX_ENUM_BITS = 48


@dataclass(frozen=True, eq=False)
class ConstellationSpec:
    """Square M-QAM described by its per-real-dimension PAM alphabet.

    ``m`` is the QAM order, ``levels`` the PAM alphabet size ``sqrt(m)``,
    ``pam_points`` the odd-integer grid, and ``bits_per_real_symbol`` the
    Gray bits carried by each real dimension.
    """

    m: int
    levels: int
    pam_points: np.ndarray
    bits_per_real_symbol: int

    @classmethod
    def for_qam(cls, m: int) -> "ConstellationSpec":
        levels = math.isqrt(int(m))
        if m < 4 or levels * levels != m or levels & (levels - 1):
            raise ValueError(f"QAM order must be 4**k with k >= 1, got {m}")
        points = (2.0 * np.arange(levels) - (levels - 1)).astype(np.float64)
        return cls(
            m=int(m),
            levels=levels,
            pam_points=points,
            bits_per_real_symbol=levels.bit_length() - 1,
        )

    @property
    def symbol_var(self) -> float:
        """Per-real-dimension symbol variance (m - 1) / 3."""
        return (self.m - 1) / 3.0

    @property
    def energy_complex(self) -> float:
        """Average complex symbol energy 2 * (m - 1) / 3."""
        return 2.0 * (self.m - 1) / 3.0


def quantize(values: np.ndarray, spec: ConstellationSpec) -> np.ndarray:
    """Round real values to the nearest PAM point, ties toward the larger one.

    Rounding happens on the index scale ``(x + L - 1) / 2`` with halves
    rounded away from zero, then the index is clipped to ``[0, L - 1]``; for
    4-QAM this sends ``x = 0`` to ``+1``.
    """
    x = np.asarray(values, dtype=np.float64)
    levels = spec.levels
    idx = round_half_away((x + (levels - 1)) / 2.0)
    idx = np.clip(idx, 0.0, float(levels - 1))
    return 2.0 * idx - (levels - 1)


def _quantize_value(x: float, levels: int) -> float:
    idx = math.floor((x + (levels - 1)) / 2.0 + 0.5) if x >= -(levels - 1) else 0.0
    idx = min(max(idx, 0.0), float(levels - 1))
    return 2.0 * idx - (levels - 1)


def mmse_linear_detect(system: RealSystem, spec: ConstellationSpec) -> np.ndarray:
    """Linear MMSE estimate followed by quantization.

    Solves the extended least-squares system, which equals the linear MMSE
    filter of the unextended model.
    """
    est, *_ = np.linalg.lstsq(system.H_ext, system.y_ext, rcond=None)
    return quantize(est, spec)


def _sorted_qr(matrix: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Column-pivoted thin QR choosing the smallest residual column first.

    Returns ``(Q, R, perm)`` with ``matrix[:, perm] == Q @ R``.  Pivoting the
    weakest (smallest post-projection norm) column into the earliest position
    makes back-substitution detect the strongest layers first.
    """
    a = np.asarray(matrix, dtype=np.float64).copy()
    m, n = a.shape
    q = np.empty((m, n))
    r = np.zeros((n, n))
    perm = np.arange(n)
    norms = (a * a).sum(axis=0)
    scale = max(float(norms.max(initial=0.0)), 1.0)
    for i in range(n):
        j = i + int(np.argmin(norms[i:]))
        if j != i:
            a[:, [i, j]] = a[:, [j, i]]
            r[:i, [i, j]] = r[:i, [j, i]]
            norms[[i, j]] = norms[[j, i]]
            perm[[i, j]] = perm[[j, i]]
        v = a[:, i].copy()
        rii = float(np.linalg.norm(v))
        if rii <= 1e-12 * math.sqrt(scale):
            raise RankDeficientError(
                f"column {int(perm[i])} is numerically dependent on earlier columns"
            )
        q[:, i] = v / rii
        r[i, i] = rii
        if i + 1 < n:
            coeffs = q[:, i] @ a[:, i + 1 :]
            r[i, i + 1 :] = coeffs
            a[:, i + 1 :] -= np.outer(q[:, i], coeffs)
            norms[i + 1 :] = np.maximum(norms[i + 1 :] - coeffs * coeffs, 0.0)
    return q, r, perm


def mmse_sic_detect(
    system: RealSystem,
    spec: ConstellationSpec,
    *,
    sort: bool = True,
) -> np.ndarray:
    """Successive interference cancellation on the MMSE-extended system.

    With ``sort=True`` (default) the detection order is chosen by pivoting
    the weakest column first so the most reliable layer is detected first;
    ``sort=False`` keeps the natural column order.
    """
    if sort:
        q, r, perm = _sorted_qr(system.H_ext)
    else:
        factors = qr_decompose(system.H_ext)
        q, r = factors.Q, factors.R
        perm = np.arange(system.H_ext.shape[1])
    ybreve = q.T @ system.y_ext
    n = r.shape[0]
    s_perm = np.zeros(n)
    for li in range(n - 1, -1, -1):
        u = (ybreve[li] - r[li, li + 1 :] @ s_perm[li + 1 :]) / r[li, li]
        s_perm[li] = _quantize_value(float(u), spec.levels)
    s_hat = np.empty(n)
    s_hat[perm] = s_perm
    return s_hat


def lr_mmse_sic_detect(
    system: RealSystem,
    reduced_basis,
    factors: QRFactors,
    spec: ConstellationSpec,
) -> np.ndarray:
    """Babai successive rounding in the reduced lattice domain.

    ``reduced_basis`` must come from reducing ``system.H_ext`` and
    ``factors`` from its QR.  The search vector is the half-shifted target
    ``(y_ext - H_ext @ 1) / 2`` projected by ``Q.T``; rounding in the reduced
    domain is unconstrained and the result is mapped back and clipped.
    """
    shifted = (system.y_ext - system.H_ext.sum(axis=1)) / 2.0
    ybreve = factors.Q.T @ shifted
    r = factors.R
    n = r.shape[0]
    z = np.zeros(n)
    for li in range(n - 1, -1, -1):
        u = (ybreve[li] - r[li, li + 1 :] @ z[li + 1 :]) / r[li, li]
        z[li] = float(round_half_away(u))
    s_unclipped = 2.0 * (reduced_basis.transform.astype(np.float64) @ z) + 1.0
    return quantize(s_unclipped, spec)


def sphere_decode_mld(
    h_real: np.ndarray,
    y_real: np.ndarray,
    spec: ConstellationSpec,
    *,
    max_enum_bits: int = MAX_ENUM_BITS,
    counters: DetectCounters | None = None,
) -> np.ndarray:
    """Exact maximum-likelihood detection by depth-first sphere search.

    Enumerates the finite constellation with boundary-aware zig-zag ordering
    and radius shrinking, so the result equals exhaustive search.  Problems
    with more than ``max_enum_bits`` total bits (``2 * nt * log2(L)``) are
    rejected up front with :class:`EnumerationBudgetError`.
    """
    h = np.asarray(h_real, dtype=np.float64)
    y = np.asarray(y_real, dtype=np.float64)
    n = h.shape[1]
    total_bits = n * spec.bits_per_real_symbol
    if total_bits > max_enum_bits:
        raise EnumerationBudgetError(
            f"exact search over {total_bits} bits exceeds the {max_enum_bits}-bit budget"
        )
    factors = qr_decompose(h)
    ybreve = factors.Q.T @ y
    kidx, nodes = _backend.active.sphere_search_kernel(factors.R, ybreve, spec.levels)
    if counters is not None:
        counters.sphere_nodes += int(nodes)
    return 2.0 * kidx.astype(np.float64) - (spec.levels - 1)


def kbest_sdomain_detect(
    system: RealSystem,
    k: int,
    spec: ConstellationSpec,
    counters: DetectCounters | None = None,
) -> np.ndarray:
    """Breadth-first K-best directly on the symbol grid of the raw channel.

    Every survivor is expanded into all ``L`` PAM children per layer and the
    ``k`` lowest-cost extensions are kept, so per-layer work grows with
    ``L * k`` instead of the on-demand ``2k`` of the reduced-domain search.
    Kept as the conventional baseline the reduced-domain detector is measured
    against.
    """
    if k < 1:
        raise ValueError(f"k must be positive, got {k}")
    factors = qr_decompose(system.H)
    r = factors.R
    ybreve = factors.Q.T @ system.y
    n = r.shape[0]
    pam = spec.pam_points
    levels = spec.levels
    cand = np.zeros((1, n))
    cost = np.zeros(1)
    children = 0
    for li in range(n - 1, -1, -1):
        resid = ybreve[li] - cand[:, li + 1 :] @ r[li, li + 1 :]
        branch = resid[:, None] - r[li, li] * pam[None, :]
        flat = (cost[:, None] + branch * branch).ravel()
        children += flat.size
        keep = min(k, flat.size)
        if keep < flat.size:
            pool = np.argpartition(flat, keep - 1)[:keep]
        else:
            pool = np.arange(flat.size)
        order = pool[np.argsort(flat[pool], kind="stable")]
        parent_idx, point_idx = np.divmod(order, levels)
        cand = cand[parent_idx]
        cand[:, li] = pam[point_idx]
        cost = flat[order]
    if counters is not None:
        counters.children += children
        counters.layers += n
    return cand[0].copy()
