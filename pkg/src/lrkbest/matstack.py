"""Real-valued stacking of the complex MIMO model and QR utilities.

A complex system ``y_c = H_c s_c + w_c`` with ``nt`` transmit and ``nr``
receive antennas is rewritten over the reals by stacking real and imaginary
parts.  The regularized (MMSE) form appends a scaled identity block to the
channel so that unconstrained least squares on the extended system equals the
linear MMSE estimate of the original one.
"""

from dataclasses import dataclass

import numpy as np

from .errors import RankDeficientError

__all__ = [
    "RealSystem",
    "QRFactors",
    "complex_to_real",
    "mmse_extend",
    "qr_decompose",
]


@dataclass(frozen=True)
class RealSystem:
    """Real-valued receive model plus its MMSE-extended counterpart.

    ``H`` is the ``(2*nr, 2*nt)`` stacked channel and ``y`` the ``(2*nr,)``
    stacked observation.  ``H_ext``/``y_ext`` append the regularization rows
    ``sqrt(noise_var / (2 * symbol_var)) * I`` and zeros.  ``symbol_var`` is
    the per-real-dimension symbol variance.
    """

    H: np.ndarray
    y: np.ndarray
    H_ext: np.ndarray
    y_ext: np.ndarray
    noise_var: float
    symbol_var: float

    @property
    def nt(self) -> int:
        return self.H.shape[1] // 2

    @property
    def nr(self) -> int:
        return self.H.shape[0] // 2


@dataclass(frozen=True)
class QRFactors:
    """Thin QR factors with a nonnegative diagonal of ``R``."""

    Q: np.ndarray
    R: np.ndarray


def complex_to_real(h_complex: np.ndarray, y_complex: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Stack a complex channel/observation pair into the real model.

    Returns ``(H, y)`` with ``H = [[Re -Im], [Im Re]]`` of shape
    ``(2*nr, 2*nt)`` and ``y = [Re(y); Im(y)]``.  The matching symbol layout
    is ``s = [Re(s_c); Im(s_c)]``.
    """
    hc = np.asarray(h_complex, dtype=np.complex128)
    yc = np.asarray(y_complex, dtype=np.complex128)
    if hc.ndim != 2:
        raise ValueError(f"channel must be 2-D, got shape {hc.shape}")
    if yc.ndim != 1 or yc.shape[0] != hc.shape[0]:
        raise ValueError(
            f"observation shape {yc.shape} does not match channel with {hc.shape[0]} outputs"
        )
    if not (np.isfinite(hc).all() and np.isfinite(yc).all()):
        raise ValueError("channel and observation entries must be finite")
    re_h, im_h = hc.real, hc.imag
    top = np.concatenate([re_h, -im_h], axis=1)
    bottom = np.concatenate([im_h, re_h], axis=1)
    h_real = np.concatenate([top, bottom], axis=0)
    y_real = np.concatenate([yc.real, yc.imag])
    return h_real, y_real


def mmse_extend(
    h_real: np.ndarray,
    y_real: np.ndarray,
    noise_var: float,
    symbol_var: float,
) -> RealSystem:
    """Build the MMSE-regularized system from the stacked real model.

    Appends ``sqrt(noise_var / (2 * symbol_var)) * I`` below ``H`` and zeros
    below ``y``; ``symbol_var`` is the per-real-dimension symbol variance, so
    the complex symbol energy is ``2 * symbol_var``.
    """
    h_real = np.asarray(h_real, dtype=np.float64)
    y_real = np.asarray(y_real, dtype=np.float64)
    if h_real.ndim != 2 or h_real.shape[0] % 2 or h_real.shape[1] % 2:
        raise ValueError(f"stacked channel must have even dimensions, got {h_real.shape}")
    if y_real.shape != (h_real.shape[0],):
        raise ValueError(
            f"observation shape {y_real.shape} does not match channel shape {h_real.shape}"
        )
    if not noise_var > 0.0:
        raise ValueError(f"noise variance must be positive, got {noise_var}")
    if not symbol_var > 0.0:
        raise ValueError(f"symbol variance must be positive, got {symbol_var}")
    n = h_real.shape[1]
    alpha = np.sqrt(noise_var / (2.0 * symbol_var))
    h_ext = np.concatenate([h_real, alpha * np.eye(n)], axis=0)
    y_ext = np.concatenate([y_real, np.zeros(n)])
    return RealSystem(
        H=h_real,
        y=y_real,
        H_ext=h_ext,
        y_ext=y_ext,
        noise_var=float(noise_var),
        symbol_var=float(symbol_var),
    )


def qr_decompose(matrix: np.ndarray, *, diag_tol: float = 1e-12) -> QRFactors:
    """Thin QR with the diagonal of ``R`` made nonnegative.

    Signs are normalized by flipping matching columns of ``Q`` and rows of
    ``R``.  Raises :class:`RankDeficientError` if any diagonal entry of ``R``
    falls below ``diag_tol`` times the largest column norm of ``matrix``.
    """
    a = np.asarray(matrix, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] < a.shape[1]:
        raise ValueError(f"expected a tall or square 2-D matrix, got shape {a.shape}")
    q, r = np.linalg.qr(a, mode="reduced")
    diag = np.diagonal(r).copy()
    flip = diag < 0.0
    if flip.any():
        q = q.copy()
        r = r.copy()
        q[:, flip] *= -1.0
        r[flip, :] *= -1.0
        diag = np.abs(diag)
    scale = max(np.sqrt((a * a).sum(axis=0).max()), 1.0) if a.size else 1.0
    if a.shape[1] and diag.min() <= diag_tol * scale:
        worst = int(np.argmin(diag))
        raise RankDeficientError(
            f"R diagonal entry {worst} is {diag[worst]:.3e}; matrix is numerically rank deficient"
        )
    r = np.triu(r)
    return QRFactors(Q=q, R=r)
