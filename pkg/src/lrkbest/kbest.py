"""Reduced-domain K-best detection with on-demand child expansion.

The search runs breadth-first over the layers of an upper-triangular system,
keeping the ``k`` lowest-cost partial candidates per layer.  Children are not
all materialized: each parent exposes only its next-best child (Schnorr-Euchner
zig-zag order), a min-heap over parents yields the global best in O(1), and
taking a child re-keys that parent in O(log k).  A layer therefore costs
``len + k`` child evaluations and ``k`` heap updates, independent of the
constellation size, because the reduced domain is unconstrained integer.
"""

import numpy as np

from . import _backend
from ._kernels_py import MinHeap, heap_init
from .detectors import ConstellationSpec, quantize
from .errors import RankDeficientError
from .instrument import DetectCounters
from .latred import ReducedBasis
from .matstack import QRFactors, RealSystem

__all__ = [
    "MinHeap",
    "heap_init",
    "find_kbest_children",
    "lr_kbest_detect",
    "lr_kbest_detect_nld",
]


def find_kbest_children(
    parents_z: np.ndarray,
    parents_cost: np.ndarray,
    r: np.ndarray,
    ybreve: np.ndarray,
    layer: int,
    k: int,
    counters: DetectCounters | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Expand one layer: the k cheapest children of the given parents.

    ``parents_z`` is ``(p, n)`` int64 with columns ``layer + 1 ..`` already
    decided; ``parents_cost`` holds the matching accumulated costs.  Returns
    ``(children_z, children_cost)`` of shapes ``(k, n)`` and ``(k,)``, sorted
    by nondecreasing cost.  Exactly ``p + k`` children are evaluated and ``k``
    heap updates performed.
    """
    pz = np.ascontiguousarray(parents_z, dtype=np.int64)
    pc = np.ascontiguousarray(parents_cost, dtype=np.float64)
    rr = np.ascontiguousarray(r, dtype=np.float64)
    yb = np.ascontiguousarray(ybreve, dtype=np.float64)
    n = rr.shape[0]
    if pz.ndim != 2 or pz.shape[0] < 1 or pz.shape[1] != n:
        raise ValueError(f"parents must be (p, {n}) with p >= 1, got {pz.shape}")
    if pc.shape != (pz.shape[0],):
        raise ValueError("one cost per parent is required")
    if not 0 <= layer < n:
        raise ValueError(f"layer must lie in [0, {n}), got {layer}")
    if k < 1:
        raise ValueError(f"k must be positive, got {k}")
    out_z = np.empty((k, n), dtype=np.int64)
    out_cost = np.empty(k, dtype=np.float64)
    children, updates, fmadds = _backend.active.kbest_layer_kernel(
        rr, yb, int(layer), pz, pc, int(k), out_z, out_cost
    )
    if counters is not None:
        counters.children += int(children)
        counters.heap_updates += int(updates)
        counters.residual_fmadds += int(fmadds)
        counters.layers += 1
    return out_z, out_cost


def _detect_common(
    system: RealSystem,
    search_h: np.ndarray,
    search_y: np.ndarray,
    reduced: ReducedBasis,
    factors: QRFactors,
    k: int,
    spec: ConstellationSpec,
    counters: DetectCounters | None,
) -> np.ndarray:
    if k < 1:
        raise ValueError(f"k must be positive, got {k}")
    # Half-shift the target so the lattice search runs over plain integers:
    # search_y = search_h @ (2u + 1) + w  =>  (search_y - search_h @ 1) / 2
    # is a point of the half-scaled lattice plus noise.
    shifted = (search_y - search_h.sum(axis=1)) / 2.0
    ybreve = factors.Q.T @ shifted
    z, _costs, children, updates, fmadds = _backend.active.kbest_search_kernel(
        factors.R, ybreve, int(k)
    )
    n = factors.R.shape[0]
    if counters is not None:
        counters.children += int(children)
        counters.heap_updates += int(updates)
        counters.residual_fmadds += int(fmadds)
        counters.layers += n
    # Map candidates back to the symbol domain, clip to the constellation,
    # and pick the one closest to the raw (unextended) observation.
    unclipped = 2.0 * (reduced.transform.astype(np.float64) @ z.T.astype(np.float64)) + 1.0
    candidates = quantize(unclipped, spec)
    resid = system.y[:, None] - system.H @ candidates
    metric = np.einsum("ij,ij->j", resid, resid)
    return candidates[:, int(np.argmin(metric))].copy()


def lr_kbest_detect(
    system: RealSystem,
    reduced: ReducedBasis,
    factors: QRFactors,
    k: int,
    spec: ConstellationSpec,
    counters: DetectCounters | None = None,
) -> np.ndarray:
    """K-best search in the reduced domain of the MMSE-extended channel.

    ``reduced`` must come from reducing ``system.H_ext`` and ``factors`` from
    the QR of ``reduced.basis``.  The final decision is the candidate (after
    mapping back and clipping) with the smallest raw-channel residual.
    """
    return _detect_common(
        system, system.H_ext, system.y_ext, reduced, factors, k, spec, counters
    )


def lr_kbest_detect_nld(
    system: RealSystem,
    reduced: ReducedBasis,
    factors: QRFactors,
    k: int,
    spec: ConstellationSpec,
    counters: DetectCounters | None = None,
) -> np.ndarray:
    """K-best search in the reduced domain of the raw (unextended) channel.

    Same search as :func:`lr_kbest_detect` but ``reduced`` must come from
    reducing ``system.H`` directly, i.e. the lattice matches the zero-forcing
    rather than the MMSE geometry.
    """
    return _detect_common(system, system.H, system.y, reduced, factors, k, spec, counters)
