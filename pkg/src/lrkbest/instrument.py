"""Per-call instrumentation counters shared by the detectors."""

from dataclasses import dataclass


@dataclass
class DetectCounters:
    """Operation counts accumulated across detection calls.

    ``children`` and ``heap_updates`` measure the K-best layer expansions;
    ``residual_fmadds`` counts the multiply-adds spent on layer residuals;
    ``layers`` counts processed layers (for per-layer averages);
    ``sphere_nodes`` counts nodes visited by the exact sphere search.
    """

    children: int = 0
    heap_updates: int = 0
    residual_fmadds: int = 0
    layers: int = 0
    sphere_nodes: int = 0

    def merge(self, other: "DetectCounters") -> None:
        self.children += other.children
        self.heap_updates += other.heap_updates
        self.residual_fmadds += other.residual_fmadds
        self.layers += other.layers
        self.sphere_nodes += other.sphere_nodes
