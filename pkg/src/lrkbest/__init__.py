"""Lattice-reduction-aided K-best MIMO detection and BER simulation.

The package splits into small layers: ``matstack`` (complex-to-real model and
QR), ``latred`` (LLL reduction with exact unimodular checks), ``kbest`` (the
on-demand K-best search), ``detectors`` (quantizer, MMSE/SIC baselines, exact
sphere search), ``simkit`` (Monte Carlo BER engine), and ``cli`` (experiment
runner).  Hot kernels run compiled when the extension is available; set
``LRKBEST_BACKEND=py`` to force the pure-Python reference.
"""

from ._backend import BACKEND_NAME, available_backends
from .detectors import (
    ConstellationSpec,
    kbest_sdomain_detect,
    lr_mmse_sic_detect,
    mmse_linear_detect,
    mmse_sic_detect,
    quantize,
    sphere_decode_mld,
)
from .errors import (
    EnumerationBudgetError,
    IntegerOverflowError,
    IterationLimitError,
    LrkbestError,
    RankDeficientError,
)
from .instrument import DetectCounters
from .kbest import find_kbest_children, lr_kbest_detect, lr_kbest_detect_nld
from .latred import (
    ReducedBasis,
    ReductionDiagnostics,
    integer_det,
    is_unimodular,
    lll_reduce,
    log_orthogonality_defect,
    reduction_diagnostics,
)
from .matstack import QRFactors, RealSystem, complex_to_real, mmse_extend, qr_decompose
from .simkit import (
    BerPoint,
    DetectorKind,
    SimConfig,
    awgn_bound,
    bpsk_rayleigh_ber,
    calibrate_noise,
    demap_symbols,
    generate_channel,
    map_bits,
    run_ber_point,
    run_ber_sweep,
    trial_rng,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND_NAME",
    "available_backends",
    "ConstellationSpec",
    "quantize",
    "mmse_linear_detect",
    "mmse_sic_detect",
    "lr_mmse_sic_detect",
    "sphere_decode_mld",
    "kbest_sdomain_detect",
    "LrkbestError",
    "RankDeficientError",
    "IterationLimitError",
    "IntegerOverflowError",
    "EnumerationBudgetError",
    "DetectCounters",
    "find_kbest_children",
    "lr_kbest_detect",
    "lr_kbest_detect_nld",
    "ReducedBasis",
    "ReductionDiagnostics",
    "lll_reduce",
    "integer_det",
    "is_unimodular",
    "log_orthogonality_defect",
    "reduction_diagnostics",
    "QRFactors",
    "RealSystem",
    "complex_to_real",
    "mmse_extend",
    "qr_decompose",
    "DetectorKind",
    "SimConfig",
    "BerPoint",
    "generate_channel",
    "map_bits",
    "demap_symbols",
    "calibrate_noise",
    "awgn_bound",
    "bpsk_rayleigh_ber",
    "trial_rng",
    "run_ber_point",
    "run_ber_sweep",
    "__version__",
]
