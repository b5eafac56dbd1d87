"""Monte Carlo bit-error-rate simulation of the detectors.

Each trial draws an i.i.d. Rayleigh channel, Gray-mapped QAM symbols, and
complex Gaussian noise calibrated from Eb/N0, then runs one detector and
counts bit errors.  Trials use counter-based random streams keyed by
``(seed, point, trial)``, so results are reproducible and independent of
batching or worker count; sweeps stop per point once ``min_bit_errors`` have
been seen or ``max_trials`` are spent.
"""

import enum
import math
import time
from collections import deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .detectors import (
    MAX_ENUM_BITS,
    ConstellationSpec,
    kbest_sdomain_detect,
    lr_mmse_sic_detect,
    mmse_linear_detect,
    mmse_sic_detect,
    sphere_decode_mld,
)
from .instrument import DetectCounters
from .kbest import lr_kbest_detect, lr_kbest_detect_nld
from .latred import lll_reduce
from .matstack import RealSystem, complex_to_real, mmse_extend, qr_decompose

__all__ = [
    "DetectorKind",
    "SimConfig",
    "BerPoint",
    "DEFAULT_BATCH_SIZE",
    "generate_channel",
    "map_bits",
    "demap_symbols",
    "calibrate_noise",
    "awgn_bound",
    "bpsk_rayleigh_ber",
    "trial_rng",
    "run_ber_point",
    "run_ber_sweep",
]

DEFAULT_BATCH_SIZE = 100
SUPPORTED_QAM = (4, 16, 64, 256)


class DetectorKind(enum.Enum):
    """Detector selector; values double as the CLI spelling."""

    KBEST_LR_MMSE = "kbest_lr_mmse"
    KBEST_LR = "kbest_lr"
    KBEST_SDOMAIN = "kbest_sdomain"
    LR_MMSE_SIC = "lr_mmse_sic"
    MMSE_SIC = "mmse_sic"
    MMSE_LD = "mmse_ld"
    MLD = "mld"


_NEEDS_RAW_FULL_RANK = frozenset(
    {DetectorKind.KBEST_LR, DetectorKind.KBEST_SDOMAIN, DetectorKind.MLD}
)


@dataclass(frozen=True)
class SimConfig:
    """One simulated curve: antenna counts, constellation, detector, grid."""

    nt: int
    nr: int
    m: int
    detector: DetectorKind
    ebn0_grid_db: tuple[float, ...]
    k: int = 1
    min_bit_errors: int = 100
    max_trials: int = 100_000
    seed: int = 1
    delta: float = 0.99
    batch_size: int = DEFAULT_BATCH_SIZE

    def validate(self) -> None:
        if self.nt < 1 or self.nr < 1:
            raise ValueError(f"antenna counts must be positive, got nt={self.nt} nr={self.nr}")
        if self.m not in SUPPORTED_QAM:
            raise ValueError(f"QAM order must be one of {SUPPORTED_QAM}, got {self.m}")
        if not isinstance(self.detector, DetectorKind):
            raise ValueError(f"unknown detector {self.detector!r}")
        if self.detector in _NEEDS_RAW_FULL_RANK and self.nr < self.nt:
            raise ValueError(
                f"{self.detector.value} needs nr >= nt (raw channel must have full column"
                f" rank), got nt={self.nt} nr={self.nr}"
            )
        if self.detector is DetectorKind.MLD:
            spec = ConstellationSpec.for_qam(self.m)
            bits = 2 * self.nt * spec.bits_per_real_symbol
            if bits > MAX_ENUM_BITS:
                raise ValueError(
                    f"mld over {bits} bits exceeds the {MAX_ENUM_BITS}-bit exact-search budget"
                )
        if not self.ebn0_grid_db:
            raise ValueError("Eb/N0 grid must be nonempty")
        if not all(math.isfinite(v) for v in self.ebn0_grid_db):
            raise ValueError("Eb/N0 grid entries must be finite")
        if len(self.ebn0_grid_db) > 2**16:
            raise ValueError("Eb/N0 grid is limited to 65536 points")
        if self.k < 1:
            raise ValueError(f"k must be positive, got {self.k}")
        if self.min_bit_errors < 1:
            raise ValueError(f"min_bit_errors must be positive, got {self.min_bit_errors}")
        if not 1 <= self.max_trials < 2**48:
            raise ValueError(f"max_trials must lie in [1, 2**48), got {self.max_trials}")
        if not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if not 0.25 < self.delta < 1.0:
            raise ValueError(f"delta must lie in (0.25, 1.0), got {self.delta}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be positive, got {self.batch_size}")


@dataclass(frozen=True)
class BerPoint:
    """Measured bit error rate at one Eb/N0 grid point."""

    ebn0_db: float
    trials: int
    bits: int
    bit_errors: int
    ber: float
    children_per_layer: float
    heap_updates_per_layer: float
    wall_seconds: float


def generate_channel(rng: np.random.Generator, nt: int, nr: int) -> np.ndarray:
    """Draw an ``(nr, nt)`` channel with i.i.d. unit-variance complex entries."""
    return math.sqrt(0.5) * (
        rng.standard_normal((nr, nt)) + 1j * rng.standard_normal((nr, nt))
    )


def _gray_encode(index: np.ndarray) -> np.ndarray:
    return index ^ (index >> 1)


def _gray_decode(code: np.ndarray) -> np.ndarray:
    out = code.copy()
    shift = 1
    while shift < 16:
        out ^= out >> shift
        shift <<= 1
    return out


def map_bits(bits: np.ndarray, spec: ConstellationSpec) -> np.ndarray:
    """Gray-map a bit vector to complex QAM symbols.

    Bits are consumed per antenna as ``[real bits, imag bits]`` with the most
    significant bit first; each half Gray-codes one PAM index.  The length
    must be a multiple of ``2 * bits_per_real_symbol``.
    """
    b = spec.bits_per_real_symbol
    arr = np.asarray(bits, dtype=np.int64)
    if arr.ndim != 1 or arr.size == 0 or arr.size % (2 * b):
        raise ValueError(
            f"bit vector length must be a positive multiple of {2 * b}, got {arr.size}"
        )
    if ((arr != 0) & (arr != 1)).any():
        raise ValueError("bits must be 0 or 1")
    groups = arr.reshape(-1, 2, b)
    weights = np.int64(1) << np.arange(b - 1, -1, -1, dtype=np.int64)
    gray = groups @ weights
    index = _gray_decode(gray)
    pam = 2.0 * index - (spec.levels - 1)
    return pam[:, 0] + 1j * pam[:, 1]


def demap_symbols(s_real: np.ndarray, spec: ConstellationSpec) -> np.ndarray:
    """Recover the Gray-mapped bits from a real-stacked PAM symbol vector.

    ``s_real`` is ``[real parts; imag parts]`` as produced by the detectors;
    entries are snapped to the nearest grid index before decoding.
    """
    s = np.asarray(s_real, dtype=np.float64)
    if s.ndim != 1 or s.size % 2:
        raise ValueError(f"expected an even-length real symbol vector, got shape {s.shape}")
    nt = s.size // 2
    b = spec.bits_per_real_symbol
    index = np.rint((s + (spec.levels - 1)) / 2.0).astype(np.int64)
    index = np.clip(index, 0, spec.levels - 1)
    gray = _gray_encode(index)
    shifts = np.arange(b - 1, -1, -1, dtype=np.int64)
    bit_rows = (gray[:, None] >> shifts[None, :]) & 1
    out = np.empty((nt, 2, b), dtype=np.int64)
    out[:, 0, :] = bit_rows[:nt]
    out[:, 1, :] = bit_rows[nt:]
    return out.reshape(-1)


def calibrate_noise(m: int, nr: int, ebn0_db: float) -> float:
    """Complex noise variance N0 for a target per-bit SNR.

    The received energy per complex symbol is ``nr * 2 * (m - 1) / 3`` under
    the unit-variance channel, giving ``N0 = nr * Es / (log2(m) * 10**(x/10))``.
    """
    spec = ConstellationSpec.for_qam(m)
    if nr < 1:
        raise ValueError(f"nr must be positive, got {nr}")
    return nr * spec.energy_complex / (math.log2(m) * 10.0 ** (ebn0_db / 10.0))


def _qfunc(x: float) -> float:
    return 0.5 * math.erfc(x / math.sqrt(2.0))


def awgn_bound(m: int, ebn0_db: float) -> float:
    """Nearest-neighbour BER approximation of Gray M-QAM on the AWGN channel.

    ``(4 / log2(m)) * (1 - 1/sqrt(m)) * Q(sqrt(3 * log2(m) / (m - 1) * g))``
    with ``g`` the linear Eb/N0.
    """
    ConstellationSpec.for_qam(m)
    g = 10.0 ** (ebn0_db / 10.0)
    arg = math.sqrt(3.0 * math.log2(m) / (m - 1) * g)
    return (4.0 / math.log2(m)) * (1.0 - 1.0 / math.sqrt(m)) * _qfunc(arg)


def bpsk_rayleigh_ber(ebn0_db: float) -> float:
    """Exact BPSK bit error rate on the flat Rayleigh fading channel."""
    g = 10.0 ** (ebn0_db / 10.0)
    return 0.5 * (1.0 - math.sqrt(g / (1.0 + g)))


def trial_rng(seed: int, point_idx: int, trial_idx: int) -> np.random.Generator:
    """Counter-based generator for one trial, independent of all others."""
    key = np.array([seed, (point_idx << 48) + trial_idx], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _detect_symbols(
    system: RealSystem,
    spec: ConstellationSpec,
    detector: DetectorKind,
    k: int,
    delta: float,
    counters: DetectCounters,
) -> np.ndarray:
    if detector is DetectorKind.MMSE_LD:
        return mmse_linear_detect(system, spec)
    if detector is DetectorKind.MMSE_SIC:
        return mmse_sic_detect(system, spec)
    if detector is DetectorKind.MLD:
        return sphere_decode_mld(system.H, system.y, spec, counters=counters)
    if detector is DetectorKind.KBEST_SDOMAIN:
        return kbest_sdomain_detect(system, k, spec, counters)
    if detector is DetectorKind.LR_MMSE_SIC:
        reduced = lll_reduce(system.H_ext, delta)
        factors = qr_decompose(reduced.basis)
        return lr_mmse_sic_detect(system, reduced, factors, spec)
    if detector is DetectorKind.KBEST_LR_MMSE:
        reduced = lll_reduce(system.H_ext, delta)
        factors = qr_decompose(reduced.basis)
        return lr_kbest_detect(system, reduced, factors, k, spec, counters)
    if detector is DetectorKind.KBEST_LR:
        reduced = lll_reduce(system.H, delta)
        factors = qr_decompose(reduced.basis)
        return lr_kbest_detect_nld(system, reduced, factors, k, spec, counters)
    raise ValueError(f"unknown detector {detector!r}")


def _simulate_trial(
    cfg: SimConfig,
    spec: ConstellationSpec,
    n0: float,
    rng: np.random.Generator,
    counters: DetectCounters,
) -> tuple[int, int]:
    hc = generate_channel(rng, cfg.nt, cfg.nr)
    bits = rng.integers(0, 2, size=cfg.nt * 2 * spec.bits_per_real_symbol, dtype=np.int64)
    sc = map_bits(bits, spec)
    noise = math.sqrt(n0 / 2.0) * (
        rng.standard_normal(cfg.nr) + 1j * rng.standard_normal(cfg.nr)
    )
    yc = hc @ sc + noise
    h, y = complex_to_real(hc, yc)
    system = mmse_extend(h, y, n0, spec.symbol_var)
    s_hat = _detect_symbols(system, spec, cfg.detector, cfg.k, cfg.delta, counters)
    bits_hat = demap_symbols(s_hat, spec)
    return int(np.count_nonzero(bits_hat != bits)), bits.size


def _run_batch(
    cfg: SimConfig,
    point_idx: int,
    n0: float,
    start: int,
    count: int,
) -> tuple[int, int, int, DetectCounters]:
    spec = ConstellationSpec.for_qam(cfg.m)
    counters = DetectCounters()
    errors = 0
    bits = 0
    for trial in range(start, start + count):
        rng = trial_rng(cfg.seed, point_idx, trial)
        e, b = _simulate_trial(cfg, spec, n0, rng, counters)
        errors += e
        bits += b
    return errors, bits, count, counters


def run_ber_point(
    cfg: SimConfig,
    ebn0_db: float,
    point_idx: int,
    *,
    workers: int = 1,
) -> BerPoint:
    """Simulate one grid point until the stopping rule triggers.

    Trials are processed in fixed batches of ``cfg.batch_size`` consumed in
    submission order, so the result is identical for any ``workers`` value.
    """
    cfg.validate()
    n0 = calibrate_noise(cfg.m, cfg.nr, ebn0_db)
    t0 = time.perf_counter()
    errors = bits = trials = 0
    counters = DetectCounters()

    def absorb(batch_result) -> bool:
        nonlocal errors, bits, trials
        e, b, c, ctr = batch_result
        errors += e
        bits += b
        trials += c
        counters.merge(ctr)
        return errors >= cfg.min_bit_errors or trials >= cfg.max_trials

    if workers <= 1:
        start = 0
        while start < cfg.max_trials:
            count = min(cfg.batch_size, cfg.max_trials - start)
            stop = absorb(_run_batch(cfg, point_idx, n0, start, count))
            start += count
            if stop:
                break
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            pending: deque = deque()
            next_start = 0

            def top_up() -> None:
                nonlocal next_start
                while len(pending) < workers + 2 and next_start < cfg.max_trials:
                    count = min(cfg.batch_size, cfg.max_trials - next_start)
                    pending.append(
                        pool.submit(_run_batch, cfg, point_idx, n0, next_start, count)
                    )
                    next_start += count

            top_up()
            while pending:
                if absorb(pending.popleft().result()):
                    for fut in pending:
                        fut.cancel()
                    pending.clear()
                    break
                top_up()
    wall = time.perf_counter() - t0
    return BerPoint(
        ebn0_db=float(ebn0_db),
        trials=trials,
        bits=bits,
        bit_errors=errors,
        ber=errors / bits if bits else 0.0,
        children_per_layer=counters.children / counters.layers if counters.layers else 0.0,
        heap_updates_per_layer=(
            counters.heap_updates / counters.layers if counters.layers else 0.0
        ),
        wall_seconds=wall,
    )


def run_ber_sweep(
    cfg: SimConfig,
    *,
    workers: int = 1,
    progress=None,
) -> list[BerPoint]:
    """Run every Eb/N0 grid point of ``cfg`` and return the measured points.

    ``progress``, if given, is called with each finished :class:`BerPoint`.
    """
    cfg.validate()
    points = []
    for point_idx, ebn0_db in enumerate(cfg.ebn0_grid_db):
        point = run_ber_point(cfg, ebn0_db, point_idx, workers=workers)
        points.append(point)
        if progress is not None:
            progress(cfg, point)
    return points
