"""Compiled and pure-Python kernels must make identical decisions.

Integer outputs (selected candidates, transforms, counters) must be equal
exactly; accumulated float costs may differ by rounding because the two
backends reduce the residual dot products in different orders.
"""

import os
import subprocess
import sys

import numpy as np
import pytest

from lrkbest import _backend

pytestmark = pytest.mark.skipif(
    "c" not in _backend.available_backends(),
    reason="compiled kernel extension not built",
)

C = lambda: _backend.get_backend("c")  # noqa: E731
PY = lambda: _backend.get_backend("python")  # noqa: E731


def test_backend_registry():
    assert _backend.available_backends()[-1] == "python"
    assert _backend.get_backend("python").BACKEND_NAME == "python"
    assert _backend.get_backend("py").BACKEND_NAME == "python"
    assert _backend.get_backend("c").BACKEND_NAME == "c"
    with pytest.raises(ValueError):
        _backend.get_backend("fortran")


def _triangular_case(rng, n):
    r = np.triu(rng.standard_normal((n, n)))
    r[np.arange(n), np.arange(n)] = rng.uniform(0.4, 2.0, size=n)
    ybreve = 2.5 * rng.standard_normal(n)
    return np.ascontiguousarray(r), ybreve


def test_layer_kernel_parity():
    rng = np.random.default_rng(40)
    for _ in range(200):
        n = int(rng.integers(1, 12))
        k = int(rng.integers(1, 25))
        p = int(rng.integers(1, k + 1))
        li = int(rng.integers(0, n))
        r, yb = _triangular_case(rng, n)
        pz = rng.integers(-8, 9, size=(p, n)).astype(np.int64)
        pc = np.cumsum(np.abs(rng.standard_normal(p)))
        outs = []
        for mod in (C(), PY()):
            oz = np.zeros((k, n), dtype=np.int64)
            oc = np.zeros(k)
            stats = mod.kbest_layer_kernel(r, yb, li, pz, pc, k, oz, oc)
            outs.append((oz, oc, stats))
        np.testing.assert_array_equal(outs[0][0], outs[1][0])
        np.testing.assert_allclose(outs[0][1], outs[1][1], rtol=1e-12, atol=1e-12)
        assert tuple(outs[0][2]) == tuple(outs[1][2])


def test_search_kernel_parity():
    rng = np.random.default_rng(41)
    for _ in range(100):
        n = int(rng.integers(2, 14))
        k = int(rng.integers(1, 33))
        r, yb = _triangular_case(rng, n)
        zc, cc, *sc = C().kbest_search_kernel(r, yb, k)
        zp, cp, *sp = PY().kbest_search_kernel(r, yb, k)
        np.testing.assert_array_equal(zc, zp)
        np.testing.assert_allclose(cc, cp, rtol=1e-12, atol=1e-12)
        assert sc == sp


def test_sphere_kernel_parity():
    rng = np.random.default_rng(42)
    for _ in range(150):
        n = 2 * int(rng.integers(1, 4))
        levels = int(rng.choice([2, 4, 8]))
        r, yb = _triangular_case(rng, n)
        kc, nodes_c = C().sphere_search_kernel(r, yb, levels)
        kp, nodes_p = PY().sphere_search_kernel(r, yb, levels)
        np.testing.assert_array_equal(kc, kp)
        assert nodes_c == nodes_p


def test_lll_kernel_parity():
    rng = np.random.default_rng(43)
    for _ in range(60):
        m = int(rng.integers(2, 14))
        n = int(rng.integers(2, m + 1))
        a = rng.standard_normal((m, n))
        wc, wp = a.copy(), a.copy()
        tc, sc = C().lll_reduce_kernel(wc, 0.99, 10**6)
        tp, sp = PY().lll_reduce_kernel(wp, 0.99, 10**6)
        np.testing.assert_array_equal(tc, tp)
        np.testing.assert_allclose(wc, wp, rtol=1e-9, atol=1e-9)
        assert sc == sp


def _import_probe(env_value):
    env = dict(os.environ)
    if env_value is None:
        env.pop("LRKBEST_BACKEND", None)
    else:
        env["LRKBEST_BACKEND"] = env_value
    return subprocess.run(
        [sys.executable, "-c", "import lrkbest; print(lrkbest._backend.BACKEND_NAME)"],
        capture_output=True,
        text=True,
        env=env,
    )


def test_environment_selects_backend():
    assert _import_probe(None).stdout.strip() == "c"
    assert _import_probe("c").stdout.strip() == "c"
    assert _import_probe("py").stdout.strip() == "python"
    assert _import_probe("python").stdout.strip() == "python"
    bad = _import_probe("fortran")
    assert bad.returncode != 0
    assert "LRKBEST_BACKEND" in bad.stderr


def test_python_backend_runs_the_public_api():
    probe = subprocess.run(
        [
            sys.executable,
            "-c",
            (
                "from lrkbest.simkit import SimConfig, DetectorKind, run_ber_point\n"
                "cfg = SimConfig(nt=2, nr=2, m=4, detector=DetectorKind.KBEST_LR_MMSE,\n"
                "                ebn0_grid_db=(6.0,), k=4, min_bit_errors=10**9, max_trials=40)\n"
                "p = run_ber_point(cfg, 6.0, 0)\n"
                "print(p.trials, p.bits, p.bit_errors)\n"
            ),
        ],
        capture_output=True,
        text=True,
        env={**os.environ, "LRKBEST_BACKEND": "py"},
    )
    assert probe.returncode == 0, probe.stderr
    trials, bits, errors = probe.stdout.split()
    assert (trials, bits) == ("40", "160")
    ref = subprocess.run(
        [sys.executable, "-c", probe.args[2]],
        capture_output=True,
        text=True,
        env={**os.environ, "LRKBEST_BACKEND": "c"},
    )
    assert ref.stdout == probe.stdout
