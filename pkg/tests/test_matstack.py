"""Real stacking, MMSE extension, and QR normalization."""

import numpy as np
import pytest

from lrkbest.errors import RankDeficientError
from lrkbest.matstack import complex_to_real, mmse_extend, qr_decompose


def _random_complex(rng, rows, cols):
    return rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))


def test_complex_to_real_block_structure():
    rng = np.random.default_rng(1)
    hc = _random_complex(rng, 3, 2)
    yc = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    h, y = complex_to_real(hc, yc)
    assert h.shape == (6, 4)
    assert y.shape == (6,)
    np.testing.assert_array_equal(h[:3, :2], hc.real)
    np.testing.assert_array_equal(h[:3, 2:], -hc.imag)
    np.testing.assert_array_equal(h[3:, :2], hc.imag)
    np.testing.assert_array_equal(h[3:, 2:], hc.real)
    np.testing.assert_array_equal(y[:3], yc.real)
    np.testing.assert_array_equal(y[3:], yc.imag)


def test_complex_to_real_preserves_multiplication():
    rng = np.random.default_rng(2)
    for _ in range(20):
        hc = _random_complex(rng, 4, 3)
        sc = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        yc = hc @ sc
        h, y = complex_to_real(hc, yc)
        s = np.concatenate([sc.real, sc.imag])
        np.testing.assert_allclose(h @ s, y, atol=1e-12)


def test_complex_to_real_validation():
    rng = np.random.default_rng(3)
    hc = _random_complex(rng, 3, 2)
    with pytest.raises(ValueError):
        complex_to_real(hc, np.zeros(4, dtype=complex))
    with pytest.raises(ValueError):
        complex_to_real(hc[0], np.zeros(2, dtype=complex))
    bad = hc.copy()
    bad[0, 0] = np.nan
    with pytest.raises(ValueError):
        complex_to_real(bad, np.zeros(3, dtype=complex))


def test_mmse_extend_layout_and_values():
    rng = np.random.default_rng(4)
    hc = _random_complex(rng, 3, 3)
    yc = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    h, y = complex_to_real(hc, yc)
    noise_var, symbol_var = 0.8, 5.0
    system = mmse_extend(h, y, noise_var, symbol_var)
    alpha = np.sqrt(noise_var / (2.0 * symbol_var))
    assert system.H_ext.shape == (12, 6)
    np.testing.assert_array_equal(system.H_ext[:6], h)
    np.testing.assert_allclose(system.H_ext[6:], alpha * np.eye(6), atol=1e-15)
    np.testing.assert_array_equal(system.y_ext[:6], y)
    np.testing.assert_array_equal(system.y_ext[6:], np.zeros(6))
    assert system.nt == 3 and system.nr == 3
    assert system.noise_var == noise_var and system.symbol_var == symbol_var


def test_mmse_extend_validation():
    h = np.eye(4)
    y = np.zeros(4)
    with pytest.raises(ValueError):
        mmse_extend(h, y, 0.0, 1.0)
    with pytest.raises(ValueError):
        mmse_extend(h, y, 1.0, -1.0)
    with pytest.raises(ValueError):
        mmse_extend(h, np.zeros(3), 1.0, 1.0)
    with pytest.raises(ValueError):
        mmse_extend(np.eye(3), np.zeros(3), 1.0, 1.0)  # odd dimensions


def test_qr_decompose_properties():
    rng = np.random.default_rng(5)
    for rows, cols in [(6, 6), (10, 6), (9, 4)]:
        a = rng.standard_normal((rows, cols))
        f = qr_decompose(a)
        assert f.Q.shape == (rows, cols)
        assert f.R.shape == (cols, cols)
        np.testing.assert_allclose(f.Q.T @ f.Q, np.eye(cols), atol=1e-12)
        np.testing.assert_allclose(f.Q @ f.R, a, atol=1e-12)
        assert np.all(np.diagonal(f.R) > 0)
        assert np.allclose(f.R, np.triu(f.R))


def test_qr_decompose_rank_deficient():
    a = np.ones((4, 2))
    a[:, 1] = 2.0 * a[:, 0]
    with pytest.raises(RankDeficientError):
        qr_decompose(a)


def test_qr_decompose_rejects_wide():
    with pytest.raises(ValueError):
        qr_decompose(np.ones((2, 4)))
