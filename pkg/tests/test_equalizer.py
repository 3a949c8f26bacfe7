import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from otfs_airborne.channel import LOS, NLOS, PathSet, add_noise, apply_channel
from otfs_airborne.equalizer import (
    effective_dd_matrix,
    impulse_probe_matrix,
    ofdm_freq_channel,
    stream_coefficients,
    zf_equalize_dd,
    zf_equalize_ofdm,
)
from otfs_airborne.errors import SingularChannel, SizeGuard
from otfs_airborne.modem import (
    ModemConfig,
    ofdm_demodulate,
    ofdm_modulate,
    otfs_demodulate,
    otfs_modulate,
    qam_demap,
    qam_map,
)

from conftest import random_grid


def modem(M, N, cp=2, df=30e3):
    return ModemConfig(subcarriers=M, slots=N, subcarrier_spacing_hz=df, cp_len=cp)


def paths_for(m, gains, delays, dopplers):
    """Single-port paths with delays given in samples."""
    gains = np.asarray(gains, dtype=complex).reshape(-1, 1)
    delays = np.asarray(delays, dtype=float) / m.sample_rate_hz
    kinds = (LOS,) + (NLOS,) * (len(gains) - 1)
    return PathSet(gains, delays, np.asarray(dopplers, dtype=float), kinds, 10.0)


def random_paths(m, rng, fractional=True):
    nu = rng.uniform(-0.45, 0.45) * m.subcarrier_spacing_hz if fractional else 0.0
    gains = random_grid(rng, 2) / np.sqrt(2)
    return paths_for(m, gains, [0, rng.integers(1, m.cp_len + 1)], [nu, nu])


class TestStructure:
    def test_identity(self):
        m = modem(8, 4)
        h = effective_dd_matrix(paths_for(m, [1.0], [0], [0.0]), None, m)
        assert (h != sp.identity(32)).nnz == 0

    def test_integer_delay_is_permutation(self):
        m = modem(8, 4)
        h = effective_dd_matrix(paths_for(m, [1.0], [0], [0.0]), None, m)
        assert h.nnz == 32
        d = 2
        p = PathSet(np.array([[0.0], [1.0]], dtype=complex), np.array([0.0, d / m.sample_rate_hz]),
                    np.zeros(2), (LOS, NLOS), 1.0)
        h = effective_dd_matrix(p, None, m).toarray()
        assert np.count_nonzero(h) == 32
        np.testing.assert_allclose(np.abs(h).sum(axis=0), 1.0)
        np.testing.assert_allclose(np.abs(h[h != 0]), 1.0)
        x = random_grid(np.random.default_rng(0), (4, 8))
        np.testing.assert_allclose(np.abs(h @ x.ravel()).reshape(4, 8), np.abs(np.roll(x, d, axis=1)))

    def test_integer_doppler_stays_sparse(self):
        m = modem(8, 4)
        # exactly one Doppler bin: nu * block_len / fs = 1/N
        nu = m.sample_rate_hz / (m.block_len * m.slots)
        h = effective_dd_matrix(paths_for(m, [1.0], [0], [nu]), None, m)
        assert h.nnz == 32

    def test_stream_coefficients(self, rng):
        g = random_grid(rng, (2, 3))
        p = PathSet(g, np.zeros(2), np.zeros(2), (LOS, NLOS), 1.0)
        w = random_grid(rng, (2, 3))
        np.testing.assert_allclose(stream_coefficients(p, w, user=1), g @ w[1])
        np.testing.assert_allclose(stream_coefficients(p, None, user=2), g[:, 2])


@pytest.mark.parametrize("M, N", [(4, 4), (8, 4), (16, 8)])
def test_matches_impulse_probe(M, N):
    m = modem(M, N)
    worst = 0.0
    for seed in range(50):
        p = random_paths(m, np.random.default_rng(seed))
        diff = effective_dd_matrix(p, None, m).toarray() - impulse_probe_matrix(p, None, m)
        worst = max(worst, np.abs(diff).max())
    assert worst <= 1e-10


def test_matches_probe_through_precoder(rng):
    m = modem(8, 4)
    g = random_grid(rng, (2, 5))
    w = random_grid(rng, (3, 5))
    p = PathSet(g, np.array([0.0, 1 / m.sample_rate_hz]), np.full(2, 7e3), (LOS, NLOS), 1.0)
    np.testing.assert_allclose(
        effective_dd_matrix(p, w, m, user=1).toarray(), impulse_probe_matrix(p, w, m, user=1), atol=1e-12
    )


def test_probe_size_guard():
    with pytest.raises(SizeGuard):
        impulse_probe_matrix(paths_for(modem(128, 64), [1.0], [0], [0.0]), None, modem(128, 64))


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), frac=st.floats(-0.45, 0.45))
def test_zf_noiseless_recovery(seed, frac):
    rng = np.random.default_rng(seed)
    m = modem(16, 8, cp=4)
    gains = [1.0, 0.3 * np.exp(2j * np.pi * rng.uniform())]
    p = paths_for(m, gains, [0, int(rng.integers(1, 5))], [frac * 30e3] * 2)
    x = random_grid(rng, (8, 16))
    r = otfs_demodulate(apply_channel(otfs_modulate(x, 4), p, m.sample_rate_hz, m.block_len, 4), 16, 4)
    est = zf_equalize_dd(r, effective_dd_matrix(p, None, m))
    np.testing.assert_allclose(est, x, atol=1e-9)


class TestZeroForcing:
    def test_scaled_identity(self, rng):
        c = 0.4 - 1.1j
        x = random_grid(rng, (4, 8))
        np.testing.assert_allclose(zf_equalize_dd(c * x, c * sp.identity(32)), x, atol=1e-14)

    def test_matches_dense_solve_with_noise(self, rng):
        m = modem(16, 8, cp=4)
        p = random_paths(m, rng)
        h = effective_dd_matrix(p, None, m)
        x = qam_map(rng.integers(0, 2, 2 * 128)).reshape(8, 16)
        y = (h @ x.ravel()).reshape(8, 16)
        y = add_noise(y, np.mean(np.abs(y) ** 2) / 1000, rng)
        dense = np.linalg.solve(h.toarray(), y.ravel()).reshape(8, 16)
        np.testing.assert_allclose(zf_equalize_dd(y, h), dense, atol=1e-10)

    def test_singular_channel(self):
        h = sp.diags(np.r_[np.ones(31), 0.0]).tocsc()
        with pytest.raises(SingularChannel):
            zf_equalize_dd(np.ones((4, 8)), h)

    def test_ill_conditioned_channel(self):
        h = sp.diags(np.r_[np.ones(31), 1e-12])
        with pytest.raises(SingularChannel):
            zf_equalize_dd(np.ones((4, 8)), h)

    def test_destructive_paths_flagged(self):
        m = modem(8, 4)
        p = paths_for(m, [1.0, -1.0], [0, 0], [0.0, 0.0])
        with pytest.raises(SingularChannel):
            zf_equalize_dd(np.ones((4, 8)), effective_dd_matrix(p, None, m))


class TestOfdm:
    @pytest.mark.parametrize("g", [1.0, 2 * np.exp(1j * np.pi / 4)])
    def test_flat(self, rng, g):
        m = modem(16, 4)
        H = ofdm_freq_channel(paths_for(m, [g], [0], [0.0]), None, m)
        np.testing.assert_allclose(H, g)
        x = random_grid(rng, (4, 16))
        est, erased = zf_equalize_ofdm(g * x, H)
        np.testing.assert_allclose(est, x, atol=1e-12)
        assert not erased.any()

    def test_two_tap_frequency_selective(self, rng):
        m = modem(16, 4, cp=4)
        p = paths_for(m, [1.0, 0.5j], [0, 3], [0.0, 0.0])
        H = ofdm_freq_channel(p, None, m)
        expected = 1.0 + 0.5j * np.exp(-2j * np.pi * np.arange(16) * 3 / 16)
        np.testing.assert_allclose(H, np.broadcast_to(expected, (4, 16)), atol=1e-12)
        x = random_grid(rng, (4, 16))
        rx = apply_channel(ofdm_modulate(x.ravel(), 16, 4), p, m.sample_rate_hz, m.block_len, 4)
        est, _ = zf_equalize_ofdm(ofdm_demodulate(rx, 16, 4), H)
        np.testing.assert_allclose(est, x, atol=1e-10)

    def test_erasures(self):
        H = np.array([[1.0, 1e-12, 2.0]])
        est, erased = zf_equalize_ofdm(np.array([[1.0, 1.0, 1.0]]), H)
        assert erased.tolist() == [[False, True, False]]
        assert est[0, 1] == 0 and est[0, 2] == 0.5

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            zf_equalize_ofdm(np.ones((2, 4)), np.ones((4, 2)))


def test_zero_doppler_otfs_matches_per_bin_division(rng):
    """A single static tap is a scalar in both domains, so the two ZF paths agree."""
    m = modem(16, 8, cp=4)
    g = 0.8 * np.exp(0.3j)
    p = paths_for(m, [g], [0], [0.0])
    x = random_grid(rng, (8, 16))
    tx = otfs_modulate(x, 4)
    rx = add_noise(apply_channel(tx, p, m.sample_rate_hz, m.block_len, 4), 0.01, rng)
    otfs = zf_equalize_dd(otfs_demodulate(rx, 16, 4), effective_dd_matrix(p, None, m))
    ofdm, _ = zf_equalize_ofdm(otfs_demodulate(rx, 16, 4), np.full((8, 16), g))
    np.testing.assert_allclose(otfs, ofdm, atol=1e-9)
    assert np.array_equal(qam_demap(otfs), qam_demap(ofdm))
