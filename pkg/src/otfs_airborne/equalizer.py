"""Effective delay-Doppler channel and zero-forcing equalizers.

DD grids are vectorized row-major over (k, l), i.e. index ``k * M + l``
with the delay index fastest.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .channel import PathSet, apply_channel
from .errors import SingularChannel, SizeGuard
from .modem import ModemConfig, otfs_demodulate, otfs_modulate
from .nsb import beamform_superpose

COND_LIMIT = 1e8
PROBE_LIMIT = 4096
ERASURE_THRESHOLD = 1e-9


def _stream_weights(paths: PathSet, weights, user: int) -> np.ndarray:
    if weights is None:
        return np.eye(paths.port_count)[user]
    w = np.asarray(getattr(weights, "weights", weights))
    return w[user] if w.ndim == 2 else w


def stream_coefficients(paths: PathSet, weights=None, user: int = 0) -> np.ndarray:
    """Per-path scalar gain seen by one user stream, sum_j g_pj w(j).

    With ``weights=None`` the path ports are taken to be streams already.
    """
    return paths.gains @ _stream_weights(paths, weights, user)


def _doppler_kernel(beta: float, n_slots: int) -> np.ndarray:
    """(1/N) sum_n exp(j 2pi n (beta + delta/N)) for delta = -(N-1) .. N-1."""
    delta = np.arange(-(n_slots - 1), n_slots)
    n = np.arange(n_slots)
    kernel = np.exp(2j * np.pi * np.outer(beta + delta / n_slots, n)).mean(axis=1)
    # on-bin Doppler: the sum is exactly 1 or 0, keep the matrix sparse
    cycles = n_slots * beta + delta
    on_bin = np.abs(cycles - np.rint(cycles)) < 1e-12
    whole = on_bin & (np.rint(cycles).astype(int) % n_slots == 0)
    kernel[on_bin] = 0.0
    kernel[whole] = 1.0
    return kernel


def effective_dd_matrix(paths: PathSet, weights, modem: ModemConfig, user: int = 0) -> sp.csr_matrix:
    """Exact sparse map from one user's DD symbols to the received DD grid.

    Each path contributes a cyclic delay shift along l, a Doppler phase
    that depends on the delay bin, and a spread along k given by the
    Dirichlet-type kernel of its Doppler in cycles per block. Integer
    Doppler makes the kernel a single 1; fractional Doppler fills the band.
    """
    M, N = modem.subcarriers, modem.slots
    fs = modem.sample_rate_hz
    coeff = stream_coefficients(paths, weights, user)
    delays = paths.delay_samples(fs)
    k = np.arange(N)[:, None, None]
    l = np.arange(M)[None, :, None]
    kp = np.arange(N)[None, None, :]
    rows = np.broadcast_to(k * M + l, (N, M, N)).ravel()
    rows_all, cols_all, vals_all = [], [], []
    for p in range(paths.path_count):
        if coeff[p] == 0:
            continue
        d = int(delays[p])
        nu = paths.doppler_hz[p]
        beta = nu * modem.block_len / fs
        kernel = _doppler_kernel(beta, N)
        phase = np.exp(2j * np.pi * nu * (modem.cp_len + np.arange(M) - d) / fs)
        cols = np.broadcast_to(kp * M + (l - d) % M, (N, M, N)).ravel()
        vals = coeff[p] * phase[None, :, None] * kernel[kp - k + N - 1]
        rows_all.append(rows)
        cols_all.append(cols)
        vals_all.append(np.broadcast_to(vals, (N, M, N)).ravel())
    size = M * N
    if not rows_all:
        return sp.csr_matrix((size, size), dtype=complex)
    matrix = sp.coo_matrix(
        (np.concatenate(vals_all), (np.concatenate(rows_all), np.concatenate(cols_all))),
        shape=(size, size),
    ).tocsr()
    matrix.eliminate_zeros()
    return matrix


def impulse_probe_matrix(paths: PathSet, weights, modem: ModemConfig, user: int = 0) -> np.ndarray:
    """Brute-force effective matrix: push every unit DD impulse through the
    noiseless transmit/channel/receive chain and stack the outputs."""
    M, N = modem.subcarriers, modem.slots
    size = M * N
    if size > PROBE_LIMIT:
        raise SizeGuard(f"probing {size} columns exceeds the limit of {PROBE_LIMIT}")
    w = _stream_weights(paths, weights, user)
    out = np.empty((size, size), dtype=complex)
    for q in range(size):
        impulse = np.zeros(size, dtype=complex)
        impulse[q] = 1.0
        s = otfs_modulate(impulse.reshape(N, M), modem.cp_len)
        ports = beamform_superpose(w[None, :], s)
        r = apply_channel(ports, paths, modem.sample_rate_hz, modem.block_len, modem.cp_len)
        out[:, q] = otfs_demodulate(r, M, modem.cp_len).ravel()
    return out


def _condition_estimate(matrix: sp.csc_matrix, lu) -> float:
    n = matrix.shape[0]
    inv = spla.LinearOperator(
        (n, n),
        matvec=lu.solve,
        rmatvec=lambda x: lu.solve(x, trans="H"),
        matmat=lu.solve,
        rmatmat=lambda x: lu.solve(x, trans="H"),
        dtype=complex,
    )
    # onenormest normalizes signs with Y / |Y|; exact zeros in the sparse
    # solves only trigger harmless 0/0 warnings there
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        return float(spla.norm(matrix, 1) * spla.onenormest(inv))


def zf_equalize_dd(received: np.ndarray, h_eff, cond_limit: float = COND_LIMIT) -> np.ndarray:
    """Solve H_eff x = vec(received) with a sparse LU factorization.

    Raises :class:`SingularChannel` when the factorization fails or the
    1-norm condition estimate exceeds ``cond_limit``.
    """
    received = np.asarray(received)
    matrix = sp.csc_matrix(h_eff, dtype=complex)
    try:
        lu = spla.splu(matrix)
    except RuntimeError as exc:
        raise SingularChannel(str(exc)) from exc
    cond = _condition_estimate(matrix, lu)
    if not np.isfinite(cond) or cond > cond_limit:
        raise SingularChannel(f"condition estimate {cond:.3g} exceeds {cond_limit:.3g}")
    return lu.solve(received.ravel().astype(complex)).reshape(received.shape)


def ofdm_freq_channel(paths: PathSet, weights, modem: ModemConfig, user: int = 0) -> np.ndarray:
    """Per-symbol, per-subcarrier gains H[n, m] (the diagonal of each block's
    frequency-domain channel, i.e. ignoring inter-carrier leakage)."""
    M, N = modem.subcarriers, modem.slots
    fs = modem.sample_rate_hz
    coeff = stream_coefficients(paths, weights, user)
    delays = paths.delay_samples(fs)
    m = np.arange(M)
    n = np.arange(N)
    l = np.arange(M)
    H = np.zeros((N, M), dtype=complex)
    for p in range(paths.path_count):
        d = int(delays[p])
        nu = paths.doppler_hz[p]
        t = (n[:, None] * modem.block_len + modem.cp_len + l[None, :] - d) / fs
        mean_phase = np.exp(2j * np.pi * nu * t).mean(axis=1)
        H += coeff[p] * mean_phase[:, None] * np.exp(-2j * np.pi * m * d / M)[None, :]
    return H


def zf_equalize_ofdm(received: np.ndarray, freq_channel: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-bin division. Returns (symbols, erased) where ``erased`` marks bins
    with |H| below the erasure threshold; their symbols are set to 0."""
    received = np.asarray(received)
    freq_channel = np.asarray(freq_channel)
    if received.shape != freq_channel.shape:
        raise ValueError(f"shape mismatch {received.shape} vs {freq_channel.shape}")
    erased = np.abs(freq_channel) < ERASURE_THRESHOLD
    safe = np.where(erased, 1.0, freq_channel)
    out = np.where(erased, 0.0, received / safe)
    return out, erased
