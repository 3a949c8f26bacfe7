"""OTFS and CP-OFDM modems with Gray-coded 4-QAM.

Grids are (N, M) arrays: rows are Doppler bins k (DD) or time slots n (TF),
columns are delay bins l (DD) or subcarriers m (TF). All transforms are
unitary. Time signals are 1-D arrays of N blocks, each a cyclic prefix of
``cp_len`` samples followed by M samples at rate M * delta_f.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidLength, LengthMismatch

_SQRT_HALF = np.sqrt(0.5)

# Gray table, bit pair (b0, b1) -> ((1 - 2 b0) + j (1 - 2 b1)) / sqrt(2):
#   00 -> +1+j, 01 -> +1-j, 10 -> -1+j, 11 -> -1-j
QPSK_POINTS = np.array([1 + 1j, 1 - 1j, -1 + 1j, -1 - 1j]) * _SQRT_HALF


@dataclass(frozen=True)
class ModemConfig:
    subcarriers: int             # M
    slots: int                   # N
    subcarrier_spacing_hz: float
    cp_len: int = 0

    @classmethod
    def from_scenario(cls, config) -> "ModemConfig":
        return cls(config.subcarriers, config.doppler_bins, config.subcarrier_spacing_hz, config.cp_len)

    @property
    def sample_rate_hz(self) -> float:
        return self.subcarriers * self.subcarrier_spacing_hz

    @property
    def block_len(self) -> int:
        return self.subcarriers + self.cp_len

    @property
    def frame_len(self) -> int:
        return self.slots * self.block_len

    @property
    def grid_shape(self) -> tuple[int, int]:
        return (self.slots, self.subcarriers)


def qam_map(bits) -> np.ndarray:
    bits = np.asarray(bits, dtype=np.int8).ravel()
    if bits.size % 2:
        raise InvalidLength(f"4-QAM needs an even number of bits, got {bits.size}")
    pairs = bits.reshape(-1, 2)
    return ((1 - 2 * pairs[:, 0]) + 1j * (1 - 2 * pairs[:, 1])) * _SQRT_HALF


def qam_demap(symbols) -> np.ndarray:
    """Nearest-point hard decisions for the Gray table above."""
    s = np.asarray(symbols).ravel()
    return np.column_stack([s.real < 0, s.imag < 0]).astype(np.int8).ravel()


def isfft(grid: np.ndarray) -> np.ndarray:
    """DD -> TF: inverse DFT over Doppler (axis 0), forward DFT over delay (axis 1)."""
    return np.fft.fft(np.fft.ifft(grid, axis=0, norm="ortho"), axis=1, norm="ortho")


def sfft(grid: np.ndarray) -> np.ndarray:
    """TF -> DD, the exact inverse of :func:`isfft`."""
    return np.fft.ifft(np.fft.fft(grid, axis=0, norm="ortho"), axis=1, norm="ortho")


def heisenberg(grid: np.ndarray, cp_len: int = 0) -> np.ndarray:
    """TF grid -> time signal with rectangular pulses and one CP per slot."""
    blocks = np.fft.ifft(grid, axis=1, norm="ortho")
    if cp_len:
        blocks = np.concatenate([blocks[:, -cp_len:], blocks], axis=1)
    return blocks.ravel()


def wigner(signal: np.ndarray, subcarriers: int, cp_len: int = 0) -> np.ndarray:
    """Time signal -> TF grid: drop each CP, forward DFT per slot."""
    signal = np.asarray(signal)
    block = subcarriers + cp_len
    if signal.ndim != 1 or signal.size % block:
        raise LengthMismatch(f"signal length {signal.size} is not a multiple of block length {block}")
    blocks = signal.reshape(-1, block)[:, cp_len:]
    return np.fft.fft(blocks, axis=1, norm="ortho")


def otfs_modulate(dd_grid: np.ndarray, cp_len: int = 0) -> np.ndarray:
    return heisenberg(isfft(dd_grid), cp_len)


def otfs_demodulate(signal: np.ndarray, subcarriers: int, cp_len: int = 0) -> np.ndarray:
    return sfft(wigner(signal, subcarriers, cp_len))


def ofdm_modulate(symbols, n_subcarriers: int = 512, cp_len: int = 4) -> np.ndarray:
    """CP-OFDM; symbols fill subcarriers first, one OFDM symbol per row."""
    symbols = np.asarray(symbols)
    if symbols.size % n_subcarriers:
        raise LengthMismatch(f"{symbols.size} symbols do not fill {n_subcarriers} subcarriers")
    return heisenberg(symbols.reshape(-1, n_subcarriers), cp_len)


def ofdm_demodulate(signal, n_subcarriers: int = 512, cp_len: int = 4) -> np.ndarray:
    """Returns the (n_symbols, n_subcarriers) grid of received subcarrier values."""
    return wigner(signal, n_subcarriers, cp_len)
