"""Rician LoS + NLoS air-to-ground channel, link budget and thermal noise."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import BOLTZMANN, SPEED_OF_LIGHT, LinkBudget
from .errors import DelayExceedsCp, LengthMismatch
from .geometry import LinkKinematics

LOS = "los"
NLOS = "nlos"


@dataclass(frozen=True)
class PathSet:
    """Propagation paths toward one receiving user.

    ``gains[p, j]`` is the complex gain of path ``p`` from transmit port ``j``.
    Ports are array elements for a realized channel, or user streams after
    :meth:`through_precoder`. All ports share each path's delay and Doppler.
    """

    gains: np.ndarray           # (P, J)
    delays_s: np.ndarray        # (P,)
    doppler_hz: np.ndarray      # (P,)
    kinds: tuple[str, ...]
    kappa_linear: float

    @property
    def path_count(self) -> int:
        return self.gains.shape[0]

    @property
    def port_count(self) -> int:
        return self.gains.shape[1]

    def reference_delay(self) -> float:
        los = [p for p, k in enumerate(self.kinds) if k == LOS]
        if los:
            return float(self.delays_s[los[0]])
        return float(np.min(self.delays_s))

    def delay_samples(self, sample_rate_hz: float) -> np.ndarray:
        """Excess delay over the LoS path, rounded to whole samples."""
        rel = (self.delays_s - self.reference_delay()) * sample_rate_hz
        return np.rint(rel).astype(int)

    def through_precoder(self, precode) -> "PathSet":
        """Collapse element ports onto user streams: gain_p,i = sum_j g_p,j w_i(j)."""
        weights = np.asarray(getattr(precode, "weights", precode))
        return PathSet(
            gains=self.gains @ weights.T,
            delays_s=self.delays_s,
            doppler_hz=self.doppler_hz,
            kinds=self.kinds,
            kappa_linear=self.kappa_linear,
        )


def rician_amplitudes(kappa_db: float) -> tuple[float, float]:
    """LoS amplitude and NLoS standard deviation for a Rician K in dB."""
    if np.isposinf(kappa_db):
        return 1.0, 0.0
    k = 10.0 ** (kappa_db / 10.0)
    return float(np.sqrt(k / (k + 1))), float(np.sqrt(1 / (k + 1)))


def realize_channel(
    steering_rx: np.ndarray,
    kinematics: LinkKinematics,
    kappa_db: float,
    rng: np.random.Generator,
    excess_delay_s: float = 150e-9,
) -> PathSet:
    """Draw one block-fading realization with one LoS and one NLoS path.

    The LoS gain on element j is sqrt(K/(K+1)) conj(a(j)), so that a weight
    vector w reaches the user as a^H w. NLoS gains are i.i.d. CN(0, 1/(K+1))
    per element. Both paths share the user's Doppler.
    """
    steering_rx = np.asarray(steering_rx, dtype=complex)
    n_elem = steering_rx.size
    los_amp, nlos_std = rician_amplitudes(kappa_db)
    scatter = (rng.standard_normal(n_elem) + 1j * rng.standard_normal(n_elem)) * np.sqrt(0.5)
    gains = np.vstack([los_amp * steering_rx.conj(), nlos_std * scatter])
    return PathSet(
        gains=gains,
        delays_s=np.array([kinematics.delay_s, kinematics.delay_s + excess_delay_s]),
        doppler_hz=np.full(2, kinematics.doppler_hz),
        kinds=(LOS, NLOS),
        kappa_linear=float(10.0 ** (kappa_db / 10.0)),
    )


def apply_channel(
    port_signals,
    paths: PathSet,
    sample_rate_hz: float,
    block_len: int,
    cp_len: int,
    amplitude_scale: float = 1.0,
) -> np.ndarray:
    """Received signal r[q] = scale * sum_p e^{j2pi nu_p (q - d_p)/fs} sum_j g_pj s_j[q - d_p].

    Delays are whole samples relative to the LoS path and wrap inside each
    CP-extended block of ``block_len`` samples.
    """
    signals = np.asarray(port_signals)
    if signals.ndim == 1:
        signals = signals[None, :]
    if signals.shape[0] != paths.port_count:
        raise LengthMismatch(f"{signals.shape[0]} port signals for {paths.port_count} channel ports")
    n_samples = signals.shape[1]
    if n_samples % block_len:
        raise LengthMismatch(f"signal length {n_samples} is not a multiple of block length {block_len}")
    delays = paths.delay_samples(sample_rate_hz)
    if np.any(delays > cp_len):
        raise DelayExceedsCp(f"path delay of {delays.max()} samples exceeds cp_len={cp_len}")
    q = np.arange(n_samples)
    out = np.zeros(n_samples, dtype=complex)
    for p in range(paths.path_count):
        combined = paths.gains[p] @ signals
        d = int(delays[p])
        if d:
            combined = np.roll(combined.reshape(-1, block_len), d, axis=1).ravel()
        phase = np.exp(2j * np.pi * paths.doppler_hz[p] * (q - d) / sample_rate_hz)
        out += phase * combined
    return amplitude_scale * out


def noise_power_watts(temperature_k: float, bandwidth_hz: float, noise_figure_db: float) -> float:
    if temperature_k <= 0 or bandwidth_hz <= 0:
        raise ValueError("temperature and bandwidth must be positive")
    return BOLTZMANN * temperature_k * bandwidth_hz * 10.0 ** (noise_figure_db / 10.0)


def watts_to_dbm(p_w: float) -> float:
    return 10.0 * np.log10(p_w) + 30.0


def dbm_to_watts(p_dbm: float) -> float:
    return 10.0 ** ((p_dbm - 30.0) / 10.0)


def free_space_loss_db(distance_m: float, carrier_hz: float) -> float:
    wavelength = SPEED_OF_LIGHT / carrier_hz
    return 20.0 * np.log10(4 * np.pi * distance_m / wavelength)


def received_power_dbm(budget: LinkBudget, distance_m: float, carrier_hz: float) -> float:
    if distance_m <= 0:
        raise ValueError("distance must be positive")
    if budget.tx_gain_db is None:
        raise ValueError("budget.tx_gain_db is unresolved; call budget.resolved(...) first")
    return (
        budget.tx_power_dbm
        + budget.tx_gain_db
        - budget.backoff_db
        - budget.atmos_loss_db
        - free_space_loss_db(distance_m, carrier_hz)
        + budget.rx_gain_db
        - budget.rx_other_loss_db
    )


def budget_noise_watts(budget: LinkBudget) -> float:
    if budget.bandwidth_hz is None:
        raise ValueError("budget.bandwidth_hz is unresolved; call budget.resolved(...) first")
    return noise_power_watts(budget.temperature_k, budget.bandwidth_hz, budget.noise_figure_db)


def link_budget_amplitude(budget: LinkBudget, distance_m: float, carrier_hz: float, element_count: int) -> float:
    """Channel scale for link-budget mode.

    Chosen so that an unprojected LoS beam (w = a, gain L^2 in amplitude) on
    a unit-power stream delivers exactly the budgeted P_r.
    """
    p_r = dbm_to_watts(received_power_dbm(budget, distance_m, carrier_hz))
    return float(np.sqrt(p_r) / element_count)


def add_noise(signal, sigma2_w: float, rng: np.random.Generator) -> np.ndarray:
    if sigma2_w < 0:
        raise ValueError("noise power must be >= 0")
    signal = np.asarray(signal, dtype=complex)
    if sigma2_w == 0:
        return signal.copy()
    noise = rng.standard_normal(signal.shape) + 1j * rng.standard_normal(signal.shape)
    return signal + np.sqrt(sigma2_w / 2) * noise
