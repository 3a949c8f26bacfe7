"""Scenario configuration, link-budget parameters and JSON loading.

Defaults reproduce the full-scale simulation profile (512x16 frame,
100x100 array, five interference tiers). ``ScenarioConfig.desk()`` gives
the reduced profile used by the test suite.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .errors import ConfigError

# Free-space propagation speed. The rounded value reproduces the published
# Doppler (14 kHz at 150 m/s) and supported-speed (160.7 m/s) figures.
SPEED_OF_LIGHT = 3.0e8
BOLTZMANN = 1.380649e-23

WAVEFORMS = ("otfs", "ofdm")
CHANNEL_MODES = ("snr", "link_budget")


@dataclass(frozen=True)
class LinkBudget:
    """Link-budget entries in dB/dBm.

    ``tx_gain_db`` and ``bandwidth_hz`` may be left as ``None``; they are
    then derived from the array size and the frame bandwidth.
    """

    tx_power_dbm: float = 5.0
    tx_gain_db: float | None = None
    backoff_db: float = 10.0
    atmos_loss_db: float = 7.9
    rx_gain_db: float = 60.2
    rx_other_loss_db: float = 1.8
    noise_figure_db: float = 6.0
    temperature_k: float = 290.0
    bandwidth_hz: float | None = None

    def __post_init__(self):
        for name in ("backoff_db", "atmos_loss_db", "rx_other_loss_db"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0")
        if self.temperature_k <= 0:
            raise ConfigError("temperature_k must be > 0")
        if self.bandwidth_hz is not None and self.bandwidth_hz <= 0:
            raise ConfigError("bandwidth_hz must be > 0")

    def resolved(self, array_side: int, bandwidth_hz: float) -> "LinkBudget":
        """Fill derived entries for a given array side and bandwidth."""
        tx_gain = self.tx_gain_db
        if tx_gain is None:
            tx_gain = 10.0 * math.log10(array_side ** 2)
        bw = self.bandwidth_hz if self.bandwidth_hz is not None else bandwidth_hz
        return dataclasses.replace(self, tx_gain_db=tx_gain, bandwidth_hz=bw)


def _is_pow2(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class ScenarioConfig:
    """Physical, waveform and Monte Carlo parameters of one scenario.

    ``mci_center_m`` is the ground (x, y) of the micro-cell of interest.
    ``None`` places it on the macro-cell edge along the heading.
    ``rician_kappa_db`` may be ``inf`` for a pure line-of-sight link.
    """

    macro_radius_m: float = 8000.0
    micro_radius_m: float = 75.0
    altitude_m: float = 10_000.0
    reuse_distance_m: float = 300.0
    reuse_factor: int = 7
    tier_count: int = 5
    carrier_hz: float = 28e9
    velocity_mps: float = 150.0
    heading_unit_vector: tuple[float, float, float] = (1.0, 0.0, 0.0)
    mci_center_m: tuple[float, float] | None = None
    rician_kappa_db: float = 10.0
    subcarriers: int = 512
    doppler_bins: int = 16
    subcarrier_spacing_hz: float = 30e3
    cp_len: int = 4
    qam_order: int = 4
    array_side: int = 100
    excess_delay_s: float = 150e-9
    frame_start_s: float = 0.0
    trials_per_point: int = 200
    rng_seed: int = 0
    waveform_selector: str = "otfs"
    channel_mode: str = "snr"
    link_budget: LinkBudget = field(default_factory=LinkBudget)

    def __post_init__(self):
        if isinstance(self.link_budget, dict):
            object.__setattr__(self, "link_budget", LinkBudget(**self.link_budget))
        object.__setattr__(
            self, "heading_unit_vector", tuple(float(v) for v in self.heading_unit_vector)
        )
        if self.mci_center_m is not None:
            object.__setattr__(self, "mci_center_m", tuple(float(v) for v in self.mci_center_m))
        self._validate()

    def _validate(self):
        if self.micro_radius_m <= 0 or self.macro_radius_m / self.micro_radius_m < 10:
            raise ConfigError("macro_radius_m must be at least 10x micro_radius_m")
        if self.reuse_factor == 7 and not math.isclose(
            self.reuse_distance_m, 4.0 * self.micro_radius_m, rel_tol=1e-9
        ):
            raise ConfigError("reuse factor 7 requires reuse_distance_m = 4 * micro_radius_m")
        if self.altitude_m <= 0:
            raise ConfigError("altitude_m must be > 0")
        if self.tier_count < 0:
            raise ConfigError("tier_count must be >= 0")
        if len(self.heading_unit_vector) != 3:
            raise ConfigError("heading_unit_vector needs three components")
        hx, hy, hz = self.heading_unit_vector
        if not math.isclose(math.hypot(hx, hy, hz), 1.0, rel_tol=1e-9) or hz != 0.0:
            raise ConfigError("heading_unit_vector must be a horizontal unit vector")
        if self.mci_center_m is not None and len(self.mci_center_m) != 2:
            raise ConfigError("mci_center_m needs two components")
        if self.velocity_mps < 0:
            raise ConfigError("velocity_mps must be >= 0")
        vmax = SPEED_OF_LIGHT * self.subcarrier_spacing_hz / (2.0 * self.carrier_hz)
        if self.velocity_mps > vmax:
            raise ConfigError(f"velocity {self.velocity_mps} m/s exceeds supported {vmax:.1f} m/s")
        for name in ("subcarriers", "doppler_bins"):
            n = getattr(self, name)
            if not _is_pow2(n) or n < 4:
                raise ConfigError(f"{name} must be a power of two >= 4")
        if self.cp_len < 0 or self.cp_len >= self.subcarriers:
            raise ConfigError("cp_len must satisfy 0 <= cp_len < subcarriers")
        if self.qam_order != 4:
            raise ConfigError("only 4-QAM is supported")
        if self.array_side < 1:
            raise ConfigError("array_side must be >= 1")
        if self.trials_per_point < 1:
            raise ConfigError("trials_per_point must be >= 1")
        if self.waveform_selector not in WAVEFORMS:
            raise ConfigError(f"waveform_selector must be one of {WAVEFORMS}")
        if self.channel_mode not in CHANNEL_MODES:
            raise ConfigError(f"channel_mode must be one of {CHANNEL_MODES}")
        if self.excess_delay_s < 0:
            raise ConfigError("excess_delay_s must be >= 0")

    # derived quantities

    @property
    def wavelength_m(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_hz

    @property
    def sample_rate_hz(self) -> float:
        return self.subcarriers * self.subcarrier_spacing_hz

    @property
    def bandwidth_hz(self) -> float:
        return self.subcarriers * self.subcarrier_spacing_hz

    @property
    def kappa_linear(self) -> float:
        return 10.0 ** (self.rician_kappa_db / 10.0)

    @property
    def interferer_count(self) -> int:
        return sum(6 * q for q in range(1, self.tier_count + 1))

    @property
    def mci_center(self) -> tuple[float, float]:
        if self.mci_center_m is not None:
            return self.mci_center_m
        hx, hy, _ = self.heading_unit_vector
        return (self.macro_radius_m * hx, self.macro_radius_m * hy)

    @property
    def bits_per_frame(self) -> int:
        return 2 * self.subcarriers * self.doppler_bins

    def replace(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)

    # profiles

    @classmethod
    def paper(cls, **overrides) -> "ScenarioConfig":
        """Full-scale profile: 512x16 frame, 100x100 array, five tiers."""
        return cls(**overrides)

    @classmethod
    def desk(cls, **overrides) -> "ScenarioConfig":
        """Reduced profile: 64x16 frame, 16x16 array, one interference tier.

        The micro-cell radius grows by 100/16 so that interferers keep the
        same spacing, measured in array beamwidths, as the full-scale
        100x100 layout.
        """
        r = 75.0 * 100 / 16
        params = dict(
            micro_radius_m=r,
            reuse_distance_m=4 * r,
            tier_count=1,
            subcarriers=64,
            doppler_bins=16,
            array_side=16,
            trials_per_point=200,
        )
        params.update(overrides)
        return cls(**params)

    # serialization

    def to_dict(self) -> dict[str, Any]:
        d = dataclasses.asdict(self)
        d["heading_unit_vector"] = list(self.heading_unit_vector)
        if self.mci_center_m is not None:
            d["mci_center_m"] = list(self.mci_center_m)
        return d

    @classmethod
    def from_dict(cls, data: dict[str, Any], base: "ScenarioConfig | None" = None) -> "ScenarioConfig":
        """Build a config from a JSON-style mapping.

        Keys not present fall back to ``base`` (default: full-scale profile).
        Unknown keys raise :class:`ConfigError`.
        """
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        data = dict(data)
        if "link_budget" in data:
            lb = data["link_budget"]
            if not isinstance(lb, dict):
                raise ConfigError("link_budget must be an object")
            lb_known = {f.name for f in dataclasses.fields(LinkBudget)}
            lb_unknown = set(lb) - lb_known
            if lb_unknown:
                raise ConfigError(f"unknown link_budget keys: {sorted(lb_unknown)}")
            start = base.link_budget if base is not None else LinkBudget()
            data["link_budget"] = dataclasses.replace(start, **lb)
        try:
            if base is None:
                return cls(**data)
            return dataclasses.replace(base, **data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc


def load_config(path: str | Path, base: ScenarioConfig | None = None) -> ScenarioConfig:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be an object")
    return ScenarioConfig.from_dict(data, base=base)
