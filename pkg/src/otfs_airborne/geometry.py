"""Cell layout, platform motion and per-user link kinematics.

Coordinates are metres in a frame whose origin is the platform position at
t = 0. Ground users sit at z = -H_t.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import SPEED_OF_LIGHT, ScenarioConfig


@dataclass(frozen=True)
class UserLayout:
    """Ground users; row 0 is the intended user, rows 1.. are interferers."""

    positions: np.ndarray       # (U, 3)
    tier_of_user: np.ndarray    # (U,), 0 for the intended user
    cell_centers: np.ndarray    # (U, 2), micro-cell center of each user

    @property
    def user_count(self) -> int:
        return self.positions.shape[0]

    @property
    def interferer_count(self) -> int:
        return self.user_count - 1


@dataclass(frozen=True)
class AnglePair:
    zenith_rad: float
    azimuth_rad: float


@dataclass(frozen=True)
class LinkKinematics:
    distance_m: float
    delay_s: float
    doppler_hz: float
    aspect_angle_rad: float


def tier_centers(config: ScenarioConfig) -> tuple[np.ndarray, np.ndarray]:
    """Micro-cell centers of every interference tier.

    Tier q holds 6q cells at distance q*D from the cell of interest, spread
    over equally spaced azimuths.
    """
    cx, cy = config.mci_center
    centers = [(cx, cy)]
    tiers = [0]
    for q in range(1, config.tier_count + 1):
        az = 2 * np.pi * np.arange(6 * q) / (6 * q)
        rad = q * config.reuse_distance_m
        centers.extend(zip(cx + rad * np.cos(az), cy + rad * np.sin(az)))
        tiers.extend([q] * (6 * q))
    return np.asarray(centers, dtype=float), np.asarray(tiers, dtype=int)


def place_users(config: ScenarioConfig, rng: np.random.Generator) -> UserLayout:
    """Drop one user uniformly inside each micro-cell disc."""
    centers, tiers = tier_centers(config)
    u = rng.random((len(centers), 2))
    radius = config.micro_radius_m * np.sqrt(u[:, 0])
    angle = 2 * np.pi * u[:, 1]
    xy = centers + np.column_stack([radius * np.cos(angle), radius * np.sin(angle)])
    z = np.full((len(centers), 1), -config.altitude_m)
    return UserLayout(positions=np.hstack([xy, z]), tier_of_user=tiers, cell_centers=centers)


def hap_position(t: float, config: ScenarioConfig) -> np.ndarray:
    """Platform position after ``t`` seconds of straight, level flight."""
    if t < 0:
        raise ValueError("t must be >= 0")
    return config.velocity_mps * t * np.asarray(config.heading_unit_vector, dtype=float)


def _wrap_azimuth(az):
    # atan2 can return -pi; keep the half-open interval (-pi, pi]
    return np.where(az <= -np.pi, np.pi, az)


def angles_toward(user_positions: np.ndarray, platform: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized zenith/azimuth of many users seen from the platform."""
    delta = np.atleast_2d(user_positions) - np.asarray(platform, dtype=float)
    ground = np.hypot(delta[:, 0], delta[:, 1])
    depth = -delta[:, 2]
    zenith = np.arctan2(ground, depth)
    azimuth = _wrap_azimuth(np.arctan2(delta[:, 1], delta[:, 0]))
    # nadir: azimuth is defined as 0
    azimuth = np.where(ground == 0.0, 0.0, azimuth)
    return zenith, azimuth


def user_angles(user_position, hap_pos) -> AnglePair:
    zen, az = angles_toward(np.asarray(user_position, dtype=float), hap_pos)
    return AnglePair(float(zen[0]), float(az[0]))


def doppler_shift(carrier_hz: float, velocity_mps: float, aspect_angle_rad: float) -> float:
    """Doppler of a moving transmitter, f_c v cos(theta) / c."""
    return carrier_hz * velocity_mps * np.cos(aspect_angle_rad) / SPEED_OF_LIGHT


def link_kinematics(user_position, t: float, config: ScenarioConfig) -> LinkKinematics:
    platform = hap_position(t, config)
    delta = np.asarray(user_position, dtype=float) - platform
    distance = float(np.linalg.norm(delta))
    heading = np.asarray(config.heading_unit_vector, dtype=float)
    cos_aspect = float(np.clip(heading @ delta / distance, -1.0, 1.0))
    aspect = float(np.arccos(cos_aspect))
    doppler = config.carrier_hz * config.velocity_mps * cos_aspect / SPEED_OF_LIGHT
    return LinkKinematics(
        distance_m=distance,
        delay_s=distance / SPEED_OF_LIGHT,
        doppler_hz=doppler,
        aspect_angle_rad=aspect,
    )


def max_supported_velocity(subcarrier_spacing_hz: float, carrier_hz: float) -> float:
    if subcarrier_spacing_hz <= 0 or carrier_hz <= 0:
        raise ValueError("spacing and carrier must be positive")
    return SPEED_OF_LIGHT * subcarrier_spacing_hz / (2.0 * carrier_hz)
