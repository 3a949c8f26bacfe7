"""Uniform planar array geometry and steering vectors."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import SPEED_OF_LIGHT
from .geometry import AnglePair


@dataclass(frozen=True)
class ArrayGeometry:
    """L x L half-wavelength array in the platform's horizontal plane.

    Elements are linearized with the x index ``j`` fastest: flat index
    ``k * L + j`` holds element ``(x_j, y_k)``.
    """

    side_count: int
    wavelength_m: float

    def __post_init__(self):
        if self.side_count < 1:
            raise ValueError("side_count must be >= 1")

    @classmethod
    def for_carrier(cls, side_count: int, carrier_hz: float) -> "ArrayGeometry":
        return cls(side_count, SPEED_OF_LIGHT / carrier_hz)

    @property
    def element_count(self) -> int:
        return self.side_count ** 2

    @property
    def axis_positions(self) -> np.ndarray:
        L = self.side_count
        return (-(L - 1) / 2 + np.arange(L)) * self.wavelength_m / 2

    @property
    def element_xy(self) -> np.ndarray:
        """(L^2, 2) element coordinates in flat-index order."""
        p = self.axis_positions
        return np.column_stack([np.tile(p, self.side_count), np.repeat(p, self.side_count)])


def steering_matrix(geometry: ArrayGeometry, zenith, azimuth) -> np.ndarray:
    """Steering vectors for many directions, one per column: shape (L^2, U)."""
    zenith = np.atleast_1d(np.asarray(zenith, dtype=float))
    azimuth = np.atleast_1d(np.asarray(azimuth, dtype=float))
    psi_x = np.sin(zenith) * np.cos(azimuth)
    psi_y = np.sin(zenith) * np.sin(azimuth)
    xy = geometry.element_xy
    k = 2 * np.pi / geometry.wavelength_m
    phase = k * (np.outer(xy[:, 0], psi_x) + np.outer(xy[:, 1], psi_y))
    return np.exp(1j * phase)


def steering_vector(geometry: ArrayGeometry, angles: AnglePair) -> np.ndarray:
    return steering_matrix(geometry, angles.zenith_rad, angles.azimuth_rad)[:, 0]


def array_gain_db(side_count: int) -> float:
    if side_count < 1:
        raise ValueError("side_count must be >= 1")
    return 10.0 * np.log10(side_count ** 2)
