"""Null-steering beamforming weights and per-element superposition."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DegenerateLayout, LengthMismatch

PINV_RTOL = 1e-10
DEGENERATE_RTOL = 1e-6


@dataclass(frozen=True)
class PrecodeSet:
    """One NSB weight vector per user, stacked as rows of ``weights`` (U, L^2)."""

    weights: np.ndarray
    interference_basis_rank: int
    gain_loss: np.ndarray       # ||w_i||^2 / ||a_i||^2 per user
    worst_null: float           # max_{i != k} |w_i^H a_k| / L^2

    @property
    def user_count(self) -> int:
        return self.weights.shape[0]

    @property
    def element_count(self) -> int:
        return self.weights.shape[1]


def nsb_project(alpha: np.ndarray, others: np.ndarray, rtol: float = PINV_RTOL) -> tuple[np.ndarray, int]:
    """Remove from ``alpha`` its component in the column span of ``others``.

    Singular values of ``others`` below ``rtol * s_max`` are dropped, which
    is the pseudo-inverse form of a - L (L^H L)^-1 L^H a.
    Returns the projected vector and the rank that was kept.
    """
    alpha = np.asarray(alpha, dtype=complex)
    others = np.asarray(others, dtype=complex)
    if others.size == 0:
        return alpha.copy(), 0
    u, s, _ = np.linalg.svd(others, full_matrices=False)
    rank = int(np.sum(s > rtol * s[0])) if s[0] > 0 else 0
    basis = u[:, :rank]
    return alpha - basis @ (basis.conj().T @ alpha), rank


def _null_residual(weights: np.ndarray, steering: np.ndarray) -> float:
    cross = np.abs(weights.conj() @ steering)
    np.fill_diagonal(cross, 0.0)
    return float(cross.max(initial=0.0) / steering.shape[0])


def nsb_weights(steering) -> PrecodeSet:
    """NSB weights for all users.

    ``steering`` is either an (L^2, U) matrix with one steering vector per
    column or a sequence of U vectors. Each weight is the user's steering
    vector projected onto the orthogonal complement of every other user's
    steering vector. Weights are not renormalized.
    """
    if isinstance(steering, np.ndarray) and steering.ndim == 2:
        A = np.asarray(steering, dtype=complex)
    else:
        A = np.column_stack([np.asarray(a, dtype=complex) for a in steering])
    n_elem, n_users = A.shape
    if n_users > n_elem:
        raise DegenerateLayout(f"{n_users} users cannot be separated by {n_elem} elements")

    u, s, vh = np.linalg.svd(A, full_matrices=False)
    if n_users == 1:
        weights = A.T.copy()
        rank = 0
    elif s[-1] > PINV_RTOL * s[0]:
        # full column rank: w_i = A (A^H A)^-1 e_i / [(A^H A)^-1]_ii, via the SVD
        zf = u @ (vh / s[:, None])
        diag = np.sum(np.abs(vh) ** 2 / s[:, None] ** 2, axis=0)
        weights = (zf / diag).T
        rank = n_users - 1
    else:
        rows = []
        rank = 0
        for i in range(n_users):
            w, r = nsb_project(A[:, i], np.delete(A, i, axis=1))
            rows.append(w)
            if i == 0:
                rank = r
        weights = np.asarray(rows)

    norms = np.linalg.norm(weights, axis=1)
    ref = np.linalg.norm(A, axis=0)
    bad = np.flatnonzero(norms < DEGENERATE_RTOL * ref)
    if bad.size:
        raise DegenerateLayout(f"users {bad.tolist()} share a steering direction with others")
    return PrecodeSet(
        weights=weights,
        interference_basis_rank=rank,
        gain_loss=norms ** 2 / ref ** 2,
        worst_null=_null_residual(weights, A),
    )


def beamform_superpose(precode, user_signals) -> np.ndarray:
    """Per-element transmit signals, element j = sum_i w_i(j) s_i.

    ``precode`` may be a :class:`PrecodeSet` or a raw (U, L^2) weight array.
    Returns an (L^2, T) array.
    """
    weights = np.asarray(getattr(precode, "weights", precode))
    signals = np.asarray(user_signals)
    if signals.ndim == 1:
        signals = signals[None, :]
    if signals.shape[0] != weights.shape[0]:
        raise LengthMismatch(f"{signals.shape[0]} signals for {weights.shape[0]} weight vectors")
    return weights.T @ signals


def write_nsb_diagnostics(precode: PrecodeSet, steering: np.ndarray, path) -> Path:
    """CSV with per-user gain loss and worst residual toward other users."""
    path = Path(path)
    cross = np.abs(precode.weights.conj() @ steering) / steering.shape[0]
    np.fill_diagonal(cross, 0.0)
    try:
        with path.open("w", newline="") as fh:
            out = csv.writer(fh)
            out.writerow(["user", "gain_loss", "gain_loss_db", "worst_null"])
            for i, g in enumerate(precode.gain_loss):
                out.writerow([i, f"{g:.6g}", f"{10 * np.log10(g):.6g}", f"{cross[i].max(initial=0.0):.6g}"])
    except OSError as exc:
        raise OSError(f"cannot write NSB diagnostics to {path}: {exc}") from exc
    return path
