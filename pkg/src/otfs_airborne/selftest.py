"""Fast property checks runnable without pytest (``otfs-airborne selftest``)."""

from __future__ import annotations

import numpy as np

from .array import ArrayGeometry, steering_matrix
from .channel import realize_channel
from .config import ScenarioConfig
from .equalizer import effective_dd_matrix, impulse_probe_matrix
from .geometry import angles_toward, doppler_shift, hap_position, link_kinematics, max_supported_velocity, place_users
from .modem import ModemConfig, heisenberg, isfft, sfft, wigner
from .nsb import nsb_project, nsb_weights
from .sim import run_trial


def _transforms() -> float:
    rng = np.random.default_rng(1)
    worst = 0.0
    for n, m in ((4, 8), (16, 64)):
        for _ in range(20):
            x = rng.standard_normal((n, m)) + 1j * rng.standard_normal((n, m))
            worst = max(worst, np.abs(sfft(isfft(x)) - x).max(), np.abs(wigner(heisenberg(x), m) - x).max())
    return worst


def _layout_steering(config, seed):
    layout = place_users(config, np.random.default_rng(seed))
    zen, az = angles_toward(layout.positions, hap_position(0.0, config))
    return layout, steering_matrix(ArrayGeometry.for_carrier(config.array_side, config.carrier_hz), zen, az)


def _nulls() -> tuple[float, float]:
    config = ScenarioConfig.desk()
    worst_null, worst_idem = 0.0, 0.0
    for seed in range(5):
        _, A = _layout_steering(config, seed)
        pre = nsb_weights(A)
        worst_null = max(worst_null, pre.worst_null)
        for i in range(A.shape[1]):
            w = pre.weights[i]
            again, _ = nsb_project(w, np.delete(A, i, axis=1))
            worst_idem = max(worst_idem, np.linalg.norm(again - w) / np.linalg.norm(w))
    return worst_null, worst_idem


def _oracle() -> float:
    config = ScenarioConfig.desk(subcarriers=8, doppler_bins=4, array_side=4, cp_len=2, excess_delay_s=2 / (8 * 30e3))
    modem = ModemConfig.from_scenario(config)
    worst = 0.0
    for seed in range(5):
        layout, A = _layout_steering(config, seed)
        kin = link_kinematics(layout.positions[0], 0.0, config)
        paths = realize_channel(A[:, 0], kin, config.rician_kappa_db, np.random.default_rng(100 + seed), config.excess_delay_s)
        pre = nsb_weights(A)
        diff = effective_dd_matrix(paths, pre, modem).toarray() - impulse_probe_matrix(paths, pre, modem)
        worst = max(worst, np.abs(diff).max())
    return worst


def run_selftest(verbose: bool = True) -> bool:
    checks = []

    err = _transforms()
    checks.append(("transform identities", err <= 1e-12, f"max-abs {err:.2e}"))

    null, idem = _nulls()
    checks.append(("NSB nulls", null <= 1e-8, f"worst |w_i^H a_k|/L^2 {null:.2e}"))
    checks.append(("NSB idempotence", idem <= 1e-10, f"relative {idem:.2e}"))

    err = _oracle()
    checks.append(("DD matrix vs impulse probe", err <= 1e-10, f"max-abs {err:.2e}"))

    nu = doppler_shift(28e9, 150.0, 0.0)
    checks.append(("Doppler anchor", abs(nu - 14e3) < 1e-6, f"{nu:.3f} Hz"))
    vmax = max_supported_velocity(30e3, 28e9)
    checks.append(("supported velocity", abs(vmax - 160.7) <= 0.05, f"{vmax:.3f} m/s"))

    config = ScenarioConfig.desk()
    errors = sum(run_trial(config, None, t).bit_errors for t in range(5))
    checks.append(("noiseless OTFS recovery", errors == 0, f"{errors} bit errors over 5 frames"))

    if verbose:
        for name, ok, detail in checks:
            print(f"{'PASS' if ok else 'FAIL'}  {name:30s} {detail}")
    return all(ok for _, ok, _ in checks)
