"""Monte Carlo BER engine, parameter sweeps and CSV results.

Every trial draws from its own RNG streams, keyed by ``(rng_seed,
trial_index)``. Results therefore do not depend on execution order or on
the number of worker processes. Within a trial, OTFS and OFDM see the
same layout, channel, data and noise (common random numbers).
"""

from __future__ import annotations

import csv
import dataclasses
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .array import ArrayGeometry, steering_matrix
from .channel import (
    PathSet,
    add_noise,
    apply_channel,
    budget_noise_watts,
    link_budget_amplitude,
    realize_channel,
)
from .config import WAVEFORMS, ScenarioConfig
from .equalizer import effective_dd_matrix, ofdm_freq_channel, zf_equalize_dd, zf_equalize_ofdm
from .errors import ConfigError, SingularChannel
from .geometry import angles_toward, hap_position, link_kinematics, place_users
from .modem import (
    ModemConfig,
    ofdm_demodulate,
    ofdm_modulate,
    otfs_demodulate,
    otfs_modulate,
    qam_demap,
    qam_map,
)
from .nsb import PrecodeSet, nsb_weights

WORKERS_ENV = "OTFS_AIRBORNE_WORKERS"
SWEEPABLE = ("snr_db", "kappa_db", "altitude_m", "velocity_mps", "array_side")
_CONFIG_FIELD = {
    "kappa_db": "rician_kappa_db",
    "altitude_m": "altitude_m",
    "velocity_mps": "velocity_mps",
    "array_side": "array_side",
}
CSV_HEADER = (
    "waveform", "snr_db", "kappa_db", "altitude_m", "velocity_mps", "array_side",
    "trials", "total_bits", "bit_errors", "flagged_trials", "ber",
)


@dataclass(frozen=True)
class TrialResult:
    bit_errors: int
    total_bits: int
    singular_flag: bool = False
    signal_power: float = 0.0
    noise_power: float = 0.0


@dataclass(frozen=True)
class BerPoint:
    waveform: str
    snr_db: float
    kappa_db: float
    altitude_m: float
    velocity_mps: float
    array_side: int
    trials: int
    total_bits: int
    bit_errors: int
    flagged_trials: int

    @property
    def ber(self) -> float:
        return self.bit_errors / self.total_bits if self.total_bits else float("nan")


@dataclass(frozen=True)
class SweepSpec:
    swept_parameter: str
    values: tuple
    snr_grid: tuple = tuple(range(0, 21, 2))
    waveforms: tuple = WAVEFORMS
    trials_per_point: int = 200
    master_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(self.values))
        object.__setattr__(self, "snr_grid", tuple(float(s) for s in self.snr_grid))
        object.__setattr__(self, "waveforms", tuple(w.lower() for w in self.waveforms))
        if self.swept_parameter not in SWEEPABLE:
            raise ConfigError(f"swept_parameter must be one of {SWEEPABLE}")
        if not self.values:
            raise ConfigError("values must not be empty")
        if not self.snr_grid and self.swept_parameter != "snr_db":
            raise ConfigError("snr_grid must not be empty")
        if not self.waveforms or any(w not in WAVEFORMS for w in self.waveforms):
            raise ConfigError(f"waveforms must be a non-empty subset of {WAVEFORMS}")
        if self.trials_per_point < 1:
            raise ConfigError("trials_per_point must be >= 1")

    @classmethod
    def from_dict(cls, data: dict) -> "SweepSpec":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown sweep keys: {sorted(unknown)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc


# single frame

@dataclass(frozen=True)
class _Frame:
    modem: ModemConfig
    steering: np.ndarray        # (L^2, U)
    precode: PrecodeSet
    paths: PathSet              # element-level, toward the intended user
    streams: PathSet            # paths collapsed onto user streams
    bits: np.ndarray            # (U, bits_per_frame)
    amplitude: float
    sigma2_budget: float | None
    noise_rng_state: dict
    fill_rng_state: dict


def trial_rngs(seed: int, trial_index: int, count: int = 5) -> list[np.random.Generator]:
    ss = np.random.SeedSequence(seed, spawn_key=(trial_index,))
    return [np.random.default_rng(s) for s in ss.spawn(count)]


def prepare_frame(config: ScenarioConfig, trial_index: int) -> _Frame:
    layout_rng, channel_rng, data_rng, noise_rng, fill_rng = trial_rngs(config.rng_seed, trial_index)
    layout = place_users(config, layout_rng)
    platform = hap_position(config.frame_start_s, config)
    zenith, azimuth = angles_toward(layout.positions, platform)
    geometry = ArrayGeometry.for_carrier(config.array_side, config.carrier_hz)
    steering = steering_matrix(geometry, zenith, azimuth)
    precode = nsb_weights(steering)
    kin = link_kinematics(layout.positions[0], config.frame_start_s, config)
    paths = realize_channel(steering[:, 0], kin, config.rician_kappa_db, channel_rng, config.excess_delay_s)
    bits = data_rng.integers(0, 2, size=(layout.user_count, config.bits_per_frame), dtype=np.int8)

    amplitude, sigma2 = 1.0, None
    if config.channel_mode == "link_budget":
        budget = config.link_budget.resolved(config.array_side, config.bandwidth_hz)
        amplitude = link_budget_amplitude(budget, kin.distance_m, config.carrier_hz, geometry.element_count)
        sigma2 = budget_noise_watts(budget)
    return _Frame(
        modem=ModemConfig.from_scenario(config),
        steering=steering,
        precode=precode,
        paths=paths,
        streams=paths.through_precoder(precode),
        bits=bits,
        amplitude=amplitude,
        sigma2_budget=sigma2,
        noise_rng_state=noise_rng.bit_generator.state,
        fill_rng_state=fill_rng.bit_generator.state,
    )


def _rng_from_state(state: dict) -> np.random.Generator:
    bg = np.random.PCG64()
    bg.state = state
    return np.random.Generator(bg)


def _modulate(bits: np.ndarray, modem: ModemConfig, waveform: str) -> np.ndarray:
    M, N = modem.subcarriers, modem.slots
    out = []
    for user_bits in bits:
        symbols = qam_map(user_bits)
        if waveform == "otfs":
            out.append(otfs_modulate(symbols.reshape(N, M), modem.cp_len))
        else:
            out.append(ofdm_modulate(symbols, M, modem.cp_len))
    return np.asarray(out)


def _run_waveform(frame: _Frame, snr_db: float | None, waveform: str) -> TrialResult:
    modem = frame.modem
    signals = _modulate(frame.bits, modem, waveform)
    clean = apply_channel(
        signals, frame.streams, modem.sample_rate_hz, modem.block_len, modem.cp_len, frame.amplitude
    )
    signal_power = float(np.mean(np.abs(clean) ** 2))
    if frame.sigma2_budget is not None:
        sigma2 = frame.sigma2_budget
    elif snr_db is None or np.isposinf(snr_db):
        sigma2 = 0.0
    else:
        sigma2 = signal_power / 10.0 ** (snr_db / 10.0)
    received = add_noise(clean, sigma2, _rng_from_state(frame.noise_rng_state))

    sent = frame.bits[0]
    if waveform == "otfs":
        grid = otfs_demodulate(received, modem.subcarriers, modem.cp_len)
        h_eff = effective_dd_matrix(frame.streams, None, modem, user=0) * frame.amplitude
        try:
            estimate = zf_equalize_dd(grid, h_eff)
        except SingularChannel:
            return TrialResult(0, 0, True, signal_power, sigma2)
        decided = qam_demap(estimate)
    else:
        grid = ofdm_demodulate(received, modem.subcarriers, modem.cp_len)
        h_freq = ofdm_freq_channel(frame.streams, None, modem, user=0) * frame.amplitude
        estimate, erased = zf_equalize_ofdm(grid, h_freq)
        decided = qam_demap(estimate)
        if erased.any():
            mask = np.repeat(erased.ravel(), 2)
            fill = _rng_from_state(frame.fill_rng_state)
            decided[mask] = fill.integers(0, 2, size=int(mask.sum()), dtype=np.int8)
    errors = int(np.count_nonzero(decided != sent))
    return TrialResult(errors, int(sent.size), False, signal_power, sigma2)


def run_frame(config: ScenarioConfig, snr_db: float | None, trial_index: int, waveforms=WAVEFORMS) -> dict[str, TrialResult]:
    """One frame for several waveforms sharing every random draw."""
    frame = prepare_frame(config, trial_index)
    return {w: _run_waveform(frame, snr_db, w) for w in waveforms}


def run_trial(config: ScenarioConfig, snr_db: float | None, trial_index: int) -> TrialResult:
    """One end-to-end frame of ``config.waveform_selector`` for the intended user.

    ``snr_db`` is the receiver-input SNR: noiseless received power (desired
    plus interference, averaged over the frame) over noise power. ``inf``
    or ``None`` gives a noiseless frame. In link-budget mode the SNR
    argument is ignored and noise is kTBN_f.
    """
    return run_frame(config, snr_db, trial_index, (config.waveform_selector,))[config.waveform_selector]


# sweeps

def apply_parameter(config: ScenarioConfig, parameter: str, value) -> ScenarioConfig:
    if parameter == "snr_db":
        return config
    if parameter == "array_side":
        value = int(value)
    return config.replace(**{_CONFIG_FIELD[parameter]: value})


def _point_tasks(spec: SweepSpec, config: ScenarioConfig):
    values = spec.values if spec.swept_parameter != "snr_db" else (None,)
    snrs = spec.snr_grid if spec.swept_parameter != "snr_db" else tuple(float(v) for v in spec.values)
    tasks = []
    for vi, value in enumerate(values):
        cfg = apply_parameter(config, spec.swept_parameter, value).replace(rng_seed=spec.master_seed)
        for si, snr in enumerate(snrs):
            base = (vi * len(snrs) + si) * spec.trials_per_point
            tasks.append((cfg, snr, base))
    return tasks


def _run_batch(args) -> dict[str, tuple[int, int, int]]:
    config, snr_db, first, count, waveforms = args
    totals = {w: [0, 0, 0] for w in waveforms}
    for t in range(first, first + count):
        for w, res in run_frame(config, snr_db, t, waveforms).items():
            acc = totals[w]
            acc[0] += res.bit_errors
            acc[1] += res.total_bits
            acc[2] += int(res.singular_flag)
    return {w: tuple(v) for w, v in totals.items()}


def resolve_workers(workers: int | None) -> int:
    if workers is None:
        workers = int(os.environ.get(WORKERS_ENV, "1"))
    return max(1, workers)


def ber_sweep(spec: SweepSpec, config: ScenarioConfig, workers: int | None = None, batch_size: int = 25) -> list[BerPoint]:
    """Aggregate ``trials_per_point`` trials for every (value, waveform, SNR).

    Output is ordered by parameter value, then waveform, then SNR.
    """
    workers = resolve_workers(workers)
    tasks = _point_tasks(spec, config)
    batches, owner = [], []
    for ti, (cfg, snr, base) in enumerate(tasks):
        for start in range(0, spec.trials_per_point, batch_size):
            count = min(batch_size, spec.trials_per_point - start)
            batches.append((cfg, snr, base + start, count, spec.waveforms))
            owner.append(ti)
    if workers == 1:
        results = list(map(_run_batch, batches))
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_batch, batches))

    sums = [{w: [0, 0, 0] for w in spec.waveforms} for _ in tasks]
    for ti, res in zip(owner, results):
        for w, (e, b, f) in res.items():
            acc = sums[ti][w]
            acc[0] += e
            acc[1] += b
            acc[2] += f

    points = []
    snr_count = len(spec.values) if spec.swept_parameter == "snr_db" else len(spec.snr_grid)
    for group in range(0, len(tasks), snr_count):
        for w in spec.waveforms:
            for ti in range(group, group + snr_count):
                cfg, snr, _ = tasks[ti]
                e, b, f = sums[ti][w]
                points.append(BerPoint(
                    waveform=w,
                    snr_db=snr,
                    kappa_db=cfg.rician_kappa_db,
                    altitude_m=cfg.altitude_m,
                    velocity_mps=cfg.velocity_mps,
                    array_side=cfg.array_side,
                    trials=spec.trials_per_point,
                    total_bits=b,
                    bit_errors=e,
                    flagged_trials=f,
                ))
    return points


# presets

def figure_preset(figure: int, profile: str = "desk") -> tuple[SweepSpec, ScenarioConfig]:
    """Sweep and base scenario for one of the four BER comparison figures.

    kappa = 10 dB is the reference case of the Rician sweep; 0 and 5 dB add
    weaker line-of-sight conditions. The desk array sweep scales the
    75/100 pair to 12/16 elements per side.
    """
    if profile == "desk":
        config = ScenarioConfig.desk()
        sides = (12, 16)
    elif profile == "paper":
        config = ScenarioConfig.paper(trials_per_point=20)
        sides = (75, 100)
    else:
        raise ConfigError(f"unknown profile {profile!r}")
    sweeps = {
        3: ("kappa_db", (0.0, 5.0, 10.0)),
        4: ("altitude_m", (8000.0, 10000.0, 12000.0)),
        5: ("velocity_mps", (100.0, 150.0)),
        6: ("array_side", sides),
    }
    if figure not in sweeps:
        raise ConfigError(f"figure must be one of {sorted(sweeps)}")
    parameter, values = sweeps[figure]
    spec = SweepSpec(
        swept_parameter=parameter,
        values=values,
        trials_per_point=config.trials_per_point,
        master_seed=config.rng_seed,
    )
    return spec, config


# results

def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.6g}"


def emit_results(points, path) -> Path:
    path = Path(path)
    try:
        with path.open("w", newline="") as fh:
            out = csv.writer(fh, lineterminator="\n")
            out.writerow(CSV_HEADER)
            for p in points:
                out.writerow([
                    p.waveform, _fmt(p.snr_db), _fmt(p.kappa_db), _fmt(p.altitude_m),
                    _fmt(p.velocity_mps), _fmt(p.array_side), p.trials, p.total_bits,
                    p.bit_errors, p.flagged_trials, _fmt(p.ber),
                ])
    except OSError as exc:
        raise OSError(f"cannot write results to {path}: {exc}") from exc
    return path


def read_results(path) -> list[BerPoint]:
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_HEADER:
            raise ValueError(f"{path}: unexpected header {reader.fieldnames}")
        return [
            BerPoint(
                waveform=row["waveform"],
                snr_db=float(row["snr_db"]),
                kappa_db=float(row["kappa_db"]),
                altitude_m=float(row["altitude_m"]),
                velocity_mps=float(row["velocity_mps"]),
                array_side=int(row["array_side"]),
                trials=int(row["trials"]),
                total_bits=int(row["total_bits"]),
                bit_errors=int(row["bit_errors"]),
                flagged_trials=int(row["flagged_trials"]),
            )
            for row in reader
        ]


# curve analysis

def qpsk_awgn_ber(ebn0_db) -> np.ndarray:
    """Gray 4-QAM bit error rate on AWGN, Q(sqrt(2 Eb/N0))."""
    from scipy.special import erfc

    ebn0 = 10.0 ** (np.asarray(ebn0_db, dtype=float) / 10.0)
    return 0.5 * erfc(np.sqrt(ebn0))


def snr_at_ber(snrs, bers, target: float) -> float | None:
    """First SNR where the curve reaches ``target``, interpolating log10(BER)
    linearly between grid points. ``None`` if the curve never gets there."""
    snrs = np.asarray(snrs, dtype=float)
    bers = np.asarray(bers, dtype=float)
    if bers.size and bers[0] <= target:
        return float(snrs[0])
    for i in range(1, len(snrs)):
        if bers[i] <= target < bers[i - 1]:
            if bers[i] == 0:
                return float(snrs[i])
            y0, y1 = math.log10(bers[i - 1]), math.log10(bers[i])
            frac = (math.log10(target) - y0) / (y1 - y0)
            return float(snrs[i - 1] + frac * (snrs[i] - snrs[i - 1]))
    return None


def snr_gap(snrs, ber_reference, ber_candidate, target: float = 1e-2) -> tuple[float, bool]:
    """SNR advantage of ``candidate`` over ``reference`` at ``target`` BER.

    Returns ``(gap_db, exact)``. If the reference never reaches the target
    on the grid, the gap is bounded below by the distance from the
    candidate's crossing to the end of the grid and ``exact`` is False.
    """
    cand = snr_at_ber(snrs, ber_candidate, target)
    if cand is None:
        raise ValueError("candidate curve never reaches the target BER")
    ref = snr_at_ber(snrs, ber_reference, target)
    if ref is None:
        return float(np.max(snrs)) - cand, False
    return ref - cand, True
