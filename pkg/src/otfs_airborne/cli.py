"""Command-line entry point.

    otfs-airborne run --snr 10 --waveform both
    otfs-airborne sweep sweep.json --out results.csv --workers 4
    otfs-airborne figure 3 --profile desk --out fig3.csv
    otfs-airborne selftest
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from .config import WAVEFORMS, ScenarioConfig, load_config
from .errors import ConfigError, SimulationError
from .sim import (
    SweepSpec,
    ber_sweep,
    emit_results,
    figure_preset,
    resolve_workers,
    prepare_frame,
    run_frame,
)
from .nsb import write_nsb_diagnostics


def _base_config(args) -> ScenarioConfig:
    base = ScenarioConfig.desk() if args.profile == "desk" else ScenarioConfig.paper()
    if args.config:
        base = load_config(args.config, base=base)
    if args.seed is not None:
        base = base.replace(rng_seed=args.seed)
    if args.trials is not None:
        base = base.replace(trials_per_point=args.trials)
    return base


def _waveforms(choice: str) -> tuple[str, ...]:
    return WAVEFORMS if choice == "both" else (choice,)


def _print_points(points) -> None:
    for p in points:
        print(f"{p.waveform:5s} snr={p.snr_db:6.2f} kappa={p.kappa_db:g} h={p.altitude_m:g} "
              f"v={p.velocity_mps:g} L={p.array_side} ber={p.ber:.4e} "
              f"({p.bit_errors}/{p.total_bits}, flagged={p.flagged_trials})")


def cmd_run(args) -> int:
    config = _base_config(args)
    waveforms = _waveforms(args.waveform)
    snr = None if config.channel_mode == "link_budget" else args.snr
    totals = {w: [0, 0, 0, 0.0, 0.0] for w in waveforms}
    for t in range(config.trials_per_point):
        for w, res in run_frame(config, snr, t, waveforms).items():
            acc = totals[w]
            acc[0] += res.bit_errors
            acc[1] += res.total_bits
            acc[2] += int(res.singular_flag)
            acc[3] += res.signal_power
            acc[4] += res.noise_power
    for w, (e, b, f, ps, pn) in totals.items():
        ber = e / b if b else float("nan")
        measured = 10 * np.log10(ps / pn) if pn > 0 else float("inf")
        print(f"{w}: ber={ber:.4e} errors={e} bits={b} flagged={f} measured_snr_db={measured:.2f}")
    if args.nsb_diagnostics:
        frame = prepare_frame(config, 0)
        write_nsb_diagnostics(frame.precode, frame.steering, args.nsb_diagnostics)
        print(f"wrote {args.nsb_diagnostics}")
    return 0


def _finish_sweep(points, out) -> None:
    _print_points(points)
    if out:
        emit_results(points, out)
        print(f"wrote {out}")


def cmd_sweep(args) -> int:
    config = _base_config(args)
    try:
        data = json.loads(Path(args.spec).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read sweep spec {args.spec}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{args.spec}: invalid JSON: {exc}") from exc
    if args.seed is not None:
        data["master_seed"] = args.seed
    if args.trials is not None:
        data["trials_per_point"] = args.trials
    if args.waveform:
        data["waveforms"] = list(_waveforms(args.waveform))
    spec = SweepSpec.from_dict(data)
    start = time.perf_counter()
    points = ber_sweep(spec, config, workers=args.workers)
    print(f"{len(points)} points in {time.perf_counter() - start:.1f} s", file=sys.stderr)
    _finish_sweep(points, args.out)
    return 0


def cmd_figure(args) -> int:
    spec, config = figure_preset(args.figure, args.profile)
    if args.config:
        config = load_config(args.config, base=config)
    changes = {}
    if args.seed is not None:
        changes["master_seed"] = args.seed
    if args.trials is not None:
        changes["trials_per_point"] = args.trials
    if args.waveform:
        changes["waveforms"] = _waveforms(args.waveform)
    if changes:
        spec = SweepSpec(**{**spec.__dict__, **changes})
    points = ber_sweep(spec, config, workers=args.workers)
    _finish_sweep(points, args.out)
    return 0


def cmd_selftest(args) -> int:
    from .selftest import run_selftest

    return 0 if run_selftest() else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="otfs-airborne", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="scenario JSON; keys override the profile")
    common.add_argument("--profile", choices=("desk", "paper"), default="desk")
    common.add_argument("--seed", type=int, help="master RNG seed (non-negative)")
    common.add_argument("--trials", type=int, help="trials per point")
    common.add_argument("--out", help="CSV output path")
    common.add_argument("--workers", type=int, help="worker processes (default: $OTFS_AIRBORNE_WORKERS or 1)")

    p = sub.add_parser("run", parents=[common], help="one operating point")
    p.add_argument("--snr", type=float, default=10.0, help="receiver-input SNR in dB")
    p.add_argument("--waveform", choices=("otfs", "ofdm", "both"), default="both")
    p.add_argument("--nsb-diagnostics", metavar="CSV", help="write per-user NSB gain loss and null depth")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", parents=[common], help="sweep described by a JSON SweepSpec")
    p.add_argument("spec", help="SweepSpec JSON file")
    p.add_argument("--waveform", choices=("otfs", "ofdm", "both"))
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("figure", parents=[common], help="preset sweep for figure 3, 4, 5 or 6")
    p.add_argument("figure", type=int, choices=(3, 4, 5, 6))
    p.add_argument("--waveform", choices=("otfs", "ofdm", "both"))
    p.set_defaults(func=cmd_figure)

    p = sub.add_parser("selftest", help="quick property checks")
    p.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "seed", None) is not None and args.seed < 0:
        print("error: --seed must be non-negative", file=sys.stderr)
        return 2
    if getattr(args, "workers", None) is not None:
        args.workers = resolve_workers(args.workers)
    try:
        return args.func(args)
    except (ConfigError, OSError, SimulationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
