"""
Command-line entry point.

    tunable-magnet [--config PATH] [--seed INT] [--out DIR] {tune,campaign,sweep,characterize} ...

Every command validates its whole configuration before simulating. On failure it writes ``error.json`` to
the output directory and exits nonzero.
"""

from __future__ import annotations

import argparse
import json
import sys
import traceback
from pathlib import Path
from typing import Sequence

import numpy as np

from .characterization import MeasurementLog, characterize, estimate_bh_trajectory, simulate_sweep
from .config import RunConfig, bundled_config, load_config
from .errors import ConfigError, TunableMagnetError
from .plant import SensorModel, Trajectory
from .tuning import run_campaign, tune

EXIT_RUNTIME = 1
EXIT_CONFIG = 2


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="tunable-magnet", description=__doc__.split("\n\n")[0].strip())
    ap.add_argument("--config", type=Path, default=None, help="run configuration JSON (default: bundled nominal)")
    ap.add_argument("--seed", type=int, default=None, help="master seed (overrides the config)")
    ap.add_argument("--out", type=Path, default=Path("out"), help="output directory (default: ./out)")
    sub = ap.add_subparsers(dest="command", required=True)

    t = sub.add_parser("tune", help="run one tuning cycle")
    t.add_argument("--set-point", type=float, required=True, help="air-gap flux density set-point [T]")
    t.add_argument("--gap", type=float, default=None, help="air-gap length [m] (default: circuit l_g)")
    t.add_argument("--decimation", type=int, default=1, help="log every k-th plant step")
    t.add_argument("--plot", action="store_true", help="also render tune.png")

    c = sub.add_parser("campaign", help="repeat tuning cycles over set-points and gaps")
    c.add_argument("--set-points", type=_floats, default=None, help="comma-separated set-points [T]")
    c.add_argument("--gaps", type=_floats, default=None, help="comma-separated air-gaps [m]")
    c.add_argument("--n", type=int, default=None, help="cycles per cell")
    c.add_argument("--workers", type=int, default=None, help="worker processes (default: cells capped at CPUs)")
    c.add_argument("--plot", action="store_true", help="also render campaign.png")

    s = sub.add_parser("sweep", help="simulate a characterization sweep and write the measurement log")
    s.add_argument("--plot", action="store_true", help="also render sweep.png")

    k = sub.add_parser("characterize", help="fit the recoil permeability from a measurement log")
    k.add_argument("--log", type=Path, required=True, help="measurement log CSV (t_s,I_c_A,B_g_T)")
    k.add_argument("--plot", action="store_true", help="also render characterization.png")
    return ap


def cmd_tune(cfg: RunConfig, args: argparse.Namespace, out: Path) -> int:
    if args.decimation < 1:
        raise ConfigError(f"--decimation must be >= 1: {args.decimation}")
    l_g = cfg.params.l_g if args.gap is None else args.gap
    if not l_g > 0:
        raise ConfigError(f"--gap must be positive: {l_g}")
    plant = cfg.tuning.plant(l_g)
    log = Trajectory(args.decimation)
    sensor = SensorModel(cfg.tuning.noise_sigma, np.random.SeedSequence(cfg.seed))
    result = tune(args.set_point, plant.initial_state(cfg.tuning.initial_state), cfg.tuning, l_g, sensor, log)
    out.mkdir(parents=True, exist_ok=True)
    log.write_csv(out / "trajectory.csv")
    _write_json(out / "summary.json", result.summary())
    if args.plot:
        from .report import plot_tuning

        plot_tuning(result, cfg.loop, out / "tune.png")
    print(
        f"final B_g = {result.final_B_g:.6f} T, error = {result.error * 1e3:+.4f} mT, "
        f"duration = {result.duration:.3f} s, saturated = {result.saturated}"
    )
    return 0


def cmd_campaign(cfg: RunConfig, args: argparse.Namespace, out: Path) -> int:
    set_points = args.set_points if args.set_points is not None else list(cfg.campaign.set_points)
    gaps = args.gaps if args.gaps is not None else list(cfg.campaign.gaps)
    n = args.n if args.n is not None else cfg.campaign.n
    if n < 1:
        raise ConfigError(f"--n must be >= 1: {n}")
    if not set_points or not gaps or any(b < 0 for b in set_points) or any(g <= 0 for g in gaps):
        raise ConfigError("set-points must be non-negative and gaps positive")
    if args.workers is not None and args.workers < 1:
        raise ConfigError(f"--workers must be >= 1: {args.workers}")
    for g in gaps:
        cfg.tuning.plant(g)  # validate gap-dependent parameters before running
    stats = run_campaign(set_points, gaps, n, cfg.tuning, cfg.seed, args.workers)
    out.mkdir(parents=True, exist_ok=True)
    stats.write_csv(out / "campaign.csv")
    if args.plot:
        from .report import plot_campaign

        plot_campaign(stats, out / "campaign.png")
    sys.stdout.write(stats.to_csv())
    failed = [c for c in stats.cells if not c.ok]
    for c in failed:
        print(f"cell B_g_set = {c.B_g_set} T, l_g = {c.l_g} m failed: {c.failure}", file=sys.stderr)
    return 0 if len(failed) < len(stats.cells) else EXIT_RUNTIME


def cmd_sweep(cfg: RunConfig, args: argparse.Namespace, out: Path) -> int:
    res = simulate_sweep(cfg.sweep_plant(), cfg.sweep, seed=cfg.seed)
    out.mkdir(parents=True, exist_ok=True)
    res.log.write_csv(out / "measurement_log.csv")
    if args.plot:
        from .report import plot_sweep

        H, B = estimate_bh_trajectory(res.log, cfg.params)
        plot_sweep(H, B, cfg.loop, out / "sweep.png")
    print(f"wrote {len(res.log)} samples to {out / 'measurement_log.csv'}")
    return 0


def cmd_characterize(cfg: RunConfig, args: argparse.Namespace, out: Path) -> int:
    if not args.log.is_file():
        raise ConfigError(f"measurement log not found: {args.log}")
    log = MeasurementLog.load_csv(args.log)
    report = characterize(log, cfg.params, cfg.loop.B_sat, cfg.characterize_band, cfg.characterize_min_width)
    out.mkdir(parents=True, exist_ok=True)
    report.write(out / "fit_report.json", out / "recoil_points.csv")
    if args.plot:
        from .report import plot_characterization

        H, B = estimate_bh_trajectory(log, cfg.params)
        plot_characterization(H, B, report, out / "characterization.png")
    print(
        f"mu_rec = {report.fit.slope:.6g} * B_r' + {report.fit.intercept:.6g} "
        f"({len(report.points)} recoil lines, residual RMS {report.residual_rms:.3g})"
    )
    return 0


COMMANDS = {"tune": cmd_tune, "campaign": cmd_campaign, "sweep": cmd_sweep, "characterize": cmd_characterize}


def _write_json(path: Path, obj: object) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _fail(out: Path, ex: BaseException, code: int) -> int:
    report = {"error": type(ex).__name__, "message": str(ex), "exit_code": code}
    try:
        out.mkdir(parents=True, exist_ok=True)
        _write_json(out / "error.json", report)
    except OSError:
        pass
    print(f"error: {type(ex).__name__}: {ex}", file=sys.stderr)
    return code


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    out: Path = args.out
    try:
        cfg = load_config(args.config or bundled_config("nominal"), args.seed)
        return COMMANDS[args.command](cfg, args, out)
    except ConfigError as ex:
        return _fail(out, ex, EXIT_CONFIG)
    except TunableMagnetError as ex:
        return _fail(out, ex, EXIT_RUNTIME)
    except Exception as ex:  # unexpected; still leave a machine-readable report
        traceback.print_exc()
        return _fail(out, ex, EXIT_RUNTIME)


if __name__ == "__main__":
    sys.exit(main())
