"""Command line interface.

Subcommands:
    simulate          generate a time-tagged event stream
    analyze-temporal  coincidence histogram, delay width, heralded g2c
    analyze-spectral  cavity-scanned joint spectrum and width fits
    report            combine the stats files into the entanglement report
    reproduce-paper   run the full chain at the reference settings

Every command writes its outputs plus a manifest.json with sha256 hashes,
so a rerun with the same config and seed can be checked byte for byte.
Exit codes: 0 success, 2 invalid configuration or input file, 1 any other
analysis failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

import numpy as np
import pandas as pd

from . import __version__
from .config import Config, load_config, read_tagged
from .errors import ValidationError
from .eventsim import EventStream, SimConfig, count_coincidences, generate_events
from .metrics import build_report
from .model import wavefunction_from_spectrum
from .presets import reference_config
from .spectral import (
    analyze_joint_map,
    autocorrelation_g2_curve,
    project_antidiagonal,
    project_axes,
    simulate_joint_scan,
    spectrum_from_autocorrelation,
)
from .temporal import (
    cauchy_schwarz_factor,
    conditional_autocorrelation,
    cross_correlation_g2,
    expected_coincidence_curve,
    temporal_std,
)

FLOAT_FMT = "%.10g"

EVENTS_CSV = "events.csv"
EVENTS_META = "events_meta.json"
CONFIG_USED = "config_used.json"
FIG2A_CSV = "fig2a.csv"
FIG2B_CSV = "fig2b.csv"
FIG3A_CSV = "fig3a.csv"
FIG3B_CSV = "fig3b.csv"
FIG3C_CSV = "fig3c.csv"
FIG3D_CSV = "fig3d.csv"
TEMPORAL_STATS = "temporal_stats.json"
SPECTRAL_STATS = "spectral_stats.json"
REPORT_JSON = "report.json"
MANIFEST = "manifest.json"


def _jsonable(obj):
    """Recursively convert numpy scalars and arrays for json.dump."""
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def _write_json(path: Path, data: dict) -> None:
    with open(path, "w") as fh:
        json.dump(_jsonable(data), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_csv(path: Path, frame: pd.DataFrame) -> None:
    frame.to_csv(path, index=False, float_format=FLOAT_FMT)


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def _config_hash(cfg: Config) -> str:
    text = json.dumps(_jsonable(cfg.to_dict()), sort_keys=True,
                      separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()


def _write_manifest(out_dir: Path, command: str, cfg: Config | None,
                    seed: int | None, names: list) -> None:
    outputs = {}
    for name in sorted(names):
        p = out_dir / name
        outputs[name] = {"sha256": _sha256(p), "bytes": p.stat().st_size}
    _write_json(out_dir / MANIFEST, {
        "command": command,
        "package_version": __version__,
        "config_sha256": None if cfg is None else _config_hash(cfg),
        "seed": seed if seed is None else int(seed),
        "outputs": outputs,
    })


def _resolve_config(path) -> Config:
    if path is None:
        return reference_config()
    return load_config(path)


def _out_dir(args) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _rates(sim: SimConfig) -> tuple:
    """Generated in-window singles rates per arm and the joint efficiency."""
    rate_s = sim.pair_rate + sim.uncorrelated_stokes
    rate_a = sim.pair_rate + sim.uncorrelated_anti_stokes
    joint = sim.duty_cycle * sim.efficiency_stokes * sim.efficiency_anti_stokes
    return rate_s, rate_a, joint


def run_simulate(cfg: Config, seed: int, out_dir: Path) -> list:
    wf = wavefunction_from_spectrum(cfg.model, cfg.grid)
    stream = generate_events(cfg.sim, wf, seed=seed)
    stream.write(out_dir / EVENTS_CSV, out_dir / EVENTS_META)
    _write_json(out_dir / CONFIG_USED, cfg.to_dict())
    print(f"simulate: seed {seed}, {stream.meta['n_stokes']} stokes and "
          f"{stream.meta['n_anti_stokes']} anti-Stokes events, "
          f"{stream.meta['n_pairs_detected']} pairs detected in both arms "
          f"-> {out_dir / EVENTS_CSV}")
    return [EVENTS_CSV, EVENTS_META, CONFIG_USED]


def run_temporal(cfg: Config, stream: EventStream, seed: int,
                 out_dir: Path) -> list:
    ana = cfg.analysis
    sim = (SimConfig.from_dict(stream.meta["config"])
           if "config" in stream.meta else cfg.sim)
    rate_s, rate_a, joint = _rates(sim)

    hist = count_coincidences(stream, t_bin_s=ana.t_bin_s,
                              max_delay_s=ana.max_delay_s)
    stats = temporal_std(hist, method=ana.method,
                         floor_subtract=ana.floor_subtract,
                         n_bootstrap=ana.n_bootstrap, seed=seed)
    g2 = cross_correlation_g2(hist, rate_s, rate_a, joint)
    wf = wavefunction_from_spectrum(cfg.model, cfg.grid)
    expected = expected_coincidence_curve(wf, rate_s, rate_a, joint,
                                          hist.acquisition_s, hist.t_bin_s,
                                          hist.tau_s)
    frame = hist.to_frame()
    frame["expected_counts"] = expected
    frame["g2"] = g2
    _write_csv(out_dir / FIG2A_CSV, frame)

    cond = conditional_autocorrelation(stream, np.asarray(ana.g2c_windows_s))
    _write_csv(out_dir / FIG2B_CSV, pd.DataFrame({
        "window_ns": np.rint(cond.window_s * 1e9).astype(np.int64),
        "g2c": cond.g2c,
        "coincidences": cond.n_coincidences.astype(np.int64),
    }))

    payload = stats.to_dict()
    payload.update({
        "peak_g2_binned": float(np.max(g2)),
        "cauchy_schwarz_factor": (
            None if stats.peak_g2 is None
            else cauchy_schwarz_factor(stats.peak_g2)),
        "g2c_max": float(np.max(cond.g2c)),
        "n_heralds": cond.n_heralds,
        "acquisition_s": hist.acquisition_s,
        "t_bin_s": hist.t_bin_s,
    })
    _write_json(out_dir / TEMPORAL_STATS, payload)
    print(f"analyze-temporal: delay std {stats.std_s * 1e9:.2f} +/- "
          f"{stats.std_error_s * 1e9:.2f} ns ({stats.fit_family or stats.method}), "
          f"peak g2 {0.0 if stats.peak_g2 is None else stats.peak_g2:.1f}, "
          f"max g2c {np.max(cond.g2c):.3f} -> {out_dir / TEMPORAL_STATS}")
    return [FIG2A_CSV, FIG2B_CSV, TEMPORAL_STATS]


def run_spectral(cfg: Config, seed: int, deconvolve: bool,
                 out_dir: Path) -> list:
    jsmap = simulate_joint_scan(cfg.model, cfg.sim, cfg.scan, seed=seed)
    stats = analyze_joint_map(jsmap, cfg.scan.cavity, deconvolve=deconvolve,
                              n_bootstrap=cfg.analysis.marginal_bootstrap,
                              seed=seed)

    frame = jsmap.to_frame()
    frame["expected_counts"] = jsmap.expected.ravel()
    _write_csv(out_dir / FIG3A_CSV, frame)

    offsets = jsmap.omega_s
    step = cfg.scan.step
    marg_s, marg_a = project_axes(jsmap.counts, jsmap.omega_s, jsmap.omega_as)
    cols = {
        "dw_rad_s": offsets,
        "stokes_counts": marg_s.astype(np.int64),
        "anti_stokes_counts": marg_a.astype(np.int64),
        "stokes_counts_subtracted": np.asarray(
            stats.meta["marginal_stokes_subtracted"]),
        "anti_stokes_counts_subtracted": np.asarray(
            stats.meta["marginal_anti_stokes_subtracted"]),
    }
    for channel, col in (("stokes", "stokes_wk_density"),
                         ("anti_stokes", "anti_stokes_wk_density")):
        tau, g2 = autocorrelation_g2_curve(cfg.model, cfg.grid, channel)
        omega, dens = spectrum_from_autocorrelation(tau, g2)
        on_scan = np.interp(offsets, omega, dens)
        total = on_scan.sum() * step
        cols[col] = on_scan / total if total > 0 else on_scan
    _write_csv(out_dir / FIG3B_CSV, pd.DataFrame(cols))

    u = np.asarray(stats.meta["sum_u_rad_s"])
    _, exp_proj = project_antidiagonal(jsmap.expected, jsmap.omega_s,
                                       jsmap.omega_as)
    _write_csv(out_dir / FIG3C_CSV, pd.DataFrame({
        "sum_rad_s": u,
        "counts": np.asarray(stats.meta["sum_projection_raw"],
                             dtype=np.int64),
        "expected_counts": exp_proj,
    }))
    _write_csv(out_dir / FIG3D_CSV, pd.DataFrame({
        "sum_rad_s": u,
        "counts_subtracted": np.asarray(
            stats.meta["sum_projection_subtracted"]),
        "fit": np.asarray(stats.meta["sum_projection_fit"]),
    }))

    payload = stats.to_dict()
    payload.update({
        "background_total": stats.meta["background_total"],
        "true_counts_expected": jsmap.meta["true_counts_expected"],
        "accidental_counts_expected": jsmap.meta["accidental_counts_expected"],
    })
    _write_json(out_dir / SPECTRAL_STATS, payload)
    khz = 2e3 * np.pi
    print(f"analyze-spectral: sum sigma 2pi x "
          f"{stats.sum_fit.sigma / khz:.2f} +/- "
          f"{stats.sum_fit.sigma_error / khz:.2f} kHz "
          f"({'deconvolved' if deconvolve else 'as measured'}), marginal "
          f"stds 2pi x {stats.std_stokes / khz / 1e3:.3f} / "
          f"{stats.std_anti_stokes / khz / 1e3:.3f} MHz "
          f"-> {out_dir / SPECTRAL_STATS}")
    return [FIG3A_CSV, FIG3B_CSV, FIG3C_CSV, FIG3D_CSV, SPECTRAL_STATS]


def run_report(temporal_path: Path, spectral_path: Path, propagation: str,
               out_dir: Path) -> list:
    def load(path, label):
        try:
            with open(path) as fh:
                data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{label}: {path} is not valid JSON: {exc}")
        if not isinstance(data, dict):
            raise ValidationError(f"{label}: top level must be an object")
        return data

    tdata = load(temporal_path, "temporal stats")
    sdata = load(spectral_path, "spectral stats")
    for key, src in (("delay_std", temporal_path),
                     ("sum_sigma", spectral_path),
                     ("stokes_std", spectral_path),
                     ("anti_stokes_std", spectral_path)):
        data = tdata if key == "delay_std" else sdata
        if key not in data:
            raise ValidationError(f"{src}: missing field {key}")

    delay, delay_err = read_tagged(tdata["delay_std"], "s",
                                   "temporal.delay_std", require_error=True)
    sum_sigma, sum_err = read_tagged(sdata["sum_sigma"], "rad/s",
                                     "spectral.sum_sigma", require_error=True)
    std_s, _ = read_tagged(sdata["stokes_std"], "rad/s",
                           "spectral.stokes_std")
    std_a, _ = read_tagged(sdata["anti_stokes_std"], "rad/s",
                           "spectral.anti_stokes_std")
    single = 0.5 * (std_s + std_a)

    rep = build_report(delta_omega_sum=sum_sigma,
                       delta_omega_sum_error=sum_err,
                       delta_t=delay, delta_t_error=delay_err,
                       delta_omega_single=single, propagation=propagation)
    _write_json(out_dir / REPORT_JSON, rep.to_dict())

    khz = 2e3 * np.pi
    print("entanglement report")
    print(f"  delay std:            {rep.delta_t * 1e9:.2f} +/- "
          f"{rep.delta_t_error * 1e9:.2f} ns")
    print(f"  sum-frequency sigma:  2pi x {rep.delta_omega_sum / khz:.2f} "
          f"+/- {rep.delta_omega_sum_error / khz:.2f} kHz")
    print(f"  single-photon std:    2pi x "
          f"{rep.delta_omega_single / khz / 1e3:.3f} MHz")
    print(f"  uncertainty product:  {rep.product:.4f} +/- "
          f"{rep.product_error:.4f} ({rep.propagation})")
    verdict = "violated" if rep.separability_violated else "not violated"
    print(f"  separability bound 1: {verdict} "
          f"({rep.violation_sigmas:.1f} sigma)")
    steer = "satisfied" if rep.steering_satisfied else "not satisfied"
    print(f"  steering bound 0.5:   {steer}")
    print(f"  Schmidt modes:        {rep.schmidt_modes:.2f}")
    return [REPORT_JSON]


def cmd_simulate(args) -> int:
    cfg = _resolve_config(args.config)
    out_dir = _out_dir(args)
    seed = cfg.sim.seed if args.seed is None else args.seed
    names = run_simulate(cfg, seed, out_dir)
    _write_manifest(out_dir, "simulate", cfg, seed, names)
    return 0


def cmd_analyze_temporal(args) -> int:
    cfg = _resolve_config(args.config)
    out_dir = _out_dir(args)
    events = Path(args.events)
    meta = Path(args.events_meta) if args.events_meta else \
        events.with_name(EVENTS_META)
    stream = EventStream.read(events, meta if meta.exists() else None)
    seed = args.seed if args.seed is not None else \
        int(stream.meta.get("seed", 0))
    names = run_temporal(cfg, stream, seed, out_dir)
    _write_manifest(out_dir, "analyze-temporal", cfg, seed, names)
    return 0


def cmd_analyze_spectral(args) -> int:
    cfg = _resolve_config(args.config)
    out_dir = _out_dir(args)
    seed = cfg.sim.seed if args.seed is None else args.seed
    names = run_spectral(cfg, seed, args.deconvolve_cavity, out_dir)
    _write_manifest(out_dir, "analyze-spectral", cfg, seed, names)
    return 0


def cmd_report(args) -> int:
    out_dir = _out_dir(args)
    names = run_report(Path(args.temporal), Path(args.spectral),
                       args.propagation, out_dir)
    _write_manifest(out_dir, "report", None, None, names)
    return 0


def cmd_reproduce(args) -> int:
    cfg = reference_config()
    out_dir = _out_dir(args)
    seed = 1 if args.seed is None else args.seed
    names = run_simulate(cfg, seed, out_dir)
    stream = EventStream.read(out_dir / EVENTS_CSV, out_dir / EVENTS_META)
    names += run_temporal(cfg, stream, seed, out_dir)
    names += run_spectral(cfg, seed, True, out_dir)
    names += run_report(out_dir / TEMPORAL_STATS, out_dir / SPECTRAL_STATS,
                        args.propagation, out_dir)
    _write_manifest(out_dir, "reproduce-paper", cfg, seed, names)
    print(f"reproduce-paper: wrote {len(names)} files to {out_dir}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="biphoton-lab",
        description="Simulation and analysis of narrowband time-energy "
                    "entangled photon pairs.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config=True, seed=True):
        if config:
            p.add_argument("--config", default=None,
                           help="JSON config file (defaults to the built-in "
                                "reference settings)")
        if seed:
            p.add_argument("--seed", type=int, default=None,
                           help="override the configured random seed")
        p.add_argument("--out-dir", default=".",
                       help="directory for output files")

    p = sub.add_parser("simulate", help="generate a time-tagged event stream")
    common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("analyze-temporal",
                       help="coincidence histogram and delay statistics")
    common(p)
    p.add_argument("--events", default=EVENTS_CSV,
                   help="event stream CSV from the simulate command")
    p.add_argument("--events-meta", default=None,
                   help="sidecar metadata JSON (defaults to events_meta.json "
                        "next to the events file)")
    p.set_defaults(func=cmd_analyze_temporal)

    p = sub.add_parser("analyze-spectral",
                       help="cavity-scanned joint spectrum and width fits")
    common(p)
    p.add_argument("--deconvolve-cavity", action="store_true",
                   help="fit a Voigt peak and report the cavity-deconvolved "
                        "sum-frequency width")
    p.set_defaults(func=cmd_analyze_spectral)

    p = sub.add_parser("report",
                       help="combine stats files into the entanglement report")
    common(p, config=False, seed=False)
    p.add_argument("--temporal", default=TEMPORAL_STATS,
                   help="temporal stats JSON")
    p.add_argument("--spectral", default=SPECTRAL_STATS,
                   help="spectral stats JSON")
    p.add_argument("--propagation", choices=("linear", "quadrature"),
                   default="quadrature",
                   help="error propagation for the uncertainty product")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("reproduce-paper",
                       help="full chain at the reference settings")
    common(p, config=False)
    p.add_argument("--propagation", choices=("linear", "quadrature"),
                   default="linear",
                   help="error propagation for the uncertainty product")
    p.set_defaults(func=cmd_reproduce)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
