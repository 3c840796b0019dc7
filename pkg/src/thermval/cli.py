"""Command-line entry point.

Exit status: 0 on success, 1 when ``report`` rejects the model, 2 on bad
input (unknown flags, missing or malformed files, invalid settings).
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import formats
from .building import load_building, load_shade
from .config import DEMO_FILES, RunConfig, load_config, resolve_input
from .geometry import diffuse_blocked_fraction, element_view_factors, mc_blocked_fraction
from .sensitivity import attribute_variance, load_factors, run_ensemble
from .thermal import simulate
from .twin import DIAGNOSED_CHANNELS, run_twin
from .validation import diagnose, report, residual
from .weather import PROFILES, load_weather, save_weather, synth_weather

EXIT_OK, EXIT_REJECTED, EXIT_INPUT = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(f"{self.prog}: error: {message}")


class _UsageError(Exception):
    pass


def build_parser() -> argparse.ArgumentParser:
    # accepted before or after the subcommand; defaults filled in by cli()
    common = _Parser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--config", type=Path, help="YAML run configuration")
    common.add_argument("--seed", type=int, help="seed for every random draw (default 0)")
    common.add_argument("--out-dir", type=Path, help="directory for output files (default .)")
    common.add_argument("--plot", action="store_true", help="also render PNG figures")
    common.add_argument("-v", "--verbose", action="store_true")

    p = _Parser(prog="thermval", description="Building thermal model validation toolkit.",
                parents=[common])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    demo = ", ".join(DEMO_FILES)

    s = sub.add_parser("simulate", parents=[common], help="run the thermal model")
    s.add_argument("--building", help=f"building YAML or a demo alias ({demo})")
    s.add_argument("--weather", help="weather CSV or demo alias")
    s.add_argument("--no-warmup", action="store_true", help="start from outdoor temperature")

    s = sub.add_parser("sensitivity", parents=[common], help="spectral sensitivity ensemble")
    s.add_argument("--building")
    s.add_argument("--weather")
    s.add_argument("--factors", help="factor YAML or demo alias")
    s.add_argument("--runs", type=int)
    s.add_argument("--order", type=int)
    s.add_argument("--amplitude", type=float)
    s.add_argument("--zone")
    s.add_argument("--workers", type=int)

    s = sub.add_parser("diagnose", parents=[common], help="rank inputs against a residual")
    s.add_argument("--measured", help="measured series CSV (timestamp,value)")
    s.add_argument("--predicted", help="predicted series CSV (timestamp,value)")
    s.add_argument("--weather", help="weather CSV providing the candidate inputs")
    s.add_argument("--inputs", nargs="+", choices=DIAGNOSED_CHANNELS, default=list(DIAGNOSED_CHANNELS))
    s.add_argument("--score", choices=("track", "slice"), default="track")

    s = sub.add_parser("viewfactor", parents=[common], help="shade view factors and blocked fraction")
    s.add_argument("--shade", default="demo_shade", help="shade YAML or demo alias")
    s.add_argument("--mc-rays", type=int, default=0, help="also estimate by Monte Carlo")

    s = sub.add_parser("synth-weather", parents=[common], help="generate synthetic weather")
    s.add_argument("--days", type=int, default=5)
    s.add_argument("--profile", choices=PROFILES, default="mixed")
    s.add_argument("--start", default="1998-01-01T00:00")
    s.add_argument("--output", default="weather.csv", help="file name inside --out-dir")

    s = sub.add_parser("report", parents=[common], help="residual statistics and verdict")
    s.add_argument("--residual", help="residual series CSV")
    s.add_argument("--measured")
    s.add_argument("--predicted")
    s.add_argument("--band", type=float)
    s.add_argument("--mode", choices=("strict", "threshold"))
    s.add_argument("--threshold", type=float)

    s = sub.add_parser("twin", parents=[common], help="synthetic-twin validation experiment")
    s.add_argument("--building")
    s.add_argument("--weather")
    s.add_argument("--zone", default="living")
    s.add_argument("--noise", type=float, default=0.1, help="measurement noise std (K)")
    return p


def _pick(value, cfg: RunConfig, key: str, fallback: str | None = None) -> Path:
    if value is not None:
        return resolve_input(value)
    if key in cfg.paths:
        return cfg.paths[key]
    if fallback is not None:
        return resolve_input(fallback)
    raise ValueError(f"--{key} is required (or set paths.{key} in the config)")


def _model(args, cfg):
    model = load_building(_pick(args.building, cfg, "building", "demo_building"))
    for attr in ("latitude_deg", "longitude_deg", "albedo"):
        val = getattr(cfg.site, attr)
        if val is not None:
            setattr(model.site, attr, val)
    return model


def _weather(args, cfg):
    return load_weather(_pick(args.weather, cfg, "weather", "demo_weather"))


def _or(value, default):
    return default if value is None else value


def cmd_simulate(args, cfg, out: Path) -> int:
    model, weather = _model(args, cfg), _weather(args, cfg)
    res = simulate(model, weather, warmup=not args.no_warmup)
    formats.save_simulation(res, out / "simulation.csv")
    print(f"simulated {len(weather)} records, {len(res.zone_temperature)} zones "
          f"(warm-up {res.warmup_days} days) -> {out / 'simulation.csv'}")
    for z, t in res.zone_temperature.items():
        print(f"  {z:<10} mean {t.mean():6.2f} C  min {t.min():6.2f}  max {t.max():6.2f}")
    if args.plot:
        from .plotting import plot_temperatures
        plot_temperatures(res, out / "temperatures.png", weather.t_out)
    return EXIT_OK


def cmd_sensitivity(args, cfg, out: Path) -> int:
    sc = cfg.sensitivity
    model, weather = _model(args, cfg), _weather(args, cfg)
    factors = load_factors(_pick(args.factors, cfg, "factors", "demo_factors"),
                           _or(args.amplitude, sc.amplitude))
    order = _or(args.order, sc.order)
    Y, factors = run_ensemble(model, weather, factors, _or(args.runs, sc.n_runs), order,
                              _or(args.zone, sc.zone), _or(args.workers, sc.workers))
    res = attribute_variance(Y, factors, order)
    formats.save_shares(res, out / "shares.csv")
    formats.save_shares_per_time(res, weather.time, out / "shares_per_time.csv")
    print(f"{res.n_runs} runs, order {res.order}, Parseval error {res.parseval_error:.1e}")
    for name, share in res.ranking():
        print(f"  {name:<30} {share:7.4f}")
    print(f"  {'unattributed':<30} {res.unattributed:7.4f}")
    if args.plot:
        from .plotting import plot_shares
        plot_shares(res, out / "shares.png")
    return EXIT_OK


def _residual_from(args, cfg):
    mt, m = formats.load_series(_pick(args.measured, cfg, "measured"))
    pt, p = formats.load_series(_pick(args.predicted, cfg, "predicted"))
    return mt, residual(m, p, mt, pt)


def cmd_diagnose(args, cfg, out: Path) -> int:
    d = cfg.dsp
    time, r = _residual_from(args, cfg)
    weather = _weather(args, cfg)
    if not np.array_equal(weather.time, time):
        raise ValueError("weather and residual are on different time bases")
    inputs = {c: weather.channel(c) for c in args.inputs}
    diag = diagnose(r, inputs, cutoff=d.cutoff, order=d.filter_order, window_len=d.window_len,
                    overlap=d.overlap, n_shifts=d.n_shifts, seed=cfg.seed, score=args.score)
    formats.save_ranking(diag, out / "ranking.csv")
    formats.save_similarity(diag, out / "similarity.csv")
    formats.save_spectrogram(diag.residual_spectrogram, out / "spectrogram_residual.csv")
    for name, s in diag.input_spectrograms.items():
        formats.save_spectrogram(s, out / f"spectrogram_{name}.csv")
    print(diag.summary())
    if args.plot:
        from .plotting import plot_spectrograms
        plot_spectrograms(diag, out / "spectrograms.png")
    return EXIT_OK


def cmd_viewfactor(args, cfg, out: Path) -> int:
    shade = load_shade(_pick(args.shade, cfg, "shade"))
    factors = element_view_factors(shade)
    blocked = diffuse_blocked_fraction(shade)
    rows = [(k, v) for k, v in factors.items()] + [("blocked_fraction", blocked)]
    with open(out / "viewfactor.csv", "w") as fh:
        fh.write("element,view_factor\n")
        fh.writelines(f"{k},{v!r}\n" for k, v in rows)
    for k, v in factors.items():
        print(f"{k:<18} {v:.6f}")
    print(f"blocked fraction   {blocked:.6f}")
    if args.mc_rays:
        est = mc_blocked_fraction(shade, args.mc_rays, _or(args.seed, cfg.seed))
        print(f"monte carlo        {est.value:.6f} +/- {est.stderr:.6f} ({est.n_rays} rays)")
    return EXIT_OK


def cmd_synth_weather(args, cfg, out: Path) -> int:
    w = synth_weather(args.days, args.profile, cfg.seed, start=args.start)
    path = out / args.output
    save_weather(w, path)
    print(f"{len(w)} records ({args.profile}) -> {path}")
    return EXIT_OK


def cmd_report(args, cfg, out: Path) -> int:
    a = cfg.acceptance
    if args.residual:
        time, r = formats.load_series(resolve_input(args.residual))
    else:
        time, r = _residual_from(args, cfg)
    rep = report(r, _or(args.band, a.band), _or(args.mode, a.mode), _or(args.threshold, a.threshold))
    formats.save_report(rep, out / "report")
    print(rep.to_text())
    if args.plot:
        from .plotting import plot_residual
        plot_residual(time, r, rep.band, out / "residual.png")
    return EXIT_OK if rep.accepted else EXIT_REJECTED


def cmd_twin(args, cfg, out: Path) -> int:
    a = cfg.acceptance
    model, weather = _model(args, cfg), _weather(args, cfg)
    tw = run_twin(model, weather, args.zone, noise=args.noise, seed=cfg.seed,
                  band=a.band, threshold=a.threshold)
    formats.save_series(out / "measured.csv", weather.time, tw.measured, "t_air",
                        "synthetic measurement (reference run plus noise)")
    formats.save_series(out / "predicted_initial.csv", weather.time,
                        tw.initial.zone_temperature[args.zone], "t_air", "diffuse shading ignored")
    formats.save_series(out / "predicted_improved.csv", weather.time,
                        tw.improved.zone_temperature[args.zone], "t_air", "diffuse shading from view factors")
    print(tw.summary())
    print(tw.diagnosis.summary())
    if args.plot:
        from .plotting import plot_fluxes, plot_residual
        plot_fluxes(tw, out / "twin_flux.png")
        plot_residual(weather.time, tw.initial_residual, a.band, out / "twin_residual_initial.png")
        plot_residual(weather.time, tw.improved_residual, a.band, out / "twin_residual_improved.png")
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "sensitivity": cmd_sensitivity,
    "diagnose": cmd_diagnose,
    "viewfactor": cmd_viewfactor,
    "synth-weather": cmd_synth_weather,
    "report": cmd_report,
    "twin": cmd_twin,
}


_COMMON_DEFAULTS = {"config": None, "seed": None, "out_dir": Path("."), "plot": False, "verbose": False}


def cli(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_INPUT
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    for key, default in _COMMON_DEFAULTS.items():
        if not hasattr(args, key):
            setattr(args, key, default)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config) if args.config else RunConfig()
        if args.seed is not None:
            cfg.seed = args.seed
        args.out_dir.mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command](args, cfg, args.out_dir)
    except (ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


def main() -> None:
    sys.exit(cli())


if __name__ == "__main__":
    main()
