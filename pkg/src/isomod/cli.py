"""Command-line front end.

Subcommands:
  rate-sweep   achievable-rate curves (CSV + JSON)
  mc-phit      Monte Carlo hitting-probability estimates and calibration
  energy       transmit-energy breakdowns

Every output file embeds the fully resolved configuration; re-running a
command with the same config and seed reproduces the files byte for byte.
The output directory resolves as: --out flag, then $ISOMOD_OUT_DIR, then
the config's output_dir.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import _kernels
from .brownian import calibrate_receiver_radius, estimate_hit_probability, hit_pair_estimates
from .config import (
    ConfigError,
    PRESETS,
    get_cell,
    get_channel_fixture,
    get_geometry,
    get_mc_config,
    get_medium,
    get_messenger_spec,
    get_search,
    get_snr_grid,
    normalize_scheme_entry,
    rescaled_fixture,
    resolve_config,
)
from .energy import snr_db, total_energy
from .modulation import warn_if_anomer_pair
from .physics import diffusion_coefficient
from .rate import maximize_rate_at_order, sweep_rate_curve

_CSV_VERSION = "v1"

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NO_CONVERGENCE = 3


def _fmt(value: float) -> str:
    return f"{value:.9g}"


def _config_comment(config: dict) -> str:
    return "# config " + json.dumps(config, sort_keys=True, separators=(",", ":"))


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def _curve_label(entry: dict) -> str:
    label = entry["scheme"]
    if "messenger" in entry:
        label += f"_{entry['messenger']}"
    return label


def _write_curve_csv(path: Path, curve, config: dict) -> None:
    n_taus = len(curve.points[0].thresholds) if curve.points else 0
    tau_cols = ",".join(f"tau_{i + 1}" for i in range(n_taus))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"#isomod-rate-csv {_CSV_VERSION}\n")
        fh.write(_config_comment(config) + "\n")
        fh.write(f"snr_db,rate_bits{',' + tau_cols if tau_cols else ''}\n")
        for point in curve.points:
            taus = ",".join(_fmt(t) for t in point.thresholds)
            fh.write(f"{_fmt(point.snr_db)},{_fmt(point.rate)}{',' + taus if taus else ''}\n")


def cmd_rate_sweep(config: dict, out_dir: Path) -> int:
    entries = [normalize_scheme_entry(e) for e in config["rate"]["schemes"]]
    order_sweep = config["rate"].get("order_sweep")
    if not entries and not order_sweep:
        raise ConfigError("rate.schemes", "scheme list is empty")

    fixture = get_channel_fixture(config)
    search = get_search(config)
    snr_grid = get_snr_grid(config)
    jobs = int(config.get("jobs", 1))

    curves = {}
    for entry in entries:
        scheme = entry["scheme"]
        messenger = get_messenger_spec(config, entry.get("messenger"))
        entry_fixture = fixture
        if entry.get("rescale_hits_by_diffusion"):
            entry_fixture = rescaled_fixture(fixture, config, messenger)
        if scheme == "q-irsk":
            pair_names = entry.get("pair")
            if pair_names:
                warn_if_anomer_pair(*pair_names)
            target = (entry_fixture, entry_fixture)
        else:
            target = entry_fixture
        curve = sweep_rate_curve(
            scheme,
            target,
            snr_grid,
            search=search,
            messenger=messenger,
            jobs=jobs,
        )
        curves[_curve_label(entry)] = curve

    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for label, curve in sorted(curves.items()):
        path = out_dir / f"rate_{label}.csv"
        _write_curve_csv(path, curve, config)
        written.append(path)

    if curves:
        comparison = out_dir / "rate_comparison.csv"
        labels = sorted(curves)
        with open(comparison, "w", encoding="utf-8") as fh:
            fh.write(f"#isomod-rate-comparison-csv {_CSV_VERSION}\n")
            fh.write(_config_comment(config) + "\n")
            fh.write("snr_db," + ",".join(f"rate_{label}" for label in labels) + "\n")
            for i, snr in enumerate(snr_grid):
                rates = ",".join(_fmt(curves[label].points[i].rate) for label in labels)
                fh.write(f"{_fmt(snr)},{rates}\n")
        written.append(comparison)

    order_rows = []
    if order_sweep:
        families = order_sweep.get("families", [])
        orders = order_sweep.get("orders", [])
        if not families or not orders:
            raise ConfigError("rate.order_sweep", "needs families and orders")
        from dataclasses import replace as dc_replace

        from .energy import molecules_for_snr

        for snr in snr_grid:
            n = molecules_for_snr(snr, fixture.p1, fixture.noise_std)
            point_fixture = dc_replace(fixture, n=n)
            for family in families:
                for order in orders:
                    point = maximize_rate_at_order(family, int(order), point_fixture, search)
                    order_rows.append((family, int(order), snr, point.rate))
        path = out_dir / "rate_orders.csv"
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"#isomod-rate-orders-csv {_CSV_VERSION}\n")
            fh.write(_config_comment(config) + "\n")
            fh.write("family,order,snr_db,rate_bits\n")
            for family, order, snr, rate in order_rows:
                fh.write(f"{family},{order},{_fmt(snr)},{_fmt(rate)}\n")
        written.append(path)

    payload = {
        "backend": _kernels.BACKEND,
        "config": config,
        "curves": {label: curve.to_json_dict() for label, curve in sorted(curves.items())},
        "order_sweep": [
            {"family": f, "order": o, "snr_db": s, "rate_bits": r}
            for f, o, s, r in order_rows
        ],
    }
    _write_json(out_dir / "rate_sweep.json", payload)
    return EXIT_OK


def cmd_mc_phit(config: dict, out_dir: Path) -> int:
    geometry = get_geometry(config)
    mc_cfg = get_mc_config(config)
    medium = get_medium(config)
    messenger = get_messenger_spec(config, config["channel"].get("reference_messenger"))
    diffusion = diffusion_coefficient(medium, messenger)
    Ts = config["channel"]["Ts"]

    estimate = estimate_hit_probability(geometry, diffusion, mc_cfg)
    pair1, pair2 = hit_pair_estimates(geometry, diffusion, Ts, mc_cfg)

    payload = {
        "backend": _kernels.BACKEND,
        "config": config,
        "diffusion_m2_per_s": diffusion,
        "estimate": estimate.to_json_dict(),
        "pair": {"p1": pair1.to_json_dict(), "p2": pair2.to_json_dict()},
        "calibration": None,
    }

    out_dir.mkdir(parents=True, exist_ok=True)
    cal_cfg = config["mc"]["calibration"]
    exit_code = EXIT_OK
    if cal_cfg.get("enabled"):
        from dataclasses import replace as dc_replace

        cal_mc = dc_replace(mc_cfg, particle_count=int(cal_cfg["particle_count"]))
        try:
            result = calibrate_receiver_radius(
                cal_cfg["target_p1"],
                geometry,
                diffusion,
                Ts,
                cal_mc,
                final_particle_count=int(cal_cfg["final_particle_count"]),
            )
        except RuntimeError as exc:
            payload["calibration"] = {"error": str(exc), "converged": False}
            _write_json(out_dir / "mc_phit.json", payload)
            print(f"mc-phit: calibration failed: {exc}", file=sys.stderr)
            return EXIT_NO_CONVERGENCE
        held_out = cal_cfg["held_out_p2"]
        cal = result.to_json_dict()
        cal["held_out_p2_target"] = held_out
        cal["held_out_p2_rel_error"] = abs(result.p2.p_hat - held_out) / held_out
        payload["calibration"] = cal
        if not result.converged:
            exit_code = EXIT_NO_CONVERGENCE
            print("mc-phit: calibration did not converge", file=sys.stderr)

    _write_json(out_dir / "mc_phit.json", payload)
    return exit_code


def cmd_energy(config: dict, out_dir: Path) -> int:
    cell = get_cell(config)
    messenger = get_messenger_spec(config)
    fixture = get_channel_fixture(config)
    n_values = config["energy"]["n_values"]
    if not isinstance(n_values, list) or not n_values:
        raise ConfigError("energy.n_values", "must be a non-empty list")
    reports = []
    for n in n_values:
        breakdown = total_energy(float(n), cell, messenger)
        entry = breakdown.to_json_dict()
        entry["snr_db"] = (
            snr_db(float(n), fixture.p1, fixture.noise_std) if n > 0 else None
        )
        reports.append(entry)
    payload = {
        "backend": _kernels.BACKEND,
        "config": config,
        "messenger": messenger.name,
        "breakdowns": reports,
    }
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_json(out_dir / "energy.json", payload)
    return EXIT_OK


def _resolve_out_dir(args, config: dict) -> Path:
    if args.out is not None:
        return Path(args.out)
    env = os.environ.get("ISOMOD_OUT_DIR")
    if env:
        return Path(env)
    return Path(config["output_dir"])


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="isomod",
        description="Achievable-rate analysis for isomer modulation over diffusive channels",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    commands = {
        "rate-sweep": cmd_rate_sweep,
        "mc-phit": cmd_mc_phit,
        "energy": cmd_energy,
    }
    for name in commands:
        p = sub.add_parser(name)
        p.add_argument("--config", default=None, help="YAML config file")
        p.add_argument("--preset", default=None, choices=sorted(PRESETS))
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--jobs", type=int, default=None, help="parallel workers")
        p.add_argument("--seed", type=int, default=None)
    args = parser.parse_args(argv)

    overrides = {}
    if args.jobs is not None:
        if args.jobs < 1:
            print("isomod: --jobs must be >= 1", file=sys.stderr)
            return EXIT_CONFIG
        overrides["jobs"] = args.jobs
    if args.seed is not None:
        overrides["seed"] = args.seed

    try:
        config = resolve_config(args.preset, args.config, overrides)
        _kernels.set_thread_count(int(config.get("jobs", 1)))
        out_dir = _resolve_out_dir(args, config)
        return commands[args.command](config, out_dir)
    except ConfigError as exc:
        print(f"isomod: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"isomod: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    raise SystemExit(main())
