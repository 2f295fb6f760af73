"""Run configuration: defaults, presets, YAML loading, and validation.

A run config is a plain nested dict.  Resolution order (later wins):
built-in defaults < preset < config file < CLI flags.  Radii and distances
are given in bench units (nm, um) here and converted to SI at the edge.
"""

from __future__ import annotations

import copy
from dataclasses import replace

import yaml

from .arrivals import ChannelParams
from .brownian import GeometryParams, McConfig, hit_probability_pair
from .energy import CellParams
from .physics import (
    CATALOG,
    MediumParams,
    MessengerSpec,
    diffusion_coefficient,
)
from .rate import SearchConfig


class ConfigError(ValueError):
    """Invalid run configuration; `field` names the offending entry."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"config field '{field}': {message}")


DEFAULT_CONFIG = {
    "seed": 0,
    "output_dir": "out",
    "jobs": 1,
    "messenger": "hexose",
    "medium": {"temperature": 310.0, "viscosity": 1.0e-3},
    "cell": {"vesicle_radius_nm": 50.0, "cell_radius_nm": 5000.0},
    "channel": {
        "source": "table",  # "table" uses p1/p2 below, "mc" estimates them
        "Ts": 5.9,
        "distance_um": 16.0,
        "p1": 0.6097,
        "p2": 0.7208,
        "noise_std": 100.0,
        "reference_messenger": "hexose",
    },
    "rate": {
        "snr_db": {"start": -10.0, "stop": 40.0, "step": 2.0},
        "schemes": [],
        "order_sweep": None,
        "search": {"coarse_points": 64, "refine_rounds": 2, "refine_factor": 8},
    },
    "mc": {
        "particle_count": 50_000,
        "time_step": 5.9e-3,
        "horizon": 5.9,
        "geometry": {"distance_um": 100.0, "receiver_radius_um": 50.0, "dimensions": 1},
        "calibration": {
            "enabled": False,
            "target_p1": 0.6097,
            "held_out_p2": 0.7208,
            "particle_count": 30_000,
            "final_particle_count": 200_000,
        },
    },
    "energy": {"n_values": [0.0, 1000.0, 100000.0]},
}

# Presets for the six standard comparison figures.  The insulin overlays of the
# first two comparisons need user-supplied insulin parameters (radius,
# enthalpy, hitting probabilities), so those presets carry the isomer
# curve only and are marked incomplete.
PRESETS = {
    "fig7": {
        "rate": {"schemes": ["b-icsk"]},
        "note": "incomplete: insulin reference curve needs user-supplied parameters",
    },
    "fig8": {
        "rate": {"schemes": ["b-imosk-awgn"]},
        "note": "incomplete: insulin reference curve needs user-supplied parameters",
    },
    "fig9": {"rate": {"schemes": ["b-imosk-awgn", "imosk-32"]}},
    "fig10": {
        "rate": {
            "schemes": [
                {"scheme": "b-imosk-awgn", "messenger": "hexose"},
                {
                    "scheme": "b-imosk-awgn",
                    "messenger": "triose",
                    "rescale_hits_by_diffusion": True,
                },
            ]
        }
    },
    "fig11": {"rate": {"schemes": ["b-icsk", "b-imosk-awgn", "b-imosk-muta", "q-irsk"]}},
    "fig12": {
        "rate": {
            "snr_db": [10.0],
            "schemes": [],
            "order_sweep": {"families": ["icsk", "imosk"], "orders": [2, 4, 8, 16, 32]},
        }
    },
    "calibration": {"mc": {"calibration": {"enabled": True}}},
}

_KNOWN_SCHEMES = {
    "b-icsk",
    "q-icsk",
    "b-imosk-awgn",
    "b-imosk-muta",
    "imosk-32",
    "q-irsk",
}


def deep_merge(base: dict, overlay: dict) -> dict:
    out = copy.deepcopy(base)
    for key, value in overlay.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = deep_merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def load_config_file(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        data = yaml.safe_load(fh)
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError("<root>", f"config file must hold a mapping, got {type(data).__name__}")
    return data


def resolve_config(
    preset: str | None = None,
    config_path=None,
    overrides: dict | None = None,
) -> dict:
    config = copy.deepcopy(DEFAULT_CONFIG)
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError("preset", f"unknown preset {preset!r}; have {sorted(PRESETS)}")
        config = deep_merge(config, PRESETS[preset])
        config["preset"] = preset
    if config_path is not None:
        config = deep_merge(config, load_config_file(config_path))
    if overrides:
        config = deep_merge(config, overrides)
    return config


# ---------------------------------------------------------------------------
# Typed views over the resolved dict
# ---------------------------------------------------------------------------

def get_messenger_spec(config: dict, name: str | None = None) -> MessengerSpec:
    name = name or config["messenger"]
    overrides = config.get("messengers", {}).get(name)
    if name not in CATALOG and overrides is None:
        raise ConfigError("messenger", f"unknown messenger {name!r}")
    base = CATALOG.get(name)
    if overrides is None:
        return base
    fields = {
        "name": name,
        "radius": overrides.get("radius_nm", base.radius * 1e9 if base else None),
        "formation_enthalpy": overrides.get(
            "formation_enthalpy_kj_mol",
            base.formation_enthalpy / 1e3 if base else None,
        ),
        "family_order": overrides.get("family_order", base.family_order if base else 2),
    }
    if fields["radius"] is None or fields["formation_enthalpy"] is None:
        raise ConfigError(
            f"messengers.{name}",
            "custom messengers need radius_nm and formation_enthalpy_kj_mol",
        )
    spec = MessengerSpec(
        name=name,
        radius=fields["radius"] * 1e-9,
        formation_enthalpy=fields["formation_enthalpy"] * 1e3,
        family_order=fields["family_order"],
        optical_rotation_alpha=(base.optical_rotation_alpha if base else None),
        optical_rotation_beta=(base.optical_rotation_beta if base else None),
        optical_rotation_eq=(base.optical_rotation_eq if base else None),
    )
    return spec


def get_medium(config: dict) -> MediumParams:
    med = config["medium"]
    try:
        return MediumParams(temperature=med["temperature"], viscosity=med["viscosity"])
    except (KeyError, ValueError) as exc:
        raise ConfigError("medium", str(exc)) from exc


def get_cell(config: dict) -> CellParams:
    cell = config["cell"]
    try:
        return CellParams(
            vesicle_radius=cell["vesicle_radius_nm"] * 1e-9,
            cell_radius=cell["cell_radius_nm"] * 1e-9,
        )
    except (KeyError, ValueError) as exc:
        raise ConfigError("cell", str(exc)) from exc


def get_geometry(config: dict) -> GeometryParams:
    geo = config["mc"]["geometry"]
    try:
        return GeometryParams(
            distance=geo["distance_um"] * 1e-6,
            receiver_radius=geo["receiver_radius_um"] * 1e-6,
            dimensions=geo["dimensions"],
        )
    except (KeyError, ValueError) as exc:
        raise ConfigError("mc.geometry", str(exc)) from exc


def get_mc_config(config: dict) -> McConfig:
    mc = config["mc"]
    try:
        return McConfig(
            particle_count=mc["particle_count"],
            time_step=mc["time_step"],
            horizon=mc["horizon"],
            seed=config["seed"],
        )
    except (KeyError, ValueError) as exc:
        raise ConfigError("mc", str(exc)) from exc


def get_search(config: dict) -> SearchConfig:
    search = config["rate"]["search"]
    try:
        return SearchConfig(
            coarse_points=search["coarse_points"],
            refine_rounds=search["refine_rounds"],
            refine_factor=search["refine_factor"],
        )
    except (KeyError, ValueError) as exc:
        raise ConfigError("rate.search", str(exc)) from exc


def get_snr_grid(config: dict) -> list[float]:
    spec = config["rate"]["snr_db"]
    if isinstance(spec, dict):
        try:
            start, stop, step = spec["start"], spec["stop"], spec["step"]
        except KeyError as exc:
            raise ConfigError("rate.snr_db", f"missing {exc}") from exc
        if step <= 0 or stop < start:
            raise ConfigError("rate.snr_db", "need step > 0 and stop >= start")
        grid = []
        value = float(start)
        while value <= stop + 1e-12:
            grid.append(round(value, 12))
            value += step
        return grid
    grid = [float(s) for s in spec]
    if not grid:
        raise ConfigError("rate.snr_db", "SNR grid is empty")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ConfigError("rate.snr_db", "SNR grid must be strictly increasing")
    return grid


def get_channel_fixture(config: dict) -> ChannelParams:
    ch = config["channel"]
    source = ch.get("source", "table")
    if source == "table":
        p1, p2 = ch["p1"], ch["p2"]
    elif source == "mc":
        medium = get_medium(config)
        messenger = get_messenger_spec(config, ch.get("reference_messenger"))
        diffusion = diffusion_coefficient(medium, messenger)
        p1, p2 = hit_probability_pair(
            get_geometry(config), diffusion, ch["Ts"], get_mc_config(config)
        )
    else:
        raise ConfigError("channel.source", f"must be 'table' or 'mc', got {source!r}")
    try:
        return ChannelParams(
            n=1.0,  # sweeps derive n per SNR point
            p1=p1,
            p2=p2,
            noise_std=ch["noise_std"],
            Ts=ch["Ts"],
            d=ch["distance_um"] * 1e-6,
        )
    except (KeyError, ValueError) as exc:
        raise ConfigError("channel", str(exc)) from exc


def normalize_scheme_entry(entry) -> dict:
    if isinstance(entry, str):
        entry = {"scheme": entry}
    if not isinstance(entry, dict) or "scheme" not in entry:
        raise ConfigError(
            "rate.schemes", f"entries must be scheme names or mappings, got {entry!r}"
        )
    if entry["scheme"] not in _KNOWN_SCHEMES:
        raise ConfigError(
            "rate.schemes",
            f"unknown scheme {entry['scheme']!r}; have {sorted(_KNOWN_SCHEMES)}",
        )
    return entry


def rescaled_fixture(
    fixture: ChannelParams, config: dict, messenger: MessengerSpec
) -> ChannelParams:
    """Rescale the fixture's hitting probabilities in proportion to the
    messenger's diffusion coefficient relative to the reference messenger."""
    medium = get_medium(config)
    ref = get_messenger_spec(config, config["channel"].get("reference_messenger"))
    ratio = diffusion_coefficient(medium, messenger) / diffusion_coefficient(medium, ref)
    p1 = min(1.0, fixture.p1 * ratio)
    p2 = min(1.0, max(fixture.p2 * ratio, p1))
    return replace(fixture, p1=p1, p2=p2)
