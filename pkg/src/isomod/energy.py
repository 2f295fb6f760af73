"""Transmit-energy model and SNR bookkeeping.

A nanomachine modeled on a eukaryotic cell pays four costs per transmission:
synthesizing the messenger molecules, synthesizing transport vesicles,
carrying the vesicles to the membrane on molecular motors, and exocytosis.
The empirical cost formulas quote zeptojoules (1 zJ = 1e-21 J) with radii in
nanometers; 83 zJ is one ATP hydrolysis and 8 nm one kinesin step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, asdict

from .physics import MessengerSpec

ZJ = 1e-21  # J

# Rounded three-significant-figure Avogadro number used by the per-molecule
# synthesis cost; kept at this precision so the cost model reproduces the
# reference fixture values.
_SYNTHESIS_MOLE_DIVISOR = 6.02e23

_ATP_ZJ = 83.0          # one ATP hydrolysis, zJ
_MOTOR_STEP_NM = 8.0    # one kinesin step, nm
_EXOCYTOSIS_ATP = 10.0  # ATP hydrolyses per membrane fusion


@dataclass(frozen=True)
class CellParams:
    """Transmitter cell geometry.

    vesicle_radius : m (r_v)
    cell_radius    : m (r_unit)

    No bundled measurements exist for these; the defaults (50 nm vesicles in
    a 10 um-diameter cell) are conventional order-of-magnitude choices.
    """

    vesicle_radius: float = 50e-9
    cell_radius: float = 5e-6

    def __post_init__(self):
        if not self.vesicle_radius > 0:
            raise ValueError(f"vesicle_radius must be > 0, got {self.vesicle_radius}")
        if not self.cell_radius > 0:
            raise ValueError(f"cell_radius must be > 0, got {self.cell_radius}")


@dataclass(frozen=True)
class EnergyBreakdown:
    """Energy cost of transmitting n molecules, all components in J."""

    n: float
    e_synthesis: float   # per molecule
    e_vesicle: float     # per vesicle
    e_carry: float       # per vesicle
    e_exocytosis: float  # per vesicle
    capacity: int        # molecules per vesicle
    e_total: float

    def to_json_dict(self) -> dict:
        return asdict(self)


def synthesis_cost(messenger: MessengerSpec) -> float:
    """Per-molecule synthesis cost: formation enthalpy / 6.02e23, J."""
    return messenger.formation_enthalpy / _SYNTHESIS_MOLE_DIVISOR


def vesicle_capacity(cell: CellParams, messenger: MessengerSpec) -> int:
    """Molecules one vesicle holds: floor((r_v / (r_mm * sqrt(3)))^3), >= 1.

    Cubic packing of molecule-sized cells along the vesicle diameter.
    """
    if cell.vesicle_radius <= messenger.radius:
        raise ValueError(
            f"vesicle radius {cell.vesicle_radius} must exceed messenger "
            f"radius {messenger.radius}"
        )
    ratio = cell.vesicle_radius / (messenger.radius * math.sqrt(3.0))
    return max(1, math.floor(ratio**3))


def vesicle_cost(cell: CellParams) -> float:
    """Vesicle membrane synthesis cost: 83 * 5 * (4 pi r_v^2) zJ, r_v in nm."""
    r_v_nm = cell.vesicle_radius * 1e9
    return _ATP_ZJ * 5.0 * (4.0 * math.pi * r_v_nm**2) * ZJ


def carry_cost(cell: CellParams) -> float:
    """Intra-cell transport: one ATP per whole 8 nm motor step over r_unit/2."""
    r_unit_nm = cell.cell_radius * 1e9
    steps = math.ceil((r_unit_nm / 2.0) / _MOTOR_STEP_NM)
    return _ATP_ZJ * steps * ZJ


def exocytosis_cost() -> float:
    """Membrane fusion: 83 * 10 zJ."""
    return _ATP_ZJ * _EXOCYTOSIS_ATP * ZJ


def total_energy(n: float, cell: CellParams, messenger: MessengerSpec) -> EnergyBreakdown:
    """E_T = n * E_S + (n / c_v) * (E_V + E_C + E_E)."""
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    e_s = synthesis_cost(messenger)
    e_v = vesicle_cost(cell)
    e_c = carry_cost(cell)
    e_e = exocytosis_cost()
    c_v = vesicle_capacity(cell, messenger)
    e_total = n * e_s + (n / c_v) * (e_v + e_c + e_e)
    return EnergyBreakdown(
        n=n,
        e_synthesis=e_s,
        e_vesicle=e_v,
        e_carry=e_c,
        e_exocytosis=e_e,
        capacity=c_v,
        e_total=e_total,
    )


def snr_db(n: float, p1: float, noise_std: float) -> float:
    """Received-count SNR in dB: 10 log10(n * p1 / noise_std).

    Both received signal and noise are molecule counts scaled by the same
    per-molecule energy, so the energy factor cancels.  The same definition
    is used for every modulation scheme so that rate curves share an axis.
    """
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    if not noise_std > 0:
        raise ValueError(f"noise_std must be > 0, got {noise_std}")
    signal = n * p1
    if signal == 0:
        return -math.inf
    return 10.0 * math.log10(signal / noise_std)


def molecules_for_snr(snr: float, p1: float, noise_std: float) -> float:
    """Inverse of snr_db: the (real-valued) n achieving a target SNR."""
    if not p1 > 0:
        raise ValueError(f"p1 must be > 0, got {p1}")
    if not noise_std > 0:
        raise ValueError(f"noise_std must be > 0, got {noise_std}")
    return noise_std * 10.0 ** (snr / 10.0) / p1
