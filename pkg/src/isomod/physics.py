"""Medium, messenger and free-diffusion primitives.

Everything in this package computes in SI units (m, s, K, J).  Bench units
(nm, um^2/s, kJ/mol, zJ) appear only at I/O boundaries and in the CLI.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# 2019 SI exact values.
BOLTZMANN = 1.380649e-23   # J/K
AVOGADRO = 6.02214076e23   # 1/mol


@dataclass(frozen=True)
class PhysicalConstants:
    """Fundamental constants, frozen at their exact SI values."""

    boltzmann: float = BOLTZMANN
    avogadro: float = AVOGADRO


CONSTANTS = PhysicalConstants()


@dataclass(frozen=True)
class MediumParams:
    """Propagation medium.

    temperature : K
    viscosity   : kg/(s*m), dynamic viscosity
    """

    temperature: float = 310.0
    viscosity: float = 1.0e-3

    def __post_init__(self):
        if not self.temperature > 0:
            raise ValueError(f"temperature must be > 0, got {self.temperature}")
        if not self.viscosity > 0:
            raise ValueError(f"viscosity must be > 0, got {self.viscosity}")


@dataclass(frozen=True)
class MessengerSpec:
    """One family of messenger molecules.

    radius              : m, hydrodynamic (Stokes) radius
    formation_enthalpy  : J/mol, synthesis cost per mole
    family_order        : number of distinguishable isomers in the family
    optical_rotation_*  : degrees; specific optical rotation of the pure
                          alpha form, pure beta form, and the equilibrium
                          mixture.  Either all three are present or none.
    """

    name: str
    radius: float
    formation_enthalpy: float
    family_order: int = 2
    optical_rotation_alpha: float | None = None
    optical_rotation_beta: float | None = None
    optical_rotation_eq: float | None = None

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError(f"radius must be > 0, got {self.radius}")
        if not self.formation_enthalpy > 0:
            raise ValueError(
                f"formation_enthalpy must be > 0, got {self.formation_enthalpy}"
            )
        if self.family_order < 1:
            raise ValueError(f"family_order must be >= 1, got {self.family_order}")
        rotations = (
            self.optical_rotation_alpha,
            self.optical_rotation_beta,
            self.optical_rotation_eq,
        )
        present = [r is not None for r in rotations]
        if any(present) and not all(present):
            raise ValueError(
                f"messenger {self.name!r}: optical rotation constants must be "
                "given all together (alpha, beta, equilibrium) or not at all"
            )
        if all(present):
            r_a, r_b, r_eq = rotations
            if not (r_b < r_eq < r_a):
                raise ValueError(
                    f"messenger {self.name!r}: optical rotations must satisfy "
                    f"beta < equilibrium < alpha, got {r_b}, {r_eq}, {r_a}"
                )

    @property
    def has_optical_rotation(self) -> bool:
        return self.optical_rotation_alpha is not None


# Built-in messenger catalog.
#
# Hexose: 0.38 nm Stokes radius, 1271 kJ/mol formation enthalpy, 32
# distinguishable isomers (16 stereoisomers x alpha/beta ring anomers),
# glucopyranose optical rotations (alpha 112.2, beta 18.7, equilibrium 52.7).
#
# Triose: 4 distinguishable isomers.  Radius and enthalpy are rough
# half-a-hexose placeholders (no measured values are bundled); override them
# in the run config when the absolute energy scale matters.
HEXOSE = MessengerSpec(
    name="hexose",
    radius=0.38e-9,
    formation_enthalpy=1271e3,
    family_order=32,
    optical_rotation_alpha=112.2,
    optical_rotation_beta=18.7,
    optical_rotation_eq=52.7,
)

TRIOSE = MessengerSpec(
    name="triose",
    radius=0.30e-9,
    formation_enthalpy=635e3,
    family_order=4,
)

CATALOG = {m.name: m for m in (HEXOSE, TRIOSE)}


def get_messenger(name: str) -> MessengerSpec:
    try:
        return CATALOG[name]
    except KeyError:
        raise KeyError(
            f"unknown messenger {name!r}; catalog has {sorted(CATALOG)}"
        ) from None


def diffusion_coefficient(medium: MediumParams, messenger: MessengerSpec) -> float:
    """Stokes-Einstein diffusion coefficient, m^2/s.

    D = k_B * T / (6 * pi * eta * r)
    """
    return (BOLTZMANN * medium.temperature) / (
        6.0 * math.pi * medium.viscosity * messenger.radius
    )


def displacement_std(diffusion: float, t: float) -> float:
    """Std of the 1-D Brownian displacement after time t: sqrt(2 D t)."""
    if not diffusion > 0:
        raise ValueError(f"diffusion coefficient must be > 0, got {diffusion}")
    if t < 0:
        raise ValueError(f"time must be >= 0, got {t}")
    return math.sqrt(2.0 * diffusion * t)


def concentration_profile(diffusion: float, x, t: float):
    """Normalized 1-D point-release concentration, 1/m.

    c(x, t) = (4 pi D t)^(-1/2) * exp(-x^2 / (4 D t))

    Integrates to 1 over x; its second moment is 2 D t.  Accepts scalar or
    array x.
    """
    if not diffusion > 0:
        raise ValueError(f"diffusion coefficient must be > 0, got {diffusion}")
    if not t > 0:
        raise ValueError(f"time must be > 0, got {t}")
    x = np.asarray(x, dtype=float)
    four_dt = 4.0 * diffusion * t
    c = np.exp(-(x * x) / four_dt) / np.sqrt(math.pi * four_dt)
    return float(c) if c.ndim == 0 else c
