"""Monte Carlo first-hitting estimates for an absorbing receiver.

Independent oracle for the hitting probabilities consumed by the arrival
statistics: particles perform discrete Gaussian steps (per-axis std
sqrt(2*D*dt)) from a point transmitter and are absorbed on first entering
the receiver sphere (3-D) or slab (1-D).  Absorption is detected on
end-of-step positions only; the resulting small negative bias shrinks with
the time step and is absorbed by calibration.

Deterministic: a fixed (geometry, D, config) gives bit-identical estimates,
independent of kernel parallelism.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, asdict, replace

from ._kernels import simulate_first_hits


@dataclass(frozen=True)
class GeometryParams:
    """Transmitter-receiver geometry.

    distance        : m, point transmitter to receiver center
    receiver_radius : m
    dimensions      : 1 (absorbing slab) or 3 (absorbing sphere)
    """

    distance: float
    receiver_radius: float
    dimensions: int = 3

    def __post_init__(self):
        if not self.receiver_radius > 0:
            raise ValueError(
                f"receiver_radius must be > 0, got {self.receiver_radius}"
            )
        if not self.distance > self.receiver_radius:
            raise ValueError(
                f"distance ({self.distance}) must exceed receiver_radius "
                f"({self.receiver_radius})"
            )
        if self.dimensions not in (1, 3):
            raise ValueError(f"dimensions must be 1 or 3, got {self.dimensions}")


@dataclass(frozen=True)
class McConfig:
    particle_count: int = 50_000
    time_step: float = 5.9e-3
    horizon: float = 5.9
    seed: int = 0

    def __post_init__(self):
        if self.particle_count < 1:
            raise ValueError(f"particle_count must be >= 1, got {self.particle_count}")
        if not self.time_step > 0:
            raise ValueError(f"time_step must be > 0, got {self.time_step}")
        if self.horizon < 0:
            raise ValueError(f"horizon must be >= 0, got {self.horizon}")
        if self.horizon > 0 and self.time_step > self.horizon:
            raise ValueError(
                f"time_step ({self.time_step}) must not exceed horizon "
                f"({self.horizon})"
            )


@dataclass(frozen=True)
class HitEstimate:
    p_hat: float
    std_err: float
    hits: int
    trials: int

    def to_json_dict(self) -> dict:
        return asdict(self)


def _estimate(hits: int, trials: int) -> HitEstimate:
    p = hits / trials
    return HitEstimate(
        p_hat=p,
        std_err=math.sqrt(p * (1.0 - p) / trials),
        hits=hits,
        trials=trials,
    )


def _first_hit_steps(geom: GeometryParams, diffusion: float, cfg: McConfig, horizon: float):
    if not diffusion > 0:
        raise ValueError(f"diffusion coefficient must be > 0, got {diffusion}")
    n_steps = int(round(horizon / cfg.time_step))
    step_std = math.sqrt(2.0 * diffusion * cfg.time_step)
    steps = simulate_first_hits(
        cfg.seed,
        cfg.particle_count,
        n_steps,
        step_std,
        geom.distance,
        geom.receiver_radius,
        geom.dimensions,
    )
    return steps, n_steps


def estimate_hit_probability(
    geom: GeometryParams, diffusion: float, cfg: McConfig
) -> HitEstimate:
    """Fraction of particles absorbed within cfg.horizon, with binomial SE."""
    if cfg.horizon == 0:
        return HitEstimate(0.0, 0.0, 0, cfg.particle_count)
    steps, _ = _first_hit_steps(geom, diffusion, cfg, cfg.horizon)
    return _estimate(int((steps > 0).sum()), cfg.particle_count)


def hit_pair_estimates(
    geom: GeometryParams, diffusion: float, Ts: float, cfg: McConfig
) -> tuple[HitEstimate, HitEstimate]:
    """Estimates for hitting within Ts and within 2*Ts from shared trajectories.

    Nested counting on the same particle paths guarantees p2 >= p1.
    """
    if Ts < 0:
        raise ValueError(f"Ts must be >= 0, got {Ts}")
    if Ts == 0:
        zero = HitEstimate(0.0, 0.0, 0, cfg.particle_count)
        return zero, zero
    cfg2 = replace(cfg, horizon=2.0 * Ts)
    steps, n_steps = _first_hit_steps(geom, diffusion, cfg2, cfg2.horizon)
    half = n_steps // 2
    hits1 = int(((steps > 0) & (steps <= half)).sum())
    hits2 = int((steps > 0).sum())
    return _estimate(hits1, cfg.particle_count), _estimate(hits2, cfg.particle_count)


def hit_probability_pair(
    geom: GeometryParams, diffusion: float, Ts: float, cfg: McConfig
) -> tuple[float, float]:
    e1, e2 = hit_pair_estimates(geom, diffusion, Ts, cfg)
    return e1.p_hat, e2.p_hat


def scale_hit_probability(p: float, diffusion_from: float, diffusion_to: float) -> float:
    """Rescale a hitting probability proportionally to the diffusion
    coefficient, clipped to [0, 1].

    Crude transfer of a measured P_hit to a molecule with a different D;
    the proportionality constant is geometry-dependent, so treat results as
    indicative only.
    """
    if not diffusion_from > 0 or not diffusion_to > 0:
        raise ValueError("diffusion coefficients must be > 0")
    return min(1.0, p * diffusion_to / diffusion_from)


@dataclass(frozen=True)
class CalibrationResult:
    receiver_radius: float
    p1: HitEstimate
    p2: HitEstimate
    target_p1: float
    iterations: int
    converged: bool
    geometry: GeometryParams

    def to_json_dict(self) -> dict:
        return {
            "receiver_radius": self.receiver_radius,
            "p1": self.p1.to_json_dict(),
            "p2": self.p2.to_json_dict(),
            "target_p1": self.target_p1,
            "iterations": self.iterations,
            "converged": self.converged,
            "geometry": asdict(self.geometry),
        }


def calibrate_receiver_radius(
    target_p1: float,
    geom_template: GeometryParams,
    diffusion: float,
    Ts: float,
    cfg: McConfig,
    *,
    radius_tol: float = 1e-8,
    final_particle_count: int | None = None,
    max_iterations: int = 60,
) -> CalibrationResult:
    """Fit the receiver radius by bisection so the one-duration hitting
    probability matches target_p1, then estimate the held-out two-duration
    probability at the fitted radius.

    All bisection evaluations share one seed (common random numbers), which
    makes the empirical hit fraction monotone in the radius and the
    bisection exact on it.  distance and dimensions are taken from
    geom_template; its receiver_radius is ignored.

    Note: in 3-D at short range the hitting process is nearly saturated by
    Ts, so the two-duration value is only ~2% above the one-duration value
    regardless of radius.  A strongly time-growing pair (like the bundled
    hexose reference pair) is only reachable in the quasi-planar 1-D
    geometry; see `reference_calibration_geometry`.
    """
    if not (0.0 < target_p1 < 1.0):
        raise ValueError(f"target_p1 must be in (0, 1), got {target_p1}")
    lo = 0.0  # exclusive: zero radius never absorbs
    hi = geom_template.distance * (1.0 - 1e-12)

    def p1_at(radius: float) -> float:
        geom = replace(geom_template, receiver_radius=radius)
        e1, _ = hit_pair_estimates(geom, diffusion, Ts, cfg)
        return e1.p_hat

    if p1_at(hi) < target_p1:
        # Even a receiver touching the transmitter falls short; no bracket.
        raise RuntimeError(
            f"calibration bracket failure: p1 at maximum radius is below "
            f"target {target_p1}"
        )
    iterations = 0
    while iterations < max_iterations and (hi - lo) > radius_tol:
        mid = 0.5 * (lo + hi)
        if p1_at(mid) < target_p1:
            lo = mid
        else:
            hi = mid
        iterations += 1
    radius = 0.5 * (lo + hi)
    converged = (hi - lo) <= radius_tol

    final_cfg = cfg
    if final_particle_count is not None:
        final_cfg = replace(cfg, particle_count=final_particle_count)
    geom = replace(geom_template, receiver_radius=radius)
    e1, e2 = hit_pair_estimates(geom, diffusion, Ts, final_cfg)
    return CalibrationResult(
        receiver_radius=radius,
        p1=e1,
        p2=e2,
        target_p1=target_p1,
        iterations=iterations,
        converged=converged,
        geometry=geom,
    )


def reference_calibration_geometry(distance: float = 100e-6) -> GeometryParams:
    """Geometry template for calibrating against the bundled hexose
    reference hitting pair (0.6097 within Ts, 0.7208 within 2*Ts).

    That pair grows far too strongly between Ts and 2*Ts to come from a
    small absorbing sphere near a point source: any 3-D configuration that
    matches the first value puts the second near 0.62.  It is consistent
    with quasi-planar first passage across an effective gap of ~43 um, so
    the reference calibration runs in the 1-D geometry with a distance wide
    enough to bracket that gap; the fitted radius then sets the effective
    gap and the two-duration probability is a genuine held-out check.
    """
    return GeometryParams(distance=distance, receiver_radius=distance / 2, dimensions=1)
