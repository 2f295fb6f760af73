"""Gaussian arrival statistics and tail-probability primitives.

A transmitter releasing n molecules with per-molecule hitting probability p
produces Binomial(n, p) arrivals, approximated throughout as
N(n*p, n*p*(1-p)).  Channel memory is exactly one symbol: the only
inter-symbol term is the previous symbol's overflow, with hitting
probability p2 over two symbol durations against p1 over one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import erfc


@dataclass(frozen=True)
class ChannelParams:
    """Per-link channel fixture.

    n         : molecules released per symbol (per molecule type)
    p1        : hitting probability within one symbol duration
    p2        : hitting probability within two symbol durations
    noise_std : std of the additive molecule-count noise (sigma)
    Ts        : symbol duration, s
    d         : transmitter-receiver distance, m
    """

    n: float
    p1: float
    p2: float
    noise_std: float
    Ts: float = 5.9
    d: float = 16e-6

    def __post_init__(self):
        if self.n < 0:
            raise ValueError(f"n must be >= 0, got {self.n}")
        if not (0.0 <= self.p1 <= self.p2 <= 1.0):
            raise ValueError(
                f"need 0 <= p1 <= p2 <= 1, got p1={self.p1}, p2={self.p2}"
            )
        if self.noise_std < 0:
            raise ValueError(f"noise_std must be >= 0, got {self.noise_std}")


@dataclass(frozen=True)
class GaussianStat:
    mean: float
    variance: float

    def __post_init__(self):
        if self.variance < 0:
            raise ValueError(f"variance must be >= 0, got {self.variance}")


def current_symbol_stat(ch: ChannelParams) -> GaussianStat:
    """Arrivals from the current symbol: N(n*p1, n*p1*(1-p1))."""
    return GaussianStat(ch.n * ch.p1, ch.n * ch.p1 * (1.0 - ch.p1))


def previous_symbol_stat(ch: ChannelParams) -> GaussianStat:
    """Overflow from the previous symbol.

    Difference of the two-duration and one-duration arrival counts:
    mean n*(p2-p1), variance n*[p2*(1-p2) + p1*(1-p1)].
    """
    mean = ch.n * (ch.p2 - ch.p1)
    var = ch.n * (ch.p2 * (1.0 - ch.p2) + ch.p1 * (1.0 - ch.p1))
    return GaussianStat(mean, var)


def q_function(x):
    """Upper-tail probability of the standard normal, Q(x) = erfc(x/sqrt(2))/2.

    Accepts scalars or arrays; max absolute error is that of erfc (~1e-16).
    """
    x = np.asarray(x, dtype=float)
    q = 0.5 * erfc(x / np.sqrt(2.0))
    return float(q) if q.ndim == 0 else q


def gaussian_tail(mean, variance, threshold):
    """P(S >= threshold) for S ~ N(mean, variance), array-broadcasting.

    Zero combined variance degenerates to a step: 1 if mean >= threshold.
    """
    mean = np.asarray(mean, dtype=float)
    variance = np.asarray(variance, dtype=float)
    threshold = np.asarray(threshold, dtype=float)
    std = np.sqrt(variance)
    with np.errstate(divide="ignore", invalid="ignore"):
        z = (threshold - mean) / std
        # threshold = +-inf with zero std would give nan; the step branch
        # below covers it, but keep z finite for erfc.
        z = np.where(np.isnan(z), 0.0, z)
    q = q_function(z)
    out = np.where(std > 0, q, (mean >= threshold).astype(float))
    return float(out) if out.ndim == 0 else out


def tail_prob(stat: GaussianStat, extra_noise_var: float, threshold) -> float:
    """P(S >= threshold) with S ~ N(stat.mean, stat.variance + extra_noise_var)."""
    if extra_noise_var < 0:
        raise ValueError(f"extra_noise_var must be >= 0, got {extra_noise_var}")
    return gaussian_tail(stat.mean, stat.variance + extra_noise_var, threshold)
