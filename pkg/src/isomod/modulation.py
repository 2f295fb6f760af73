"""Joint sent/decoded probability matrices for the isomer modulation schemes.

Every scheme maps equiprobable symbols X (with one-symbol memory Z) to a
decoded symbol Y through Gaussian arrival statistics and fixed thresholds,
producing an M x M joint matrix P(X, Y) with the (1/M)^2 symbol priors
folded in.  All constructors return exact probability distributions: total
mass 1, each row summing to 1/M.

Scheme families:

* ICSK  - concentration keying: symbol x transmits x*n molecules of one
  type; the receiver bands a single count statistic with M-1 thresholds.
  The previous symbol contributes one overflow term whenever it was
  nonzero (its count statistic does not scale with the previous level).
* IMoSK - type keying: symbol x transmits n molecules of type x; each of
  the M types is detected against the same single threshold.  Ties
  (several types above threshold, or none) are resolved uniformly at
  random, which completes the per-type detections into a total decoder.
* IRSK  - ratio keying over two types; the two count statistics are banded
  with the same three thresholds, the type-2 bands indexing symbols in
  reverse.  When the two band indices disagree the decoder takes their
  average, splitting half-integer averages 50/50.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.special import erfc

from .arrivals import ChannelParams, gaussian_tail
from .physics import MessengerSpec


class Scheme(str, Enum):
    B_ICSK = "b-icsk"
    Q_ICSK = "q-icsk"
    B_IMOSK_AWGN = "b-imosk-awgn"
    B_IMOSK_MUTA = "b-imosk-muta"
    IMOSK_32 = "imosk-32"
    Q_IRSK = "q-irsk"


@dataclass(frozen=True, eq=False)
class JointProbabilityMatrix:
    """Joint distribution over (sent, decoded) symbols, row = sent."""

    scheme: str
    entries: np.ndarray
    priors: float

    @property
    def order(self) -> int:
        return self.entries.shape[0]

    def total_mass(self) -> float:
        return float(self.entries.sum())

    def row_sums(self) -> np.ndarray:
        return self.entries.sum(axis=1)

    def to_json_dict(self) -> dict:
        return {
            "scheme": self.scheme,
            "order": self.order,
            "priors": self.priors,
            "entries": self.entries.tolist(),
        }

    def write_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("#isomod-joint-csv v1\n")
            fh.write(f"# scheme {self.scheme}\n")
            cols = ",".join(f"decoded_{y}" for y in range(self.order))
            fh.write(f"sent,{cols}\n")
            for x in range(self.order):
                row = ",".join(f"{v:.9g}" for v in self.entries[x])
                fh.write(f"{x},{row}\n")


def check_thresholds(values, count: int | None = None) -> np.ndarray:
    """Validate threshold tuples: non-negative, strictly increasing along
    the last axis.  Accepts a scalar, a sequence, or an array of tuples."""
    taus = np.asarray(values, dtype=float)
    if taus.ndim == 0:
        taus = taus[None]
    if count is not None and taus.shape[-1] != count:
        raise ValueError(
            f"expected {count} threshold(s), got {taus.shape[-1]}"
        )
    if np.any(taus < 0):
        raise ValueError("thresholds must be >= 0")
    if taus.shape[-1] > 1 and np.any(np.diff(taus, axis=-1) <= 0):
        raise ValueError("thresholds must be strictly increasing")
    return taus


def _matrix(scheme: str, entries: np.ndarray) -> JointProbabilityMatrix:
    m = entries.shape[-1]
    if entries.ndim != 2:
        raise ValueError(
            "threshold array produced a matrix stack; pass a single "
            "threshold tuple to the matrix constructors"
        )
    return JointProbabilityMatrix(scheme=scheme, entries=entries, priors=1.0 / m)


# ---------------------------------------------------------------------------
# ICSK: banded single count statistic
# ---------------------------------------------------------------------------

def icsk_stats(ch: ChannelParams, order: int):
    """Mean/variance tables for the banded count statistic.

    Indexed [zclass, x] with zclass 0 = previous level zero and zclass 1 =
    any nonzero previous level (single unscaled overflow term); returns
    (means, variances, weights) where weights hold the z-class priors over
    M^2.
    """
    n, p1, p2 = ch.n, ch.p1, ch.p2
    x = np.arange(order, dtype=float)
    cur_mean = x * n * p1
    cur_var = x * n * p1 * (1.0 - p1)
    prev_mean = n * (p2 - p1)
    prev_var = n * (p2 * (1.0 - p2) + p1 * (1.0 - p1))
    means = np.stack([cur_mean, cur_mean + prev_mean])
    variances = np.stack([cur_var, cur_var + prev_var]) + ch.noise_std**2
    weights = np.array([1.0, order - 1.0]) / order**2
    return means, variances, weights


def _banded_entries(means, variances, weights, taus):
    # means/variances: (Z, M); taus: (..., M-1) -> entries (..., M, M)
    tails = gaussian_tail(
        means[:, :, None], variances[:, :, None], taus[..., None, None, :]
    )
    shape = tails.shape[:-1]
    ext = np.concatenate(
        [np.ones(shape + (1,)), tails, np.zeros(shape + (1,))], axis=-1
    )
    bands = ext[..., :-1] - ext[..., 1:]
    return np.einsum("z,...zxy->...xy", weights, bands)


def icsk_entries(ch: ChannelParams, taus, order: int) -> np.ndarray:
    taus = check_thresholds(taus, order - 1)
    means, variances, weights = icsk_stats(ch, order)
    return _banded_entries(means, variances, weights, taus)


def icsk_matrix(ch: ChannelParams, taus, order: int | None = None) -> JointProbabilityMatrix:
    """Concentration keying at the given order (order-1 thresholds)."""
    taus = np.atleast_1d(np.asarray(taus, dtype=float))
    if order is None:
        order = taus.shape[-1] + 1
    name = {2: Scheme.B_ICSK.value, 4: Scheme.Q_ICSK.value}.get(order, f"icsk-{order}")
    return _matrix(name, icsk_entries(ch, taus, order))


def b_icsk_matrix(ch: ChannelParams, tau) -> JointProbabilityMatrix:
    """Binary concentration keying, one threshold."""
    return icsk_matrix(ch, tau, order=2)


def q_icsk_matrix(ch: ChannelParams, taus) -> JointProbabilityMatrix:
    """4-ary concentration keying, three ordered thresholds."""
    return icsk_matrix(ch, taus, order=4)


# ---------------------------------------------------------------------------
# IMoSK: largest type count above the threshold
# ---------------------------------------------------------------------------
#
# The type receiver observes one count statistic per molecule type and
# decodes the type with the largest count among those clearing the
# threshold; when no type clears it the decoder guesses uniformly.  The
# threshold acts as a squelch; the magnitude comparison is what gives type
# keying its advantage over single-statistic concentration keying.

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(64)
_TAIL_SIGMAS = 12.0  # integration cut-off in units of the pdf channel's std


def _normal_cdf_pow(x, power: float):
    return (0.5 * erfc(-x / np.sqrt(2.0))) ** power


def _p_argmax_above(m0, s0, others, taus):
    """P(S_0 >= tau and S_0 beats every competitor), independent Gaussians.

    others is a sequence of (mean, std, multiplicity).  Degenerate (zero
    std) statistics are handled exactly, with ties split uniformly.
    """
    taus = np.asarray(taus, dtype=float)
    if s0 == 0.0:
        p = (m0 >= taus).astype(float)
        ties = 1.0
        for m, s, cnt in others:
            if s == 0.0:
                if m > m0:
                    p = p * 0.0
                elif m == m0:
                    ties += cnt
            else:
                p = p * _normal_cdf_pow((m0 - m) / s, cnt)
        return p / ties

    lo = (taus - m0) / s0
    continuous = []
    for m, s, cnt in others:
        if s == 0.0:
            # beating a deterministic count means integrating above it
            lo = np.maximum(lo, (m - m0) / s0)
        else:
            continuous.append(((m - m0) / s0, s / s0, cnt))
    lo = np.clip(lo, -_TAIL_SIGMAS, _TAIL_SIGMAS)

    # Piecewise Gauss-Legendre in the standardized variable of S_0, split
    # at competitor centers so each piece is free of interior sigmoid knees.
    edges = sorted(
        {-_TAIL_SIGMAS, _TAIL_SIGMAS}
        | {c for c, _, _ in continuous if -_TAIL_SIGMAS < c < _TAIL_SIGMAS}
    )
    total = np.zeros_like(lo)
    inv_sqrt2pi = 1.0 / math.sqrt(2.0 * math.pi)
    for seg_lo, seg_hi in zip(edges, edges[1:]):
        a = np.maximum(lo, seg_lo)
        width = np.maximum(seg_hi - a, 0.0)
        t = a[..., None] + (width[..., None] / 2.0) * (_GL_NODES + 1.0)
        integrand = inv_sqrt2pi * np.exp(-0.5 * t * t)
        for c, w, cnt in continuous:
            integrand = integrand * _normal_cdf_pow((t - c) / w, cnt)
        total += (width / 2.0) * (integrand * _GL_WEIGHTS).sum(axis=-1)
    return total


def imosk_entries(ch: ChannelParams, taus, order: int) -> np.ndarray:
    taus = check_thresholds(taus, 1)[..., 0]
    m = order
    n, p1, p2 = ch.n, ch.p1, ch.p2
    sigma = ch.noise_std
    cur_mean = n * p1
    cur_var = n * p1 * (1.0 - p1)
    prev_mean = n * (p2 - p1)
    prev_var = n * (p2 * (1.0 - p2) + p1 * (1.0 - p1))

    # Channel statistics: the sent type carries the current-symbol signal
    # (plus the overflow when the previous symbol was the same type), the
    # previously sent type carries the overflow, the rest is pure noise.
    m_h2, s_h2 = cur_mean + prev_mean, math.sqrt(cur_var + prev_var + sigma**2)
    m_h1, s_h1 = cur_mean, math.sqrt(cur_var + sigma**2)
    m_w, s_w = prev_mean, math.sqrt(prev_var + sigma**2)

    below = lambda mean, std: 1.0 - gaussian_tail(mean, std**2, taus)  # noqa: E731

    # Previous symbol = current symbol: one boosted channel, M-1 noise.
    none_same = below(m_h2, s_h2) * below(0.0, sigma) ** (m - 1)
    px_same = (
        _p_argmax_above(m_h2, s_h2, [(0.0, sigma, m - 1)], taus) + none_same / m
    )
    share_same = (1.0 - px_same) / (m - 1)

    # Previous symbol differs: signal channel, overflow channel, M-2 noise.
    none_diff = (
        below(m_h1, s_h1) * below(m_w, s_w) * below(0.0, sigma) ** (m - 2)
    )
    noise_channels = [(0.0, sigma, m - 2)] if m > 2 else []
    px_diff = (
        _p_argmax_above(m_h1, s_h1, [(m_w, s_w, 1)] + noise_channels, taus)
        + none_diff / m
    )
    pz_diff = (
        _p_argmax_above(m_w, s_w, [(m_h1, s_h1, 1)] + noise_channels, taus)
        + none_diff / m
    )

    inv_m2 = 1.0 / m**2
    diag = inv_m2 * (px_same + (m - 1) * px_diff)
    if m > 2:
        share_diff = (1.0 - px_diff - pz_diff) / (m - 2)
        off = inv_m2 * (share_same + pz_diff + (m - 2) * share_diff)
    else:
        off = inv_m2 * (share_same + pz_diff)

    entries = np.broadcast_to(off[..., None, None], off.shape + (m, m)).copy()
    idx = np.arange(m)
    entries[..., idx, idx] = diag[..., None]
    return entries


def imosk_awgn_matrix(ch: ChannelParams, tau, order: int) -> JointProbabilityMatrix:
    """Type keying of the given order, single shared threshold, additive
    Gaussian noise only (no in-flight interconversion)."""
    if order < 2:
        raise ValueError(f"order must be >= 2, got {order}")
    name = {2: Scheme.B_IMOSK_AWGN.value, 32: Scheme.IMOSK_32.value}.get(
        order, f"imosk-{order}"
    )
    return _matrix(name, imosk_entries(ch, tau, order))


def b_imosk_awgn_matrix(ch: ChannelParams, tau) -> JointProbabilityMatrix:
    return imosk_awgn_matrix(ch, tau, order=2)


def imosk32_matrix(ch: ChannelParams, tau) -> JointProbabilityMatrix:
    return imosk_awgn_matrix(ch, tau, order=32)


# ---------------------------------------------------------------------------
# Mutarotation
# ---------------------------------------------------------------------------

# Fraction of the optical-rotation gap to equilibrium closed per hour at
# body temperature; the linear relaxation law is clamped at equilibrium.
MUTAROTATION_RATE_PER_HOUR = 0.99


@dataclass(frozen=True)
class MutarotationState:
    n_alpha: float
    n_beta: float
    elapsed: float


def mutarotation_fractions(
    messenger: MessengerSpec, sent_form: str, t: float, n: float
) -> MutarotationState:
    """Split n transmitted molecules into alpha/beta counts after time t.

    The observed specific rotation relaxes linearly toward equilibrium,
    R(t) = R_eq + (R_0 - R_eq) * max(0, 1 - 0.99 t / 3600), and the lever
    rule on rotations converts R(t) into form counts.
    """
    if not messenger.has_optical_rotation:
        raise ValueError(
            f"messenger {messenger.name!r} has no optical rotation constants; "
            "mutarotation needs alpha/beta/equilibrium rotations"
        )
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    r_a = messenger.optical_rotation_alpha
    r_b = messenger.optical_rotation_beta
    r_eq = messenger.optical_rotation_eq
    remaining = max(0.0, 1.0 - MUTAROTATION_RATE_PER_HOUR * t / 3600.0)
    if sent_form == "alpha":
        r_t = r_eq + (r_a - r_eq) * remaining
        n_alpha = (r_t - r_b) * n / (r_a - r_b)
        n_beta = n - n_alpha
    elif sent_form == "beta":
        r_t = r_eq - (r_eq - r_b) * remaining
        n_beta = (r_a - r_t) * n / (r_a - r_b)
        n_alpha = n - n_beta
    else:
        raise ValueError(f"sent_form must be 'alpha' or 'beta', got {sent_form!r}")
    return MutarotationState(n_alpha=n_alpha, n_beta=n_beta, elapsed=t)


def b_imosk_muta_entries(ch: ChannelParams, taus, messenger: MessengerSpec) -> np.ndarray:
    taus = check_thresholds(taus, 1)
    entries = imosk_entries(ch, taus, order=2)
    tau = taus[..., 0]
    if ch.n <= 0:
        return entries
    conv_ab = mutarotation_fractions(messenger, "alpha", ch.Ts, ch.n).n_beta
    conv_ba = mutarotation_fractions(messenger, "beta", ch.Ts, ch.n).n_alpha
    # Molecules converted in flight are decoded as the other form whenever
    # they clear the threshold: move that probability mass off the row
    # diagonal, clamped so entries stay inside [0, 1/2].
    for row, conv in ((0, conv_ab), (1, conv_ba)):
        amount = np.where(
            conv >= tau,
            np.minimum(
                conv / ch.n,
                np.minimum(entries[..., row, row], 0.5 - entries[..., row, 1 - row]),
            ),
            0.0,
        )
        entries[..., row, row] -= amount
        entries[..., row, 1 - row] += amount
    return entries


def b_imosk_muta_matrix(
    ch: ChannelParams, tau, messenger: MessengerSpec
) -> JointProbabilityMatrix:
    """Binary type keying over an alpha/beta anomer pair with in-flight
    mutarotation folded into the cross-decoding entries."""
    return _matrix(Scheme.B_IMOSK_MUTA.value, b_imosk_muta_entries(ch, tau, messenger))


# ---------------------------------------------------------------------------
# Q-IRSK: two banded statistics, reversed pairing
# ---------------------------------------------------------------------------

# Previous/current coefficient of the two molecule types per symbol index:
# symbol 0 sends only type 2, symbols 1 and 2 send both, symbol 3 sends
# only type 1.  The same pattern applies to the previous symbol's overflow.
_IRSK_TYPE1_COEFF = np.array([0.0, 1.0, 1.0, 1.0])
_IRSK_TYPE2_COEFF = np.array([1.0, 1.0, 1.0, 0.0])


def irsk_stats(channels: tuple[ChannelParams, ChannelParams]):
    """Mean/variance tables, indexed [z, x], of the two count statistics."""
    ch1, ch2 = channels
    out = []
    for ch, coeff in ((ch1, _IRSK_TYPE1_COEFF), (ch2, _IRSK_TYPE2_COEFF)):
        cur_mean = ch.n * ch.p1
        cur_var = ch.n * ch.p1 * (1.0 - ch.p1)
        prev_mean = ch.n * (ch.p2 - ch.p1)
        prev_var = ch.n * (ch.p2 * (1.0 - ch.p2) + ch.p1 * (1.0 - ch.p1))
        means = coeff[:, None] * prev_mean + coeff[None, :] * cur_mean
        variances = (
            coeff[:, None] * prev_var + coeff[None, :] * cur_var + ch.noise_std**2
        )
        out.append((means, variances))
    return out


def _irsk_bands(means, variances, taus):
    tails = gaussian_tail(
        means[:, :, None], variances[:, :, None], taus[..., None, None, :]
    )
    shape = tails.shape[:-1]
    ext = np.concatenate(
        [np.ones(shape + (1,)), tails, np.zeros(shape + (1,))], axis=-1
    )
    return ext[..., :-1] - ext[..., 1:]  # (..., Z, X, 4)


def q_irsk_entries(channels: tuple[ChannelParams, ChannelParams], taus) -> np.ndarray:
    taus = check_thresholds(taus, 3)
    (m1, v1), (m2, v2) = irsk_stats(channels)
    bu = _irsk_bands(m1, v1, taus)
    bv = _irsk_bands(m2, v2, taus)
    br = bv[..., ::-1]  # type-2 bands index symbols in reverse
    # c[s] = sum_{a+b=s} bu[a]*br[b]; the two band indices vote for symbols
    # a and b, and the decoder averages them (half-ties split 50/50).
    c = np.zeros(bu.shape[:-1] + (7,))
    for a in range(4):
        for b in range(4):
            c[..., a + b] += bu[..., a] * br[..., b]
    ey = np.empty_like(bu)
    ey[..., 0] = c[..., 0] + 0.5 * c[..., 1]
    ey[..., 1] = c[..., 2] + 0.5 * (c[..., 1] + c[..., 3])
    ey[..., 2] = c[..., 4] + 0.5 * (c[..., 3] + c[..., 5])
    ey[..., 3] = c[..., 6] + 0.5 * c[..., 5]
    return ey.sum(axis=-3) / 16.0  # average over the previous symbol


def q_irsk_matrix(
    channels: tuple[ChannelParams, ChannelParams], taus
) -> JointProbabilityMatrix:
    """4-ary ratio keying over two molecule types, three shared thresholds."""
    return _matrix(Scheme.Q_IRSK.value, q_irsk_entries(channels, taus))


def warn_if_anomer_pair(name_a: str, name_b: str) -> bool:
    """Warn when a ratio-keying pair looks like alpha/beta anomers of the
    same base molecule (they interconvert in flight, which degrades the
    ratio); returns True if the warning fired."""
    prefixes = ("alpha-", "beta-")
    stems = []
    for name in (name_a, name_b):
        lowered = name.lower()
        for prefix in prefixes:
            if lowered.startswith(prefix):
                stems.append(lowered[len(prefix):])
                break
        else:
            return False
    if stems[0] == stems[1]:
        warnings.warn(
            f"ratio-keying pair ({name_a!r}, {name_b!r}) are anomers of the "
            "same molecule and will interconvert during propagation; prefer "
            "a non-anomeric pair",
            stacklevel=2,
        )
        return True
    return False
