"""Mutual information, achievable rate via threshold search, and SNR sweeps.

The achievable rate of a scheme at a channel point is max_tau I(X;Y) over
its joint matrix.  The search is a coarse uniform grid over ordered
threshold tuples refined twice around the incumbent; an exhaustive
fixed-grid search at higher resolution backs the regression tests.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace, asdict

import numpy as np

from . import _kernels
from .arrivals import ChannelParams, gaussian_tail
from .energy import molecules_for_snr, snr_db
from .modulation import (
    JointProbabilityMatrix,
    Scheme,
    b_imosk_muta_entries,
    icsk_entries,
    icsk_stats,
    imosk_entries,
    irsk_stats,
    q_irsk_entries,
)
from .physics import MessengerSpec

_LN2 = math.log(2.0)


def mutual_information(matrix) -> float:
    """I(X;Y) in bits of a joint matrix; zero entries contribute zero.

    Raises ValueError when the matrix mass deviates from 1 by more than
    1e-6.
    """
    entries = (
        matrix.entries
        if isinstance(matrix, JointProbabilityMatrix)
        else np.asarray(matrix, dtype=float)
    )
    if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
        raise ValueError(f"expected a square joint matrix, got shape {entries.shape}")
    mass = float(entries.sum())
    if abs(mass - 1.0) > 1e-6:
        raise ValueError(f"joint matrix mass {mass} deviates from 1 by > 1e-6")
    px = entries.sum(axis=1)
    py = entries.sum(axis=0)
    prod = np.outer(px, py)
    nz = entries > 0
    return float((entries[nz] * np.log(entries[nz] / prod[nz])).sum() / _LN2)


def _mi_stack(entries: np.ndarray) -> np.ndarray:
    # (..., M, M) stacks whose rows sum to 1/M exactly by construction
    return _kernels._mi_from_entries(entries.reshape((-1,) + entries.shape[-2:])).reshape(
        entries.shape[:-2]
    )


@dataclass(frozen=True)
class SearchConfig:
    coarse_points: int = 64
    refine_rounds: int = 2
    refine_factor: int = 8
    tau_floor: float = 0.0
    tau_ceiling: float | None = None  # default n*p2 + 4*sigma

    def __post_init__(self):
        if self.coarse_points < 4:
            raise ValueError("coarse_points must be >= 4")
        if self.refine_factor < 2:
            raise ValueError("refine_factor must be >= 2")


@dataclass(frozen=True)
class RatePoint:
    snr_db: float
    rate: float
    thresholds: tuple
    scheme: str

    def to_json_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class RateCurve:
    scheme: str
    points: tuple
    channel: object  # ChannelParams (or pair) the sweep was anchored to

    def __post_init__(self):
        snrs = [p.snr_db for p in self.points]
        if any(b <= a for a, b in zip(snrs, snrs[1:])):
            raise ValueError("rate curve SNR values must be strictly increasing")

    def to_json_dict(self) -> dict:
        if isinstance(self.channel, tuple):
            channel = [asdict(c) for c in self.channel]
        else:
            channel = asdict(self.channel)
        return {
            "scheme": self.scheme,
            "points": [p.to_json_dict() for p in self.points],
            "channel": channel,
        }


def _scheme_value(scheme) -> str:
    return scheme.value if isinstance(scheme, Scheme) else str(scheme)


def _entries_fn(scheme, ch, messenger: MessengerSpec | None):
    """(builder(taus)->entry stack, threshold count) for a canonical scheme."""
    value = _scheme_value(scheme)
    if value == Scheme.B_ICSK.value:
        return (lambda t: icsk_entries(ch, t, 2)), 1
    if value == Scheme.Q_ICSK.value:
        return (lambda t: icsk_entries(ch, t, 4)), 3
    if value == Scheme.B_IMOSK_AWGN.value:
        return (lambda t: imosk_entries(ch, t, 2)), 1
    if value == Scheme.IMOSK_32.value:
        return (lambda t: imosk_entries(ch, t, 32)), 1
    if value == Scheme.B_IMOSK_MUTA.value:
        if messenger is None:
            raise ValueError("b-imosk-muta needs a messenger with optical rotations")
        return (lambda t: b_imosk_muta_entries(ch, t, messenger)), 1
    if value == Scheme.Q_IRSK.value:
        pair = _as_pair(ch)
        return (lambda t: q_irsk_entries(pair, t)), 3
    raise ValueError(f"unknown scheme {value!r}")


def _as_pair(ch) -> tuple[ChannelParams, ChannelParams]:
    if isinstance(ch, ChannelParams):
        return (ch, ch)
    pair = tuple(ch)
    if len(pair) != 2 or not all(isinstance(c, ChannelParams) for c in pair):
        raise ValueError("ratio keying needs a pair of ChannelParams")
    return pair


def _primary_channel(ch) -> ChannelParams:
    return ch if isinstance(ch, ChannelParams) else tuple(ch)[0]


def _display_snr(c: ChannelParams) -> float:
    # noiseless channels are off the dB axis but still optimizable
    if c.noise_std == 0.0:
        return math.inf
    return snr_db(c.n, c.p1, c.noise_std)


def _tau_box(ch, search: SearchConfig, level_multiplier: float = 1.0) -> tuple[float, float]:
    # The box always covers [0, n*p2 + 4 sigma]; concentration schemes with
    # amplitude levels up to (M-1)*n scale the signal part accordingly.
    lo = search.tau_floor
    if search.tau_ceiling is not None:
        hi = search.tau_ceiling
    else:
        channels = (ch,) if isinstance(ch, ChannelParams) else _as_pair(ch)
        hi = max(
            level_multiplier * c.n * c.p2 + 4.0 * c.noise_std for c in channels
        )
    if not hi > lo:
        raise ValueError(
            f"empty feasible threshold grid: ceiling {hi} <= floor {lo}"
        )
    return lo, hi


_LEVEL_MULTIPLIER = {Scheme.B_ICSK.value: 1.0, Scheme.Q_ICSK.value: 3.0}


def _search_1d(builder, lo, hi, cfg: SearchConfig):
    grid = np.linspace(lo, hi, cfg.coarse_points)
    vals = _mi_stack(builder(grid[:, None]))
    idx = int(np.argmax(vals))
    best_val, best_tau = float(vals[idx]), float(grid[idx])
    spacing = grid[1] - grid[0]
    for _ in range(cfg.refine_rounds):
        pts = 2 * cfg.refine_factor + 1
        local = np.clip(np.linspace(best_tau - spacing, best_tau + spacing, pts), lo, hi)
        vals = _mi_stack(builder(local[:, None]))
        idx = int(np.argmax(vals))
        if vals[idx] > best_val:
            best_val, best_tau = float(vals[idx]), float(local[idx])
        spacing /= cfg.refine_factor
    return best_val, (best_tau,)


def _ordered(taus: np.ndarray) -> np.ndarray:
    keep = np.all(np.diff(taus, axis=-1) > 0, axis=-1)
    return taus[keep]


def _search_3d(builder, lo, hi, cfg: SearchConfig):
    grid = np.linspace(lo, hi, cfg.coarse_points)
    combos = np.fromiter(
        itertools.chain.from_iterable(
            itertools.combinations(range(cfg.coarse_points), 3)
        ),
        dtype=np.int64,
    ).reshape(-1, 3)
    taus = grid[combos]
    # Near-degenerate optima (thresholds collapsing onto one boundary when
    # symbols merge) live between coarse lattice points; seed the search
    # with tightly clustered ladders so refinement can reach them.
    h = (hi - lo) * 1e-4
    clustered = np.stack(
        [grid[:-1], grid[:-1] + h, grid[:-1] + 2 * h], axis=-1
    )
    taus = np.concatenate([taus, clustered])
    vals = _mi_stack(builder(taus))
    idx = int(np.argmax(vals))
    best_val, best_tau = float(vals[idx]), taus[idx]
    spacing = grid[1] - grid[0]
    for _ in range(cfg.refine_rounds):
        pts = 2 * cfg.refine_factor + 1
        axes = [
            np.clip(np.linspace(t - spacing, t + spacing, pts), lo, hi)
            for t in best_tau
        ]
        mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 3)
        mesh = _ordered(mesh)
        if mesh.size:
            vals = _mi_stack(builder(mesh))
            idx = int(np.argmax(vals))
            if vals[idx] > best_val:
                best_val, best_tau = float(vals[idx]), mesh[idx]
        spacing /= cfg.refine_factor
    return best_val, tuple(float(t) for t in best_tau)


def maximize_rate(
    scheme,
    ch,
    search: SearchConfig | None = None,
    *,
    messenger: MessengerSpec | None = None,
) -> RatePoint:
    """Best achievable rate over thresholds for a canonical scheme.

    ch is a ChannelParams (or a pair of them for ratio keying).  Returns a
    RatePoint holding the rate, the argmax thresholds (lexicographically
    first among ties), and the channel's SNR.
    """
    cfg = search or SearchConfig()
    builder, n_taus = _entries_fn(scheme, ch, messenger)
    lo, hi = _tau_box(ch, cfg, _LEVEL_MULTIPLIER.get(_scheme_value(scheme), 1.0))
    if n_taus == 1:
        best_val, best_tau = _search_1d(builder, lo, hi, cfg)
    else:
        best_val, best_tau = _search_3d(builder, lo, hi, cfg)
    c = _primary_channel(ch)
    return RatePoint(
        snr_db=_display_snr(c),
        rate=best_val,
        thresholds=best_tau,
        scheme=_scheme_value(scheme),
    )


# ---------------------------------------------------------------------------
# Exhaustive fixed-grid search (regression oracle for maximize_rate)
# ---------------------------------------------------------------------------

def _extended_tails(means, variances, grid):
    tails = gaussian_tail(means[:, :, None], variances[:, :, None], grid[None, None, :])
    z, x, _ = tails.shape
    return np.concatenate([np.ones((z, x, 1)), tails, np.zeros((z, x, 1))], axis=-1)


def exhaustive_max_rate(
    scheme,
    ch,
    search: SearchConfig | None = None,
    *,
    messenger: MessengerSpec | None = None,
    resolution: int = 10,
) -> tuple[float, tuple]:
    """Brute-force maximum over a uniform grid at `resolution` times the
    coarse search density.  Returns (rate, thresholds)."""
    cfg = search or SearchConfig()
    lo, hi = _tau_box(ch, cfg, _LEVEL_MULTIPLIER.get(_scheme_value(scheme), 1.0))
    n_grid = cfg.coarse_points * resolution
    grid = np.linspace(lo, hi, n_grid)
    value = _scheme_value(scheme)
    builder, n_taus = _entries_fn(scheme, ch, messenger)
    if n_taus == 1:
        best_val = -1.0
        best_tau = grid[0]
        for chunk in np.array_split(grid, max(1, n_grid // 2048)):
            vals = _mi_stack(builder(chunk[:, None]))
            idx = int(np.argmax(vals))
            if vals[idx] > best_val:
                best_val, best_tau = float(vals[idx]), float(chunk[idx])
        return best_val, (best_tau,)
    if value == Scheme.Q_ICSK.value:
        means, variances, weights = icsk_stats(_primary_channel(ch), 4)
        qte = _extended_tails(means, variances, grid)
        best_val, i, j, k = _kernels.best_ordered_triple_banded(qte, weights)
    else:
        (m1, v1), (m2, v2) = irsk_stats(_as_pair(ch))
        best_val, i, j, k = _kernels.best_ordered_triple_ratio(
            _extended_tails(m1, v1, grid), _extended_tails(m2, v2, grid)
        )
    return float(best_val), (float(grid[i]), float(grid[j]), float(grid[k]))


# ---------------------------------------------------------------------------
# SNR sweeps
# ---------------------------------------------------------------------------

def _with_molecule_count(ch, n: float):
    if isinstance(ch, ChannelParams):
        return replace(ch, n=n)
    return tuple(replace(c, n=n) for c in _as_pair(ch))


def sweep_rate_curve(
    scheme,
    fixture,
    snr_grid_db,
    *,
    search: SearchConfig | None = None,
    messenger: MessengerSpec | None = None,
    jobs: int = 1,
) -> RateCurve:
    """Rate-vs-SNR curve: each SNR point fixes the noise level from the
    fixture and derives the molecule count n, then maximizes the rate.

    Sweep points are independent; jobs > 1 evaluates them in a thread pool
    (snapshots are reassembled in SNR order, so output is identical)."""
    snrs = [float(s) for s in snr_grid_db]
    if any(b <= a for a, b in zip(snrs, snrs[1:])):
        raise ValueError("snr_grid_db must be strictly increasing")
    base = _primary_channel(fixture)

    def run(snr: float) -> RatePoint:
        n = molecules_for_snr(snr, base.p1, base.noise_std)
        point = maximize_rate(
            scheme, _with_molecule_count(fixture, n), search, messenger=messenger
        )
        return replace(point, snr_db=snr)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            points = tuple(pool.map(run, snrs))
    else:
        points = tuple(run(s) for s in snrs)
    return RateCurve(scheme=_scheme_value(scheme), points=points, channel=fixture)


# ---------------------------------------------------------------------------
# Modulation-order comparison (type- vs concentration-keying families)
# ---------------------------------------------------------------------------

def _search_affine_icsk(ch, order: int, lo, hi, cfg: SearchConfig):
    # Equally spaced threshold ladders tau_k = offset + k*step; a full
    # (order-1)-dimensional search is infeasible for large orders and the
    # optimum ladder is near-affine for equally spaced signal levels.
    k = np.arange(order - 1, dtype=float)
    step_hi = (hi - lo) / max(order - 1, 1)
    offsets = np.linspace(lo, hi / 4, cfg.coarse_points)
    steps = np.linspace(step_hi / cfg.coarse_points, step_hi, cfg.coarse_points)

    def ladders(off, stp):
        return off[:, None] + stp[:, None] * k[None, :]

    def evaluate(off, stp):
        taus = ladders(off, stp)
        return _mi_stack(icsk_entries(ch, taus, order))

    mesh_o, mesh_s = [m.ravel() for m in np.meshgrid(offsets, steps, indexing="ij")]
    vals = evaluate(mesh_o, mesh_s)
    idx = int(np.argmax(vals))
    best = (float(vals[idx]), float(mesh_o[idx]), float(mesh_s[idx]))
    d_o = offsets[1] - offsets[0]
    d_s = steps[1] - steps[0]
    for _ in range(cfg.refine_rounds):
        pts = 2 * cfg.refine_factor + 1
        off_loc = np.clip(np.linspace(best[1] - d_o, best[1] + d_o, pts), lo, hi)
        stp_loc = np.linspace(
            max(best[2] - d_s, step_hi * 1e-6), best[2] + d_s, pts
        )
        mesh_o, mesh_s = [m.ravel() for m in np.meshgrid(off_loc, stp_loc, indexing="ij")]
        vals = evaluate(mesh_o, mesh_s)
        idx = int(np.argmax(vals))
        if vals[idx] > best[0]:
            best = (float(vals[idx]), float(mesh_o[idx]), float(mesh_s[idx]))
        d_o /= cfg.refine_factor
        d_s /= cfg.refine_factor
    taus = tuple(float(t) for t in best[1] + best[2] * k)
    return best[0], taus


def maximize_rate_at_order(
    family: str,
    order: int,
    ch,
    search: SearchConfig | None = None,
) -> RatePoint:
    """Achievable rate of a scheme family at a given modulation order.

    family "imosk" uses the single-threshold type detector at any order;
    family "icsk" uses the full threshold search at orders 2 and 4 and the
    affine threshold-ladder search at higher orders."""
    cfg = search or SearchConfig()
    c = _primary_channel(ch)
    if family == "imosk":
        lo, hi = _tau_box(c, cfg)
        best_val, best_tau = _search_1d(lambda t: imosk_entries(c, t, order), lo, hi, cfg)
        scheme = {2: Scheme.B_IMOSK_AWGN.value, 32: Scheme.IMOSK_32.value}.get(
            order, f"imosk-{order}"
        )
    elif family == "icsk":
        lo, hi = _tau_box(c, cfg, float(order - 1))
        if order == 2:
            best_val, best_tau = _search_1d(lambda t: icsk_entries(c, t, 2), lo, hi, cfg)
        elif order == 4:
            best_val, best_tau = _search_3d(lambda t: icsk_entries(c, t, 4), lo, hi, cfg)
        else:
            best_val, best_tau = _search_affine_icsk(c, order, lo, hi, cfg)
        scheme = {2: Scheme.B_ICSK.value, 4: Scheme.Q_ICSK.value}.get(
            order, f"icsk-{order}"
        )
    else:
        raise ValueError(f"unknown scheme family {family!r}")
    return RatePoint(
        snr_db=_display_snr(c),
        rate=best_val,
        thresholds=best_tau,
        scheme=scheme,
    )
