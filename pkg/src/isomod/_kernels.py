"""Hot numeric kernels, numba-jitted with a pure-numpy fallback.

Two workloads dominate runtime: stepping Brownian particles against an
absorbing receiver, and exhaustively scoring ordered threshold triples for
the 4-ary schemes.  Both carry a numba @njit implementation and an
equivalent vectorized numpy one.

Backend selection happens at import time: numba is used when importable
unless the environment variable ISOMOD_DISABLE_NUMBA is set to anything
other than "" or "0".  The two backends are statistically equivalent but do
not share random streams; each is deterministic for a fixed seed.
"""

from __future__ import annotations

import math
import os

import numpy as np

_LN2 = math.log(2.0)


def _numba_enabled() -> bool:
    if os.environ.get("ISOMOD_DISABLE_NUMBA", "0").strip() not in ("", "0"):
        return False
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


USING_NUMBA = _numba_enabled()
BACKEND = "numba" if USING_NUMBA else "numpy"


def set_thread_count(jobs: int) -> None:
    """Cap kernel parallelism (numba threading only; numpy path is serial)."""
    if USING_NUMBA:
        import numba

        numba.set_num_threads(max(1, min(int(jobs), numba.config.NUMBA_NUM_THREADS)))


# ---------------------------------------------------------------------------
# Brownian first-hit simulation
# ---------------------------------------------------------------------------

if USING_NUMBA:
    from numba import njit, prange

    @njit(cache=True, parallel=True)
    def _first_hits_numba(seeds, n_steps, step_std, distance, radius, ndim):
        n = seeds.shape[0]
        out = np.full(n, -1, dtype=np.int64)
        r2 = radius * radius
        for i in prange(n):
            np.random.seed(seeds[i])
            x = -distance  # relative to the receiver center
            y = 0.0
            z = 0.0
            for k in range(n_steps):
                x += step_std * np.random.normal()
                if ndim == 3:
                    y += step_std * np.random.normal()
                    z += step_std * np.random.normal()
                if x * x + y * y + z * z <= r2:
                    out[i] = k + 1
                    break
        return out


def _first_hits_numpy(seed, n_particles, n_steps, step_std, distance, radius, ndim):
    rng = np.random.Generator(np.random.Philox(seed))
    pos = np.zeros((n_particles, ndim))
    pos[:, 0] = -distance
    out = np.full(n_particles, -1, dtype=np.int64)
    alive = np.ones(n_particles, dtype=bool)
    r2 = radius * radius
    for k in range(n_steps):
        if not alive.any():
            break
        # Draw for every particle, absorbed or not, so that a given seed
        # assigns the same increments to the same particles regardless of
        # the receiver radius (common random numbers for calibration).
        steps = rng.normal(0.0, step_std, size=(n_particles, ndim))
        pos += steps * alive[:, None]
        hit = alive & ((pos * pos).sum(axis=1) <= r2)
        out[hit] = k + 1
        alive &= ~hit
    return out


def simulate_first_hits(
    seed: int,
    n_particles: int,
    n_steps: int,
    step_std: float,
    distance: float,
    radius: float,
    ndim: int,
) -> np.ndarray:
    """First-hit step (1-based) per particle, -1 if never absorbed.

    Particles start at the transmitter, the absorbing receiver of the given
    radius is centered `distance` away; increments are per-axis Gaussian
    with std `step_std`; absorption is checked on end-of-step positions.
    """
    if ndim not in (1, 3):
        raise ValueError(f"ndim must be 1 or 3, got {ndim}")
    if USING_NUMBA:
        seeds = np.random.SeedSequence(seed).generate_state(n_particles, np.uint32)
        return _first_hits_numba(
            seeds, n_steps, float(step_std), float(distance), float(radius), ndim
        )
    return _first_hits_numpy(
        seed, n_particles, n_steps, float(step_std), float(distance), float(radius), ndim
    )


# ---------------------------------------------------------------------------
# Exhaustive ordered-triple threshold search
# ---------------------------------------------------------------------------
#
# Both scorers take "extended" tail tables: tails[..., g+1] = P(S >= tau_g)
# on a G-point grid, with column 0 fixed at 1 (tau = -inf) and column G+1 at
# 0 (tau = +inf), so a band between grid edges a < b is a column difference.
# Rows of the produced joint matrices sum to 1/M by construction, hence
# I(X;Y) = sum(e*log2 e) + log2 M - sum(py*log2 py).

if USING_NUMBA:

    @njit(cache=True, parallel=True)
    def _triple_banded_numba(qte, wz):
        Z, M, GE = qte.shape
        G = GE - 2
        log2m = np.log(M) / _LN2
        best_i = np.full(G, -1.0)
        best_jk = np.zeros((G, 2), dtype=np.int64)
        for i in prange(G - 2):
            local_best = -1.0
            lj = -1
            lk = -1
            for j in range(i + 1, G - 1):
                for k in range(j + 1, G):
                    selog = 0.0
                    py0 = 0.0
                    py1 = 0.0
                    py2 = 0.0
                    py3 = 0.0
                    for x in range(M):
                        for z in range(Z):
                            w = wz[z]
                            t0 = qte[z, x, 0]
                            t1 = qte[z, x, i + 1]
                            t2 = qte[z, x, j + 1]
                            t3 = qte[z, x, k + 1]
                            if z == 0:
                                e0 = w * (t0 - t1)
                                e1 = w * (t1 - t2)
                                e2 = w * (t2 - t3)
                                e3 = w * t3
                            else:
                                e0 += w * (t0 - t1)
                                e1 += w * (t1 - t2)
                                e2 += w * (t2 - t3)
                                e3 += w * t3
                        py0 += e0
                        py1 += e1
                        py2 += e2
                        py3 += e3
                        if e0 > 0.0:
                            selog += e0 * np.log(e0)
                        if e1 > 0.0:
                            selog += e1 * np.log(e1)
                        if e2 > 0.0:
                            selog += e2 * np.log(e2)
                        if e3 > 0.0:
                            selog += e3 * np.log(e3)
                    hy = 0.0
                    if py0 > 0.0:
                        hy += py0 * np.log(py0)
                    if py1 > 0.0:
                        hy += py1 * np.log(py1)
                    if py2 > 0.0:
                        hy += py2 * np.log(py2)
                    if py3 > 0.0:
                        hy += py3 * np.log(py3)
                    mi = (selog - hy) / _LN2 + log2m
                    if mi > local_best:
                        local_best = mi
                        lj = j
                        lk = k
            best_i[i] = local_best
            best_jk[i, 0] = lj
            best_jk[i, 1] = lk
        return best_i, best_jk

    @njit(cache=True, parallel=True)
    def _triple_ratio_numba(qtue, qtve):
        Z, M, GE = qtue.shape
        G = GE - 2
        w = 1.0 / (M * M)
        log2m = np.log(M) / _LN2
        best_i = np.full(G, -1.0)
        best_jk = np.zeros((G, 2), dtype=np.int64)
        for i in prange(G - 2):
            local_best = -1.0
            lj = -1
            lk = -1
            for j in range(i + 1, G - 1):
                for k in range(j + 1, G):
                    selog = 0.0
                    py0 = 0.0
                    py1 = 0.0
                    py2 = 0.0
                    py3 = 0.0
                    for x in range(M):
                        e0 = 0.0
                        e1 = 0.0
                        e2 = 0.0
                        e3 = 0.0
                        for z in range(Z):
                            u0 = qtue[z, x, 0]
                            u1 = qtue[z, x, i + 1]
                            u2 = qtue[z, x, j + 1]
                            u3 = qtue[z, x, k + 1]
                            bu0 = u0 - u1
                            bu1 = u1 - u2
                            bu2 = u2 - u3
                            bu3 = u3
                            v0 = qtve[z, x, 0]
                            v1 = qtve[z, x, i + 1]
                            v2 = qtve[z, x, j + 1]
                            v3 = qtve[z, x, k + 1]
                            # reversed V bands: br[b] = band_{3-b}(V)
                            br0 = v3
                            br1 = v2 - v3
                            br2 = v1 - v2
                            br3 = v0 - v1
                            c0 = bu0 * br0
                            c1 = bu0 * br1 + bu1 * br0
                            c2 = bu0 * br2 + bu1 * br1 + bu2 * br0
                            c3 = bu0 * br3 + bu1 * br2 + bu2 * br1 + bu3 * br0
                            c4 = bu1 * br3 + bu2 * br2 + bu3 * br1
                            c5 = bu2 * br3 + bu3 * br2
                            c6 = bu3 * br3
                            e0 += c0 + 0.5 * c1
                            e1 += c2 + 0.5 * (c1 + c3)
                            e2 += c4 + 0.5 * (c3 + c5)
                            e3 += c6 + 0.5 * c5
                        e0 *= w
                        e1 *= w
                        e2 *= w
                        e3 *= w
                        py0 += e0
                        py1 += e1
                        py2 += e2
                        py3 += e3
                        if e0 > 0.0:
                            selog += e0 * np.log(e0)
                        if e1 > 0.0:
                            selog += e1 * np.log(e1)
                        if e2 > 0.0:
                            selog += e2 * np.log(e2)
                        if e3 > 0.0:
                            selog += e3 * np.log(e3)
                    hy = 0.0
                    if py0 > 0.0:
                        hy += py0 * np.log(py0)
                    if py1 > 0.0:
                        hy += py1 * np.log(py1)
                    if py2 > 0.0:
                        hy += py2 * np.log(py2)
                    if py3 > 0.0:
                        hy += py3 * np.log(py3)
                    mi = (selog - hy) / _LN2 + log2m
                    if mi > local_best:
                        local_best = mi
                        lj = j
                        lk = k
            best_i[i] = local_best
            best_jk[i, 0] = lj
            best_jk[i, 1] = lk
        return best_i, best_jk


def _pairs_after(i: int, G: int):
    m = G - 1 - i
    jj, kk = np.triu_indices(m, 1)
    return jj + i + 1, kk + i + 1


def _mi_from_entries(e):
    # e: (P, M, M) joint matrices with exact row sums 1/M
    M = e.shape[1]
    py = e.sum(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        selog = np.where(e > 0.0, e * np.log(np.maximum(e, 1e-300)), 0.0).sum(axis=(1, 2))
        hy = np.where(py > 0.0, py * np.log(np.maximum(py, 1e-300)), 0.0).sum(axis=1)
    return (selog - hy) / _LN2 + math.log2(M)


def _triple_banded_numpy(qte, wz):
    Z, M, GE = qte.shape
    G = GE - 2
    best = (-1.0, -1, -1, -1)
    for i in range(G - 2):
        jj, kk = _pairs_after(i, G)
        if jj.size == 0:
            continue
        t0 = qte[:, :, 0][:, :, None]
        t1 = qte[:, :, i + 1][:, :, None]
        t2 = qte[:, :, jj + 1]
        t3 = qte[:, :, kk + 1]
        bands = np.stack(
            [np.broadcast_to(t0 - t1, t2.shape), t1 - t2, t2 - t3, t3], axis=-1
        )  # (Z, M, P, 4)
        e = np.einsum("z,zxpy->pxy", wz, bands)
        mi = _mi_from_entries(e)
        p = int(np.argmax(mi))
        if mi[p] > best[0]:
            best = (float(mi[p]), i, int(jj[p]), int(kk[p]))
    return best


def _triple_ratio_numpy(qtue, qtve):
    Z, M, GE = qtue.shape
    G = GE - 2
    w = 1.0 / (M * M)
    best = (-1.0, -1, -1, -1)
    for i in range(G - 2):
        jj, kk = _pairs_after(i, G)
        if jj.size == 0:
            continue

        def bands(qe):
            t0 = np.broadcast_to(qe[:, :, 0][:, :, None], (Z, M, jj.size))
            t1 = np.broadcast_to(qe[:, :, i + 1][:, :, None], (Z, M, jj.size))
            t2 = qe[:, :, jj + 1]
            t3 = qe[:, :, kk + 1]
            return np.stack([t0 - t1, t1 - t2, t2 - t3, t3], axis=-1)  # (Z,M,P,4)

        bu = bands(qtue)
        bv = bands(qtve)
        br = bv[..., ::-1]
        # c[s] = sum_{a+b=s} bu[a] * br[b], s = 0..6
        c = np.zeros(bu.shape[:-1] + (7,))
        for a in range(4):
            for b in range(4):
                c[..., a + b] += bu[..., a] * br[..., b]
        ey = np.empty(bu.shape[:-1] + (4,))
        ey[..., 0] = c[..., 0] + 0.5 * c[..., 1]
        ey[..., 1] = c[..., 2] + 0.5 * (c[..., 1] + c[..., 3])
        ey[..., 2] = c[..., 4] + 0.5 * (c[..., 3] + c[..., 5])
        ey[..., 3] = c[..., 6] + 0.5 * c[..., 5]
        e = w * ey.sum(axis=0).transpose(1, 0, 2)  # (P, M, 4)
        mi = _mi_from_entries(e)
        p = int(np.argmax(mi))
        if mi[p] > best[0]:
            best = (float(mi[p]), i, int(jj[p]), int(kk[p]))
    return best


def _reduce_per_i(best_i, best_jk):
    best = (-1.0, -1, -1, -1)
    for i in range(best_i.shape[0]):
        if best_i[i] > best[0]:
            best = (float(best_i[i]), i, int(best_jk[i, 0]), int(best_jk[i, 1]))
    return best


def best_ordered_triple_banded(qte: np.ndarray, wz: np.ndarray):
    """Max mutual information over ordered grid triples, single-statistic bands.

    qte: (Z, M, G+2) extended tail table, wz: (Z,) prior weights summing to
    1/M.  Returns (best_I, i, j, k) with the lexicographically first argmax.
    """
    if qte.shape[2] < 5:
        raise ValueError("grid too small for an ordered triple")
    if USING_NUMBA:
        return _reduce_per_i(*_triple_banded_numba(qte, wz))
    return _triple_banded_numpy(qte, wz)


def best_ordered_triple_ratio(qtue: np.ndarray, qtve: np.ndarray):
    """Max mutual information over ordered grid triples for two-statistic
    ratio decoding (averaged band indices, half-ties split 50/50).

    qtue/qtve: (Z, M, G+2) extended tail tables of the two per-type
    statistics, indexed by (previous symbol, current symbol).
    """
    if qtue.shape != qtve.shape:
        raise ValueError("tail tables must have identical shapes")
    if qtue.shape[2] < 5:
        raise ValueError("grid too small for an ordered triple")
    if USING_NUMBA:
        return _reduce_per_i(*_triple_ratio_numba(qtue, qtve))
    return _triple_ratio_numpy(qtue, qtve)
