"""Euler-Maruyama Monte Carlo for the tilted and the tilted flashing ratchet.

With h = 1/n^2 the scheme is

    X_{k+1} = X_k + [zeta_k mu(X_k) - (1 - zeta_k) kappa] / n^2 + Z_{k+1} / n

where mu is the ratchet drift, zeta_k the phase indicator at time k/n^2
(identically 1 without a schedule) and Z_{k+1} a standard normal taken from
the counter-based stream of :mod:`flashratchet.counter_rng`.  Because every
normal is addressed by (seed, path, step), a path's result does not depend on
how paths are distributed over threads or on how many are simulated.

Paths are advanced in blocks of 64: for each pair of steps the block's
normals are generated first, then the positions are updated, which keeps the
inner loops branch-light and vectorizable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numba
import numpy as np
from scipy import stats as sps

from .counter_rng import (
    LANE_INIT,
    MASK32,
    NORMAL_TABLE,
    bits_to_unit,
    ndtri_fast,
    philox4x32,
    split_seed,
)
from .density import DensityCurve
from .errors import ParameterError
from .potential import RatchetParams
from .rw_approx import FlashingSchedule, LatticeDistribution

BLOCK = 64
STREAM_TAG = "philox4x32-10 key=seed counter=(step//2, path_lo, path_hi, lane)"


@dataclass(frozen=True)
class EmConfig:
    """Euler-Maruyama run: ``paths`` trajectories of ``total_steps`` steps of size 1/n^2."""

    base: RatchetParams
    n: int
    total_steps: int
    paths: int = 1
    seed: int = 0
    sched: Optional[FlashingSchedule] = None

    def __post_init__(self):
        if self.n < 1:
            raise ParameterError("n must be a positive integer")
        if self.paths < 1:
            raise ParameterError("paths must be at least 1")
        if self.total_steps < 0:
            raise ParameterError("total_steps must be nonnegative")
        split_seed(self.seed)
        if self.sched is not None:
            self.sched.phase_steps(self.n)

    @classmethod
    def one_period(cls, base: RatchetParams, sched: FlashingSchedule, n: int,
                   paths: int = 1, seed: int = 0) -> "EmConfig":
        s1, s2 = sched.phase_steps(n)
        return cls(base, n, s1 + s2, paths, seed, sched)

    def phase_split(self) -> tuple[int, int]:
        """(s1, s2) such that step k is free iff k mod (s1+s2) < s1."""
        if self.sched is None:
            return 0, 1
        return self.sched.phase_steps(self.n)

    def increments(self) -> tuple[float, float, float]:
        """Drift per step on the steep segment, the shallow segment, and with the potential off."""
        nn = float(self.n) * self.n
        mu0, mu1 = self.base.drifts
        return mu0 / nn, mu1 / nn, -self.base.kappa / nn


@dataclass
class SampleSet:
    """Terminal positions, stored by path index."""

    values: np.ndarray
    config: EmConfig
    first_step: int = 0
    stream: str = STREAM_TAG

    def mean(self) -> float:
        return float(np.mean(self.values))

    def stderr(self) -> float:
        return float(np.std(self.values, ddof=1) / math.sqrt(len(self.values)))


@numba.njit(inline="always")
def _ratchet_drift(x, l, L, d0, d1):
    # x mod L through floor; the fix-ups catch quotients rounded across an
    # integer so the branch matches np.mod (kink at l belongs to the right)
    y = x - L * math.floor(x / L)
    if y < 0.0:
        y += L
    elif y >= L:
        y -= L
    return d0 if y < l else d1


@numba.njit(parallel=True, cache=True)
def _em_blocks(x, first_path, k_start, k_end, s1, s2, n, l, L, d0, d1, dfree, k0, k1, tab, noise):
    npaths = x.size
    nblocks = (npaths + BLOCK - 1) // BLOCK
    inv_n = noise / n
    period = s1 + s2
    key0 = np.uint64(k0)
    key1 = np.uint64(k1)
    lane = np.uint64(0)
    for blk in numba.prange(nblocks):
        i0 = blk * BLOCK
        m = min(BLOCK, npaths - i0)
        xb = x[i0:i0 + m].copy()
        u = np.empty((2, m))
        z = np.empty((2, m))
        k = k_start
        while k < k_end:
            c = k // 2
            # separate passes for bits, normals and the update vectorize better
            for i in range(m):
                path = np.uint64(first_path + i0 + i)
                r0, r1, r2, r3 = philox4x32(np.uint64(c), path & MASK32, path >> np.uint64(32), lane, key0, key1)
                u[0, i] = bits_to_unit(r0, r1)
                u[1, i] = bits_to_unit(r2, r3)
            for h in range(2):
                for i in range(m):
                    z[h, i] = ndtri_fast(u[h, i], tab) * inv_n
            stop = min(2 * c + 2, k_end)
            for kk in range(k, stop):
                h = kk - 2 * c
                if kk % period < s1:
                    for i in range(m):
                        xb[i] = xb[i] + dfree + z[h, i]
                else:
                    for i in range(m):
                        xi = xb[i]
                        xb[i] = xi + _ratchet_drift(xi, l, L, d0, d1) + z[h, i]
            k = stop
        x[i0:i0 + m] = xb


@numba.njit(cache=True)
def _em_path(x0, path, k_start, k_end, s1, s2, n, l, L, d0, d1, dfree, k0, k1, tab, noise):
    out = np.empty(k_end - k_start + 1)
    out[0] = x0
    inv_n = noise / n
    period = s1 + s2
    p = np.uint64(path)
    xi = x0
    for kk in range(k_start, k_end):
        c = kk // 2
        r0, r1, r2, r3 = philox4x32(np.uint64(c), p & MASK32, p >> np.uint64(32), np.uint64(0),
                                    np.uint64(k0), np.uint64(k1))
        if kk % 2 == 0:
            zi = ndtri_fast(bits_to_unit(r0, r1), tab) * inv_n
        else:
            zi = ndtri_fast(bits_to_unit(r2, r3), tab) * inv_n
        if kk % period < s1:
            xi = xi + dfree + zi
        else:
            xi = xi + _ratchet_drift(xi, l, L, d0, d1) + zi
        out[kk - k_start + 1] = xi
    return out


@numba.njit(cache=True)
def _init_uniforms(first_path, count, k0, k1):
    out = np.empty(count)
    for i in range(count):
        p = np.uint64(first_path + i)
        r0, r1, r2, r3 = philox4x32(np.uint64(0), p & MASK32, p >> np.uint64(32), np.uint64(LANE_INIT),
                                    np.uint64(k0), np.uint64(k1))
        out[i] = bits_to_unit(r0, r1)
    return out


def sample_initial(law: LatticeDistribution, seed: int, first_path: int, count: int) -> np.ndarray:
    """Starting positions drawn from a lattice law, one uniform per path (lane 1 of the stream)."""
    k0, k1 = split_seed(seed)
    u = _init_uniforms(first_path, count, k0, k1)
    cdf = np.cumsum(law.probs)
    idx = np.searchsorted(cdf, u * cdf[-1], side="right")
    idx = np.minimum(idx, len(cdf) - 1)
    return (law.offset + idx) / law.n


def _kernel_args(cfg: EmConfig):
    s1, s2 = cfg.phase_split()
    d0, d1, dfree = cfg.increments()
    k0, k1 = split_seed(cfg.seed)
    return s1, s2, cfg.n, float(cfg.base.l), float(cfg.base.L), d0, d1, dfree, k0, k1


def _starts(x0, cfg: EmConfig, first_path: int, count: int) -> np.ndarray:
    if isinstance(x0, LatticeDistribution):
        if x0.n != cfg.n:
            raise ParameterError("initial law and simulation use different n")
        return sample_initial(x0, cfg.seed, first_path, count)
    x = np.asarray(x0, dtype=float)
    if x.ndim == 0:
        return np.full(count, float(x))
    if x.shape != (count,):
        raise ParameterError(f"expected {count} starting points, got shape {x.shape}")
    return x.copy()


def em_ensemble(x0, cfg: EmConfig, first_step: int = 0, first_path: int = 0,
                zero_noise: bool = False) -> SampleSet:
    """Terminal positions of paths first_path .. first_path+cfg.paths-1.

    ``x0`` is a number, an array with one start per path, or a
    LatticeDistribution to sample the starts from.  Steps first_step ..
    first_step+total_steps-1 are taken, so a run can be split into pieces
    (e.g. phase by phase) without changing the result.
    """
    x = _starts(x0, cfg, first_path, cfg.paths)
    _em_blocks(x, first_path, first_step, first_step + cfg.total_steps, *_kernel_args(cfg),
               NORMAL_TABLE, 0.0 if zero_noise else 1.0)
    return SampleSet(x, cfg, first_step)


def em_trajectory(x0: float, cfg: EmConfig, path_index: int, first_step: int = 0,
                  full_path: bool = False, zero_noise: bool = False):
    """One path.  Returns its terminal value, or every position if ``full_path``.

    The terminal value is bit-identical to entry ``path_index`` of an
    ensemble with the same seed.  ``zero_noise`` suppresses the normals,
    leaving the deterministic Euler recursion.
    """
    path = _em_path(float(x0), int(path_index), first_step, first_step + cfg.total_steps,
                    *_kernel_args(cfg), NORMAL_TABLE, 0.0 if zero_noise else 1.0)
    return path if full_path else float(path[-1])


def histogram_density(s: SampleSet | np.ndarray, bin_width: float, range: tuple[float, float] | None = None) -> DensityCurve:
    """Normalized histogram as a curve through the bin centres.

    Bin edges are integer multiples of ``bin_width``.  Heights are counts
    divided by (total sample size * bin_width), so samples outside ``range``
    still count in the normalization.
    """
    v = np.asarray(s.values if isinstance(s, SampleSet) else s, dtype=float)
    if v.size == 0:
        raise ParameterError("empty sample")
    if not bin_width > 0:
        raise ParameterError("bin_width must be positive")
    lo, hi = (v.min(), v.max()) if range is None else range
    i0 = math.floor(lo / bin_width)
    i1 = max(math.floor(hi / bin_width) + 1, i0 + 1)
    edges = np.arange(i0, i1 + 1) * bin_width
    counts, _ = np.histogram(v, bins=edges)
    return DensityCurve(0.5 * (edges[1:] + edges[:-1]), counts / (v.size * bin_width))


def ks_distance(s: SampleSet | np.ndarray, curve: DensityCurve) -> float:
    """Kolmogorov-Smirnov distance between the sample and the CDF of ``curve`` (normalized to mass 1)."""
    v = np.asarray(s.values if isinstance(s, SampleSet) else s, dtype=float)
    total = curve.integral()
    return float(sps.kstest(v, lambda x: curve.cdf(x) / total).statistic)
