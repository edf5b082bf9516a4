"""Counter-based normal variates for reproducible parallel Monte Carlo.

Bits come from Philox4x32-10 (Salmon et al., SC'11): a keyed bijection of a
128-bit counter, so the variate for (seed, path, step) can be computed
directly without replaying a sequential stream.  The layout is

    key     = (seed & 0xffffffff, seed >> 32)
    counter = (step // 2, path & 0xffffffff, path >> 32, lane)

and each block yields two 64-bit words, i.e. the normals for steps 2c and
2c + 1.  Lane 0 drives the Brownian increments, lane 1 the initial draws.

Uniforms are mapped to normals by the inverse CDF.  The central 31/32 of the
unit interval uses a 512-piece degree-5 Chebyshev table (max error ~1e-10);
the tails fall back to Wichura's AS241 rational approximation, which is
accurate to about 1e-16 and also seeds the table.
"""

from __future__ import annotations

import math

import numba
import numpy as np

MASK32 = np.uint64(0xFFFFFFFF)
_SHIFT32 = np.uint64(32)
_SHIFT11 = np.uint64(11)
_M0 = np.uint64(0xD2511F53)
_M1 = np.uint64(0xCD9E8D57)
_W0 = np.uint64(0x9E3779B9)
_W1 = np.uint64(0xBB67AE85)
_TWO_M53 = 2.0 ** -53

LANE_NOISE = 0
LANE_INIT = 1

# AS241 (PPND16) coefficients, ascending powers.
_A = (3.3871328727963666080e0, 1.3314166789178437745e+2, 1.9715909503065514427e+3,
      1.3731693765509461125e+4, 4.5921953931549871457e+4, 6.7265770927008700853e+4,
      3.3430575583588128105e+4, 2.5090809287301226727e+3)
_B = (1.0, 4.2313330701600911252e+1, 6.8718700749205790830e+2, 5.3941960214247511077e+3,
      2.1213794301586595867e+4, 3.9307895800092710610e+4, 2.8729085735721942674e+4,
      5.2264952788528545610e+3)
_C = (1.42343711074968357734e0, 4.63033784615654529590e0, 5.76949722146069140550e0,
      3.64784832476320460504e0, 1.27045825245236838258e0, 2.41780725177450611770e-1,
      2.27238449892691845833e-2, 7.74545014278341407640e-4)
_D = (1.0, 2.05319162663775882187e0, 1.67638483018380384940e0, 6.89767334985100004550e-1,
      1.48103976427480074590e-1, 1.51986665636164571966e-2, 5.47593808499534494600e-4,
      1.05075007164441684324e-9)
_E = (6.65790464350110377720e0, 5.46378491116411436990e0, 1.78482653991729133580e0,
      2.96560571828504891230e-1, 2.65321895265761230930e-2, 1.24266094738807843860e-3,
      2.71155556874348757815e-5, 2.01033439929228813265e-7)
_F = (1.0, 5.99832206555887937690e-1, 1.36929880922735805310e-1, 1.48753612908506148525e-2,
      7.86869131145613259100e-4, 1.84631831751005468180e-5, 1.42151175831644588870e-7,
      2.04426310338993978564e-15)


@numba.njit(inline="always")
def philox4x32(c0, c1, c2, c3, k0, k1):
    """Ten Philox rounds on 32-bit words held in uint64."""
    for _ in range(10):
        p0 = _M0 * c0
        p1 = _M1 * c2
        c0, c1, c2, c3 = ((p1 >> _SHIFT32) ^ c1 ^ k0) & MASK32, p1 & MASK32, \
                         ((p0 >> _SHIFT32) ^ c3 ^ k1) & MASK32, p0 & MASK32
        k0 = (k0 + _W0) & MASK32
        k1 = (k1 + _W1) & MASK32
    return c0, c1, c2, c3


@numba.njit(inline="always")
def bits_to_unit(hi, lo):
    """Top 53 bits of (hi, lo) as a uniform strictly inside (0, 1)."""
    return (float(((hi << _SHIFT32) | lo) >> _SHIFT11) + 0.5) * _TWO_M53


@numba.njit(inline="always")
def _horner(c, r):
    return ((((((c[7] * r + c[6]) * r + c[5]) * r + c[4]) * r + c[3]) * r + c[2]) * r + c[1]) * r + c[0]


@numba.njit(inline="always")
def ndtri_as241(p):
    q = p - 0.5
    if abs(q) <= 0.425:
        r = 0.180625 - q * q
        return q * _horner(_A, r) / _horner(_B, r)
    r = p if q < 0.0 else 1.0 - p
    r = math.sqrt(-math.log(r))
    if r <= 5.0:
        r -= 1.6
        z = _horner(_C, r) / _horner(_D, r)
    else:
        r -= 5.0
        z = _horner(_E, r) / _horner(_F, r)
    return -z if q < 0.0 else z


TABLE_PIECES = 512
_DEG = 5
_TAIL = 1.0 / 64.0


@numba.njit(cache=True)
def _as241_array(u):
    out = np.empty_like(u)
    for i in range(u.size):
        out[i] = ndtri_as241(u[i])
    return out


def _build_table() -> np.ndarray:
    nodes = np.cos(np.pi * (np.arange(_DEG + 1) + 0.5) / (_DEG + 1))
    vander = np.vander(nodes, _DEG + 1, increasing=True)
    tab = np.zeros((TABLE_PIECES, _DEG + 1))
    for i in range(TABLE_PIECES):
        u = (i + 0.5 * (nodes + 1.0)) / TABLE_PIECES
        if u[0] < _TAIL or u[-1] > 1.0 - _TAIL:
            continue  # served by AS241
        tab[i] = np.linalg.solve(vander, _as241_array(u))
    return tab


# flat layout: coefficients of piece i at [6i, 6i+6)
NORMAL_TABLE = _build_table().ravel()


@numba.njit(inline="always")
def ndtri_fast(u, tab):
    if u < _TAIL or u > 1.0 - _TAIL:
        return ndtri_as241(u)
    s = u * TABLE_PIECES
    i = int(s)
    t = 2.0 * (s - i) - 1.0
    b = 6 * i
    return ((((tab[b + 5] * t + tab[b + 4]) * t + tab[b + 3]) * t + tab[b + 2]) * t + tab[b + 1]) * t + tab[b]


@numba.njit(cache=True)
def _ppf_array(u, tab):
    out = np.empty_like(u)
    for i in range(u.size):
        out[i] = ndtri_fast(u[i], tab)
    return out


def normal_ppf(u) -> np.ndarray:
    """Standard normal inverse CDF as used by the simulator."""
    u = np.ascontiguousarray(u, dtype=float)
    return _ppf_array(u.ravel(), NORMAL_TABLE).reshape(u.shape)


def split_seed(seed: int) -> tuple[int, int]:
    seed = int(seed)
    if not 0 <= seed < 2 ** 64:
        raise ValueError("seed must fit in 64 unsigned bits")
    return seed & 0xFFFFFFFF, seed >> 32


@numba.njit(cache=True)
def _block(c0, c1, c2, c3, k0, k1):
    return philox4x32(np.uint64(c0), np.uint64(c1), np.uint64(c2), np.uint64(c3),
                      np.uint64(k0), np.uint64(k1))


def philox_block(counter: tuple[int, int, int, int], key: tuple[int, int]) -> tuple[int, int, int, int]:
    """Four 32-bit output words for one counter value (reference interface)."""
    return tuple(int(v) for v in _block(*counter, *key))


@numba.njit(cache=True)
def _uniforms(k0, k1, path, first_step, count, lane):
    out = np.empty(count)
    c1 = np.uint64(path) & MASK32
    c2 = np.uint64(path) >> _SHIFT32
    for i in range(count):
        k = first_step + i
        r0, r1, r2, r3 = philox4x32(np.uint64(k // 2), c1, c2, np.uint64(lane), np.uint64(k0), np.uint64(k1))
        out[i] = bits_to_unit(r0, r1) if k % 2 == 0 else bits_to_unit(r2, r3)
    return out


def stream_uniforms(seed: int, path: int, first_step: int, count: int, lane: int = LANE_NOISE) -> np.ndarray:
    """Uniforms feeding steps first_step .. first_step+count-1 of one path."""
    k0, k1 = split_seed(seed)
    return _uniforms(k0, k1, path, first_step, count, lane)


def stream_normals(seed: int, path: int, first_step: int, count: int) -> np.ndarray:
    """Standard normals Z_{k+1} for steps first_step .. first_step+count-1 of one path."""
    return normal_ppf(stream_uniforms(seed, path, first_step, count))
