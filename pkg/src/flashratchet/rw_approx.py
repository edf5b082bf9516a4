"""Exact probability propagation for the approximating random walks.

The walk lives on the integers; site j stands for position j/n and one step
takes time 1/n^2.  During the "free" phase it is a biased simple random walk
with up-probability p, during the "ratchet" phase the up-probability is p0 on
the steep segment (j mod nL < nl) and p1 elsewhere.  Two sets of
probabilities are offered: the ``original`` ones derived from the Parrondo
games with rho = 1 - lambda/n, eps = kappa/(2n), and the ``improved`` ones
obtained from their first-order expansion.

Distributions are dense vectors with an integer offset.  Each step grows the
support by one site on each side; edge sites whose probability falls below
``CUTOFF`` are dropped and the dropped mass is accumulated in
``LatticeDistribution.truncated`` so conservation can be audited.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Iterable

import numba
import numpy as np

from .density import DensityCurve
from .errors import ParameterError, TruncationError
from .potential import RatchetParams

CUTOFF = 1e-30
TRUNCATION_BUDGET = 1e-10

FREE, RATCHET = 0, 1


def _as_fraction(v) -> Fraction:
    if isinstance(v, Fraction):
        return v
    if isinstance(v, float):
        # Decimal literals such as 2.4 are meant exactly.
        return Fraction(repr(v))
    return Fraction(v)


@dataclass(frozen=True)
class FlashingSchedule:
    """Potential off for tau1, on for tau2, repeating; both times rational."""

    tau1: Fraction
    tau2: Fraction

    def __post_init__(self):
        object.__setattr__(self, "tau1", _as_fraction(self.tau1))
        object.__setattr__(self, "tau2", _as_fraction(self.tau2))
        if self.tau1 <= 0 or self.tau2 <= 0:
            raise ParameterError("tau1 and tau2 must be positive")

    @property
    def period(self) -> Fraction:
        return self.tau1 + self.tau2

    @property
    def m(self) -> int:
        """Smallest positive m with m^2 tau1 and m^2 tau2 both integers."""
        bound = math.lcm(self.tau1.denominator, self.tau2.denominator)
        for m in range(1, bound + 1):
            if (m * m * self.tau1).denominator == 1 and (m * m * self.tau2).denominator == 1:
                return m
        raise AssertionError("unreachable: m = lcm of denominators always works")

    def phase_steps(self, n: int) -> tuple[int, int]:
        """Number of walk steps (n^2 tau1, n^2 tau2) in the off and on phases."""
        if n % self.m:
            raise ParameterError(f"n={n} must be a multiple of m={self.m}")
        return int(n * n * self.tau1), int(n * n * self.tau2)


def zeta(t, sched: FlashingSchedule) -> int:
    """0 while the potential is off (mod(t, tau1+tau2) < tau1), else 1."""
    t = _as_fraction(t)
    if t < 0:
        raise ParameterError("zeta is defined for t >= 0")
    return 0 if t % sched.period < sched.tau1 else 1


def zeta_step(k: int, s1: int, s2: int) -> int:
    """zeta(k/n^2) for integer step k, with s1 = n^2 tau1 and s2 = n^2 tau2."""
    return 0 if k % (s1 + s2) < s1 else 1


def probs_original(n: int, lam: float, l: int, L: int, kappa: float) -> tuple[float, float, float]:
    rho = 1.0 - lam / n
    if not 0.0 < rho < 1.0:
        raise ParameterError(f"rho = 1 - lambda/n = {rho} is not in (0, 1)")
    eps = kappa / (2.0 * n)
    r = rho ** ((L - l) / l)
    p0 = r / (1.0 + r) - eps
    p1 = 1.0 / (1.0 + rho) - eps
    return _checked(0.5 - eps, p0, p1)


def probs_improved(n: int, lam: float, l: int, L: int, kappa: float) -> tuple[float, float, float]:
    p0 = 0.5 * (1.0 - lam * (L - l) / (2.0 * n * l) - kappa / n)
    p1 = 0.5 * (1.0 + lam / (2.0 * n) - kappa / n)
    return _checked(0.5 * (1.0 - kappa / n), p0, p1)


def _checked(p, p0, p1):
    for name, v in (("p", p), ("p0", p0), ("p1", p1)):
        if not 0.0 < v < 1.0:
            raise ParameterError(f"{name}={v} is not in (0, 1); increase n")
    return p, p0, p1


@dataclass(frozen=True)
class ScaledWalkParams:
    """The n-th approximating walk for a ratchet given by ``base``."""

    base: RatchetParams
    n: int
    variant: str = "improved"

    def __post_init__(self):
        if self.variant not in ("original", "improved"):
            raise ParameterError(f"unknown variant {self.variant!r}")
        if self.n < 1:
            raise ParameterError("n must be a positive integer")
        self.probs()

    @property
    def lam(self) -> float:
        if self.base.lam is not None:
            return self.base.lam
        return 2.0 * self.base.gamma * self.base.L / (self.base.L - self.base.l)

    def probs(self) -> tuple[float, float, float]:
        """(p, p0, p1) for this walk."""
        b = self.base
        fn = probs_improved if self.variant == "improved" else probs_original
        return fn(self.n, self.lam, b.l, b.L, b.kappa)


@dataclass
class LatticeDistribution:
    """Probabilities ``probs[i]`` of sites ``offset + i`` at scale n.

    ``parity`` is "single" when all mass sits on one parity class of sites
    (true for any walk started from a point mass) and "mixed" otherwise.
    """

    n: int
    offset: int
    probs: np.ndarray
    parity: str = "single"
    truncated: float = 0.0

    def __post_init__(self):
        self.probs = np.asarray(self.probs, dtype=float)
        if self.parity not in ("single", "mixed"):
            raise ParameterError(f"parity must be 'single' or 'mixed', got {self.parity!r}")

    @classmethod
    def point_mass(cls, n: int, site: int = 0) -> "LatticeDistribution":
        return cls(n, site, np.ones(1))

    @property
    def sites(self) -> np.ndarray:
        return np.arange(self.offset, self.offset + len(self.probs))

    @property
    def x(self) -> np.ndarray:
        return self.sites / self.n

    def total(self) -> float:
        return float(self.probs.sum())

    def mean(self) -> float:
        return float(self.sites @ self.probs) / self.n

    def as_dict(self, tol: float = 0.0) -> dict[int, float]:
        return {int(j): float(v) for j, v in zip(self.sites, self.probs) if v > tol}

    def shifted(self, sites: int) -> "LatticeDistribution":
        return replace(self, offset=self.offset + sites, probs=self.probs.copy())


@numba.njit(cache=True, nogil=True)
def _trim(buf, lo, hi, cutoff):
    lost = 0.0
    while lo < hi and buf[lo] < cutoff:
        lost += buf[lo]
        buf[lo] = 0.0
        lo += 1
    while hi > lo and buf[hi - 1] < cutoff:
        lost += buf[hi - 1]
        buf[hi - 1] = 0.0
        hi -= 1
    return lo, hi, lost


@numba.njit(cache=True, nogil=True)
def _free_steps(cur, nxt, lo, hi, nsteps, p, cutoff):
    q = 1.0 - p
    lost = 0.0
    for _ in range(nsteps):
        cur[lo - 2] = 0.0
        cur[lo - 1] = 0.0
        cur[hi] = 0.0
        cur[hi + 1] = 0.0
        for i in range(lo - 1, hi + 1):
            nxt[i] = cur[i + 1] * q + cur[i - 1] * p
        lo, hi, dl = _trim(nxt, lo - 1, hi + 1, cutoff)
        lost += dl
        cur, nxt = nxt, cur
    return cur, nxt, lo, hi, lost


@numba.njit(cache=True, nogil=True)
def _ratchet_steps(cur, nxt, lo, hi, nsteps, up, down, cutoff):
    lost = 0.0
    for _ in range(nsteps):
        cur[lo - 2] = 0.0
        cur[lo - 1] = 0.0
        cur[hi] = 0.0
        cur[hi + 1] = 0.0
        for i in range(lo - 1, hi + 1):
            nxt[i] = cur[i + 1] * down[i + 1] + cur[i - 1] * up[i - 1]
        lo, hi, dl = _trim(nxt, lo - 1, hi + 1, cutoff)
        lost += dl
        cur, nxt = nxt, cur
    return cur, nxt, lo, hi, lost


def regime_index(j, n: int, l: int, L: int):
    """0 on the steep segment (j mod nL < nl), 1 elsewhere."""
    r = np.where(np.mod(j, n * L) < n * l, 0, 1)
    return int(r) if r.ndim == 0 else r


def flashing_segments(s1: int, s2: int, total_steps: int, start: int = 0) -> list[tuple[int, int]]:
    """Split steps start..start+total_steps-1 into runs of constant phase."""
    segs = []
    k, end = start, start + total_steps
    period = s1 + s2
    while k < end:
        r = k % period
        if r < s1:
            phase, stop = FREE, k - r + s1
        else:
            phase, stop = RATCHET, k - r + period
        stop = min(stop, end)
        segs.append((phase, stop - k))
        k = stop
    return segs


def propagate_segments(d: LatticeDistribution, probs: tuple[float, float, float], l: int, L: int,
                       segments: Iterable[tuple[int, int]]) -> LatticeDistribution:
    """Apply the free/ratchet recursions for each (phase, nsteps) in order."""
    segments = [(ph, k) for ph, k in segments if k > 0]
    total = sum(k for _, k in segments)
    if total == 0:
        return replace(d, probs=d.probs.copy())
    p, p0, p1 = probs
    n = d.n
    margin = total + 3
    size = len(d.probs) + 2 * margin
    cur = np.zeros(size)
    nxt = np.zeros(size)
    cur[margin:margin + len(d.probs)] = d.probs
    base = d.offset - margin  # site of buffer index 0
    lo, hi = margin, margin + len(d.probs)
    lost = 0.0
    up = down = None
    for phase, k in segments:
        if phase == FREE:
            cur, nxt, lo, hi, dl = _free_steps(cur, nxt, lo, hi, k, p, CUTOFF)
        else:
            if up is None:
                site = np.arange(base, base + size)
                up = np.where(np.mod(site, n * L) < n * l, p0, p1)
                down = 1.0 - up
            cur, nxt, lo, hi, dl = _ratchet_steps(cur, nxt, lo, hi, k, up, down, CUTOFF)
        lost += dl
    truncated = d.truncated + lost
    if truncated > TRUNCATION_BUDGET:
        raise TruncationError(f"truncated mass {truncated:.3g} exceeds {TRUNCATION_BUDGET:g}")
    return LatticeDistribution(n, base + lo, cur[lo:hi].copy(), d.parity, truncated)


def step_free(d: LatticeDistribution, p: float) -> LatticeDistribution:
    return propagate_segments(d, (p, 0.5, 0.5), 1, 2, [(FREE, 1)])


def step_ratchet(d: LatticeDistribution, p0: float, p1: float, n: int, l: int, L: int) -> LatticeDistribution:
    if d.n != n:
        raise ParameterError("distribution scale does not match n")
    return propagate_segments(d, (0.5, p0, p1), l, L, [(RATCHET, 1)])


def propagate_flashing(d0: LatticeDistribution, w: ScaledWalkParams, sched: FlashingSchedule,
                       total_steps: int | None = None, extra_ratchet_steps: int = 0) -> LatticeDistribution:
    """Run the flashing walk for ``total_steps`` steps (default: one period), free phase first.

    ``extra_ratchet_steps`` appends that many ratchet steps at the end; the
    wrapped analysis uses it for its parity fix.
    """
    if d0.n != w.n:
        raise ParameterError("distribution scale does not match the walk")
    s1, s2 = sched.phase_steps(w.n)
    if total_steps is None:
        total_steps = s1 + s2
    segs = flashing_segments(s1, s2, total_steps) + [(RATCHET, extra_ratchet_steps)]
    return propagate_segments(d0, w.probs(), w.base.l, w.base.L, segs)


def propagate_ratchet(d0: LatticeDistribution, w: ScaledWalkParams, steps: int) -> LatticeDistribution:
    """Potential permanently on: the walk of the tilted (non-flashing) ratchet."""
    return propagate_segments(d0, w.probs(), w.base.l, w.base.L, [(RATCHET, steps)])


def to_density(d: LatticeDistribution) -> DensityCurve:
    """Linear interpolation of n*P(j)/s over x = j/n.

    s = 2 for single-parity distributions, whose unoccupied sites are left
    out of the node list; s = 1 for mixed ones.
    """
    sites, probs = d.sites, d.probs
    if d.parity == "single" and len(probs) > 1:
        cls = int(sites[np.argmax(probs)]) % 2
        keep = (sites - cls) % 2 == 0
        return DensityCurve(sites[keep] / d.n, d.n * probs[keep] / 2.0)
    if d.parity == "single":
        return DensityCurve(sites / d.n, d.n * probs / 2.0)
    return DensityCurve(sites / d.n, d.n * probs)
