"""Explicit finite-difference solver for the Fokker-Planck equation of the ratchet.

Grid: t_k = k/n^2, y_j = j/n.  The centred scheme collapses to

    p(t_{k+1}, y_j) = 1/2 p(t_k, y_{j+1}) (1 - mu(y_{j+1})/n)
                    + 1/2 p(t_k, y_{j-1}) (1 + mu(y_{j-1})/n)

with mu the ratchet drift while the potential is on and -kappa while it is
off.  Stored values are probabilities (density times the lattice cell), the
same storage as :mod:`flashratchet.rw_approx`, so the two can be compared
site by site.  The arithmetic here is written independently of the random
walk kernels on purpose: the two recursions agree only because the algebra
says so.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

from .errors import ParameterError, StabilityError, TruncationError
from .potential import RatchetParams, drift_mu
from .rw_approx import (
    CUTOFF,
    TRUNCATION_BUDGET,
    FlashingSchedule,
    LatticeDistribution,
    ScaledWalkParams,
    flashing_segments,
    propagate_flashing,
)


@dataclass
class FpGrid:
    """Discrete density at time step ``k`` (time k/n^2)."""

    values: LatticeDistribution
    k: int = 0

    @property
    def n(self) -> int:
        return self.values.n

    @classmethod
    def point_start(cls, n: int, site: int = 0) -> "FpGrid":
        return cls(LatticeDistribution.point_mass(n, site))


def check_stability(params: RatchetParams, n: int) -> None:
    """Every coefficient 1/2 (1 +- mu/n) must stay inside [0, 1]."""
    mu0, mu1 = params.drifts
    worst = max(abs(mu0), abs(mu1), abs(params.kappa))
    if not worst < n:
        raise StabilityError(f"|drift| = {worst:g} >= n = {n}: explicit scheme unstable, increase n")


@numba.njit(cache=True)
def _fp_kernel(src, dst, lo, hi, nsteps, mu, inv_n, cutoff):
    # mu holds the drift at every buffer site
    dropped = 0.0
    for _ in range(nsteps):
        for g in (lo - 2, lo - 1, hi, hi + 1):
            src[g] = 0.0
        for j in range(lo - 1, hi + 1):
            left = 0.5 * src[j - 1] * (1.0 + mu[j - 1] * inv_n)
            right = 0.5 * src[j + 1] * (1.0 - mu[j + 1] * inv_n)
            dst[j] = right + left
        lo -= 1
        hi += 1
        while lo < hi and dst[lo] < cutoff:
            dropped += dst[lo]
            dst[lo] = 0.0
            lo += 1
        while hi > lo and dst[hi - 1] < cutoff:
            dropped += dst[hi - 1]
            dst[hi - 1] = 0.0
            hi -= 1
        src, dst = dst, src
    return src, dst, lo, hi, dropped


def _run(g: FpGrid, params: RatchetParams, phases: list[tuple[bool, int]],
         kappa_off: float | None = None) -> FpGrid:
    n = g.n
    check_stability(params, n)
    total = sum(k for _, k in phases)
    vals = g.values
    pad = total + 3
    size = len(vals.probs) + 2 * pad
    src = np.zeros(size)
    dst = np.zeros(size)
    src[pad:pad + len(vals.probs)] = vals.probs
    first_site = vals.offset - pad
    y = np.arange(first_site, first_site + size) / n
    mu_on = np.asarray(drift_mu(y, params), dtype=float)
    mu_off = np.full(size, -(params.kappa if kappa_off is None else kappa_off))
    lo, hi = pad, pad + len(vals.probs)
    dropped = 0.0
    for flash_on, k in phases:
        if k == 0:
            continue
        mu = mu_on if flash_on else mu_off
        src, dst, lo, hi, dd = _fp_kernel(src, dst, lo, hi, k, mu, 1.0 / n, CUTOFF)
        dropped += dd
    lost = vals.truncated + dropped
    if lost > TRUNCATION_BUDGET:
        raise TruncationError(f"truncated mass {lost:.3g} exceeds {TRUNCATION_BUDGET:g}")
    out = LatticeDistribution(n, first_site + lo, src[lo:hi].copy(), vals.parity, lost)
    return FpGrid(out, g.k + total)


def fp_step(g: FpGrid, params: RatchetParams, flash_on: bool, kappa_off: float | None = None) -> FpGrid:
    """One explicit time step, potential on or off.

    With the potential off the drift is -kappa_off (default: the tilt of ``params``).
    """
    if kappa_off is not None and abs(kappa_off) >= g.n:
        raise StabilityError(f"|kappa_off| = {abs(kappa_off):g} >= n = {g.n}")
    return _run(g, params, [(flash_on, 1)], kappa_off)


def fp_propagate(g0: FpGrid, params: RatchetParams, sched: FlashingSchedule,
                 total_steps: int | None = None, extra_on_steps: int = 0) -> FpGrid:
    """Alternate off/on phases exactly as the flashing walk does, starting at g0.k."""
    s1, s2 = sched.phase_steps(g0.n)
    if total_steps is None:
        total_steps = s1 + s2
    segs = flashing_segments(s1, s2, total_steps, start=g0.k)
    phases = [(bool(ph), k) for ph, k in segs] + [(True, extra_on_steps)]
    return _run(g0, params, phases)


def sup_distance(a: LatticeDistribution, b: LatticeDistribution) -> float:
    lo = min(a.offset, b.offset)
    hi = max(a.offset + len(a.probs), b.offset + len(b.probs))
    va = np.zeros(hi - lo)
    vb = np.zeros(hi - lo)
    va[a.offset - lo:a.offset - lo + len(a.probs)] = a.probs
    vb[b.offset - lo:b.offset - lo + len(b.probs)] = b.probs
    return float(np.max(np.abs(va - vb)))


def equivalence_report(params: RatchetParams, sched: FlashingSchedule, n: int,
                       steps: int | None = None, lam: float | None = None) -> float:
    """Sup-norm gap between the FP solution and the improved walk from a point mass at 0.

    The walk uses ``lam`` (default 2 gamma/(1-alpha), the matching value); pass
    a different ``lam`` to check that a mismatch is detected.
    """
    if lam is None:
        lam = 2.0 * params.gamma * params.L / (params.L - params.l)
    if lam < 0:
        raise ParameterError("lambda must be nonnegative")
    check_stability(params, n)
    walk = ScaledWalkParams(RatchetParams.from_lambda(params.l, params.L, lam, params.kappa), n, "improved")
    rw = propagate_flashing(LatticeDistribution.point_mass(n), walk, sched, steps)
    fp = fp_propagate(FpGrid.point_start(n), params, sched, steps)
    return sup_distance(rw, fp.values)
