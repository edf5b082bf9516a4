"""Summary statistics of lattice distributions, the zero-drift tilt and parameter sweeps.

"Skewness" here is the ratchet-specific functional: mass over the steep
segments (jL, jL + alpha L) minus mass over the shallow segments
(jL + alpha L, (j+1)L), open intervals, so sites at the potential minima and
maxima count for neither.  It is not the third standardized moment.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy import optimize, special

from .density import DensityCurve
from .errors import NumericalError, ParameterError
from .potential import RatchetParams
from .rw_approx import (
    FlashingSchedule,
    LatticeDistribution,
    ScaledWalkParams,
    propagate_flashing,
    to_density,
)

DEFAULT_PEAKS = (-1, 0, 1)


def mean_displacement(d: LatticeDistribution, x0_mean: float = 0.0) -> float:
    return d.mean() - x0_mean


def skewness(d: LatticeDistribution, l: int, L: int) -> float:
    r = np.mod(d.sites, d.n * L)
    nl = d.n * l
    steep = (r > 0) & (r < nl)
    shallow = r > nl
    return float(d.probs[steep].sum() - d.probs[shallow].sum())


@dataclass
class PeakReport:
    locations: list[float]
    areas: list[float]
    heights: list[float]


def peak_stats(curve: DensityCurve, d: LatticeDistribution, l: int, L: int,
               peaks=DEFAULT_PEAKS, absorb_tails: bool = True, height: str = "at_minimum") -> PeakReport:
    """Areas and heights of the peaks at the potential minima jL, j in ``peaks``.

    The basin of peak j is the ratchet cell [jL - (1-alpha)L, jL + alpha L).
    With ``absorb_tails`` the first and last listed basins extend to -inf and
    +inf, so the listed areas add up to the total mass.  ``height`` is the
    curve value at jL ("at_minimum") or its largest value over the basin
    ("basin_max").
    """
    if height not in ("at_minimum", "basin_max"):
        raise ParameterError(f"unknown height convention {height!r}")
    peaks = sorted(peaks)
    n, nL, nl = d.n, d.n * L, d.n * l
    sites = d.sites
    areas, heights, locs = [], [], []
    for idx, j in enumerate(peaks):
        lo, hi = j * nL - (nL - nl), j * nL + nl
        sel = (sites >= lo) & (sites < hi)
        if absorb_tails and idx == 0:
            sel |= sites < lo
        if absorb_tails and idx == len(peaks) - 1:
            sel |= sites >= hi
        areas.append(float(d.probs[sel].sum()))
        if height == "at_minimum":
            heights.append(float(curve(j * L)))
        else:
            heights.append(curve.max_on(lo / n, hi / n))
        locs.append(float(j * L))
    return PeakReport(locs, areas, heights)


def normal_cdf(x):
    out = 0.5 * special.erfc(-np.asarray(x, dtype=float) / math.sqrt(2.0))
    return out if out.ndim else float(out)


def kappa0_limit(alpha, L: int, tau1) -> float:
    """Large-amplitude limit (1/2 - alpha) L / tau1 of the zero-drift tilt."""
    return float((Fraction(1, 2) - Fraction(alpha)) * L / Fraction(tau1))


def astumian_mean_approx(alpha, L: int, kappa: float, tau1) -> float:
    """Mean displacement if the free-phase spread were simply collected into the nearest well.

    The Brownian position B - kappa*tau1 at the end of the free phase lands in
    cell ((j-1+alpha)L, (j+alpha)L] with probability P_j, and the particle is
    credited with jL.
    """
    a, t = float(alpha), float(tau1)
    sd = math.sqrt(t)
    J = int(math.ceil((abs(kappa) * t + 8.0 * sd) / L)) + 2
    j = np.arange(-J, J + 1)
    hi = normal_cdf((a * L + j * L + kappa * t) / sd)
    lo = normal_cdf((a * L + (j - 1) * L + kappa * t) / sd)
    return float(np.sum(j * L * (hi - lo)))


# ------------------------------------------------------------------ runs


@dataclass(frozen=True)
class RatchetSetup:
    """Everything but the tilt: shape l/L, lambda, flashing times and scale n."""

    l: int = 1
    L: int = 4
    lam: float = 5.0
    tau1: Fraction = Fraction(12, 5)
    tau2: Fraction = Fraction(12, 5)
    n: int = 100
    variant: str = "improved"

    @property
    def sched(self) -> FlashingSchedule:
        return FlashingSchedule(self.tau1, self.tau2)

    def walk(self, kappa: float) -> ScaledWalkParams:
        return ScaledWalkParams(RatchetParams.from_lambda(self.l, self.L, self.lam, kappa), self.n, self.variant)

    def with_(self, **kw) -> "RatchetSetup":
        d = dict(self.__dict__)
        d.update(kw)
        return RatchetSetup(**d)


def one_period_from_origin(setup: RatchetSetup, kappa: float) -> LatticeDistribution:
    return propagate_flashing(LatticeDistribution.point_mass(setup.n), setup.walk(kappa), setup.sched)


def find_kappa0(lam: float, n: int, setup: RatchetSetup = RatchetSetup(), tol: float = 1e-12,
                xtol: float = 1e-9) -> float:
    """Tilt at which the mean displacement over one period from 0 vanishes.

    The mean decreases in kappa.  The root is bracketed by 0 and twice the
    large-amplitude limit, or by minus that when the mean at kappa = 0 is
    already negative (tiny lambda, where lattice effects dominate), and found
    with Brent's method.
    """
    s = setup.with_(lam=lam, n=n)
    f = lambda k: one_period_from_origin(s, k).mean()
    hi = 2.0 * kappa0_limit(Fraction(s.l, s.L), s.L, s.tau1)
    f0 = f(0.0)
    if abs(f0) < tol:
        return 0.0
    other = hi if f0 > 0.0 else -hi
    fo = f(other)
    if not f0 * fo < 0.0:
        raise NumericalError(f"no sign change of the mean on [0, {other:g}]: f(0)={f0:.3g}, f({other:g})={fo:.3g}")
    a, b = sorted((0.0, other))
    return float(optimize.brentq(f, a, b, xtol=xtol, rtol=4 * np.finfo(float).eps))


def scaled_n_for(lam: float, m: int = 5, base: int = 100) -> int:
    """Smallest multiple of m that is >= base and >= 2 lambda, keeping probabilities well inside (0, 1)."""
    n = max(base, int(math.ceil(2 * lam)))
    return int(math.ceil(n / m) * m)


TABLE_COLUMNS = ("theta", "area_m1", "area_0", "area_p1", "height_m1", "height_0", "height_p1",
                 "mean", "skewness")


def row_stats(theta: float, d: LatticeDistribution, x0_mean: float, l: int, L: int) -> dict:
    rep = peak_stats(to_density(d), d, l, L)
    return dict(zip(TABLE_COLUMNS, [theta, *rep.areas, *rep.heights,
                                    mean_displacement(d, x0_mean), skewness(d, l, L)]))


TABLE_THETAS = tuple(t / 2 for t in range(-3, 10))


def table1(setup: RatchetSetup = RatchetSetup(), kappa0: float = 0.2748, thetas=TABLE_THETAS) -> list[dict]:
    """Flashing walk from 0 over one period, kappa = theta * kappa0 / 2."""
    rows = []
    for th in thetas:
        d = one_period_from_origin(setup, th * kappa0 / 2)
        rows.append(row_stats(th, d, 0.0, setup.l, setup.L))
    return rows


def table2(setup: RatchetSetup = RatchetSetup(), kappa0: float = 0.2748, thetas=TABLE_THETAS) -> list[dict]:
    """Same statistics, starting from the stationary law of the wrapped walk."""
    from .wrapped import stationary_flashing_run

    rows = []
    for th in thetas:
        run = stationary_flashing_run(setup.walk(th * kappa0 / 2), setup.sched)
        rows.append(row_stats(th, run.end, run.start.mean(), setup.l, setup.L))
    return rows


@dataclass
class SweepGrid:
    lambda_values: np.ndarray
    theta_values: np.ndarray
    mean_displacement: np.ndarray
    skewness: np.ndarray


def sweep(lambda_values, theta_values, kappa0_ref: float = 0.2748, setup: RatchetSetup = RatchetSetup(),
          workers: int = 1) -> SweepGrid:
    """Mean displacement and skewness on a lambda x theta grid (rows: lambda)."""
    lams = np.asarray(lambda_values, dtype=float)
    ths = np.asarray(theta_values, dtype=float)

    def cell(ij):
        i, j = ij
        d = one_period_from_origin(setup.with_(lam=float(lams[i])), ths[j] * kappa0_ref / 2)
        return d.mean(), skewness(d, setup.l, setup.L)

    idx = [(i, j) for i in range(len(lams)) for j in range(len(ths))]
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            res = list(ex.map(cell, idx))
    else:
        res = [cell(ij) for ij in idx]
    mean = np.array([r[0] for r in res]).reshape(len(lams), len(ths))
    skew = np.array([r[1] for r in res]).reshape(len(lams), len(ths))
    return SweepGrid(lams, ths, mean, skew)


def coarse_tv(walk: LatticeDistribution, ref: LatticeDistribution) -> float:
    """Total variation between a walk and a finer reference seen at the walk's resolution.

    The walk occupies one parity class, so its sites j carry the cells
    (j-1, j+1) (in walk units), which tile the line.  Reference mass is
    collected into those cells; a reference site sitting exactly on a cell
    boundary is split evenly between the two neighbours.
    """
    if walk.parity != "single" or ref.n % walk.n:
        raise ParameterError("need a single-parity walk and a reference scale that is a multiple of it")
    R = ref.n // walk.n
    r = int(walk.sites[np.argmax(walk.probs)]) % 2
    # cell k covers walk positions (r + 2k - 1, r + 2k + 1)
    num = ref.sites - R * (r - 1)
    k = num // (2 * R)
    edge = num % (2 * R) == 0
    kmin = min(int(k.min()) - 1, (walk.offset - r) // 2 - 1)
    kmax = max(int(k.max()), (walk.offset + len(walk.probs) - r) // 2 + 1)
    q = np.zeros(kmax - kmin + 1)
    np.add.at(q, k[~edge] - kmin, ref.probs[~edge])
    np.add.at(q, k[edge] - kmin, 0.5 * ref.probs[edge])
    np.add.at(q, k[edge] - 1 - kmin, 0.5 * ref.probs[edge])
    p = np.zeros_like(q)
    on = (walk.sites - r) % 2 == 0
    np.add.at(p, (walk.sites[on] - r) // 2 - kmin, walk.probs[on])
    return 0.5 * float(np.abs(p - q).sum())
