"""Wrapped processes: everything reduced mod L onto a circle.

Two stationary laws are computed here.

* The wrapped tilted ratchet has an explicit stationary density
  phi(x) = phi(0) e^{2M(x)} (1 - (1 - e^{-2M(L)}) I(x)/I(L)),
  I(x) = int_0^x e^{-2M}.  M is piecewise linear, so every integral needed
  (the density, normalization, masses and first moments) is assembled in
  closed form piece by piece, in a cancellation-free arrangement.

* The wrapped flashing walk is a Markov chain on the nL sites of the circle.
  Its one-period transition matrix is built by repeated squaring of the
  single-step matrices and its stationary vector found by power iteration.
  When nL and the number of steps per period are both even the period chain
  would split into two parity classes, so one extra ratchet step is appended
  at the end of the period.  Even then the period chain alternates between
  the classes (period 2), so the iteration runs on the lazy chain (I + P)/2,
  which has the same stationary vector.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .density import DensityCurve
from .errors import ConvergenceError, NumericalError, ParameterError
from .potential import RatchetParams
from .rw_approx import (
    FREE,
    RATCHET,
    FlashingSchedule,
    LatticeDistribution,
    ScaledWalkParams,
    flashing_segments,
    propagate_flashing,
)

EXP_LIMIT = 700.0
_SERIES_Z = 1e-2


# ---------------------------------------------------------------- analytic


def _e1(z):
    """expm1(z)/z."""
    z = np.asarray(z, dtype=float)
    safe = np.where(z == 0.0, 1.0, z)
    return np.where(z == 0.0, 1.0, np.expm1(safe) / safe)


def _h2(z):
    """(e^z - 1 - z)/z^2."""
    z = np.asarray(z, dtype=float)
    small = np.abs(z) < _SERIES_Z
    zs = np.where(small, 1.0, z)
    series = 1 / 2 + z * (1 / 6 + z * (1 / 24 + z * (1 / 120 + z * (1 / 720 + z / 5040))))
    return np.where(small, series, (np.expm1(zs) - zs) / (zs * zs))


def _g1(z):
    """(e^z (z - 1) + 1)/z^2."""
    z = np.asarray(z, dtype=float)
    small = np.abs(z) < _SERIES_Z
    zs = np.where(small, 1.0, z)
    series = 1 / 2 + z * (1 / 3 + z * (1 / 8 + z * (1 / 30 + z * (1 / 144 + z * (1 / 840 + z / 5760)))))
    return np.where(small, series, (zs * np.exp(zs) - np.expm1(zs)) / (zs * zs))


def _g1_shift(z):
    """(g1(z) - 1/2)/z."""
    z = np.asarray(z, dtype=float)
    small = np.abs(z) < _SERIES_Z
    zs = np.where(small, 1.0, z)
    series = 1 / 3 + z * (1 / 8 + z * (1 / 30 + z * (1 / 144 + z * (1 / 840 + z / 5760))))
    return np.where(small, series, (_g1(zs) - 0.5) / zs)


@dataclass
class AnalyticStationary:
    """Stationary density of the wrapped tilted ratchet on [0, L).

    The bracket form is rewritten as phi(x) = C e^{2M(x)} int_x^{x+L} e^{-2M},
    with M continued past L by M(y + L) = M(y) + M(L).  On piece i, with
    u = x - starts[i], a = slopes[i] and w = widths[i], the integral splits
    into the rest of piece i, the whole other piece and the start of the
    next copy of piece i:

        phi / C = (w - u) e1(-2a(w - u)) + E[i] e^{2au} + F expm1(2au)/(2a)

    where e1(z) = expm1(z)/z.  All three terms are nonnegative, so nothing
    cancels even when |M(L)| is large.
    """

    params: RatchetParams
    phi0: float
    scale: float
    starts: np.ndarray
    widths: np.ndarray
    slopes: np.ndarray
    E: np.ndarray
    F: float

    def _unnormalized(self, i: int, u):
        a, w = self.slopes[i], self.widths[i]
        rest = (w - u) * _e1(-2.0 * a * (w - u))
        z = 2.0 * a * u
        return rest + self.E[i] * np.exp(z) + self.F * u * _e1(z)

    def __call__(self, x):
        L = self.params.L
        x = np.asarray(x, dtype=float)
        y = np.mod(x, L)
        out = np.where(y < self.starts[1],
                       self._unnormalized(0, y - self.starts[0]),
                       self._unnormalized(1, y - self.starts[1]))
        out = self.scale * out
        return out if out.ndim else float(out)

    def _piece_integrals(self):
        """Mass and int u phi du over each piece, u measured from the piece start."""
        w, a = self.widths, self.slopes
        b, z = -2.0 * a * w, 2.0 * a * w
        mass = w * w * _h2(b) + self.E * w * _e1(z) + self.F * w * w * _h2(z)
        mom = (w ** 3 * (_h2(b) - _g1_shift(b)) + self.E * w * w * _g1(z)
               + self.F * w ** 3 * _g1_shift(z))
        return self.scale * mass, self.scale * mom

    def piece_masses(self) -> np.ndarray:
        """Mass on [0, alpha L) and on [alpha L, L)."""
        return self._piece_integrals()[0]

    def piece_first_moments(self) -> np.ndarray:
        """int x phi(x) dx over each piece."""
        mass, mom = self._piece_integrals()
        return self.starts * mass + mom

    def total(self) -> float:
        return float(self.piece_masses().sum())

    def mean(self) -> float:
        return float(self.piece_first_moments().sum())

    def skewness(self) -> float:
        """Mass on the steep segment minus mass on the shallow one."""
        m0, m1 = self.piece_masses()
        return float(m0 - m1)

    def curve(self, points_per_unit: int = 100) -> DensityCurve:
        L = self.params.L
        x = np.linspace(0.0, L, L * points_per_unit + 1)
        y = np.asarray(self(x[:-1]))
        y = np.append(y, self.scale * self._unnormalized(1, self.widths[1]))
        return DensityCurve(x, y)


def analytic_stationary(params: RatchetParams) -> AnalyticStationary:
    p = params
    starts = np.array([0.0, float(p.l)])
    widths = np.array([float(p.l), float(p.L - p.l)])
    slopes = np.array(p.drifts, dtype=float)
    Ml = slopes[0] * widths[0]
    ML = Ml + slopes[1] * widths[1]
    # exponents of E (M at this piece's start minus M at the other piece's next start) and of F
    expo = np.array([-2.0 * Ml, 2.0 * (Ml - ML)])
    worst = max(np.max(np.abs(expo)), 2.0 * abs(ML), 2.0 * np.max(np.abs(slopes * widths)))
    if worst > EXP_LIMIT:
        raise NumericalError(f"exponent {worst:.4g} exceeds {EXP_LIMIT}: exponentials overflow")
    other = widths[::-1] * _e1(-2.0 * slopes[::-1] * widths[::-1])
    E = np.exp(expo) * other
    st = AnalyticStationary(p, 0.0, 1.0, starts, widths, slopes, E, float(np.exp(-2.0 * ML)))
    st.scale = 1.0 / st.total()
    st.phi0 = st(0.0)
    return st


# ---------------------------------------------------------------- lattice


@dataclass
class WrappedDistribution:
    """Probabilities of the sites 0 .. nL-1 of the circle."""

    n: int
    L: int
    probs: np.ndarray

    def __post_init__(self):
        self.probs = np.asarray(self.probs, dtype=float)
        if self.probs.shape != (self.n * self.L,):
            raise ParameterError(f"expected {self.n * self.L} probabilities, got {self.probs.shape}")

    def total(self) -> float:
        return float(self.probs.sum())


def wrap(d: LatticeDistribution, L: int) -> WrappedDistribution:
    N = d.n * L
    out = np.zeros(N)
    np.add.at(out, np.mod(d.sites, N), d.probs)
    return WrappedDistribution(d.n, L, out)


def lift_stationary(d: WrappedDistribution, l: int) -> LatticeDistribution:
    """Put the circle on the line: sites >= nl move down by nL, giving support [-n(L-l), nl)."""
    nl = d.n * l
    nL = d.n * d.L
    probs = np.concatenate([d.probs[nl:], d.probs[:nl]])
    return LatticeDistribution(d.n, nl - nL, probs, "mixed")


@dataclass
class PeriodMatrix:
    """One-period transition matrix of the wrapped walk."""

    n: int
    L: int
    entries: np.ndarray
    steps_used: int
    extra_steps: int = 0


def one_step_matrix(n: int, L: int, up: np.ndarray) -> np.ndarray:
    """Cycle of nL sites; site j moves up with probability up[j]."""
    N = n * L
    P = np.zeros((N, N))
    j = np.arange(N)
    P[j, (j + 1) % N] += up
    P[j, (j - 1) % N] += 1.0 - up
    return P


def needs_parity_step(n: int, L: int, steps: int) -> bool:
    return (n * L) % 2 == 0 and steps % 2 == 0


def build_period_matrix(w: ScaledWalkParams, sched: FlashingSchedule,
                        total_steps: int | None = None, parity_fix: bool = True) -> PeriodMatrix:
    n, l, L = w.n, w.base.l, w.base.L
    s1, s2 = sched.phase_steps(n)
    if total_steps is None:
        total_steps = s1 + s2
    extra = 1 if parity_fix and needs_parity_step(n, L, total_steps) else 0
    p, p0, p1 = w.probs()
    N = n * L
    mats = {
        FREE: one_step_matrix(n, L, np.full(N, p)),
        RATCHET: one_step_matrix(n, L, np.where(np.arange(N) < n * l, p0, p1)),
    }
    out = np.eye(N)
    for phase, k in flashing_segments(s1, s2, total_steps) + [(RATCHET, extra)]:
        if k:
            out = out @ np.linalg.matrix_power(mats[phase], k)
    rows = out.sum(axis=1)
    if np.max(np.abs(rows - 1.0)) > 1e-10 or out.min() < -1e-15:
        raise NumericalError("period matrix lost row-stochasticity")
    # squaring leaves row sums off by ~1e-13; rescale so the fixed point is exact
    out = np.clip(out, 0.0, None) / rows[:, None]
    return PeriodMatrix(n, L, out, total_steps + extra, extra)


def stationary_vector(P: PeriodMatrix, tol: float = 1e-13, max_iter: int = 10 ** 6) -> WrappedDistribution:
    """Left fixed vector by power iteration on the lazy chain (I + P)/2, then one step of P itself."""
    Q = 0.5 * (P.entries + np.eye(len(P.entries)))
    pi = np.full(len(Q), 1.0 / len(Q))
    for _ in range(max_iter):
        nxt = pi @ Q
        nxt /= nxt.sum()
        change = np.abs(nxt - pi).sum()
        pi = nxt
        if change < tol:
            break
    else:
        raise ConvergenceError(f"power iteration did not settle within {max_iter} iterations")
    pi = pi @ P.entries
    pi /= pi.sum()
    resid = np.abs(pi @ P.entries - pi).sum()
    if resid > 1e-12:
        raise ConvergenceError(f"stationary residual {resid:.3g} exceeds 1e-12")
    return WrappedDistribution(P.n, P.L, np.clip(pi, 0.0, None) / np.clip(pi, 0.0, None).sum())


@dataclass
class StationaryRun:
    """Flashing walk started from its wrapped stationary law, run for one period."""

    matrix: PeriodMatrix
    stationary: WrappedDistribution
    start: LatticeDistribution
    end: LatticeDistribution
    snapshots: dict = field(default_factory=dict)

    @property
    def mean_displacement(self) -> float:
        return self.end.mean() - self.start.mean()


def stationary_flashing_run(w: ScaledWalkParams, sched: FlashingSchedule,
                            total_steps: int | None = None) -> StationaryRun:
    """Period matrix, its stationary vector lifted to the line, and one period of the unwrapped walk.

    ``snapshots`` holds the law at the end of the free phase as well.
    """
    P = build_period_matrix(w, sched, total_steps)
    pi = stationary_vector(P)
    start = lift_stationary(pi, w.base.l)
    s1, _ = sched.phase_steps(w.n)
    mid = propagate_flashing(start, w, sched, total_steps=min(s1, P.steps_used))
    end = propagate_flashing(start, w, sched, total_steps=P.steps_used - P.extra_steps,
                             extra_ratchet_steps=P.extra_steps)
    return StationaryRun(P, pi, start, end, {"start": start, "free_end": mid, "end": end})


def mean_displacement_from_stationarity(w: ScaledWalkParams, sched: FlashingSchedule,
                                        total_steps: int | None = None) -> float:
    return stationary_flashing_run(w, sched, total_steps).mean_displacement
