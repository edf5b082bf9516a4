"""Sawtooth potential, tilted drift and the integrated drift M.

The shape parameter alpha = l/L is carried as an integer pair so that the
lattice period n*L and the kink position n*l stay exact downstream.  All
point functions accept scalars or numpy arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from .errors import ParameterError


@dataclass(frozen=True)
class RatchetParams:
    """Tilted Brownian ratchet with potential amplitude scale gamma and tilt kappa.

    ``lam`` is set only when the ratchet was built with :meth:`from_lambda`
    (gamma = lam*(1-alpha)/2); it records which parameterization was given.
    """

    l: int
    L: int
    gamma: float
    kappa: float = 0.0
    lam: Optional[float] = None

    def __post_init__(self):
        if int(self.l) != self.l or int(self.L) != self.L:
            raise ParameterError("l and L must be integers")
        if not 1 <= self.l < self.L:
            raise ParameterError(f"need 1 <= l < L, got l={self.l}, L={self.L}")
        if math.gcd(int(self.l), int(self.L)) != 1:
            raise ParameterError(f"alpha = {self.l}/{self.L} is not in lowest terms")
        if not self.gamma >= 0:
            raise ParameterError(f"gamma must be nonnegative, got {self.gamma}")
        if not math.isfinite(self.kappa):
            raise ParameterError("kappa must be finite")

    @classmethod
    def from_lambda(cls, l: int, L: int, lam: float, kappa: float = 0.0) -> "RatchetParams":
        if lam < 0:
            raise ParameterError(f"lambda must be nonnegative, got {lam}")
        gamma = lam * (L - l) / L / 2
        return cls(l, L, gamma, kappa, lam=lam)

    @property
    def alpha(self) -> Fraction:
        return Fraction(self.l, self.L)

    @property
    def is_asymmetric(self) -> bool:
        return 2 * self.l != self.L

    @property
    def is_ratchet(self) -> bool:
        # -gamma/alpha < kappa < gamma/(1-alpha)
        return -self.gamma * self.L / self.l < self.kappa < self.gamma * self.L / (self.L - self.l)

    @property
    def drifts(self) -> tuple[float, float]:
        """Drift on the steep segment [0, alpha L) and on the shallow one [alpha L, L)."""
        return (-(self.gamma * self.L / self.l) - self.kappa,
                self.gamma * self.L / (self.L - self.l) - self.kappa)

    def with_kappa(self, kappa: float) -> "RatchetParams":
        return RatchetParams(self.l, self.L, self.gamma, kappa, self.lam)


@dataclass(frozen=True)
class LangevinParams:
    """Physical parameters of eta*dx = (-beta V'(x) + F) dt + sqrt(2 eta kB T) db."""

    eta: float
    beta: float
    F: float
    kB_T: float

    def __post_init__(self):
        if self.eta <= 0 or self.kB_T <= 0 or self.beta < 0:
            raise ParameterError("eta and kB_T must be positive, beta nonnegative")


def _reduce(x, L):
    return np.mod(x, L)


def sawtooth_V(x, p: RatchetParams):
    """Periodic sawtooth with V(0) = 0 and peak value L at x = alpha L."""
    y = _reduce(np.asarray(x, dtype=float), p.L)
    v = np.where(y < p.l, y * p.L / p.l, (p.L - y) * p.L / (p.L - p.l))
    return v if v.ndim else float(v)


def sawtooth_slope(x, p: RatchetParams):
    """V'(x) with the kink at alpha L assigned to the shallow branch."""
    y = _reduce(np.asarray(x, dtype=float), p.L)
    s = np.where(y < p.l, p.L / p.l, -p.L / (p.L - p.l))
    return s if s.ndim else float(s)


def drift_mu(x, p: RatchetParams):
    y = _reduce(np.asarray(x, dtype=float), p.L)
    mu0, mu1 = p.drifts
    mu = np.where(y < p.l, mu0, mu1)
    return mu if mu.ndim else float(mu)


def potential_M(x, p: RatchetParams):
    """M(x) = -(gamma V(x) + kappa x), the integral of the drift from 0 to x in [0, L]."""
    x = np.asarray(x, dtype=float)
    v = np.where(x <= p.l, x * p.L / p.l, (p.L - x) * p.L / (p.L - p.l))
    m = -(p.gamma * v + p.kappa * x)
    return m if m.ndim else float(m)


def tilted_potential(x, p: RatchetParams):
    """gamma V(x) + kappa x; used for plot data only."""
    t = p.gamma * np.asarray(sawtooth_V(x, p)) + p.kappa * np.asarray(x, dtype=float)
    return t if t.ndim else float(t)


def from_langevin(lp: LangevinParams) -> tuple[float, float]:
    """Map Langevin parameters onto (gamma, kappa) of the unit-diffusion SDE."""
    two_kt = 2.0 * lp.kB_T
    return lp.beta / two_kt, -lp.F / two_kt
