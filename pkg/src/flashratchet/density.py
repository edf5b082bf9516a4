"""Piecewise-linear density curves shared by the lattice, Monte Carlo and stationary code."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class DensityCurve:
    """Density given by linear interpolation between nodes ``x`` (increasing); zero outside."""

    x: np.ndarray
    density: np.ndarray

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.density = np.asarray(self.density, dtype=float)
        if self.x.shape != self.density.shape:
            raise ValueError("x and density must have the same shape")

    def __call__(self, x):
        return np.interp(x, self.x, self.density, left=0.0, right=0.0)

    def integral(self) -> float:
        if len(self.x) < 2:
            return 0.0
        return float(np.sum(0.5 * (self.density[1:] + self.density[:-1]) * np.diff(self.x)))

    def cdf(self, x) -> np.ndarray:
        """Exact integral of the interpolant from the first node to ``x``."""
        xs, f = self.x, self.density
        seg = 0.5 * (f[1:] + f[:-1]) * np.diff(xs)
        cum = np.concatenate([[0.0], np.cumsum(seg)])
        x = np.asarray(x, dtype=float)
        i = np.clip(np.searchsorted(xs, x, side="right") - 1, 0, len(xs) - 2)
        h = xs[i + 1] - xs[i]
        t = np.clip(x - xs[i], 0.0, h)
        out = cum[i] + f[i] * t + 0.5 * (f[i + 1] - f[i]) * t * t / h
        out = np.where(x < xs[0], 0.0, out)
        return np.where(x >= xs[-1], cum[-1], out)

    def max_on(self, a: float, b: float) -> float:
        """Largest value of the interpolant on [a, b)."""
        inside = (self.x >= a) & (self.x < b)
        vals = [float(self(a))]
        if inside.any():
            vals.append(float(self.density[inside].max()))
        return max(vals)
