"""Biased capital-dependent Parrondo games.

Game A is a simple random walk with up-probability p = 1/2 - eps.  Game B moves
up with p0 when capital mod L < l and with p1 otherwise.  Long-run rates are
exact: they come from the stationary law of capital mod L, not from
simulation.

Periodic patterns (e.g. "AABB") are handled on the time-periodic chain: the
one-play matrices are composed over one pattern period, the stationary law of
that product gives the capital distribution at the start of each period, and
the rate is the per-play drift averaged over the phases of the pattern.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NumericalError, ParameterError

MAX_PERIOD = 64
FAIR_TOL = 1e-10


@dataclass(frozen=True)
class GameSpec:
    p: float
    p0: float
    p1: float
    l: int
    L: int
    eps: float = 0.0
    rho: float = float("nan")

    def __post_init__(self):
        for name in ("p", "p0", "p1"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise ParameterError(f"{name}={v} is not a probability in (0, 1)")
        if not 1 <= self.l < self.L:
            raise ParameterError(f"need 1 <= l < L, got l={self.l}, L={self.L}")
        if self.L > MAX_PERIOD:
            raise ParameterError(f"L={self.L} exceeds the supported period {MAX_PERIOD}")
        if self.eps == 0.0:
            fair, resid = is_fair_B(self.p0, self.p1, self.l, self.L)
            if abs(resid) > 1e-12:
                raise ParameterError(f"unbiased game B violates detailed balance (residual {resid:.3g})")

    @classmethod
    def from_rho(cls, rho: float, l: int, L: int, eps: float = 0.0) -> "GameSpec":
        p0, p1 = game_b_probs(rho, l, L, eps)
        return cls(game_a_prob(eps), p0, p1, l, L, eps, rho)


@dataclass(frozen=True)
class PlaySchedule:
    """How games are chosen: ``single-A``, ``single-B``, ``mixture`` (weight c on A) or ``pattern``."""

    kind: str
    c: float = float("nan")
    pattern: str = ""

    def __post_init__(self):
        if self.kind not in ("single-A", "single-B", "mixture", "pattern"):
            raise ParameterError(f"unknown schedule kind {self.kind!r}")
        if self.kind == "mixture" and not 0.0 < self.c < 1.0:
            raise ParameterError(f"mixture weight must lie in (0, 1), got {self.c}")
        if self.kind == "pattern":
            if not self.pattern or set(self.pattern) - {"A", "B"}:
                raise ParameterError(f"pattern must be a nonempty word over A, B, got {self.pattern!r}")

    @classmethod
    def single(cls, game: str) -> "PlaySchedule":
        return cls(f"single-{game}")

    @classmethod
    def mixture(cls, c: float) -> "PlaySchedule":
        return cls("mixture", c=c)

    @classmethod
    def periodic(cls, word: str) -> "PlaySchedule":
        return cls("pattern", pattern=word)


def game_a_prob(eps: float) -> float:
    if not abs(eps) < 0.5:
        raise ParameterError(f"|eps| must be < 1/2, got {eps}")
    return 0.5 - eps


def game_b_probs(rho: float, l: int, L: int, eps: float = 0.0) -> tuple[float, float]:
    if not 0.0 < rho < 1.0:
        raise ParameterError(f"rho must lie in (0, 1), got {rho}")
    r = rho ** ((L - l) / l)
    p0 = r / (1.0 + r) - eps
    p1 = 1.0 / (1.0 + rho) - eps
    if not (0.0 < p0 < 1.0 and 0.0 < p1 < 1.0):
        raise ParameterError(f"game B probabilities out of range: p0={p0}, p1={p1}")
    return p0, p1


def is_fair_B(p0: float, p1: float, l: int, L: int) -> tuple[bool, float]:
    """Detailed-balance test for game B.

    Returns the log-residual l*log((1-p0)/p0) + (L-l)*log((1-p1)/p1), which
    is positive when the game loses, and whether it vanishes to 1e-10.
    """
    resid = l * math.log((1.0 - p0) / p0) + (L - l) * math.log((1.0 - p1) / p1)
    return abs(resid) < FAIR_TOL, resid


def _up_probs(spec: GameSpec, game: str, c: float = 0.0) -> np.ndarray:
    j = np.arange(spec.L)
    b = np.where(j < spec.l, spec.p0, spec.p1)
    if game == "A":
        return np.full(spec.L, spec.p)
    if game == "B":
        return b
    return c * spec.p + (1.0 - c) * b


def _transition(q: np.ndarray) -> np.ndarray:
    L = len(q)
    P = np.zeros((L, L))
    for j in range(L):
        P[j, (j + 1) % L] += q[j]
        P[j, (j - 1) % L] += 1.0 - q[j]
    return P


def stationary_distribution(P: np.ndarray) -> np.ndarray:
    """Solve pi (I - P) = 0, sum(pi) = 1 by replacing one balance equation."""
    N = len(P)
    A = np.eye(N) - P.T
    A[-1, :] = 1.0
    b = np.zeros(N)
    b[-1] = 1.0
    if np.linalg.cond(A) > 1e12:
        raise NumericalError("chain has no unique stationary distribution (not irreducible)")
    return np.linalg.solve(A, b)


def long_run_rate(spec: GameSpec, schedule: PlaySchedule) -> float:
    """Expected profit per play in the long run."""
    if schedule.kind == "pattern":
        qs = {g: _up_probs(spec, g) for g in "AB"}
        mats = {g: _transition(q) for g, q in qs.items()}
        Q = np.eye(spec.L)
        for g in schedule.pattern:
            Q = Q @ mats[g]
        pi = stationary_distribution(Q)
        total = 0.0
        for g in schedule.pattern:
            total += pi @ (2.0 * qs[g] - 1.0)
            pi = pi @ mats[g]
        return float(total / len(schedule.pattern))

    if schedule.kind == "single-A":
        q = _up_probs(spec, "A")
    elif schedule.kind == "single-B":
        q = _up_probs(spec, "B")
    else:
        q = _up_probs(spec, "mix", schedule.c)
    pi = stationary_distribution(_transition(q))
    return float(pi @ (2.0 * q - 1.0))
