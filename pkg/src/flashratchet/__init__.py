"""Numerics for tilted and tilted-flashing Brownian ratchets.

Three cross-checking routes to the time-t law of the ratchet (exact random
walk propagation, Euler-Maruyama Monte Carlo, an explicit Fokker-Planck
scheme), the stationary analysis of the wrapped processes, and the biased
capital-dependent Parrondo games behind the random walks.
"""

__version__ = "0.1.0"

from .errors import ConvergenceError, NumericalError, ParameterError, RatchetError, StabilityError, TruncationError
from .potential import LangevinParams, RatchetParams, drift_mu, from_langevin, potential_M, sawtooth_V, tilted_potential
from .rw_approx import (
    FlashingSchedule,
    LatticeDistribution,
    ScaledWalkParams,
    propagate_flashing,
    propagate_ratchet,
    to_density,
)
