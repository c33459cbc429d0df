"""Three-level benchmark system and its named parameter regimes.

Ground state |0> plus two excited states |1>, |2> that couple to the bath
with opposite sign; the dipole operator connects |0> and |2>.  Excited-state
energies carry the bath reorganization energy on top of the bare energy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .bath import BathSpec, SpectralDensityModel, ZERO_TEMPERATURE
from .correlator import InteractionOp, Side
from .propagator import SystemModel


@dataclass(frozen=True)
class ThreeLevelParams:
    """Physical parameters (ps^-1 for energies, ps for the time step).

    ``temperature`` is 1/beta in ps^-1 (0 means the zero-temperature bath);
    ``lambda_reorg`` pins the dimensionless bath coupling through
    lambda = 2 * alpha * omega_c.
    """

    lambda_reorg: float
    omega: float
    epsilon: float = 0.0
    omega_c: float = 3.04
    temperature: float = 13.0
    delta: float = 0.025

    def __post_init__(self):
        if self.lambda_reorg < 0:
            raise ValueError("lambda_reorg must be >= 0")
        if self.omega_c <= 0 or self.delta <= 0 or self.temperature < 0:
            raise ValueError("omega_c and delta must be positive, temperature >= 0")

    @property
    def coupling_alpha(self) -> float:
        return self.lambda_reorg / (2.0 * self.omega_c)

    @property
    def beta(self) -> float:
        return ZERO_TEMPERATURE if self.temperature == 0 else 1.0 / self.temperature

    @classmethod
    def from_alpha(cls, coupling_alpha: float, omega: float, **kwargs):
        omega_c = kwargs.pop("omega_c", 3.04)
        return cls(lambda_reorg=2.0 * coupling_alpha * omega_c, omega=omega,
                   omega_c=omega_c, **kwargs)


PRESETS = {
    "weak": ThreeLevelParams(lambda_reorg=0.03, omega=2.0),
    "intermediate": ThreeLevelParams(lambda_reorg=0.6, omega=2.0),
    "strong": ThreeLevelParams(lambda_reorg=2.4, omega=0.2),
}


def preset(name: str) -> ThreeLevelParams:
    """Named coupling regimes: weak, intermediate, strong."""
    try:
        return PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")


def build_three_level(params: ThreeLevelParams
                      ) -> Tuple[SystemModel, InteractionOp, np.ndarray, BathSpec]:
    """System, dipole operator, initial state and bath for the benchmark model."""
    e = params.epsilon + params.lambda_reorg
    hamiltonian = np.array([[0.0, 0.0, 0.0],
                            [0.0, e, params.omega],
                            [0.0, params.omega, e]], dtype=complex)
    coupling = np.diag([0.0, 1.0, -1.0]).astype(complex)
    dipole = np.zeros((3, 3), dtype=complex)
    dipole[0, 2] = dipole[2, 0] = 1.0
    rho0 = np.zeros((3, 3), dtype=complex)
    rho0[0, 0] = 1.0

    system = SystemModel.create(hamiltonian, coupling)
    density = SpectralDensityModel.ohmic_exponential(params.coupling_alpha,
                                                     params.omega_c)
    bath = BathSpec(density=density, inverse_temperature_beta=params.beta)
    return system, InteractionOp(dipole, Side.LEFT), rho0, bath
