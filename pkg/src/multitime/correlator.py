"""Multi-time correlation functions in the extended space.

Interaction operators act on the system factor only and are applied
blockwise to extended-space vectors, so the auxiliary dimension never
enters a materialized superoperator.  Correlators can be evaluated either
by repeated propagator products (time domain) or through the propagator's
eigenmodes (spectral form); both give the same numbers and cross-validate
each other.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import List, Sequence, Tuple, Union

import numpy as np

from .influence import CouplingEigenbasis
from .propagator import ExtendedPropagator, SpectralDecomposition, _check_density


class Side(enum.Enum):
    """Which side of the density matrix a Hilbert-space operator acts on."""

    LEFT = "left"
    RIGHT = "right"


@dataclass(frozen=True)
class InteractionOp:
    """A system operator with a side tag (V rho for LEFT, rho V for RIGHT)."""

    matrix: np.ndarray
    side: Side

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex).copy()
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("interaction operator must be a square matrix")
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class PathwaySpec:
    """N+1 interaction operators separated by N integer step counts."""

    ops: Tuple[InteractionOp, ...]
    durations: Tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "ops", tuple(self.ops))
        object.__setattr__(self, "durations", tuple(int(n) for n in self.durations))
        if len(self.ops) != len(self.durations) + 1:
            raise ValueError("need exactly one more operator than durations")
        if any(n < 0 for n in self.durations):
            raise ValueError("durations must be nonnegative step counts")


def snap_to_steps(duration: float, delta: float, tol: float = 1e-9) -> int:
    """Convert a time in ps to an integer step count on the delta grid."""
    steps = round(duration / delta)
    if abs(duration - steps * delta) > tol * max(1.0, abs(duration)):
        raise ValueError(
            f"duration {duration} ps is not a multiple of delta = {delta} ps")
    return int(steps)


def lift(op: InteractionOp, eigenbasis: CouplingEigenbasis) -> np.ndarray:
    """Liouville matrix of the interaction in the coupling eigenbasis.

    LEFT gives (T V T^dagger) (x) 1 and RIGHT gives 1 (x) (T V T^dagger)^T;
    the extension to the auxiliary space stays implicit (see apply_lifted).
    """
    if op.dimension != eigenbasis.dimension:
        raise ValueError("operator dimension does not match the system")
    v_eig = eigenbasis.to_eigenbasis(op.matrix)
    ident = np.eye(op.dimension, dtype=complex)
    if op.side is Side.LEFT:
        return np.kron(v_eig, ident)
    return np.kron(ident, v_eig.T)


def apply_lifted(liouville_op: np.ndarray, vec: np.ndarray, chi: int) -> np.ndarray:
    """Apply a d^2 x d^2 Liouville operator to a length d^2*chi vector."""
    d2 = liouville_op.shape[0]
    return (liouville_op @ vec.reshape(d2, chi)).reshape(-1)


def _prepare(source, spec: PathwaySpec, rho0: np.ndarray):
    d = source.dimension
    rho0 = _check_density(rho0, d)
    basis = source.eigenbasis
    vec = source.initial_vector(basis.to_eigenbasis(rho0))
    lifted = [lift(op, basis) for op in spec.ops]
    return vec, lifted


def correlation_time_domain(ext: ExtendedPropagator, spec: PathwaySpec,
                            rho0: np.ndarray) -> complex:
    """Correlator by repeated propagator-vector products."""
    vec, lifted = _prepare(ext, spec, rho0)
    chi = ext.chi
    vec = apply_lifted(lifted[0], vec, chi)
    for op, n_steps in zip(lifted[1:], spec.durations):
        for _ in range(n_steps):
            vec = ext.matrix @ vec
        vec = apply_lifted(op, vec, chi)
    return complex(ext.trace_row @ vec)


def correlation_spectral(decomp: SpectralDecomposition, spec: PathwaySpec,
                         rho0: np.ndarray) -> complex:
    """Correlator through the eigenmode sum.

    Between interactions the vector is projected onto the left eigenvectors,
    scaled by q_k^n and rebuilt from the right ones, which keeps the cost
    quadratic in the extended dimension instead of exponential in the number
    of time intervals.
    """
    vec, lifted = _prepare(decomp, spec, rho0)
    chi = decomp.chi
    vec = apply_lifted(lifted[0], vec, chi)
    for op, n_steps in zip(lifted[1:], spec.durations):
        coeff = decomp.left.conj().T @ vec
        vec = decomp.right @ (decomp.power_factors(n_steps) * coeff)
        vec = apply_lifted(op, vec, chi)
    return complex(decomp.trace_row @ vec)


#: Side patterns (V1, V2, V3, V4) of the four third-order pathways.
PATHWAY_SIDES = {
    1: (Side.LEFT, Side.RIGHT, Side.RIGHT, Side.LEFT),
    2: (Side.RIGHT, Side.LEFT, Side.RIGHT, Side.LEFT),
    3: (Side.RIGHT, Side.RIGHT, Side.LEFT, Side.LEFT),
    4: (Side.LEFT, Side.LEFT, Side.LEFT, Side.LEFT),
}


def pathway_spec(pathway: int, dipole: np.ndarray,
                 steps: Sequence[int]) -> PathwaySpec:
    """Four-interaction pathway with the standard side pattern.

    ``steps`` holds the three interval step counts (coherence, waiting,
    detection).
    """
    if pathway not in PATHWAY_SIDES:
        raise ValueError("pathway index must be 1, 2, 3 or 4")
    if len(steps) != 3:
        raise ValueError("need three interval durations")
    ops = tuple(InteractionOp(dipole, side) for side in PATHWAY_SIDES[pathway])
    return PathwaySpec(ops=ops, durations=tuple(steps))


def response_pathway(decomp: SpectralDecomposition, pathway: int,
                     steps: Sequence[int], dipole: np.ndarray,
                     rho0: np.ndarray) -> complex:
    """Third-order response for one pathway at integer interval steps."""
    spec = pathway_spec(pathway, dipole, steps)
    return correlation_spectral(decomp, spec, rho0)
