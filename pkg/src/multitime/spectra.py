"""Frequency-domain spectra evaluated analytically from the eigenmodes.

Half-sided Fourier transforms of exponential mode sums are Lorentzian
resolvents, so linear and two-dimensional spectra follow directly from the
propagator's eigendecomposition: no real-time propagation, and waiting
times enter only through powers of the eigenvalues.

Sign convention: the linear spectrum is the half-sided transform
``int_0^inf R(tau) exp(i w tau) dtau``, giving each mode the residue form
a_k / (gamma_k - i (w - w_k)); the two-dimensional formulas below carry the
two transforms' signs explicitly.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .correlator import (InteractionOp, PATHWAY_SIDES, PathwaySpec, Side,
                         apply_lifted, correlation_time_domain, lift)
from .errors import PoleOnAxisError
from .propagator import ExtendedPropagator, SpectralDecomposition, _check_density

#: (k, n) terms with combined weight below this (relative) are dropped.
WEIGHT_DROP = 1e-14


@dataclass(frozen=True)
class FrequencyGrid:
    """Uniform frequency grid (ps^-1)."""

    omega_min: float
    omega_max: float
    count: int

    def __post_init__(self):
        if self.count < 2:
            raise ValueError("grid needs at least two points")
        if not self.omega_max > self.omega_min:
            raise ValueError("omega_max must exceed omega_min")

    @property
    def values(self) -> np.ndarray:
        return np.linspace(self.omega_min, self.omega_max, self.count)


@dataclass(frozen=True)
class LinearSpectrum:
    grid: FrequencyGrid
    values: np.ndarray
    metadata: dict = field(default_factory=dict)


@dataclass(frozen=True)
class Spectrum2D:
    """Complex 2D spectrum; ``values[i_tau, i_t]`` over (grid_tau, grid_t)."""

    grid_t: FrequencyGrid
    grid_tau: FrequencyGrid
    pathway: int
    sigma: int
    waiting_steps: int
    values: np.ndarray
    metadata: dict = field(default_factory=dict)


@dataclass(frozen=True)
class TransitionWeights:
    """Per-eigenmode complex amplitudes entering a spectral sum."""

    values: np.ndarray


def pathway_sigma(pathway: int) -> int:
    """Sign of the coherence-time Fourier kernel: +1 for pathways 1 and 4."""
    if pathway not in PATHWAY_SIDES:
        raise ValueError("pathway index must be 1, 2, 3 or 4")
    return 1 if pathway in (1, 4) else -1


def _apply_to_modes(liouville_op: np.ndarray, modes: np.ndarray,
                    chi: int) -> np.ndarray:
    """Apply a d^2 Liouville operator to every column of a mode matrix."""
    d2 = liouville_op.shape[0]
    n = modes.shape[1]
    return (liouville_op @ modes.reshape(d2, chi * n)).reshape(d2 * chi, n)


def _floored_dampings(decomp: SpectralDecomposition, mask: np.ndarray,
                      gamma_floor: float) -> np.ndarray:
    if gamma_floor < 0:
        raise ValueError("gamma_floor must be >= 0")
    gammas = decomp.dampings[mask]
    if gamma_floor == 0.0 and np.any(gammas <= 0.0):
        raise PoleOnAxisError(
            "an undamped mode puts a pole on the real axis; "
            "pass a positive gamma_floor")
    return np.maximum(gammas, gamma_floor)


def transition_weights(decomp: SpectralDecomposition, v_detect: InteractionOp,
                       v_excite: InteractionOp, rho0: np.ndarray) -> TransitionWeights:
    """Amplitudes a_k = (trace . V_detect r_k) (l_k^H V_excite r_ini)."""
    basis = decomp.eigenbasis
    rho0 = _check_density(rho0, decomp.dimension)
    r_ini = decomp.initial_vector(basis.to_eigenbasis(rho0))
    detect = decomp.trace_row @ _apply_to_modes(lift(v_detect, basis),
                                                decomp.right, decomp.chi)
    excite = decomp.left.conj().T @ apply_lifted(lift(v_excite, basis),
                                                 r_ini, decomp.chi)
    return TransitionWeights(values=detect * excite)


def linear_spectrum(decomp: SpectralDecomposition, v_excite: InteractionOp,
                    v_detect: InteractionOp, rho0: np.ndarray,
                    grid: FrequencyGrid, gamma_floor: float = 1e-4,
                    metadata: Optional[dict] = None) -> LinearSpectrum:
    """Complex linear spectrum L(w) = sum_k a_k / (gamma_k - i (w - w_k)).

    Both interactions act from the left; ``gamma_floor`` regularizes
    undamped modes inside the denominators only.
    """
    weights = transition_weights(decomp, v_detect, v_excite, rho0).values
    mask = decomp.retained
    a = weights[mask]
    gammas = _floored_dampings(decomp, mask, gamma_floor)
    omegas = decomp.frequencies[mask]
    w = grid.values
    denom = gammas[:, None] - 1j * (w[None, :] - omegas[:, None])
    values = (a[:, None] / denom).sum(axis=0)
    meta = dict(metadata or {})
    meta.update(delta=decomp.delta, chi=decomp.chi, gamma_floor=gamma_floor)
    return LinearSpectrum(grid=grid, values=values, metadata=meta)


def mode_matrix(decomp: SpectralDecomposition, op: InteractionOp) -> np.ndarray:
    """Eigenbasis matrix elements l_k^H (V r_l) of an interaction operator."""
    lifted = lift(op, decomp.eigenbasis)
    return decomp.left.conj().T @ _apply_to_modes(lifted, decomp.right, decomp.chi)


def waiting_kernel(decomp: SpectralDecomposition, v_second: InteractionOp,
                   v_third: InteractionOp, waiting_steps: int) -> np.ndarray:
    """Kernel M(T)[k, n] = sum_l V3[k, l] q_l^{N_T} V2[l, n].

    Two dense products with a diagonal scaling in between; recomputing for a
    new waiting time costs the same as for T = 0.
    """
    if waiting_steps < 0:
        raise ValueError("waiting_steps must be >= 0")
    v2 = mode_matrix(decomp, v_second)
    v3 = mode_matrix(decomp, v_third)
    factors = decomp.power_factors(waiting_steps)
    return v3 @ (factors[:, None] * v2)


def lorentzian_rows(omegas: np.ndarray, gammas: np.ndarray, grid: np.ndarray,
                    sign: int = 1) -> np.ndarray:
    """Rows 1 / (i (sign * w - w_k) - gamma_k) over a frequency grid."""
    return 1.0 / (1j * (sign * grid[None, :] - omegas[:, None]) - gammas[:, None])


def accumulate_2d(weights: np.ndarray, omegas: np.ndarray, gammas: np.ndarray,
                  grid_t: np.ndarray, grid_tau: np.ndarray,
                  sigma: int) -> np.ndarray:
    """Contract (k, n) weights with the two Lorentzian factors.

    Returns values[i_tau, i_t]; the detection axis always carries sign +1,
    the coherence axis carries ``sigma``.
    """
    rows_t = lorentzian_rows(omegas, gammas, grid_t, sign=1)
    rows_tau = lorentzian_rows(omegas, gammas, grid_tau, sign=sigma)
    return (rows_t.T @ weights @ rows_tau).T


def spectrum_2d(decomp: SpectralDecomposition, pathway: int, waiting_steps: int,
                grid_t: FrequencyGrid, grid_tau: FrequencyGrid,
                rho0: np.ndarray, dipole: np.ndarray,
                gamma_floor: float = 1e-4,
                metadata: Optional[dict] = None) -> Spectrum2D:
    """Complex 2D spectrum of one pathway at a given waiting time.

    S(w_t, T, w_tau) = sum_{k,n} b_k M(T)[k, n] c_n
    / [(i (w_t - w_k) - gamma_k) (i (sigma w_tau - w_n) - gamma_n)], with the
    side pattern of the chosen pathway and sigma = +1 (pathways 1, 4) or -1
    (pathways 2, 3).  Negligible (k, n) weights are dropped before the grid
    accumulation.
    """
    sides = PATHWAY_SIDES[pathway] if pathway in PATHWAY_SIDES else None
    if sides is None:
        raise ValueError("pathway index must be 1, 2, 3 or 4")
    sigma = pathway_sigma(pathway)
    basis = decomp.eigenbasis
    rho0 = _check_density(rho0, decomp.dimension)
    ops = [InteractionOp(dipole, side) for side in sides]

    r_ini = decomp.initial_vector(basis.to_eigenbasis(rho0))
    b = decomp.trace_row @ _apply_to_modes(lift(ops[3], basis),
                                           decomp.right, decomp.chi)
    c = decomp.left.conj().T @ apply_lifted(lift(ops[0], basis),
                                            r_ini, decomp.chi)
    kernel = waiting_kernel(decomp, ops[1], ops[2], waiting_steps)

    mask = decomp.retained
    weights = (b[:, None] * kernel * c[None, :])[np.ix_(mask, mask)]
    peak = np.max(np.abs(weights))
    if peak > 0:
        weights = np.where(np.abs(weights) < WEIGHT_DROP * peak, 0.0, weights)
    gammas = _floored_dampings(decomp, mask, gamma_floor)
    omegas = decomp.frequencies[mask]
    values = accumulate_2d(weights, omegas, gammas, grid_t.values,
                           grid_tau.values, sigma)
    meta = dict(metadata or {})
    meta.update(delta=decomp.delta, chi=decomp.chi, pathway=pathway,
                sigma=sigma, waiting_steps=waiting_steps,
                waiting_time=waiting_steps * decomp.delta,
                gamma_floor=gamma_floor)
    return Spectrum2D(grid_t=grid_t, grid_tau=grid_tau, pathway=pathway,
                      sigma=sigma, waiting_steps=waiting_steps, values=values,
                      metadata=meta)


def time_domain_spectrum_oracle(ext: ExtendedPropagator, v_excite: InteractionOp,
                                v_detect: InteractionOp, rho0: np.ndarray,
                                grid: FrequencyGrid, t_max: float,
                                decay_warn: float = 1e-3) -> LinearSpectrum:
    """Linear spectrum by explicit propagation and a discrete transform.

    Cross-validation path: the two-point correlator is propagated on the
    step grid up to ``t_max`` and transformed by
    sum_n w_n R(n delta) exp(i w n delta) delta with trapezoidal end
    weights.  Warns when the correlator has not decayed at the boundary.
    """
    delta = ext.delta
    n_steps = int(round(t_max / delta))
    if n_steps < 2:
        raise ValueError("t_max must span at least two time steps")
    basis = ext.eigenbasis
    rho0 = _check_density(rho0, ext.dimension)
    vec = ext.initial_vector(basis.to_eigenbasis(rho0))
    vec = apply_lifted(lift(v_excite, basis), vec, ext.chi)
    # row @ (A (x) 1) equals A^T applied blockwise to the row
    detect_row = apply_lifted(lift(v_detect, basis).T, ext.trace_row, ext.chi)

    correlator = np.empty(n_steps + 1, dtype=complex)
    for n in range(n_steps + 1):
        correlator[n] = detect_row @ vec
        if n < n_steps:
            vec = ext.matrix @ vec

    peak = float(np.max(np.abs(correlator)))
    boundary = float(np.abs(correlator[-1]))
    if peak > 0 and boundary > decay_warn * peak:
        warnings.warn(
            f"correlator has not decayed at t_max = {t_max} ps "
            f"(boundary magnitude {boundary:.3e}, peak {peak:.3e})",
            RuntimeWarning)

    trapezoid = np.ones(n_steps + 1)
    trapezoid[0] = trapezoid[-1] = 0.5
    times = delta * np.arange(n_steps + 1)
    w = grid.values
    values = np.empty(w.size, dtype=complex)
    weighted = trapezoid * correlator * delta
    block = 512
    for start in range(0, w.size, block):
        phases = np.exp(1j * np.outer(w[start:start + block], times))
        values[start:start + block] = phases @ weighted
    meta = dict(delta=delta, chi=ext.chi, t_max=t_max,
                boundary_magnitude=boundary)
    return LinearSpectrum(grid=grid, values=values, metadata=meta)


def pathway_spec_for(pathway: int, dipole: np.ndarray,
                     steps) -> PathwaySpec:
    """PathwaySpec with the standard side pattern (re-export convenience)."""
    ops = tuple(InteractionOp(dipole, side) for side in PATHWAY_SIDES[pathway])
    return PathwaySpec(ops=ops, durations=tuple(steps))


def response_time_domain_2d(ext: ExtendedPropagator, pathway: int,
                            steps, dipole: np.ndarray,
                            rho0: np.ndarray) -> complex:
    """Time-domain value of one pathway; slow path used for cross-checks."""
    spec = pathway_spec_for(pathway, dipole, steps)
    return correlation_time_domain(ext, spec, rho0)
