"""End-to-end build: bath coefficients, influence MPO, propagator, eigenmodes."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .bath import BathSpec, EtaTable, eta_table
from .influence import (BalancedFactors, InfluencePairTable, UniformInfluenceMPO,
                        build_exact_automaton, compress_mpo)
from .model import ThreeLevelParams, build_three_level, preset
from .propagator import (ExtendedPropagator, SpectralDecomposition, SystemModel,
                         build_extended_propagator, eigendecompose, trotter_gate)


@dataclass(frozen=True)
class Numerics:
    """Discretization and compression controls for a propagator build."""

    delta: float = 0.025
    memory_steps: int = 5
    eps_bond: float = 1e-9
    chi_max: int = 160
    gamma_floor: float = 1e-4
    rank_cap: Optional[int] = None
    growth_levels: Optional[int] = None
    align_trace_row: bool = True


@dataclass
class BuildResult:
    """Everything a spectra or correlator call needs, plus stage timings."""

    system: SystemModel
    dipole_matrix: np.ndarray
    rho0: np.ndarray
    bath: BathSpec
    eta: EtaTable
    mpo: UniformInfluenceMPO
    ext: ExtendedPropagator
    decomposition: SpectralDecomposition
    numerics: Numerics
    timings: dict = field(default_factory=dict)

    @property
    def chi(self) -> int:
        return self.mpo.chi


def build_from_parts(system: SystemModel, bath: BathSpec, numerics: Numerics,
                     dipole_matrix: Optional[np.ndarray] = None,
                     rho0: Optional[np.ndarray] = None) -> BuildResult:
    """Run the full build for an arbitrary system/bath pair."""
    timings = {}
    t0 = time.perf_counter()
    eta = eta_table(bath, numerics.delta, memory_steps=numerics.memory_steps)
    timings["eta_table"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    pair_table = InfluencePairTable.from_eta(eta, system.eigenbasis)
    automaton = build_exact_automaton(pair_table)
    timings["automaton"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    mpo = compress_mpo(automaton, numerics.eps_bond, numerics.chi_max,
                       rank_cap=numerics.rank_cap,
                       growth_levels=numerics.growth_levels)
    timings["compress"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    gate = trotter_gate(system, numerics.delta)
    ext = build_extended_propagator(gate, mpo, system.eigenbasis,
                                    align_trace_row=numerics.align_trace_row)
    timings["assemble"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    decomposition = eigendecompose(ext)
    timings["eigendecompose"] = time.perf_counter() - t0
    timings["propagator_total"] = sum(timings.values())

    d = system.dimension
    if dipole_matrix is None:
        dipole_matrix = np.eye(d, dtype=complex)
    if rho0 is None:
        rho0 = np.eye(d, dtype=complex) / d
    return BuildResult(system=system, dipole_matrix=np.asarray(dipole_matrix),
                       rho0=np.asarray(rho0), bath=bath, eta=eta, mpo=mpo,
                       ext=ext, decomposition=decomposition, numerics=numerics,
                       timings=timings)


def build_three_level_pipeline(params: ThreeLevelParams,
                               numerics: Optional[Numerics] = None) -> BuildResult:
    """Build the benchmark three-level model end to end."""
    if numerics is None:
        numerics = Numerics(delta=params.delta)
    system, dipole, rho0, bath = build_three_level(params)
    return build_from_parts(system, bath, numerics,
                            dipole_matrix=dipole.matrix, rho0=rho0)


def build_preset(name: str, numerics: Optional[Numerics] = None) -> BuildResult:
    return build_three_level_pipeline(preset(name), numerics)
