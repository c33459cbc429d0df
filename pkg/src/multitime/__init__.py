"""Multi-time correlation functions and spectra of open quantum systems.

The bath's influence on the reduced dynamics is compressed into a uniform
matrix-product tensor, combined with the unitary system gate into a single
time-step propagator on an extended space, and eigendecomposed once; all
spectra then follow analytically from the eigenmodes.
"""

from .bath import (BathSpec, EtaTable, SpectralDensityModel, ZERO_TEMPERATURE,
                   bath_correlation, eta_table, reorganization_energy,
                   spectral_density_eval)
from .correlator import (InteractionOp, PATHWAY_SIDES, PathwaySpec, Side,
                         correlation_spectral, correlation_time_domain, lift,
                         pathway_spec, response_pathway, snap_to_steps)
from .influence import (CouplingEigenbasis, InfluencePairTable, LiouvilleIndex,
                        UniformInfluenceMPO, build_exact_automaton, compress_mpo,
                        contract_influence, exact_influence_path, influence_pair)
from .model import PRESETS, ThreeLevelParams, build_three_level, preset
from .pipeline import (BuildResult, Numerics, build_from_parts, build_preset,
                       build_three_level_pipeline)
from .propagator import (ExtendedPropagator, SpectralDecomposition, SystemModel,
                         TrotterGate, build_extended_propagator, eigendecompose,
                         evolve_density, trotter_gate)
from .spectra import (FrequencyGrid, LinearSpectrum, Spectrum2D,
                      TransitionWeights, linear_spectrum, spectrum_2d,
                      time_domain_spectrum_oracle, waiting_kernel)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
