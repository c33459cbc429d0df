"""Trotter gate, extended-space propagator and its eigendecomposition.

A single time step combines two unitary half-step maps of the system with
one application of the uniform influence tensor, giving a dense propagator
Q on the product of Liouville space and the auxiliary (bond) space.  All
extended-space objects live in the eigenbasis of the coupling operator;
density matrices cross that boundary inside ``evolve_density``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import List, Optional, Union

import numpy as np
import scipy.linalg as la
import scipy.sparse.csgraph as csgraph
import scipy.sparse as sp

from .errors import DefectiveDecompositionError
from .influence import CouplingEigenbasis, UniformInfluenceMPO

#: Eigenvalues of modulus below this are excluded from spectral sums.
EIGENVALUE_DROP = 1e-14


@dataclass(frozen=True)
class SystemModel:
    """System Hamiltonian and bath-coupling operator (original basis)."""

    hamiltonian: np.ndarray
    coupling: np.ndarray
    eigenbasis: CouplingEigenbasis

    def __post_init__(self):
        h = np.asarray(self.hamiltonian, dtype=complex).copy()
        s = np.asarray(self.coupling, dtype=complex).copy()
        if h.shape != s.shape or h.ndim != 2 or h.shape[0] != h.shape[1]:
            raise ValueError("hamiltonian and coupling must be equal square matrices")
        for name, m in (("hamiltonian", h), ("coupling", s)):
            if np.max(np.abs(m - m.conj().T)) > 1e-12:
                raise ValueError(f"{name} must be Hermitian to 1e-12")
        diag = self.eigenbasis.to_eigenbasis(s)
        if np.max(np.abs(diag - np.diag(np.diag(diag)))) > 1e-12:
            raise ValueError("eigenbasis does not diagonalize the coupling operator")
        h.flags.writeable = False
        s.flags.writeable = False
        object.__setattr__(self, "hamiltonian", h)
        object.__setattr__(self, "coupling", s)

    @classmethod
    def create(cls, hamiltonian, coupling) -> "SystemModel":
        basis = CouplingEigenbasis.from_coupling(np.asarray(coupling, dtype=complex))
        return cls(hamiltonian=np.asarray(hamiltonian, dtype=complex),
                   coupling=np.asarray(coupling, dtype=complex), eigenbasis=basis)

    @property
    def dimension(self) -> int:
        return self.hamiltonian.shape[0]


@dataclass(frozen=True)
class TrotterGate:
    """Symmetric-splitting gate tensor U[lam, mu, nu] for one time step.

    ``tensor[l, m, n] = H[l, m] * H[m, n]`` where H is the Liouville map of
    half a step of unitary system evolution; the middle index is where the
    influence tensor attaches.
    """

    delta: float
    tensor: np.ndarray

    @property
    def liouville_dim(self) -> int:
        return self.tensor.shape[0]


def trotter_gate(model: SystemModel, delta: float) -> TrotterGate:
    """Build the half-step-squared gate in the coupling eigenbasis."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    h_eig = model.eigenbasis.to_eigenbasis(model.hamiltonian)
    evals, evecs = np.linalg.eigh(h_eig)
    u_half = (evecs * np.exp(-0.5j * evals * delta)) @ evecs.conj().T
    half_map = np.kron(u_half, u_half.conj())
    tensor = np.einsum("lm,mn->lmn", half_map, half_map)
    return TrotterGate(delta=delta, tensor=tensor)


@dataclass
class ExtendedPropagator:
    """Dense one-step propagator on the system (x) auxiliary space."""

    delta: float
    dimension: int
    chi: int
    matrix: np.ndarray
    v_left: np.ndarray
    v_right: np.ndarray
    eigenbasis: CouplingEigenbasis
    provenance: dict = field(default_factory=dict)

    @property
    def size(self) -> int:
        return self.dimension ** 2 * self.chi

    @property
    def trace_row(self) -> np.ndarray:
        """Row vector realizing the trace: identity's Liouville vector (x) v_left."""
        ident = np.eye(self.dimension, dtype=complex).reshape(-1)
        return np.kron(ident, self.v_left)

    def initial_vector(self, rho0_eig: np.ndarray) -> np.ndarray:
        """Lift a (vectorized, eigenbasis) density matrix into the extended space."""
        return np.kron(rho0_eig.reshape(-1), self.v_right)


def build_extended_propagator(gate: TrotterGate, mpo: UniformInfluenceMPO,
                              eigenbasis: CouplingEigenbasis, *,
                              align_trace_row: bool = False) -> ExtendedPropagator:
    """Contract the gate's middle index with the influence tensor.

    ``Q[(lam, i), (nu, j)] = sum_mu U[lam, mu, nu] f[mu][i, j]``.  With
    ``align_trace_row`` the exact trace-preservation identity is restored by
    a rank-one correction that makes the lifted trace row an exact fixed
    point of Q; the correction magnitude is recorded in the provenance.
    """
    d2 = gate.liouville_dim
    if mpo.alphabet != d2:
        raise ValueError("gate and influence MPO have mismatched Liouville dimensions")
    d = int(round(np.sqrt(d2)))
    chi = mpo.chi
    f_dense = mpo.dense_site_tensor()
    q4 = np.einsum("lmn,mij->linj", gate.tensor, f_dense)
    q = np.ascontiguousarray(q4.reshape(d2 * chi, d2 * chi))
    ext = ExtendedPropagator(delta=gate.delta, dimension=d, chi=chi, matrix=q,
                             v_left=mpo.v_left.copy(), v_right=mpo.v_right.copy(),
                             eigenbasis=eigenbasis,
                             provenance=dict(mpo.provenance))
    t = ext.trace_row
    defect = t @ q - t
    drift = float(np.linalg.norm(defect) / np.linalg.norm(t))
    ext.provenance["trace_row_defect"] = drift
    if align_trace_row:
        q -= np.outer(t.conj() / (t @ t.conj()), defect)
        ext.provenance["trace_row_aligned"] = True
    return ext


@dataclass
class SpectralDecomposition:
    """Full non-Hermitian eigendecomposition of the extended propagator.

    Right (columns of ``right``) and left (columns of ``left``) eigenvectors
    are biorthonormal, left^H right = identity.  Rates follow the principal
    logarithm, lambda_k = log(q_k) / delta = -i omega_k - gamma_k; entries
    with |q_k| below ``EIGENVALUE_DROP`` are flagged non-retained and carry
    an infinite damping rate.
    """

    delta: float
    dimension: int
    chi: int
    eigenvalues: np.ndarray
    rates: np.ndarray
    frequencies: np.ndarray
    dampings: np.ndarray
    right: np.ndarray
    left: np.ndarray
    retained: np.ndarray
    residual_max: float
    biorthogonality_error: float
    v_left: np.ndarray
    v_right: np.ndarray
    eigenbasis: CouplingEigenbasis
    provenance: dict = field(default_factory=dict)

    @property
    def size(self) -> int:
        return self.dimension ** 2 * self.chi

    @property
    def trace_row(self) -> np.ndarray:
        ident = np.eye(self.dimension, dtype=complex).reshape(-1)
        return np.kron(ident, self.v_left)

    def initial_vector(self, rho0_eig: np.ndarray) -> np.ndarray:
        return np.kron(rho0_eig.reshape(-1), self.v_right)

    @property
    def max_growth_rate(self) -> float:
        """Largest Re(lambda_k) over retained modes (should be <= 0)."""
        return float(np.max(-self.dampings[self.retained]))

    def power_factors(self, n_steps: int) -> np.ndarray:
        """q_k ** n over all modes, with dropped modes contributing 0 for n > 0."""
        if n_steps == 0:
            return np.ones_like(self.eigenvalues)
        out = np.zeros_like(self.eigenvalues)
        out[self.retained] = self.eigenvalues[self.retained] ** n_steps
        return out


def _cluster_eigenvalues(w: np.ndarray, tol: float) -> List[np.ndarray]:
    n = w.size
    scale = max(1.0, float(np.max(np.abs(w))))
    dist = np.abs(w[:, None] - w[None, :]) <= tol * scale
    n_comp, labels = csgraph.connected_components(sp.csr_matrix(dist), directed=False)
    return [np.nonzero(labels == c)[0] for c in range(n_comp)]


def eigendecompose(ext: ExtendedPropagator, *, residual_target: float = 1e-8,
                   cluster_tol: float = 1e-9,
                   condition_limit: float = 1e10) -> SpectralDecomposition:
    """Diagonalize Q and biorthonormalize the left/right eigenvector pairs.

    Degenerate clusters are handled jointly: within each cluster the
    left/right overlap block is inverted, which fails loudly when its
    condition number exceeds ``condition_limit``.
    """
    q = ext.matrix
    w, vl, vr = la.eig(q, left=True, right=True)
    order = np.lexsort((w.imag, w.real))
    w, vl, vr = w[order], vl[:, order], vr[:, order]

    for cluster in _cluster_eigenvalues(w, cluster_tol):
        block = vl[:, cluster].conj().T @ vr[:, cluster]
        if cluster.size == 1:
            s = block[0, 0]
            if abs(s) < 1.0 / condition_limit:
                raise DefectiveDecompositionError(
                    f"eigenvalue {w[cluster[0]]:.6g} has near-orthogonal "
                    "left/right eigenvectors")
            vl[:, cluster] = vl[:, cluster] / np.conj(s)
            continue
        sing = np.linalg.svd(block, compute_uv=False)
        cond = sing[0] / sing[-1] if sing[-1] > 0 else np.inf
        if cond > condition_limit:
            raise DefectiveDecompositionError(
                f"near-defective eigenvalue cluster at {w[cluster[0]]:.6g} "
                f"(size {cluster.size}, overlap condition {cond:.3e})")
        vl[:, cluster] = vl[:, cluster] @ np.linalg.inv(block).conj().T

    overlap = vl.conj().T @ vr
    biorth_err = float(np.max(np.abs(overlap - np.eye(w.size))))
    resid = q @ vr - vr * w[None, :]
    residual_max = float(np.max(np.linalg.norm(resid, axis=0)
                                / np.linalg.norm(vr, axis=0)))
    if residual_max > residual_target:
        warnings.warn(f"eigendecomposition residual {residual_max:.3e} exceeds "
                      f"target {residual_target:.3e}", RuntimeWarning)

    retained = np.abs(w) >= EIGENVALUE_DROP
    if not np.all(retained):
        warnings.warn(f"{int(np.sum(~retained))} propagator eigenvalues of modulus "
                      "< 1e-14 are excluded from spectral sums", RuntimeWarning)
    rates = np.full(w.shape, np.nan + 0j, dtype=complex)
    rates[retained] = np.log(w[retained]) / ext.delta
    freqs = np.zeros(w.size)
    freqs[retained] = -np.imag(rates[retained])
    nyquist = np.pi / ext.delta
    freqs[retained & np.isclose(freqs, -nyquist)] = nyquist
    damps = np.full(w.size, np.inf)
    damps[retained] = -np.real(rates[retained])

    return SpectralDecomposition(
        delta=ext.delta, dimension=ext.dimension, chi=ext.chi,
        eigenvalues=w, rates=rates, frequencies=freqs, dampings=damps,
        right=vr, left=vl, retained=retained, residual_max=residual_max,
        biorthogonality_error=biorth_err, v_left=ext.v_left.copy(),
        v_right=ext.v_right.copy(), eigenbasis=ext.eigenbasis,
        provenance=dict(ext.provenance))


def _check_density(rho: np.ndarray, dim: int, tol: float = 1e-10) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (dim, dim):
        raise ValueError(f"density matrix must be {dim} x {dim}")
    if np.max(np.abs(rho - rho.conj().T)) > tol:
        raise ValueError("density matrix must be Hermitian")
    if abs(np.trace(rho) - 1.0) > tol:
        raise ValueError("density matrix must have unit trace")
    if np.min(np.linalg.eigvalsh(rho)) < -tol:
        raise ValueError("density matrix must be positive semidefinite")
    return rho


def _read_out(vec: np.ndarray, d: int, chi: int, v_left: np.ndarray) -> np.ndarray:
    """Contract the auxiliary index with v_left and unvectorize."""
    rho_vec = vec.reshape(d * d, chi) @ v_left
    return rho_vec.reshape(d, d)


def evolve_density(source: Union[ExtendedPropagator, SpectralDecomposition],
                   rho0: np.ndarray, n_steps: int,
                   method: str = "auto") -> np.ndarray:
    """Evolve a density matrix by n_steps, via eigenmodes or repeated products.

    ``method`` is one of 'spectral', 'power', or 'auto' (spectral when a
    decomposition is supplied).  Input and output are in the original system
    basis.
    """
    if n_steps < 0:
        raise ValueError("n_steps must be >= 0")
    d = source.dimension
    rho0 = _check_density(rho0, d)
    if n_steps == 0:
        return rho0.copy()
    basis = source.eigenbasis
    rho_eig = basis.to_eigenbasis(rho0)
    vec = source.initial_vector(rho_eig)

    is_decomp = isinstance(source, SpectralDecomposition)
    if method == "auto":
        method = "spectral" if is_decomp else "power"
    if method == "spectral":
        if not is_decomp:
            raise ValueError("spectral evolution needs a SpectralDecomposition")
        coeff = source.left.conj().T @ vec
        out = source.right @ (source.power_factors(n_steps) * coeff)
    elif method == "power":
        if is_decomp:
            raise ValueError("power evolution needs the ExtendedPropagator")
        out = vec
        for _ in range(n_steps):
            out = source.matrix @ out
    else:
        raise ValueError(f"unknown evolution method {method!r}")
    rho_eig_t = _read_out(out, d, source.chi, source.v_left)
    return basis.from_eigenbasis(rho_eig_t)
