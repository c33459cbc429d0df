"""Discrete influence functional and its uniform matrix-product form.

For a Gaussian bath the influence of the environment on a discrete path
mu_1 ... mu_N of Liouville indices factorizes into pairwise terms
I_k(mu, nu) built from the memory coefficients eta_k.  This module
evaluates that product exactly (brute force), realizes it as a weighted
history automaton with one repeated transition tensor per Liouville
symbol, and compresses that automaton to a small bond dimension by
balanced truncation of its reachability/observability Gram matrices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Union

import numpy as np
import scipy.sparse as sp

from .bath import EtaTable
from .errors import AutomatonSizeError, CompressionError

DEFAULT_STATE_CAP = 2_000_000


@dataclass(frozen=True)
class CouplingEigenbasis:
    """Eigenbasis of the system-bath coupling operator.

    ``basis_transform`` maps vector components from the original system
    basis into the eigenbasis (psi_eig = T psi); operators transform as
    T A T^dagger.
    """

    dimension: int
    eigenvalues: np.ndarray
    basis_transform: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.eigenvalues, dtype=float).copy()
        trans = np.asarray(self.basis_transform, dtype=complex).copy()
        d = self.dimension
        if vals.shape != (d,) or trans.shape != (d, d):
            raise ValueError("inconsistent eigenbasis dimensions")
        if np.max(np.abs(trans @ trans.conj().T - np.eye(d))) > 1e-12:
            raise ValueError("basis_transform is not unitary to 1e-12")
        vals.flags.writeable = False
        trans.flags.writeable = False
        object.__setattr__(self, "eigenvalues", vals)
        object.__setattr__(self, "basis_transform", trans)

    @classmethod
    def from_coupling(cls, coupling: np.ndarray) -> "CouplingEigenbasis":
        s = np.asarray(coupling, dtype=complex)
        if np.max(np.abs(s - s.conj().T)) > 1e-12:
            raise ValueError("coupling operator must be Hermitian to 1e-12")
        vals, vecs = np.linalg.eigh(s)
        return cls(dimension=s.shape[0], eigenvalues=vals,
                   basis_transform=vecs.conj().T)

    def to_eigenbasis(self, operator: np.ndarray) -> np.ndarray:
        t = self.basis_transform
        return t @ np.asarray(operator, dtype=complex) @ t.conj().T

    def from_eigenbasis(self, operator: np.ndarray) -> np.ndarray:
        t = self.basis_transform
        return t.conj().T @ np.asarray(operator, dtype=complex) @ t


@dataclass(frozen=True)
class LiouvilleIndex:
    """Pair (mu_L, mu_R) of coupling eigenstate labels, flattened as mu_L*d + mu_R."""

    left: int
    right: int
    dimension: int

    def __post_init__(self):
        d = self.dimension
        if not (0 <= self.left < d and 0 <= self.right < d):
            raise ValueError("Liouville index out of range")

    @property
    def flat(self) -> int:
        return self.left * self.dimension + self.right

    @classmethod
    def from_flat(cls, flat: int, dimension: int) -> "LiouvilleIndex":
        return cls(flat // dimension, flat % dimension, dimension)


@dataclass(frozen=True)
class InfluencePairTable:
    """Pairwise influence factors I_k(mu, nu) for lags k = 0 ... K.

    ``values[k, mu, nu] = exp(-(S_muL - S_muR) (eta_k S_nuL - eta_k* S_nuR))``
    in the coupling eigenbasis; entries with S_muL = S_muR are exactly 1.
    """

    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=complex).copy()
        if vals.ndim != 3 or vals.shape[1] != vals.shape[2]:
            raise ValueError("values must have shape (K+1, d^2, d^2)")
        if not np.all(np.isfinite(vals)):
            raise ValueError("influence factors must be finite")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    @property
    def memory_steps(self) -> int:
        return self.values.shape[0] - 1

    @property
    def liouville_dim(self) -> int:
        return self.values.shape[1]

    @classmethod
    def from_eta(cls, eta: EtaTable, basis: CouplingEigenbasis) -> "InfluencePairTable":
        s = basis.eigenvalues
        d = basis.dimension
        s_left = np.repeat(s, d)          # S_{mu_L} over flat mu
        s_right = np.tile(s, d)           # S_{mu_R}
        prefactor = s_left - s_right      # (d^2,)
        coeffs = eta.eta[:, None] * s_left[None, :] \
            - np.conj(eta.eta)[:, None] * s_right[None, :]   # (K+1, d^2) over nu
        vals = np.exp(-prefactor[None, :, None] * coeffs[:, None, :])
        return cls(values=vals)


def influence_pair(eta: EtaTable, basis: CouplingEigenbasis, k: int,
                   mu: LiouvilleIndex, nu: LiouvilleIndex) -> complex:
    """Single pairwise factor I_k(mu, nu)."""
    if not (0 <= k <= eta.memory_steps):
        raise IndexError(f"lag {k} outside memory range 0..{eta.memory_steps}")
    s = basis.eigenvalues
    e = eta.eta[k]
    pref = s[mu.left] - s[mu.right]
    return complex(np.exp(-pref * (e * s[nu.left] - np.conj(e) * s[nu.right])))


def exact_influence_path(table: InfluencePairTable, path: Sequence[int]) -> complex:
    """Brute-force influence of a path: prod_{i>=j} I_{i-j}(mu_i, mu_j).

    Lags beyond the table's memory contribute a factor 1.
    """
    vals = table.values
    k_max = table.memory_steps
    path = list(path)
    out = 1.0 + 0.0j
    for i, mu in enumerate(path):
        for lag in range(0, min(i, k_max) + 1):
            out *= vals[lag, mu, path[i - lag]]
    return complex(out)


@dataclass
class UniformInfluenceMPO:
    """Uniform matrix-product form of the influence functional.

    One square transition matrix per Liouville symbol plus boundary vectors;
    the influence of a path is ``v_left^T f[mu_N] ... f[mu_1] v_right``
    (transpose, not conjugate, on the left boundary).
    """

    chi: int
    alphabet: int
    site_matrices: List[Union[np.ndarray, sp.spmatrix]]
    v_left: np.ndarray
    v_right: np.ndarray
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.site_matrices) != self.alphabet:
            raise ValueError("need one site matrix per Liouville symbol")
        for f in self.site_matrices:
            if f.shape != (self.chi, self.chi):
                raise ValueError("all site matrices must be chi x chi")
        if self.v_left.shape != (self.chi,) or self.v_right.shape != (self.chi,):
            raise ValueError("boundary vectors must have length chi")

    @property
    def is_sparse(self) -> bool:
        return sp.issparse(self.site_matrices[0])

    def dense_site_tensor(self) -> np.ndarray:
        """Site matrices stacked as a dense (alphabet, chi, chi) array."""
        if self.is_sparse:
            return np.stack([np.asarray(f.todense()) for f in self.site_matrices])
        return np.stack(self.site_matrices)

    def contract(self, path: Sequence[int]) -> complex:
        """Influence of a single path (first index applied next to v_right)."""
        vec = self.v_right.astype(complex)
        for mu in path:
            vec = self.site_matrices[mu] @ vec
        return complex(np.dot(self.v_left, vec))

    def contract_many(self, paths: np.ndarray, block: int = 8192) -> np.ndarray:
        """Influence of many equal-length paths, shape (n_paths, length)."""
        paths = np.asarray(paths, dtype=np.int64)
        if paths.ndim != 2:
            raise ValueError("paths must be a 2D integer array")
        n = paths.shape[0]
        if self.is_sparse:
            return self._walk_many(paths)
        out = np.empty(n, dtype=complex)
        tensor = self.dense_site_tensor()
        for start in range(0, n, block):
            chunk = paths[start:start + block]
            state = np.broadcast_to(self.v_right[:, None],
                                    (self.chi, chunk.shape[0])).copy()
            for step in range(chunk.shape[1]):
                symbols = chunk[:, step]
                for mu in range(self.alphabet):
                    cols = symbols == mu
                    if np.any(cols):
                        state[:, cols] = tensor[mu] @ state[:, cols]
            out[start:start + chunk.shape[0]] = self.v_left @ state
        return out

    def _walk_many(self, paths: np.ndarray) -> np.ndarray:
        """Vectorized walk for automata whose columns hold a single transition."""
        next_state, weight = self._transition_tables()
        start = int(np.argmax(np.abs(self.v_right)))
        n = paths.shape[0]
        state = np.full(n, start, dtype=np.int64)
        amp = np.full(n, complex(self.v_right[start]), dtype=complex)
        for step in range(paths.shape[1]):
            symbols = paths[:, step]
            amp *= weight[symbols, state]
            state = next_state[symbols, state]
        return amp * self.v_left[state]

    def _transition_tables(self):
        tables = getattr(self, "_tables", None)
        if tables is None:
            nxt = np.empty((self.alphabet, self.chi), dtype=np.int64)
            wgt = np.empty((self.alphabet, self.chi), dtype=complex)
            for mu, f in enumerate(self.site_matrices):
                csc = f.tocsc()
                if np.any(np.diff(csc.indptr) != 1):
                    raise ValueError("walk requires exactly one transition per state")
                nxt[mu] = csc.indices
                wgt[mu] = csc.data
            tables = (nxt, wgt)
            self._tables = tables
        return tables


def _valid_history_layout(alphabet: int, memory_steps: int):
    """Offsets of the blocks of histories with exactly j stored symbols."""
    counts = [alphabet ** j for j in range(memory_steps + 1)]
    offsets = np.concatenate([[0], np.cumsum(counts)])
    return counts, offsets


def build_exact_automaton(table: InfluencePairTable,
                          memory_steps: Optional[int] = None,
                          state_cap: int = DEFAULT_STATE_CAP) -> UniformInfluenceMPO:
    """Exact weighted automaton over histories of the last K Liouville symbols.

    The auxiliary space is spanned by the histories (nu_1, ..., nu_j) with
    j <= K stored symbols (shorter histories stand for early times, i.e.
    unfilled slots contribute a factor 1).  Emitting mu from history h
    carries weight I_0(mu, mu) * prod_i I_i(mu, nu_i) and prepends mu to h,
    dropping the oldest symbol once j = K.  Contraction from the empty
    history reproduces ``exact_influence_path`` exactly.
    """
    k = table.memory_steps if memory_steps is None else memory_steps
    if k < 0 or k > table.memory_steps:
        raise ValueError("memory_steps outside the table's range")
    a = table.liouville_dim
    counts, offsets = _valid_history_layout(a, k)
    n_states = int(offsets[-1])
    if n_states > state_cap:
        raise AutomatonSizeError(
            f"exact automaton needs {n_states} states (> cap {state_cap}); "
            "reduce the memory depth or compress a smaller automaton")

    vals = table.values
    matrices = []
    for mu in range(a):
        src_all = []
        dst_all = []
        wgt_all = []
        base = complex(vals[0, mu, mu])
        for j in range(k + 1):
            m = np.arange(counts[j], dtype=np.int64)
            weights = np.full(counts[j], base, dtype=complex)
            rest = m.copy()
            # digit i (1-based from most significant) is the symbol at lag i
            for i in range(1, j + 1):
                digit = rest // (a ** (j - i))
                rest = rest % (a ** (j - i))
                weights *= vals[i, mu, digit]
            src = offsets[j] + m
            if j < k:
                dst = offsets[j + 1] + mu * (a ** j) + m
            elif k == 0:
                dst = m.copy()
            else:
                # full window: drop the oldest symbol (least significant digit)
                dst = offsets[k] + mu * (a ** (k - 1)) + m // a
            src_all.append(src)
            dst_all.append(dst)
            wgt_all.append(weights)
        src = np.concatenate(src_all)
        dst = np.concatenate(dst_all)
        wgt = np.concatenate(wgt_all)
        mat = sp.csc_matrix((wgt, (dst, src)), shape=(n_states, n_states))
        matrices.append(mat)

    v_right = np.zeros(n_states, dtype=complex)
    v_right[0] = 1.0
    v_left = np.ones(n_states, dtype=complex)
    return UniformInfluenceMPO(
        chi=n_states, alphabet=a, site_matrices=matrices,
        v_left=v_left, v_right=v_right,
        provenance={"method": "history-automaton", "memory_steps": k})


def contract_influence(mpo: UniformInfluenceMPO, path: Sequence[int]) -> complex:
    """Contraction v_left^T f[mu_N] ... f[mu_1] v_right."""
    return mpo.contract(path)


class BalancedFactors:
    """Reachability/observability factorization of a uniform influence MPO.

    Orthonormal bases of the subspaces reachable from v_right (forward） and
    from v_left (backward) are grown breadth-first over path length with the
    rank cap keeping weight-dominant directions.  The balancing data is a
    sampled block of the infinite path-to-path contraction matrix, built
    from per-word coefficient vectors in those bases: working with
    amplitudes rather than Gram matrices preserves full floating-point
    resolution of the small singular values that set the contraction error.
    ``truncate`` projects the site matrices onto the top singular subspace,
    discarding relative singular values below a threshold.
    """

    #: state counts up to this size use the exact (uncapped) factorization
    EXACT_STATE_LIMIT = 2048
    #: up to this size backward words are evaluated in the full state space
    SAMPLED_STATE_LIMIT = 24000

    def __init__(self, mpo: UniformInfluenceMPO, rank_cap: int,
                 growth_levels: Optional[int] = None,
                 level_width: int = 192, word_budget: int = 3500,
                 word_width: int = 65536, seed: int = 11):
        self.mpo = mpo
        k_hint = mpo.provenance.get("memory_steps")
        if growth_levels is None:
            growth_levels = k_hint if k_hint is not None else 10
        # words longer than the memory depth are scalar multiples of shorter
        # ones and add no balancing information
        word_levels = growth_levels if k_hint is None else min(max(growth_levels, 1),
                                                               max(k_hint, 1))
        self.rank_cap = rank_cap
        ops = mpo.site_matrices

        if mpo.chi <= self.EXACT_STATE_LIMIT:
            self._factor_exact(ops, word_levels, word_width, seed)
        elif mpo.chi <= self.SAMPLED_STATE_LIMIT:
            self._factor_sampled(ops, word_levels, word_budget, seed)
        else:
            self._factor_capped(ops, word_levels, rank_cap, level_width,
                                word_width, seed)

    def _factor_exact(self, ops, word_levels: int, word_width: int, seed: int):
        """Identity bases on both sides; exact up to word subsampling."""
        mpo = self.mpo
        dense = [np.asarray(f.todense()) if sp.issparse(f) else np.asarray(f)
                 for f in ops]
        dense_h = [f.conj().T for f in dense]
        coeff_f = _word_coefficients(dense, mpo.v_right,
                                     word_levels, word_width, seed)
        coeff_b = _word_coefficients(dense_h, np.conj(mpo.v_left),
                                     word_levels, word_width, seed + 1)
        rf = np.linalg.qr(coeff_f.conj().T, mode="r")
        rb = np.linalg.qr(coeff_b.conj().T, mode="r")
        u, sigma, wh = np.linalg.svd(rb @ rf.conj().T)
        self._left_raw = rb.conj().T @ u
        self._right_raw = rf.conj().T @ wh.conj().T
        self.singular_values = sigma

    def _forward_diagonal(self, ops, levels: int) -> np.ndarray:
        """Squared amplitude of every history: the exact (diagonal) forward Gram.

        Valid because the automaton is a weighted shift seeded by a basis
        vector, so path vectors are weighted basis states and words of length
        <= memory reach distinct states.
        """
        u_level = self.mpo.v_right.astype(complex)
        diag = np.abs(u_level) ** 2
        for _ in range(levels):
            u_level = sum(f @ u_level for f in ops)
            diag += np.abs(u_level) ** 2
        return np.sqrt(diag)

    def _factor_sampled(self, ops, word_levels: int, word_budget: int, seed: int):
        """Backward words evaluated in the full state space (no projection).

        Sampled suffix levels keep the per-length mass via sqrt-of-ratio
        scaling; the forward side is the exact diagonal Gram.
        """
        mpo = self.mpo
        if not mpo.is_sparse:
            raise ValueError("sampled factorization requires a sparse automaton")
        ops_h = [f.conj().T for f in ops]
        rng = np.random.default_rng(seed)
        a = mpo.alphabet
        level = np.conj(mpo.v_left).reshape(-1, 1)
        blocks = [level.copy()]
        used = 1
        for _ in range(word_levels):
            room = max(word_budget - used, 0)
            n_next = level.shape[1] * a
            if n_next <= room:
                level = np.concatenate([np.asarray(f @ level) for f in ops_h],
                                       axis=1)
            elif room == 0:
                break
            else:
                # sample (symbol, parent) pairs, i.e. a random word subset
                pick = np.sort(rng.choice(n_next, size=room, replace=False))
                parts = []
                for mu in range(a):
                    cols = pick[(pick // level.shape[1]) == mu] % level.shape[1]
                    if cols.size:
                        parts.append(np.asarray(ops_h[mu] @ level[:, cols]))
                level = np.concatenate(parts, axis=1) * np.sqrt(n_next / room)
            blocks.append(level)
            used += level.shape[1]
        backward = np.concatenate(blocks, axis=1)

        sqrt_m = self._forward_diagonal(ops, word_levels)
        cross = backward.conj().T * sqrt_m[None, :]
        u, sigma, wh = np.linalg.svd(cross, full_matrices=False)
        self._left_raw = backward @ u
        self._right_raw = sqrt_m[:, None] * wh.conj().T
        self.singular_values = sigma

    def _factor_capped(self, ops, word_levels: int, rank_cap: int,
                       level_width: int, word_width: int, seed: int):
        """Capped orthonormal backward basis; forward side exact diagonal.

        The backward functionals are smooth low-rank functions of the
        history, so a weight-ranked capped basis represents them well; the
        rank cap is the accuracy knob and the validation step reports what
        it achieved.
        """
        mpo = self.mpo
        if not mpo.is_sparse:
            raise ValueError("large dense MPOs are not supported; compress "
                             "the exact automaton instead")
        ops_h = [f.conj().T for f in ops]
        vb = _grow_weighted_basis(ops_h, np.conj(mpo.v_left), rank_cap,
                                  word_levels, level_width)
        reduced_b = [np.asarray(vb.conj().T @ (f @ vb)) for f in ops_h]
        coeff_b = _word_coefficients(reduced_b, vb.conj().T @ np.conj(mpo.v_left),
                                     word_levels, word_width, seed + 1)
        rb = np.linalg.qr(coeff_b.conj().T, mode="r")
        sqrt_m = self._forward_diagonal(ops, word_levels)
        cross = rb @ (vb.conj().T * sqrt_m[None, :])
        u, sigma, wh = np.linalg.svd(cross, full_matrices=False)
        self._left_raw = vb @ (rb.conj().T @ u)
        self._right_raw = sqrt_m[:, None] * wh.conj().T
        self.singular_values = sigma

    def rank_for(self, eps_bond: float, chi_max: int) -> int:
        sigma = self.singular_values
        if sigma.size == 0 or sigma[0] == 0.0:
            return 1
        keep = np.nonzero(sigma / sigma[0] >= eps_bond)[0]
        rank = int(keep[-1]) + 1 if keep.size else 1
        return max(1, min(rank, chi_max, sigma.size))

    def truncate(self, eps_bond: float, chi_max: int) -> UniformInfluenceMPO:
        rank = self.rank_for(eps_bond, chi_max)
        scale = 1.0 / np.sqrt(self.singular_values[:rank])
        p_left = self._left_raw[:, :rank] * scale
        p_right = self._right_raw[:, :rank] * scale
        mpo = self.mpo
        sites = [np.asarray(p_left.conj().T @ (f @ p_right)) for f in mpo.site_matrices]
        v_right = p_left.conj().T @ mpo.v_right
        v_left = p_right.T @ mpo.v_left
        prov = dict(mpo.provenance)
        prov.update(method="balanced-truncation", eps_bond=eps_bond,
                    chi_max=chi_max, parent_chi=mpo.chi,
                    singular_values=self.singular_values[:rank].copy())
        return UniformInfluenceMPO(chi=rank, alphabet=mpo.alphabet,
                                   site_matrices=sites, v_left=v_left,
                                   v_right=v_right, provenance=prov)


def _grow_weighted_basis(ops, seed: np.ndarray, cap: int, levels: int,
                         level_width: int, drop_tol: float = 1e-13) -> np.ndarray:
    """Capped orthonormal basis of the path vectors, breadth-first in length.

    The set of length-L path vectors is carried as a factor matrix (its Gram
    is factor @ factor^H); candidates op @ factor keep their amplitudes so
    that new directions enter the basis ranked by weight and the rank cap
    keeps dominant directions.  Deterministic: fixed candidate order and
    LAPACK factorizations only.
    """
    dim = seed.shape[0]
    seed = np.asarray(seed, dtype=complex)
    basis = (seed / np.linalg.norm(seed)).reshape(dim, 1)
    level_factor = seed.reshape(dim, 1)      # full-space, carries weights
    for _ in range(levels):
        if level_factor.shape[1] == 0 or basis.shape[1] >= cap:
            break
        cand = np.concatenate([np.asarray(f @ level_factor) for f in ops], axis=1)
        cand_scale = float(np.max(np.linalg.norm(cand, axis=0), initial=0.0))
        if cand_scale <= 0.0:
            break
        cand = cand / cand_scale
        room = cap - basis.shape[1]
        residual = cand - basis @ (basis.conj().T @ cand)
        residual -= basis @ (basis.conj().T @ residual)   # second pass
        # dominant residual directions via the (small) normal equations
        nm = residual.conj().T @ residual
        vals, vecs = np.linalg.eigh(0.5 * (nm + nm.conj().T))
        vals, vecs = vals[::-1], vecs[:, ::-1]
        keep = vals > max(drop_tol ** 2, vals[0] * 1e-26 if vals[0] > 0 else 0)
        keep[room:] = False
        if np.any(keep):
            new_dirs = residual @ (vecs[:, keep] / np.sqrt(vals[keep]))
            new_dirs -= basis @ (basis.conj().T @ new_dirs)
            # directions that collapse here were numerically in-span: drop them
            norms = np.linalg.norm(new_dirs, axis=0)
            genuine = norms > 1e-6
            if np.any(genuine):
                new_dirs = new_dirs[:, genuine] / norms[genuine]
                basis = np.concatenate([basis, new_dirs], axis=1)
        # dominant directions of the level Gram seed the next level
        coords = basis.conj().T @ cand
        lev_gram = coords @ coords.conj().T
        vals, vecs = np.linalg.eigh(0.5 * (lev_gram + lev_gram.conj().T))
        vals = np.clip(vals[::-1], 0.0, None)
        vecs = vecs[:, ::-1]
        if vals.size == 0 or vals[0] <= 0:
            break
        strong = vals > vals[0] * 1e-26
        strong[level_width:] = False
        level_factor = basis @ (vecs[:, strong] * np.sqrt(vals[strong]))
    q, r = np.linalg.qr(basis)   # exact orthonormality; triangular, so
    return q * np.sign(np.real(np.diag(r)))   # deterministic column phases


def _word_coefficients(reduced_ops, seed: np.ndarray, levels: int,
                       width: int, seed_int: int) -> np.ndarray:
    """Coefficient vectors of sampled path words, columns in basis coordinates.

    Short words are enumerated exhaustively; once a level exceeds ``width``
    columns, a seeded random subset is carried forward, scaled by the square
    root of the subsampling ratio so each length keeps its overall mass.
    Amplitudes are kept raw (their natural growth with word count provides
    the length weighting); a scale guard only kicks in near overflow.
    """
    rng = np.random.default_rng(seed_int)
    current = seed.reshape(-1, 1).astype(complex)
    blocks = [current.copy()]
    rescale = 1.0
    for _ in range(levels):
        cand = np.concatenate([f @ current for f in reduced_ops], axis=1)
        n_cols = cand.shape[1]
        if n_cols > width:
            idx = np.sort(rng.choice(n_cols, size=width, replace=False))
            cand = cand[:, idx] * np.sqrt(n_cols / width)
        scale = np.linalg.norm(cand)
        if not np.isfinite(scale) or scale <= 0:
            break
        if scale > 1e50:
            cand = cand / scale
            rescale = scale
        blocks.append(cand)
        current = cand
    if rescale != 1.0:
        blocks = [b / max(np.linalg.norm(b), 1e-300) for b in blocks]
    return np.concatenate(blocks, axis=1)


def _validation_paths(alphabet: int, length: int, exhaustive_cap: int,
                      n_random: int, seed: int) -> np.ndarray:
    total = alphabet ** length
    if total <= exhaustive_cap:
        grid = np.indices((alphabet,) * length).reshape(length, total).T
        return np.ascontiguousarray(grid)
    rng = np.random.default_rng(seed)
    return rng.integers(0, alphabet, size=(n_random, length))


def compress_mpo(mpo: UniformInfluenceMPO, eps_bond: float, chi_max: int, *,
                 rank_cap: Optional[int] = None,
                 growth_levels: Optional[int] = None,
                 validation_length: int = 8,
                 exhaustive_cap: int = 100_000,
                 n_random_paths: int = 10_000,
                 seed: int = 7,
                 factors: Optional[BalancedFactors] = None) -> UniformInfluenceMPO:
    """Compress a uniform influence MPO to bond dimension <= chi_max.

    Keeps singular values of the balanced Gram product down to ``eps_bond``
    relative to the largest.  The result is validated by contracting a set
    of paths (exhaustive when the path count is small, otherwise random)
    against the input; the worst relative error lands in the provenance and
    an error beyond 100 * eps_bond raises ``CompressionError``.
    """
    if not (0.0 < eps_bond < 1.0):
        raise ValueError("eps_bond must lie in (0, 1)")
    if chi_max < 1:
        raise ValueError("chi_max must be >= 1")
    if factors is None:
        if rank_cap is None:
            rank_cap = min(mpo.chi, max(int(1.6 * chi_max) + 32, chi_max + 48))
        factors = BalancedFactors(mpo, rank_cap, growth_levels)
    compressed = factors.truncate(eps_bond, chi_max)

    paths = _validation_paths(mpo.alphabet, validation_length,
                              exhaustive_cap, n_random_paths, seed)
    reference = mpo.contract_many(paths)
    approx = compressed.contract_many(paths)
    scale = np.maximum(np.abs(reference), 1e-30)
    worst = float(np.max(np.abs(approx - reference) / scale))
    compressed.provenance.update(
        validation_error=worst, validation_paths=int(paths.shape[0]),
        validation_length=validation_length)
    if worst > 100.0 * eps_bond:
        raise CompressionError(
            f"compression validation failed: worst relative contraction error "
            f"{worst:.3e} exceeds 100 * eps_bond = {100 * eps_bond:.3e} "
            f"(chi = {compressed.chi}); raise chi_max or eps_bond")
    return compressed
