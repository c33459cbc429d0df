"""Bath spectral densities, correlation functions and discretized memory coefficients.

All frequencies are angular frequencies in ps^-1, all times in ps
(hbar = k_B = 1).  A bosonic bath linearly coupled to the system is fully
characterized by its spectral density J(w) and inverse temperature beta;
the time-step discretization of its correlation function produces the
complex coefficients eta_k that feed the influence functional.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import integrate

from .errors import MemoryTailError, QuadratureError

#: Sentinel for a zero-temperature bath (beta -> infinity, coth -> 1).
ZERO_TEMPERATURE = math.inf

OHMIC_EXPONENTIAL = "ohmic_exponential"
TABULATED = "tabulated"

_QUAD_LIMIT = 500


def _coth(x):
    """coth(x) for x > 0, with a series branch for small arguments."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < 1e-4
    safe_small = np.where(small, np.where(x == 0, np.inf, x), 1.0)
    safe_large = np.where(small, 1.0, x)
    with np.errstate(divide="ignore"):
        out = np.where(small, 1.0 / safe_small + x / 3.0, 1.0 / np.tanh(safe_large))
    return out


@dataclass(frozen=True)
class SpectralDensityModel:
    """Spectral density J(w) of the bath.

    Two kinds are supported: an Ohmic density with exponential cutoff,
    J(w) = 2 * alpha * w * exp(-w / omega_c), and a tabulated density that
    is linearly interpolated between samples (zero outside the table).
    """

    kind: str
    coupling_alpha: float = 0.0
    cutoff_omega_c: float = 1.0
    table: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.kind not in (OHMIC_EXPONENTIAL, TABULATED):
            raise ValueError(f"unknown spectral density kind: {self.kind!r}")
        if self.kind == OHMIC_EXPONENTIAL:
            if self.coupling_alpha < 0:
                raise ValueError("coupling_alpha must be >= 0")
            if self.cutoff_omega_c <= 0:
                raise ValueError("cutoff_omega_c must be > 0")
        else:
            tab = np.asarray(self.table, dtype=float)
            if tab.ndim != 2 or tab.shape[1] != 2 or tab.shape[0] < 2:
                raise ValueError("table must be an (n, 2) array of (omega, J)")
            if np.any(np.diff(tab[:, 0]) <= 0):
                raise ValueError("table frequencies must be strictly increasing")
            if np.any(tab[:, 0] < 0) or np.any(tab[:, 1] < 0):
                raise ValueError("table entries must be nonnegative")
            tab.flags.writeable = False
            object.__setattr__(self, "table", tab)

    @classmethod
    def ohmic_exponential(cls, coupling_alpha: float, cutoff_omega_c: float):
        return cls(OHMIC_EXPONENTIAL, coupling_alpha, cutoff_omega_c)

    @classmethod
    def tabulated(cls, omegas, values):
        tab = np.column_stack([np.asarray(omegas, float), np.asarray(values, float)])
        return cls(TABULATED, table=tab)

    @property
    def omega_max(self) -> float:
        """Upper end of the frequency support used for quadrature."""
        if self.kind == TABULATED:
            return float(self.table[-1, 0])
        return self.cutoff_omega_c * 40.0


def spectral_density_eval(model: SpectralDensityModel, omega):
    """Evaluate J(omega); omega may be a scalar or an array, all >= 0."""
    w = np.asarray(omega, dtype=float)
    if np.any(w < 0):
        raise ValueError("spectral density is defined for omega >= 0")
    if model.kind == OHMIC_EXPONENTIAL:
        out = 2.0 * model.coupling_alpha * w * np.exp(-w / model.cutoff_omega_c)
    else:
        out = np.interp(w, model.table[:, 0], model.table[:, 1], left=0.0, right=0.0)
    if np.isscalar(omega):
        return float(out)
    return out


def _density_over_omega(model: SpectralDensityModel, w: float) -> float:
    """J(w)/w with the w -> 0 limit taken analytically where it exists."""
    if model.kind == OHMIC_EXPONENTIAL:
        return 2.0 * model.coupling_alpha * math.exp(-w / model.cutoff_omega_c)
    tab = model.table
    if w <= tab[0, 0]:
        if tab[0, 0] == 0.0 and tab[0, 1] == 0.0:
            slope = tab[1, 1] / tab[1, 0]
            return slope
        return math.inf if w == 0.0 else spectral_density_eval(model, w) / w
    return spectral_density_eval(model, w) / w


def reorganization_energy(model: SpectralDensityModel) -> float:
    """Bath reorganization energy, the integral of J(w)/w over w > 0.

    Exactly 2 * alpha * omega_c for the Ohmic-exponential density; for a
    tabulated density the piecewise-linear interpolant is integrated in
    closed form per segment.
    """
    if model.kind == OHMIC_EXPONENTIAL:
        return 2.0 * model.coupling_alpha * model.cutoff_omega_c
    tab = model.table
    total = 0.0
    for (w1, j1), (w2, j2) in zip(tab[:-1], tab[1:]):
        # J linear on [w1, w2]: J = a + b*w, so J/w integrates to a*log + b*dw
        b = (j2 - j1) / (w2 - w1)
        a = j1 - b * w1
        if w1 == 0.0:
            if a != 0.0:
                raise QuadratureError(
                    "J(0) > 0 makes the reorganization integral divergent "
                    f"(first table sample J(0) = {a:g})")
            total += b * (w2 - w1)
        else:
            total += a * math.log(w2 / w1) + b * (w2 - w1)
    return total


@dataclass(frozen=True)
class BathSpec:
    """A bath: spectral density plus inverse temperature beta (ps).

    ``beta = ZERO_TEMPERATURE`` (i.e. ``math.inf``) selects the
    zero-temperature bath, for which coth(beta*w/2) is exactly 1.
    """

    density: SpectralDensityModel
    inverse_temperature_beta: float

    def __post_init__(self):
        if not (self.inverse_temperature_beta > 0):
            raise ValueError("beta must be positive (use ZERO_TEMPERATURE for T = 0)")

    @property
    def is_zero_temperature(self) -> bool:
        return math.isinf(self.inverse_temperature_beta)

    @property
    def quad_omega_max(self) -> float:
        """Quadrature window [0, W]; beyond W the integrands are negligible."""
        if self.density.kind == TABULATED:
            return self.density.omega_max
        beta = self.inverse_temperature_beta
        wc = self.density.cutoff_omega_c
        stretch = 40.0 if math.isinf(beta) else max(40.0, 10.0 + 5.0 / (beta * wc))
        return wc * stretch

    def thermal_weight(self, omega):
        """coth(beta * omega / 2), or 1 at zero temperature."""
        if self.is_zero_temperature:
            return np.ones_like(np.asarray(omega, dtype=float))
        return _coth(0.5 * self.inverse_temperature_beta * np.asarray(omega, float))

    def thermal_density(self, w: float) -> float:
        """J(w) coth(beta w / 2), regularized through J(w)/w near w = 0.

        The coth pole is removable for densities vanishing linearly at zero
        frequency; the product is evaluated by series below beta*w/2 = 1e-4.
        """
        if self.is_zero_temperature:
            return float(spectral_density_eval(self.density, w))
        x = 0.5 * self.inverse_temperature_beta * w
        if x < 1e-4:
            series = 1.0 + x * x / 3.0 - x ** 4 / 45.0
            return _density_over_omega(self.density, w) \
                * (2.0 / self.inverse_temperature_beta) * series
        return float(spectral_density_eval(self.density, w)) / math.tanh(x)


def _quad(f, a, b, *, abs_tol, weight=None, wvar=None, points=None):
    """scipy.integrate.quad with failure promoted to QuadratureError."""
    kwargs = dict(epsabs=abs_tol, epsrel=1e-11, limit=_QUAD_LIMIT, full_output=1)
    if weight is not None:
        kwargs.update(weight=weight, wvar=wvar, maxp1=100)
    elif points is not None:
        kwargs.update(points=points)
    out = integrate.quad(f, a, b, **kwargs)
    value, abserr = out[0], out[1]
    if len(out) > 3:  # explanation string present -> warning raised
        raise QuadratureError(
            f"quadrature did not converge (achieved abs error {abserr:.3e}, "
            f"requested {abs_tol:.3e}): {out[3]}")
    return value


def bath_correlation(spec: BathSpec, t: float, *, abs_tol: float = 1e-10) -> complex:
    """Bath correlation function alpha(t) by adaptive quadrature.

    alpha(t) = int_0^inf (coth(beta w / 2) cos(w t) - i sin(w t)) J(w) dw,
    with alpha(-t) = conj(alpha(t)) for negative arguments.
    """
    t = float(t)
    if t < 0:
        return np.conj(bath_correlation(spec, -t, abs_tol=abs_tol))
    dens = spec.density
    w_max = spec.quad_omega_max
    knots = None
    if dens.kind == TABULATED:
        knots = [float(w) for w in dens.table[:, 0] if 0.0 < w < w_max]

    def j_coth(w):
        return spec.thermal_density(w)

    def j_plain(w):
        return spectral_density_eval(dens, w)

    if t == 0.0:
        re = _quad(j_coth, 0.0, w_max, abs_tol=abs_tol, points=knots)
        return complex(re, 0.0)
    re = _quad(j_coth, 0.0, w_max, abs_tol=abs_tol, weight="cos", wvar=t)
    im = -_quad(j_plain, 0.0, w_max, abs_tol=abs_tol, weight="sin", wvar=t)
    return complex(re, im)


@dataclass(frozen=True)
class EtaTable:
    """Discretized memory coefficients eta_0 ... eta_K for time step delta.

    eta_0 integrates alpha(t - s) over the triangle 0 < s < t < delta and
    eta_k (k > 0) over the cell [k*delta, (k+1)*delta] x [0, delta].
    ``tail_bound`` is |eta_K| / max_k |eta_k|.
    """

    delta: float
    memory_steps: int
    eta: np.ndarray
    tail_bound: float = field(default=0.0)

    def __post_init__(self):
        if self.delta <= 0:
            raise ValueError("delta must be positive")
        arr = np.asarray(self.eta, dtype=complex)
        if arr.shape != (self.memory_steps + 1,):
            raise ValueError("eta must have length memory_steps + 1")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "eta", arr)
        scale = float(np.max(np.abs(arr)))
        tail = float(np.abs(arr[-1]) / scale) if scale > 0 else 0.0
        object.__setattr__(self, "tail_bound", tail)


def _eta_entry(spec: BathSpec, delta: float, k: int, abs_tol: float) -> complex:
    """One memory coefficient via a single frequency quadrature.

    The double time integral of exp(-i w (t - s)) over the k-th cell is
    carried out analytically, leaving smooth (k = 0) or cosine/sine-weighted
    (k > 0) frequency integrals of J(w) (1 - cos(w delta)) / w^2.
    """
    dens = spec.density
    w_max = spec.quad_omega_max

    def cell_factor(w):
        # (1 - cos(w d)) / w^2 with a series branch near w = 0
        wd = w * delta
        if abs(wd) < 1e-6:
            return 0.5 * delta * delta * (1.0 - wd * wd / 12.0)
        return (1.0 - math.cos(wd)) / (w * w)

    def g_thermal(w):
        return spec.thermal_density(w) * cell_factor(w)

    def g_plain(w):
        return spectral_density_eval(dens, w) * cell_factor(w)

    if k == 0:
        def g0_imag(w):
            wd = w * delta
            if abs(wd) < 1e-6:
                core = wd ** 3 / 6.0 * (1.0 - wd * wd / 20.0)
            else:
                core = wd - math.sin(wd)
            return spectral_density_eval(dens, w) * core / (w * w)

        re = _quad(g_thermal, 0.0, w_max, abs_tol=abs_tol)
        im = -_quad(g0_imag, 0.0, w_max, abs_tol=abs_tol)
        return complex(re, im)

    tk = k * delta
    re = 2.0 * _quad(g_thermal, 0.0, w_max, abs_tol=abs_tol, weight="cos", wvar=tk)
    im = -2.0 * _quad(g_plain, 0.0, w_max, abs_tol=abs_tol, weight="sin", wvar=tk)
    return complex(re, im)


def eta_table(spec: BathSpec, delta: float, *, memory_steps: Optional[int] = None,
              eps_mem: Optional[float] = None, k_max: int = 4000,
              abs_tol: float = 1e-13) -> EtaTable:
    """Compute the memory coefficients for time step ``delta``.

    Either ``memory_steps`` (explicit K >= 1) or ``eps_mem`` must be given;
    with ``eps_mem`` the table is grown until |eta_K| drops below
    eps_mem * max_k |eta_k|, up to the hard cap ``k_max``.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    if (memory_steps is None) == (eps_mem is None):
        raise ValueError("give exactly one of memory_steps or eps_mem")

    if memory_steps is not None:
        if memory_steps < 1:
            raise ValueError("memory_steps must be >= 1")
        eta = np.array([_eta_entry(spec, delta, k, abs_tol)
                        for k in range(memory_steps + 1)])
        return EtaTable(delta=delta, memory_steps=memory_steps, eta=eta)

    if not (0.0 < eps_mem < 1.0):
        raise ValueError("eps_mem must lie in (0, 1)")
    values = [_eta_entry(spec, delta, 0, abs_tol)]
    running_max = abs(values[0])
    for k in range(1, k_max + 1):
        values.append(_eta_entry(spec, delta, k, abs_tol))
        running_max = max(running_max, abs(values[-1]))
        if abs(values[-1]) < eps_mem * running_max:
            return EtaTable(delta=delta, memory_steps=k, eta=np.array(values))
    raise MemoryTailError(
        f"|eta_k| did not fall below {eps_mem:g} of its maximum within "
        f"k_max = {k_max} steps; increase delta or give memory_steps explicitly")


def eta_table_from_correlation(alpha: Callable[[float], complex], delta: float,
                               memory_steps: int, *, abs_tol: float = 1e-11,
                               rel_tol: float = 1e-10) -> EtaTable:
    """Memory coefficients by direct 2D quadrature of a correlation function.

    Slow reference path used to validate the frequency-domain route; ``alpha``
    is any callable of the time difference.
    """
    def re_a(s, t):
        return (alpha(t - s)).real

    def im_a(s, t):
        return (alpha(t - s)).imag

    values = []
    for k in range(memory_steps + 1):
        if k == 0:
            re, _ = integrate.dblquad(re_a, 0.0, delta, 0.0, lambda t: t,
                                      epsabs=abs_tol, epsrel=rel_tol)
            im, _ = integrate.dblquad(im_a, 0.0, delta, 0.0, lambda t: t,
                                      epsabs=abs_tol, epsrel=rel_tol)
        else:
            re, _ = integrate.dblquad(re_a, k * delta, (k + 1) * delta, 0.0, delta,
                                      epsabs=abs_tol, epsrel=rel_tol)
            im, _ = integrate.dblquad(im_a, k * delta, (k + 1) * delta, 0.0, delta,
                                      epsabs=abs_tol, epsrel=rel_tol)
        values.append(complex(re, im))
    return EtaTable(delta=delta, memory_steps=memory_steps, eta=np.array(values))
