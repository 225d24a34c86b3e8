"""
Extension of a grid function to the half-cylinder Omega x (0, inf).

Each eigen-coefficient travels along t with the profile
``psi(tau) = 2^{1-s}/Gamma(s) tau^s K_s(tau)``, ``tau = sqrt(lambda) t``.
The modified Bessel function is evaluated by numba kernels: a reflection
series below ``BESSEL_SWITCH`` and the cosh integral representation above.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np
from numba import jit, prange
from scipy.optimize import brentq
from scipy.special import gamma

from .core import GridFunction, check_nodes
from .errors import ParameterDomainError
from .infrastructure.config import BESSEL_CUTOFF, BESSEL_SWITCH, BESSEL_TAIL, T_MIN_FACTOR, T_RATIO
from .spectral import bump, check_retained

log = logging.getLogger(__name__)

_TAIL_EXPONENT = -math.log(BESSEL_TAIL)
_THETA_POINTS = 400


@jit(nopython=True)
def _bessel_i_series(mu, tau):
    half = 0.5 * tau
    term = half**mu / math.gamma(mu + 1.0)
    total = term
    q = half * half
    for k in range(300):
        term *= q / ((k + 1.0) * (k + 1.0 + mu))
        total += term
        if abs(term) < 1e-17 * abs(total):
            break
    return total


@jit(nopython=True)
def _bessel_k_series(nu, tau):
    return math.pi * (_bessel_i_series(-nu, tau) - _bessel_i_series(nu, tau)) / (
        2.0 * math.sin(math.pi * nu)
    )


@jit(nopython=True)
def _bessel_k_integral(nu, tau):
    # integrand e^{-tau (cosh th - 1)} cosh(nu th), truncated where it drops below BESSEL_TAIL
    theta_max = 0.5
    while tau * (math.cosh(theta_max) - 1.0) - nu * theta_max < _TAIL_EXPONENT:
        theta_max += 0.25
    step = theta_max / _THETA_POINTS
    total = 0.5  # theta = 0
    for i in range(1, _THETA_POINTS + 1):
        th = i * step
        f = math.exp(-tau * (math.cosh(th) - 1.0)) * math.cosh(nu * th)
        total += 0.5 * f if i == _THETA_POINTS else f
    return math.exp(-tau) * step * total


@jit(nopython=True)
def _bessel_k(nu, tau):
    if tau <= BESSEL_SWITCH:
        return _bessel_k_series(nu, tau)
    return _bessel_k_integral(nu, tau)


@jit(nopython=True, parallel=True)
def _bessel_k_kernel(nu, taus):
    out = np.empty(taus.size)
    for i in prange(taus.size):
        out[i] = _bessel_k(nu, taus[i])
    return out


def _check_order(nu):
    if not 0.0 < nu < 1.0:
        raise ParameterDomainError(f"Bessel order nu={nu} must lie in (0, 1)")


def bessel_k(nu, tau):
    """Modified Bessel function of the second kind K_nu(tau), 0 < nu < 1, tau > 0."""
    _check_order(nu)
    if not tau > 0.0:
        raise ParameterDomainError(f"tau={tau} must be positive")
    return float(_bessel_k(float(nu), float(tau)))


def bessel_k_array(nu, taus):
    _check_order(nu)
    taus = np.ascontiguousarray(taus, dtype=np.float64)
    if taus.size and not np.all(taus > 0.0):
        raise ParameterDomainError("all tau values must be positive")
    return _bessel_k_kernel(float(nu), taus.ravel()).reshape(taus.shape)


def bessel_k_small(nu, tau, terms=1):
    """Small-argument law Gamma(nu) 2^{nu-1} tau^{-nu}.

    ``terms=2`` adds the first correction -Gamma(1-nu)/(2 nu) (tau/2)^nu,
    which matters for small nu where it is only O(tau^{2 nu}) smaller.
    """
    tau = np.asarray(tau, dtype=float)
    out = gamma(nu) * 2.0 ** (nu - 1.0) * tau ** (-nu)
    if terms >= 2:
        out = out - gamma(1.0 - nu) / (2.0 * nu) * (0.5 * tau) ** nu
    return out


def bessel_k_large(nu, tau):
    tau = np.asarray(tau, dtype=float)
    return np.sqrt(np.pi / (2.0 * tau)) * np.exp(-tau)


def extension_profile(s, tau):
    """psi(tau) = 2^{1-s}/Gamma(s) tau^s K_s(tau); psi(0) = 1, decays like tau^{s-1/2} e^{-tau}."""
    tau = np.asarray(tau, dtype=np.float64)
    out = np.ones(tau.shape)
    positive = tau > 0.0
    if np.any(positive):
        t = tau[positive]
        out[positive] = 2.0 ** (1.0 - s) / gamma(s) * t**s * bessel_k_array(s, t)
    return out


def graded_t_nodes(lambda_min, lambda_max, s, t_ratio=T_RATIO, t_min_factor=T_MIN_FACTOR):
    """Geometric nodes from ``t_min_factor/sqrt(lambda_max)`` to where the slowest mode dies out."""
    if not (0.0 < lambda_min <= lambda_max):
        raise ParameterDomainError("need 0 < lambda_min <= lambda_max")
    if t_ratio <= 1.0:
        raise ParameterDomainError(f"t_ratio={t_ratio} must exceed 1")
    t_min = t_min_factor / math.sqrt(lambda_max)
    log_cut = math.log(BESSEL_CUTOFF)

    def excess(x):
        return math.log(extension_profile(s, np.array([x]))[0]) - log_cut

    tau_cap = brentq(excess, 1.0, 60.0)
    t_cap = tau_cap / math.sqrt(lambda_min)
    count = int(math.ceil(math.log(t_cap / t_min) / math.log(t_ratio))) + 1
    return t_min * t_ratio ** np.arange(count)


def weighted_t_integral(t, values, s):
    """int t^{1-2s} v(t) dt, trapezoid in v against the exact moments of t^{1-2s}.

    ``t`` starts at the first node (0 allowed); ``values`` carries t on its last axis.
    """
    t = np.asarray(t, dtype=float)
    values = np.asarray(values, dtype=float)
    e = 2.0 - 2.0 * s
    moments = np.diff(t**e) / e
    mids = 0.5 * (values[..., 1:] + values[..., :-1])
    return np.sum(mids * moments, axis=-1)


def t_gradient_integral(t, values, s):
    """int t^{1-2s} (dv/dt)^2 dt with secant slopes against the exact moments.

    Stays finite when dv/dt blows up like t^{2s-1} at t = 0.
    """
    t = np.asarray(t, dtype=float)
    e = 2.0 - 2.0 * s
    moments = np.diff(t**e) / e
    slopes = np.diff(values, axis=-1) / np.diff(t)
    return np.sum(slopes**2 * moments, axis=-1)


@dataclass(frozen=True, eq=False)
class ExtensionField:
    """Samples w(x_j, t_k) of the extension; ``trace`` is the t = 0 column."""

    grid: object
    t_nodes: np.ndarray
    values: np.ndarray
    s: float
    trace: np.ndarray
    operator: object = None

    @property
    def full_t(self):
        return np.concatenate([[0.0], self.t_nodes])

    @property
    def full_values(self):
        return np.column_stack([self.trace, self.values])

    def with_values(self, values):
        return ExtensionField(self.grid, self.t_nodes, values, self.s, self.trace, self.operator)

    def coarsened(self):
        """Every other t-node, the last node kept."""
        idx = np.arange(0, self.t_nodes.size, 2)
        if idx[-1] != self.t_nodes.size - 1:
            idx = np.append(idx, self.t_nodes.size - 1)
        return ExtensionField(
            self.grid, self.t_nodes[idx], self.values[:, idx], self.s, self.trace, self.operator
        )

    def sup_profile(self):
        """max_x |w(x, t_k)| for every t-node."""
        return np.max(np.abs(self.values), axis=0)


def extend(dec, u, p, t_nodes):
    """Fourier-Bessel synthesis w(x, t) = sum_i <u, phi_i> psi(sqrt(lambda_i) t) phi_i(x)."""
    t = check_nodes(t_nodes)
    if np.any(t <= 0.0) or np.any(np.diff(t) <= 0.0):
        raise ParameterDomainError("t_nodes must be positive and increasing")
    check_retained(dec, u)
    c = dec.coefficients(u.values)
    tau = np.sqrt(dec.lambdas)[:, None] * t[None, :]
    profiles = extension_profile(p.s, tau)
    values = dec.synthesize(c[:, None] * profiles)
    log.debug("extension on %d x %d nodes, t in [%.3g, %.3g]", values.shape[0], t.size, t[0], t[-1])
    return ExtensionField(
        grid=dec.grid,
        t_nodes=t,
        values=values,
        s=p.s,
        trace=np.array(u.values),
        operator=dec.operator,
    )


def _spatial_density(w, values):
    """<A w(t), w(t)> for every column of ``values``."""
    weights = w.grid.weights[:, None]
    return np.sum(weights * values * (w.operator.matrix @ values), axis=0)


def extension_energy(w):
    """E_s[w] = int int t^{1-2s} |grad w|^2 over the sampled half-cylinder."""
    if w.operator is None:
        raise ParameterDomainError("extension field carries no spatial operator")
    t = w.full_t
    values = w.full_values
    t_part = np.dot(w.grid.weights, t_gradient_integral(t, values, w.s))
    x_part = weighted_t_integral(t, _spatial_density(w, values), w.s)
    return float(t_part + x_part)


def richardson_energy(w):
    """Energy with a self-reported error: distance to the every-other-node value."""
    fine = extension_energy(w)
    coarse = extension_energy(w.coarsened())
    return fine, abs(fine - coarse)


def conormal_derivative(w, p):
    """C_s times the outward conormal flux, -C_s lim t^{1-2s} dw/dt, as a grid function.

    Difference quotients in the variable t^{2s} on the three smallest intervals
    are extrapolated to t = 0 against the regressor dt^2/dt^{2s}; the local
    expansion of the profile makes t^{2-2s} the leading correction.
    """
    if w.t_nodes.size < 3:
        raise ParameterDomainError("the flux extrapolation needs at least 3 t-nodes")
    t = w.full_t[:4]
    values = w.full_values[:, :4]
    ts = t ** (2.0 * w.s)
    g = 2.0 * w.s * np.diff(values, axis=1) / np.diff(ts)
    m = np.diff(t**2) / np.diff(ts)
    design = np.column_stack([np.ones(3), m])
    coef, *_ = np.linalg.lstsq(design, g.T, rcond=None)
    return GridFunction(w.grid, -p.c_s * coef[0])


def extension_pde_residual(w):
    """max_k ||-div(t^{1-2s} grad w)(., t_k)|| relative to max_k ||t_k^{1-2s} A w(., t_k)||."""
    if w.operator is None:
        raise ParameterDomainError("extension field carries no spatial operator")
    t = w.full_t
    values = w.full_values
    weight = t ** (1.0 - 2.0 * w.s)
    mid = 0.5 * (t[1:] + t[:-1])
    flux = mid ** (1.0 - 2.0 * w.s) * np.diff(values, axis=1) / np.diff(t)
    t_part = -np.diff(flux, axis=1) / (0.5 * (t[2:] - t[:-2]))
    x_part = weight[1:-1] * (w.operator.matrix @ values[:, 1:-1])
    residual = t_part + x_part

    def norms(a):
        return np.sqrt(np.sum(w.grid.weights[:, None] * a**2, axis=0))

    scale = np.max(norms(x_part))
    if scale == 0.0:
        return 0.0
    return float(np.max(norms(residual)) / scale)


def perturbed_competitor(w, dec, rng, amplitude=0.1, center=1.5, width=1.0, modes=3):
    """Same trace, perturbed away from t = 0 by a smooth t-bump times smooth x-noise."""
    k = min(modes, dec.count)
    noise = dec.phis[:, :k] @ rng.normal(size=k)
    noise /= max(np.max(np.abs(noise)), np.finfo(float).tiny)
    scale = np.max(np.abs(w.trace)) if np.any(w.trace) else 1.0
    tb = bump(w.t_nodes, center, width)
    return w.with_values(w.values + amplitude * scale * noise[:, None] * tb[None, :])
