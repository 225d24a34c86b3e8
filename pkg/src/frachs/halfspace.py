"""
Half-space objects: Green kernels, the s-Kelvin transform and the minimizer
of the quotient on R^n_+ reduced to the radial variables (tau = |y'|, y_n).

Kernels use the image point (xi', -xi_n); with rho = |y - xi|^2 + z^2 the
reflected distance is rho + 4 y_n xi_n, and the bracket
``rho^{-a} - (rho + 4 y_n xi_n)^{-a}`` is evaluated through
``expm1``/``log1p`` to survive y_n xi_n << rho.
"""

import logging
import math
from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import integrate
from scipy.interpolate import RegularGridInterpolator
from scipy.linalg import eigh_tridiagonal
from scipy.optimize import bisect
from scipy.special import gamma

from .core import GridFunction
from .errors import (
    CalibrationError,
    ParameterDomainError,
    ResolutionError,
    SingularPointError,
)
from .extension import (
    extension_profile,
    graded_t_nodes,
    t_gradient_integral,
    weighted_t_integral,
)
from .infrastructure.config import EL_MAX_ITER, EL_TOL
from .variational import euler_lagrange_iteration

log = logging.getLogger(__name__)

KERNEL_KINDS = ("source", "boundary", "trace")
CALIBRATION_TOL = 1e-4
CALIBRATION_WIDTHS = (0.5, 1.0, 2.0)
CERTIFICATE_FRACTION = 0.5  # decay suprema are taken over |y|_inf <= fraction * R


def sphere_area(dim):
    """Surface measure of the unit sphere S^{dim-1} in R^dim."""
    return 2.0 * math.pi ** (dim / 2.0) / gamma(dim / 2.0)


@dataclass(frozen=True)
class KernelPoint:
    y: np.ndarray
    xi: np.ndarray
    z: float = 0.0

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float).ravel()
        xi = np.asarray(self.xi, dtype=float).ravel()
        if y.size != xi.size or y.size < 1:
            raise ParameterDomainError("y and xi must be points of the same R^n")
        if y[-1] < 0.0 or xi[-1] < 0.0 or self.z < 0.0:
            raise ParameterDomainError("points must satisfy y_n >= 0, xi_n >= 0, z >= 0")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "xi", xi)
        object.__setattr__(self, "z", float(self.z))

    @property
    def rho(self):
        return float(np.sum((self.y - self.xi) ** 2) + self.z**2)

    @property
    def product(self):
        return float(self.y[-1] * self.xi[-1])


def _bracket(rho, product, exponent):
    """rho^{-e} - (rho + 4 product)^{-e} without cancellation."""
    q = 4.0 * product / rho
    return rho**-exponent * -np.expm1(-exponent * np.log1p(q))


def source_exponent(p):
    return 0.5 * (p.n - 2.0 * p.s)


def boundary_exponent(p):
    return 0.5 * (p.n + 2.0 * p.s)


def green_kernel(kind, pt, p, normalization=None):
    """Closed-form half-space kernels.

    ``source``: C~ [rho^{-(n-2s)/2} - (rho + 4 y_n xi_n)^{-(n-2s)/2}];
    ``boundary``: C^ z^{2s} [rho^{-(n+2s)/2} - (...)^{-(n+2s)/2}];
    ``trace``: the source kernel at z = 0.
    """
    if kind not in KERNEL_KINDS:
        raise ParameterDomainError(f"unknown kernel kind {kind!r}; expected one of {KERNEL_KINDS}")
    if kind == "trace" and pt.z != 0.0:
        raise ParameterDomainError("the trace kernel lives on z = 0")
    if normalization is None:
        c_tilde, c_hat = kernel_normalizations(p)
        normalization = c_hat if kind == "boundary" else c_tilde
    rho = pt.rho
    if rho == 0.0:
        raise SingularPointError("kernel evaluated at its singular point")
    if pt.product == 0.0:
        return 0.0
    if kind == "boundary":
        return float(normalization * pt.z ** (2.0 * p.s) * _bracket(rho, pt.product, boundary_exponent(p)))
    return float(normalization * _bracket(rho, pt.product, source_exponent(p)))


def green_kernel_array(kind, Y, xi, p, normalization):
    """Vectorized kernel at points ``Y`` of shape (m, n+1), last column z."""
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    xi = np.asarray(xi, dtype=float)
    diff = Y[:, :-1] - xi
    z = Y[:, -1]
    rho = np.sum(diff**2, axis=1) + z**2
    product = Y[:, -2] * xi[-1]
    if np.any(rho == 0.0):
        raise SingularPointError("kernel evaluated at its singular point")
    if kind == "boundary":
        return normalization * z ** (2.0 * p.s) * _bracket(rho, product, boundary_exponent(p))
    return normalization * _bracket(rho, product, source_exponent(p))


def kernel_gradient(kind, pt, p, normalization=None):
    """Analytic gradient in Y = (y, z) of the source or boundary kernel."""
    if kind not in ("source", "boundary"):
        raise ParameterDomainError("gradients exist for the source and boundary kernels")
    if normalization is None:
        c_tilde, c_hat = kernel_normalizations(p)
        normalization = c_hat if kind == "boundary" else c_tilde
    rho = pt.rho
    if rho == 0.0:
        raise SingularPointError("kernel gradient evaluated at its singular point")
    n = pt.y.size
    d = np.concatenate([pt.y - pt.xi, [pt.z]])
    grad_rho = 2.0 * d
    grad_bar = grad_rho.copy()
    grad_bar[n - 1] += 4.0 * pt.xi[-1]
    rho_bar = rho + 4.0 * pt.product
    e = boundary_exponent(p) if kind == "boundary" else source_exponent(p)
    grad = -e * rho ** (-e - 1.0) * grad_rho + e * rho_bar ** (-e - 1.0) * grad_bar
    if kind == "boundary":
        if pt.z <= 0.0:
            raise SingularPointError("boundary kernel gradient needs z > 0")
        z2s = pt.z ** (2.0 * p.s)
        bracket = _bracket(rho, pt.product, e)
        grad = z2s * grad
        grad[n] += 2.0 * p.s * pt.z ** (2.0 * p.s - 1.0) * bracket
    return normalization * grad


def poisson_constant(p):
    """C^ = Gamma(n/2 + s) / (pi^{n/2} Gamma(s))."""
    return gamma(0.5 * p.n + p.s) / (math.pi ** (0.5 * p.n) * gamma(p.s))


def riesz_potential_constant(p):
    """c_{n,s} = Gamma(n/2 - s) / (4^s pi^{n/2} Gamma(s)), the kernel of (-Delta)^{-s}."""
    return gamma(0.5 * p.n - p.s) / (4.0**p.s * math.pi ** (0.5 * p.n) * gamma(p.s))


def poisson_mass(p, t, c_hat):
    """int_{R^n} C^ t^{2s} (|x|^2 + t^2)^{-(n+2s)/2} dx by radial quadrature."""
    e = boundary_exponent(p)

    def integrand(r):
        return r ** (p.n - 1) * t ** (2.0 * p.s) * (r * r + t * t) ** -e

    value, _ = integrate.quad(integrand, 0.0, np.inf, epsabs=0.0, epsrel=1e-13, limit=200)
    return c_hat * sphere_area(p.n) * value


def _calibrate_poisson(p):
    e = boundary_exponent(p)
    value, _ = integrate.quad(
        lambda u: u ** (p.n - 1) * (1.0 + u * u) ** -e, 0.0, np.inf, epsabs=0.0, epsrel=1e-13, limit=200
    )
    c_hat = 1.0 / (sphere_area(p.n) * value)
    closed = poisson_constant(p)
    if abs(c_hat - closed) > 1e-8 * closed:
        raise CalibrationError(f"Poisson normalization {c_hat:.12g} disagrees with {closed:.12g}")
    return float(c_hat)


def _gaussian_moment(beta, width, nodes):
    """int_0^inf r^{beta-1} exp(-r^2 / (2 width^2)) dr by Gauss-Legendre.

    With r^2/(2 width^2) = v^{2/beta} the integrand becomes exp(-v^{2/beta});
    it is cut where it drops below 1e-17.
    """
    x, w = leggauss(nodes)
    v_max = (-math.log(1e-17)) ** (beta / 2.0)
    v = 0.5 * v_max * (x + 1.0)
    integral = 0.5 * v_max * np.sum(w * np.exp(-(v ** (2.0 / beta))))
    return (2.0 / beta) * (math.sqrt(2.0) * width) ** beta * 0.5 * integral


def _source_fit(p, nodes, widths):
    """Closed-form C~ from Gaussian moments, used to cross-check the flux fit."""
    area = sphere_area(p.n)
    potentials = []
    targets = []
    for width in widths:
        # int |xi|^{2s-n} h(xi) d xi for h = exp(-|x|^2 / (2 width^2))
        potentials.append(area * _gaussian_moment(2.0 * p.s, width, nodes))
        # (-Delta)^{-s} h at 0 through the Fourier transform of h
        fourier_width = 1.0 / width
        scale = (2.0 * math.pi * width * width) ** (0.5 * p.n) / (2.0 * math.pi) ** p.n
        targets.append(area * scale * _gaussian_moment(p.n - 2.0 * p.s, fourier_width, nodes))
    P = np.array(potentials)
    F = np.array(targets)
    return float(np.dot(P, F) / np.dot(P, P))


def _kernel_flux(p, z, data):
    """-z^{1-2s} d/dz int (|xi|^2 + z^2)^{-(n-2s)/2} h(xi) d xi at x = 0, for radial h.

    With |xi| = z cot(phi) the integrand becomes
    cos^{n-1} sin^{1-2s} h(z cot phi) on (0, pi/2); the scale of h sits at
    phi of order z, so the interval is split geometrically down to 1e-3 z.
    """
    a = source_exponent(p)

    def integrand(phi):
        return math.cos(phi) ** (p.n - 1) * math.sin(phi) ** (1.0 - 2.0 * p.s) * data(z / math.tan(phi))

    edges = np.concatenate([[0.0], np.geomspace(1e-3 * z, 0.5 * math.pi, 24)])
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        value, _ = integrate.quad(integrand, lo, hi, epsabs=0.0, epsrel=1e-12, limit=200)
        total += value
    return 2.0 * a * sphere_area(p.n) * total


def _flux_limit(p, width, zs):
    """Conormal flux of the Gaussian potential extrapolated to z = 0.

    The flux approaches its limit through the powers eps^{1-s}, eps and
    eps^{2-s} of eps = z^2 / (2 width^2).
    """
    zs = np.asarray(zs)
    flux = np.array([_kernel_flux(p, z, lambda r: math.exp(-0.5 * (r / width) ** 2)) for z in zs])
    eps = 0.5 * (zs / width) ** 2
    design = np.column_stack([np.ones_like(eps), eps ** (1.0 - p.s), eps, eps ** (2.0 - p.s)])
    coef, *_ = np.linalg.lstsq(design, flux, rcond=None)
    return float(coef[0])


def _flux_fit(p, widths, zs):
    # every Gaussian datum has h(0) = 1
    limits = np.array([p.c_s * _flux_limit(p, w, w * zs) for w in widths])
    c_tilde = float(np.sum(limits) / np.dot(limits, limits))
    misfit = float(np.max(np.abs(c_tilde * limits - 1.0)))
    return c_tilde, misfit


def calibrate_source_normalization(p, samples=1000, widths=CALIBRATION_WIDTHS):
    """Least-squares C~ for which C_s times the conormal flux of the potential
    of Gaussian data h reproduces h at the origin.

    Returns ``(c_tilde, residual)``; the residual combines the fit misfit, the
    change under halving every z sample and the distance to the closed-form
    moment fit on ``samples`` Gauss-Legendre nodes.
    """
    zs = 1e-2 * 2.0 ** -np.arange(7)
    c_tilde, misfit = _flux_fit(p, widths, zs[:-1])
    c_half, _ = _flux_fit(p, widths, zs[1:])
    closed = _source_fit(p, samples, widths)
    residual = max(misfit, abs(c_tilde - c_half) / abs(c_tilde), abs(c_tilde - closed) / abs(closed))
    if residual > CALIBRATION_TOL:
        raise CalibrationError(f"source normalization residual {residual:.3e} above {CALIBRATION_TOL}")
    return c_tilde, residual


@lru_cache(maxsize=32)
def kernel_normalizations(p, samples=1000):
    """(C~, C^) for the source and boundary kernels of ``p``."""
    c_hat = _calibrate_poisson(p)
    c_tilde, residual = calibrate_source_normalization(p, samples)
    log.debug("normalizations n=%d s=%.3g: C~=%.10g (res %.1e) C^=%.10g", p.n, p.s, c_tilde, residual, c_hat)
    return c_tilde, c_hat


def kernel_bound_margin(pt, b_frak, p, normalization=None):
    """Source kernel value and the shape y_n^b xi_n^b rho^{-(n-2s+2b)/2}.

    The ratio of the two never exceeds C~ (2(n-2s))^b.
    """
    if not 0.0 <= b_frak <= 1.0:
        raise ParameterDomainError(f"b_frak={b_frak} must lie in [0, 1]")
    value = green_kernel("source", pt, p, normalization)
    shape = pt.product**b_frak * pt.rho ** (-(p.n - 2.0 * p.s + 2.0 * b_frak) / 2.0)
    return value, float(shape)


def gradient_bound_margin(pt, p, normalization=None):
    """|grad_Y G| and rho^{-(n-2s+1)/2} min(1, y_n xi_n / rho + xi_n / sqrt(rho))."""
    grad = kernel_gradient("source", pt, p, normalization)
    rho = pt.rho
    factor = min(1.0, pt.product / rho + pt.xi[-1] / math.sqrt(rho))
    shape = rho ** (-(p.n - 2.0 * p.s + 1.0) / 2.0) * factor
    return float(np.linalg.norm(grad)), float(shape)


def ls_residual(f, X, h, s):
    """-div(z^{1-2s} grad f) at points X (rows (y, z), z > h) by a conservative stencil."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    z = X[:, -1]
    if np.any(z <= h):
        raise ParameterDomainError("stencil points need z > h")
    a = 1.0 - 2.0 * s
    f0 = f(X)
    out = np.zeros(X.shape[0])
    for axis in range(X.shape[1] - 1):
        e = np.zeros(X.shape[1])
        e[axis] = h
        out -= z**a * (f(X + e) - 2.0 * f0 + f(X - e)) / h**2
    e = np.zeros(X.shape[1])
    e[-1] = h
    up = (z + 0.5 * h) ** a * (f(X + e) - f0)
    down = (z - 0.5 * h) ** a * (f0 - f(X - e))
    out -= (up - down) / h**2
    return out


def kelvin(w, p):
    """s-Kelvin transform w*(X) = |X|^{2s-n} w(X / |X|^2) as a new closure."""
    power = 0.5 * (2.0 * p.s - p.n)

    def transformed(X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        r2 = np.sum(X**2, axis=1)
        if np.any(r2 == 0.0):
            raise SingularPointError("the Kelvin transform is singular at X = 0")
        return r2**power * w(X / r2[:, None])

    return transformed


def kelvin_mapping_defect(w, X, h, p):
    """(L_s w*)(X) and |X|^{-n-2s-2} (L_s w)(X/|X|^2), both by the same stencil."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    r2 = np.sum(X**2, axis=1)
    lhs = ls_residual(kelvin(w, p), X, h, p.s)
    rhs = r2 ** (-(p.n + 2.0 * p.s + 2.0) / 2.0) * ls_residual(w, X / r2[:, None], h, p.s)
    return lhs, rhs


@dataclass(frozen=True)
class ReducedGrid:
    """Radial-reduced half-space box in (tau, y_n) = (|y'|, y_n).

    tau is cell-centred on [0, R] (reflection at 0, zero value at R); y_n is
    vertex-centred with zero values at 0 and R. The measure carries
    |S^{n-2}| tau^{n-2}.
    """

    n: int
    extent: float
    counts: tuple

    @property
    def dim(self):
        return 2

    @property
    def shape(self):
        return tuple(self.counts)

    @property
    def size(self):
        return int(self.counts[0] * self.counts[1])

    @cached_property
    def h(self):
        return (self.extent / self.counts[0], self.extent / (self.counts[1] + 1))

    @cached_property
    def axes(self):
        tau = (np.arange(self.counts[0]) + 0.5) * self.h[0]
        y = np.arange(1, self.counts[1] + 1) * self.h[1]
        return tau, y

    @cached_property
    def nodes(self):
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    @property
    def physical_nodes(self):
        return self.nodes

    @property
    def omega(self):
        return sphere_area(self.n - 1)

    @cached_property
    def tau_weights(self):
        tau, _ = self.axes
        return self.omega * tau ** (self.n - 2) * self.h[0]

    @cached_property
    def y_weights(self):
        return np.full(self.counts[1], self.h[1])

    @cached_property
    def weights(self):
        return np.outer(self.tau_weights, self.y_weights).ravel()

    @cached_property
    def radius(self):
        r = np.linalg.norm(self.nodes, axis=1)
        return np.maximum(r, 0.5 * min(self.h))

    @property
    def domain_bounds(self):
        return ((0.0, self.extent), (0.0, self.extent))

    def conductivity(self):
        return None

    def inner(self, u, v):
        return float(np.dot(self.weights * u, v))


def _tau_factor(grid):
    """Eigenpairs of -tau^{2-n} d/dtau (tau^{n-2} d/dtau) on the cell-centred axis."""
    N = grid.counts[0]
    h = grid.h[0]
    tau, _ = grid.axes
    faces = (np.arange(1, N + 1) * h) ** (grid.n - 2)
    mass = tau ** (grid.n - 2) * h
    diag = np.zeros(N)
    diag[:-1] += faces[:-1] / h
    diag[1:] += faces[:-1] / h
    diag[-1] += 2.0 * faces[-1] / h
    off = -faces[:-1] / h
    scale = 1.0 / np.sqrt(mass)
    lam, vec = eigh_tridiagonal(diag * scale**2, off * scale[:-1] * scale[1:])
    return lam, vec * scale[:, None] / math.sqrt(grid.omega)


def _y_factor(grid):
    N = grid.counts[1]
    h = grid.h[1]
    lam, vec = eigh_tridiagonal(np.full(N, 2.0 / h**2), np.full(N - 1, -1.0 / h**2))
    return lam, vec / math.sqrt(h)


@dataclass(frozen=True, eq=False)
class ReducedDecomposition:
    """Separable spectral calculus of the reduced Dirichlet operator."""

    grid: ReducedGrid
    tau_lambdas: np.ndarray
    tau_vectors: np.ndarray
    y_lambdas: np.ndarray
    y_vectors: np.ndarray

    @classmethod
    def build(cls, grid):
        lt, vt = _tau_factor(grid)
        ly, vy = _y_factor(grid)
        return cls(grid, lt, vt, ly, vy)

    @cached_property
    def spectrum(self):
        return self.tau_lambdas[:, None] + self.y_lambdas[None, :]

    @property
    def lambdas(self):
        return np.sort(self.spectrum.ravel())

    @property
    def count(self):
        return self.grid.size

    @property
    def complete(self):
        return True

    def coefficients(self, values):
        U = np.asarray(values).reshape(self.grid.shape)
        weighted = self.grid.tau_weights[:, None] * U * self.grid.y_weights[None, :]
        return self.tau_vectors.T @ weighted @ self.y_vectors

    def synthesize(self, coefficients):
        return (self.tau_vectors @ coefficients @ self.y_vectors.T).ravel()

    def apply_power(self, values, power):
        return self.synthesize(self.spectrum**power * self.coefficients(values))

    def quadratic_form(self, values, power):
        return float(np.sum(self.spectrum**power * self.coefficients(values) ** 2))


@dataclass(frozen=True, eq=False)
class ReducedMinimizer:
    params: object
    box: tuple
    values: GridFunction
    quotient: float
    iterations: int
    history: tuple
    el_residual: float
    positivity_projections: int
    decomposition: ReducedDecomposition

    @property
    def grid(self):
        return self.values.grid

    @property
    def extent(self):
        return self.box[0]


def boundary_layer_mass(values, p, fraction=0.9):
    """Share of the weighted 2*_sigma density with max(tau, y_n) > fraction * R."""
    grid = values.grid
    density = grid.weights * grid.radius**p.weight_power * np.abs(values.values) ** p.two_star_sigma
    outer = np.max(grid.nodes, axis=1) > fraction * grid.extent
    return float(np.sum(density[outer]) / np.sum(density))


def halfspace_minimizer(p, R, res, tol=EL_TOL, max_iter=EL_MAX_ITER, layer_tol=1e-3):
    """Minimize the quotient on the reduced half-space box [0, R]^2."""
    if p.n < 2:
        raise ParameterDomainError("the half-space reduction needs n >= 2")
    counts = (int(res), int(res)) if np.isscalar(res) else tuple(int(c) for c in res)
    if min(counts) < 3 or R <= 0.0:
        raise ParameterDomainError("need a positive box and at least 3 nodes per axis")
    grid = ReducedGrid(p.n, float(R), counts)
    dec = ReducedDecomposition.build(grid)
    tau, y = grid.nodes[:, 0], grid.nodes[:, 1]
    init = y * np.exp(-(tau**2 + y**2))
    result = euler_lagrange_iteration(dec, grid, p, init, tol=tol, max_iter=max_iter)
    layer = boundary_layer_mass(result.minimizer, p)
    if layer > layer_tol:
        raise ResolutionError(f"boundary layer holds {layer:.2e} of the mass; enlarge R={R}")
    log.info("half-space minimizer R=%g %s: quotient=%.10g after %d iterations",
             R, counts, result.quotient, result.iterations)
    return ReducedMinimizer(
        params=p,
        box=(float(R), float(R)),
        values=result.minimizer,
        quotient=result.quotient,
        iterations=result.iterations,
        history=result.history,
        el_residual=result.el_residual,
        positivity_projections=result.positivity_projections,
        decomposition=dec,
    )


def reduced_extension(m, t_ratio=None):
    """Extension W(tau, y_n, z) of the reduced minimizer; z = 0 carries the trace."""
    dec = m.decomposition
    s = m.params.s
    lam = dec.spectrum
    kwargs = {} if t_ratio is None else {"t_ratio": t_ratio}
    z = graded_t_nodes(float(lam.min()), float(lam.max()), s, **kwargs)
    C = dec.coefficients(m.values.values)
    W = np.empty(m.grid.shape + (z.size + 1,))
    W[..., 0] = m.values.reshaped()
    root = np.sqrt(lam)
    for k, zk in enumerate(z):
        W[..., k + 1] = (dec.tau_vectors @ (C * extension_profile(s, root * zk)) @ dec.y_vectors.T)
    return np.concatenate([[0.0], z]), W


def _radial_gradients(grid, W):
    """Central differences in tau (even at 0, odd at R) and y_n (zero at both ends)."""
    h_tau, h_y = grid.h
    pad = np.concatenate([W[:1], W, -W[-1:]], axis=0)
    d_tau = (pad[2:] - pad[:-2]) / (2.0 * h_tau)
    zeros = np.zeros_like(W[:, :1])
    pad = np.concatenate([zeros, W, zeros], axis=1)
    d_y = (pad[:, 2:] - pad[:, :-2]) / (2.0 * h_y)
    return d_tau, d_y


def reduced_extension_density(m, t_ratio=None):
    """V(y) = int z^{1-2s} |grad_Y W|^2 dz on the reduced grid."""
    z, W = reduced_extension(m, t_ratio)
    s = m.params.s
    d_tau, d_y = _radial_gradients(m.grid, W)
    spatial = weighted_t_integral(z, d_tau**2 + d_y**2, s)
    normal = t_gradient_integral(z, W, s)
    return GridFunction(m.grid, (spatial + normal).ravel())


@dataclass(frozen=True)
class DecayCertificate:
    phi_constant: float
    energy_constant: float
    edge_slope: float
    rough_constant: float
    region: float
    stability: dict = None


def _decay_constants(m, region):
    p = m.params
    grid = m.grid
    tau, y = grid.nodes[:, 0], grid.nodes[:, 1]
    r = np.hypot(tau, y)
    inside = np.maximum(tau, y) <= region
    phi = m.values.values
    energy = reduced_extension_density(m).values
    phi_c = np.max((phi * (1.0 + r ** (p.n - 2.0 * p.s + 2.0)) / y)[inside])
    energy_c = np.max((energy * (1.0 + r ** (2.0 * p.n - 2.0 * p.s + 2.0)))[inside])
    first_row = np.isclose(y, grid.axes[1][0]) & inside
    edge = np.max(phi[first_row] / y[first_row])
    return float(phi_c), float(energy_c), float(edge)


def decay_certificate(m, other=None, region=None):
    """Suprema of Phi (1+|y|^{n-2s+2}) / y_n and V (1+|y|^{2n-2s+2}).

    Both are taken over max(tau, y_n) <= ``region`` (default half the box).
    ``other`` is a minimizer on a larger box at the same h; the relative
    change of each constant is reported as ``stability``.
    """
    if region is None:
        region = CERTIFICATE_FRACTION * m.extent
    phi_c, energy_c, edge = _decay_constants(m, region)
    stability = None
    if other is not None:
        phi_o, energy_o, _ = _decay_constants(other, region)
        stability = {
            "phi": abs(phi_c - phi_o) / phi_o,
            "energy": abs(energy_c - energy_o) / energy_o,
        }
    return DecayCertificate(
        phi_constant=phi_c,
        energy_constant=energy_c,
        edge_slope=edge,
        rough_constant=rough_bound_constant(m),
        region=float(region),
        stability=stability,
    )


def rough_bound_constant(m):
    """Fitted C in Phi(y) <= C (1 + |y|)^{2s - n}."""
    p = m.params
    r = np.linalg.norm(m.grid.nodes, axis=1)
    return float(np.max(m.values.values * (1.0 + r) ** (p.n - 2.0 * p.s)))


def _lebesgue_norm(grid, values, exponent):
    return float(np.sum(grid.weights * np.abs(values) ** exponent) ** (1.0 / exponent))


def level_lambda(u, tau, p):
    """Level lambda >= 0 with ||(u - lambda)_+||_{L_{2*_s}} = tau."""
    exponent = p.two_star_s
    values = np.maximum(u.values, 0.0)
    total = _lebesgue_norm(u.grid, values, exponent)
    if not 0.0 < tau <= total * (1.0 + 1e-12):
        raise ParameterDomainError(f"tau={tau} outside (0, {total}]")
    if tau >= total * (1.0 - 1e-12):
        return 0.0
    top = float(np.max(values))

    def excess(level):
        return _lebesgue_norm(u.grid, np.maximum(values - level, 0.0), exponent) - tau

    return float(bisect(excess, 0.0, top, xtol=1e-14 * top, maxiter=200))


def level_bound_constants(m, fractions=(0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)):
    """sup Phi / lambda(Phi, tau) over tau = fraction * ||Phi||_{2*_s}."""
    p = m.params
    total = _lebesgue_norm(m.grid, m.values.values, p.two_star_s)
    sup = float(np.max(m.values.values))
    rows = []
    for fraction in fractions:
        tau = fraction * total
        level = level_lambda(m.values, tau, p)
        rows.append({"tau": tau, "lambda": level, "ratio": sup / level})
    return rows


def decay_amplitude(m):
    """A in Phi ~ A y_n |y|^{-(n-2s+2)}, fitted on R/4 <= |y| <= R/2."""
    p = m.params
    tau, y = m.grid.nodes[:, 0], m.grid.nodes[:, 1]
    r = np.hypot(tau, y)
    band = (r >= 0.25 * m.extent) & (r <= 0.5 * m.extent)
    return float(np.median(m.values.values[band] * r[band] ** (p.n - 2.0 * p.s + 2.0) / y[band]))


def sample_minimizer(m, tau, y_n):
    """Phi at arbitrary (tau, y_n): bilinear inside the box, decay model outside."""
    p = m.params
    tau = np.abs(np.asarray(tau, dtype=float))
    y_n = np.asarray(y_n, dtype=float)
    tau, y_n = np.broadcast_arrays(tau, y_n)
    R = m.extent
    t_axis, y_axis = m.grid.axes
    table = np.zeros((t_axis.size + 1, y_axis.size + 2))
    table[:-1, 1:-1] = m.values.reshaped()
    interp = RegularGridInterpolator(
        (np.append(t_axis, R), np.concatenate([[0.0], y_axis, [R]])), table
    )
    inside = (tau <= R) & (y_n <= R) & (y_n >= 0.0)
    out = np.zeros(tau.shape)
    if np.any(inside):
        pts = np.column_stack([np.clip(tau[inside], t_axis[0], R), y_n[inside]])
        out[inside] = interp(pts)
    outside = ~inside & (y_n > 0.0)
    if np.any(outside):
        r = np.hypot(tau[outside], y_n[outside])
        out[outside] = decay_amplitude(m) * y_n[outside] * r ** -(p.n - 2.0 * p.s + 2.0)
    return out
