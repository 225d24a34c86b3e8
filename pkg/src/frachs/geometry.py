"""
Boundary profiles near the origin, their spherical-average curvature
functionals, the flattening map and the trial functions built from the
half-space minimizer.

Profiles are graphs x_n = F(x') with F(0) = 0 and grad F(0) = 0. Built-in
profiles are ``functools.partial`` objects over module-level functions so
they pickle into worker processes.
"""

import logging
import math
from dataclasses import dataclass
from functools import partial

import numpy as np

from .core import Grid, GridFunction, make_grid
from .errors import ParameterDomainError, QuadratureError, ResolutionError
from .extension import weighted_t_integral
from .halfspace import reduced_extension, sample_minimizer
from .infrastructure.config import SPHERE_NODES, T_RATIO
from .infrastructure.parallel import parallel_map
from .spectral import dirichlet_laplacian, eigenpairs, spectral_form, weighted_norm
from .variational import concentration_profile, smoothstep_cutoff

log = logging.getLogger(__name__)


def _radius(x):
    return np.linalg.norm(np.atleast_2d(x), axis=1)


def _power_value(x, alpha, c):
    return c * _radius(x) ** alpha


def _power_gradient(x, alpha, c):
    x = np.atleast_2d(np.asarray(x, dtype=float))
    r = _radius(x)
    factor = np.zeros_like(r)
    nz = r > 0.0
    factor[nz] = c * alpha * r[nz] ** (alpha - 2.0)
    return factor[:, None] * x


def _log_factor(r, kappa):
    return np.where(r > 0.0, -np.log(np.where(r > 0.0, r, 1.0)), 1.0) ** kappa


def _power_log_value(x, alpha, kappa):
    r = _radius(x)
    return -(r**alpha) * _log_factor(r, kappa)


def _power_log_gradient(x, alpha, kappa):
    x = np.atleast_2d(np.asarray(x, dtype=float))
    r = _radius(x)
    factor = np.zeros_like(r)
    nz = r > 0.0
    L = -np.log(r[nz])
    factor[nz] = -(alpha * L**kappa - kappa * L ** (kappa - 1.0)) * r[nz] ** (alpha - 2.0)
    return factor[:, None] * x


def _flat_value(x):
    return np.zeros(np.atleast_2d(x).shape[0])


def _flat_gradient(x):
    return np.zeros_like(np.atleast_2d(np.asarray(x, dtype=float)))


@dataclass(frozen=True, eq=False)
class BoundaryProfile:
    """Graph x_n = F(x') valid for |x'| < r0.

    ``F`` and ``gradient`` take arrays of shape (m, n-1).
    """

    F: object
    gradient: object
    r0: float
    name: str = "custom"

    def __post_init__(self):
        origin = np.zeros((1, 1))
        if abs(float(self.F(origin)[0])) > 1e-14:
            raise ParameterDomainError(f"profile {self.name} does not pass through the origin")
        if float(np.max(np.abs(self.gradient(origin)))) > 1e-10:
            raise ParameterDomainError(f"profile {self.name} is not tangent at the origin")

    def value(self, x):
        return np.asarray(self.F(np.atleast_2d(np.asarray(x, dtype=float))), dtype=float)

    def grad(self, x):
        return np.asarray(self.gradient(np.atleast_2d(np.asarray(x, dtype=float))), dtype=float)


def power_law(alpha, c=-1.0, r0=1.0):
    """F(x') = c |x'|^alpha."""
    if alpha <= 1.0:
        raise ParameterDomainError(f"power profile needs alpha > 1, got {alpha}")
    return BoundaryProfile(
        partial(_power_value, alpha=alpha, c=c),
        partial(_power_gradient, alpha=alpha, c=c),
        r0,
        f"power(alpha={alpha}, c={c})",
    )


def power_log(alpha, kappa, r0=0.5):
    """F(x') = -|x'|^alpha |log |x'||^kappa; alpha = 1 needs kappa < 0."""
    if alpha < 1.0 or (alpha == 1.0 and kappa >= 0.0):
        raise ParameterDomainError(f"power-log profile with alpha={alpha}, kappa={kappa} is not C^1 flat")
    if r0 >= 1.0:
        raise ParameterDomainError("power-log profiles are defined for |x'| < 1")
    return BoundaryProfile(
        partial(_power_log_value, alpha=alpha, kappa=kappa),
        partial(_power_log_gradient, alpha=alpha, kappa=kappa),
        r0,
        f"power_log(alpha={alpha}, kappa={kappa})",
    )


def _negated(x, func):
    return -func(x)


def flat(r0=1.0):
    return BoundaryProfile(_flat_value, _flat_gradient, r0, "flat")


def mirrored(bp):
    """The reflected profile -F, bending the other way."""
    return BoundaryProfile(partial(_negated, func=bp.F), partial(_negated, func=bp.gradient), bp.r0, f"-{bp.name}")


def convex(alpha=2.0, r0=1.0):
    """Control profile F = +|x'|^alpha, bending away from the domain."""
    profile = power_law(alpha, c=1.0, r0=r0)
    return BoundaryProfile(profile.F, profile.gradient, r0, f"convex(alpha={alpha})")


def profile_from_config(spec):
    """Build a profile from ``{"kind": ..., <parameters>}``."""
    spec = dict(spec)
    kind = spec.pop("kind", None)
    builders = {"power": power_law, "power_log": power_log, "flat": flat, "convex": convex}
    if kind not in builders:
        raise ParameterDomainError(f"unknown profile kind {kind!r}; expected one of {sorted(builders)}")
    try:
        return builders[kind](**spec)
    except TypeError as e:
        raise ParameterDomainError(f"bad parameters for profile {kind!r}: {e}") from e


def _sphere_points(tau, n):
    """Quadrature nodes of the sphere of radius tau in R^{n-1} (equal weights)."""
    if n == 2:
        return np.array([[tau], [-tau]])
    if n == 3:
        theta = 2.0 * np.pi * np.arange(SPHERE_NODES) / SPHERE_NODES
        return tau * np.column_stack([np.cos(theta), np.sin(theta)])
    raise ParameterDomainError(f"sphere averages are implemented for n in (2, 3), got n={n}")


@dataclass(frozen=True)
class CurvatureReport:
    taus: np.ndarray
    f: np.ndarray
    f1: np.ndarray
    f2: np.ndarray
    f3: np.ndarray
    alpha_hat: float
    concave: bool
    rv_ok: bool
    cond_ok: bool
    f1_ok: bool

    @property
    def admissible(self):
        return self.concave and self.rv_ok and self.cond_ok and self.f1_ok

    @property
    def cauchy_schwarz_margin(self):
        """min over tau of f2 - f3^2; nonnegative up to rounding."""
        return float(np.min(self.f2 - self.f3**2))


def _vanishing_trend(taus, ratio):
    """True when |ratio| decreases as tau decreases over the three smallest samples."""
    order = np.argsort(taus)[:3]
    r = np.abs(ratio[order])
    return bool(np.all(np.diff(r) > 0.0) and r[0] < r[-1])


def curvature_functionals(bp, taus, p, alpha_tol=0.05):
    """Spherical averages f, f1, f2, f3 of the profile and the admissibility tests."""
    taus = np.sort(np.asarray(taus, dtype=float))
    if taus.size < 3:
        raise ParameterDomainError("at least three sample radii are required")
    if taus[0] <= 0.0 or taus[-1] >= bp.r0:
        raise ParameterDomainError(f"sample radii must lie in (0, r0={bp.r0})")
    f, f1, f2, f3 = (np.empty(taus.size) for _ in range(4))
    for i, tau in enumerate(taus):
        pts = _sphere_points(tau, p.n)
        F = bp.value(pts)
        g = np.linalg.norm(bp.grad(pts), axis=1)
        f[i], f1[i], f2[i], f3[i] = F.mean(), (F**2).mean(), (g**2).mean(), g.mean()
    if not all(np.all(np.isfinite(a)) for a in (f, f1, f2, f3)):
        raise QuadratureError(f"non-finite sphere averages for profile {bp.name}")

    concave = bool(np.all(f < 0.0))
    decade = taus <= 10.0 * taus[0]
    if np.count_nonzero(decade) < 2:
        decade = np.arange(taus.size) < 2
    with np.errstate(divide="ignore"):
        log_f = np.log(np.abs(f))
    if np.all(np.isfinite(log_f[decade])):
        alpha_hat = float(np.polyfit(np.log(taus[decade]), log_f[decade], 1)[0])
    else:
        alpha_hat = float("nan")

    admissible_alpha = 1.0 <= alpha_hat < p.n - 2.0 * p.s + 3.0
    rv_ok = False
    if admissible_alpha:
        small = taus[:3]
        F2 = np.array([bp.value(_sphere_points(2.0 * t, p.n)).mean() for t in small])
        with np.errstate(divide="ignore", invalid="ignore"):
            exponents = np.log2(F2 / f[:3])
        rv_ok = bool(np.all(np.abs(exponents - alpha_hat) <= alpha_tol))

    with np.errstate(divide="ignore", invalid="ignore"):
        cond_ratio = taus * f2 / f
        f1_ratio = f1 / (taus * np.abs(f))
    cond_ok = bool(np.all(np.isfinite(cond_ratio)) and _vanishing_trend(taus, cond_ratio))
    f1_ok = bool(np.all(np.isfinite(f1_ratio)) and _vanishing_trend(taus, f1_ratio))
    log.info("curvature %s: alpha_hat=%.4f concave=%s rv=%s cond=%s f1=%s",
             bp.name, alpha_hat, concave, rv_ok, cond_ok, f1_ok)
    return CurvatureReport(taus, f, f1, f2, f3, alpha_hat, concave, rv_ok, cond_ok, f1_ok)


@dataclass(frozen=True, eq=False)
class FlatteningMap:
    """Theta_eps(x) = (x - F(x') e_n) / eps and its inverse; points are rows."""

    profile: BoundaryProfile
    eps: float

    def jacobian(self, n):
        """Determinant of Theta_eps on R^n; Theta_1 preserves volume."""
        return self.eps**-n

    def jacobian_extended(self, n):
        return self.eps ** (-n - 1)

    def forward(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        y = x.copy()
        y[:, -1] -= self.profile.value(x[:, :-1])
        return y / self.eps

    def inverse(self, y):
        y = np.atleast_2d(np.asarray(y, dtype=float))
        x = self.eps * y
        if np.any(np.linalg.norm(x[:, :-1], axis=1) >= self.profile.r0):
            raise ParameterDomainError(f"inverse map used outside the validity radius r0={self.profile.r0}")
        x[:, -1] += self.profile.value(x[:, :-1])
        return x

    def forward_extended(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.column_stack([self.forward(X[:, :-1]), X[:, -1] / self.eps])

    def inverse_extended(self, Y):
        Y = np.atleast_2d(np.asarray(Y, dtype=float))
        return np.column_stack([self.inverse(Y[:, :-1]), self.eps * Y[:, -1]])


def flatten_map(bp, eps):
    if not eps > 0.0:
        raise ParameterDomainError(f"eps={eps} must be positive")
    return FlatteningMap(bp, float(eps))


@dataclass(frozen=True, eq=False)
class MappedGrid(Grid):
    """Grid in flattened coordinates y = (x_1, x_2 - F(x_1)) of a curved 2-D domain."""

    profile: BoundaryProfile = None

    @property
    def physical_nodes(self):
        x = self.nodes.copy()
        x[:, 1] += self.profile.value(x[:, :1])
        return x

    def conductivity(self):
        profile = self.profile

        def tensor(points):
            slope = profile.grad(points[:, :1])[:, 0]
            return np.ones_like(slope), -slope, 1.0 + slope**2

        return tensor


def flattened_domain(bp, delta, resolution):
    """Mapped grid of {|x_1| < delta, F(x_1) < x_2 < F(x_1) + delta}.

    An integer ``resolution`` counts nodes along x_1; the x_2 axis gets the
    count that keeps the cells square when ``resolution`` is odd.
    """
    if not 0.0 < delta < bp.r0:
        raise ParameterDomainError(f"delta={delta} must lie in (0, r0={bp.r0})")
    if np.ndim(resolution) == 0:
        resolution = (int(resolution), max(3, (int(resolution) + 1) // 2 - 1))
    base = make_grid([(-delta, delta), (0.0, delta)], resolution)
    return MappedGrid(bounds=base.bounds, counts=base.counts, offset=base.offset, profile=bp)


def canonical_scale(m):
    """Median radius of the weighted mass of the minimizer.

    Dilating by it pins the scale of Phi; integrals below are reported for
    the dilate y -> L^{(n-2s)/2} Phi(L y), which has median radius 1.
    """
    return concentration_profile(m.values, m.params).median_radius


def canonical_minimizer(m, tau, y_n):
    p = m.params
    L = canonical_scale(m)
    return L ** (0.5 * (p.n - 2.0 * p.s)) * sample_minimizer(m, L * np.asarray(tau), L * np.asarray(y_n))


def trial_function(m, bp, eps, delta, grid=None, resolution=32):
    """eps^{-(n-2s)/2} Phi(Theta_eps(x)) phi_delta(Theta_1(x)) on the mapped grid."""
    p = m.params
    if p.n != 2:
        raise ParameterDomainError("trial functions are built for n = 2")
    if grid is None:
        grid = flattened_domain(bp, delta, resolution)
    if eps < max(grid.h):
        raise ResolutionError(f"eps={eps} is below the grid step {max(grid.h):.3g}")
    y = grid.nodes
    cutoff = smoothstep_cutoff(np.linalg.norm(y, axis=1), delta)
    phi = canonical_minimizer(m, np.abs(y[:, 0]) / eps, y[:, 1] / eps)
    return GridFunction(grid, eps ** (-0.5 * (p.n - 2.0 * p.s)) * phi * cutoff)


@dataclass(frozen=True)
class CorrectionIntegrals:
    c1: float
    c2: float
    c1_error: float
    c2_error: float
    tail_slope: float
    scale: float


def _c1_density(m, alpha):
    """tau^{alpha+n-2} y_n Phi^q |y|^{weight_power-2} on the reduced nodes."""
    p = m.params
    grid = m.grid
    tau, y = grid.nodes[:, 0], grid.nodes[:, 1]
    r = np.hypot(tau, y)
    phi = np.maximum(m.values.values, 0.0)
    return (tau ** (alpha + p.n - 2.0) * y * phi**p.two_star_sigma * r ** (p.weight_power - 2.0)).reshape(grid.shape)


def _c2_column(m, t_ratio=None):
    """int z^{1-2s} (dW/dy_n)^2(tau, 0, z) dz for every tau node."""
    z, W = reduced_extension(m, t_ratio)
    h = m.grid.h[1]
    normal = (4.0 * W[:, 0, :] - W[:, 1, :]) / (2.0 * h)
    return weighted_t_integral(z, normal**2, m.params.s)


def correction_integrals(m, p, alpha, t_ratio=T_RATIO):
    """Limits of the two leading boundary corrections for a profile of index alpha.

    Error bars compare the cell sums with every-other-node sums (c1) and the
    z-grid with a refined one (c2).
    """
    if not 1.0 <= alpha < p.n - 2.0 * p.s + 3.0:
        raise ParameterDomainError(f"alpha={alpha} outside [1, n-2s+3)")
    grid = m.grid
    h_tau, h_y = grid.h
    tau = grid.axes[0]

    density = _c1_density(m, alpha)
    c1 = float(np.sum(density) * h_tau * h_y)
    c1_coarse = float(np.sum(density[::2, 1::2]) * 4.0 * h_tau * h_y)

    column = _c2_column(m, t_ratio)
    column_fine = _c2_column(m, 1.0 + 0.5 * (t_ratio - 1.0))
    weights = tau ** (p.n + alpha - 2.0) * h_tau
    c2 = float(np.dot(weights, column_fine))
    c2_coarse = float(np.dot(weights, column))

    profile = np.sum(density, axis=1) * h_y
    band = (tau >= 0.25 * m.extent) & (tau <= 0.5 * m.extent) & (profile > 0.0)
    if np.count_nonzero(band) >= 2:
        tail_slope = float(np.polyfit(np.log(tau[band]), np.log(profile[band]), 1)[0])
    else:
        tail_slope = float("nan")

    L = canonical_scale(m)
    factor = L ** (1.0 - alpha)
    values = np.array([c1, c2, c1_coarse, c2_coarse]) * factor
    if not np.all(np.isfinite(values)):
        raise QuadratureError(f"non-finite correction integrals {values}")
    c1, c2, c1_coarse, c2_coarse = values
    log.info("corrections alpha=%g: c1=%.6g c2=%.6g tail slope=%.3f scale=%.4g", alpha, c1, c2, tail_slope, L)
    return CorrectionIntegrals(
        c1=float(c1),
        c2=float(c2),
        c1_error=float(abs(c1 - c1_coarse)),
        c2_error=float(abs(c2 - c2_coarse)),
        tail_slope=tail_slope,
        scale=float(L),
    )


@dataclass(frozen=True)
class SweepRow:
    resolution: int
    eps: float
    quotient: float
    mirrored_quotient: float
    flat_quotient: float
    reference: float
    correction: float
    flat_correction: float
    leading_order: float

    @property
    def scaled_excess(self):
        """(I[Phi_eps] - S_ref) / (f(eps) / eps)."""
        if self.leading_order == 0.0:
            return float("nan")
        return (self.quotient - self.reference) / self.leading_order


@dataclass(frozen=True)
class SweepReport:
    rows: tuple
    slopes: dict
    flat_slopes: dict

    @property
    def sign_stable(self):
        slopes = list(self.slopes.values())
        if not slopes or not all(np.isfinite(s) and s != 0.0 for s in slopes):
            return False
        return len({math.copysign(1.0, s) for s in slopes}) == 1


def _sweep_level(job):
    m, bp, p, eps_list, delta, resolution = job
    quotients = {}
    for name, profile in (("curved", bp), ("mirrored", mirrored(bp)), ("flat", flat(r0=bp.r0))):
        grid = flattened_domain(profile, delta, resolution)
        dec = eigenpairs(dirichlet_laplacian(grid))
        values = []
        for eps in eps_list:
            u = trial_function(m, profile, eps, delta, grid=grid)
            values.append(spectral_form(dec, u, p.s) / weighted_norm(u, p) ** 2)
        quotients[name] = np.array(values)
    return resolution, quotients


def _slope(x, y):
    if np.ptp(x) == 0.0:
        return 0.0
    return float(np.polyfit(x, y, 1)[0])


def trial_quotient_sweep(m, bp, p, eps_list, delta, resolutions=(63,), processes=1):
    """Quotients of the trial functions against eps.

    Each quotient is computed for F, for the mirrored profile -F and for the
    flat boundary on grids with identical nodes. The correction is the part
    odd in F, ``(I_F - I_{-F}) / 2``: terms of even order in F (among them
    the flat level and the F'^2 part of the metric) cancel, leaving the
    first-order boundary effect. Its slope against ``|f(eps)| / eps`` is
    negative when the curved boundary lowers the quotient.
    """
    if p.n != 2:
        raise ParameterDomainError("the trial sweep is implemented for n = 2")
    eps_list = sorted(float(e) for e in eps_list)
    jobs = [(m, bp, p, tuple(eps_list), float(delta), int(res)) for res in resolutions]
    results = parallel_map(_sweep_level, jobs, processes)

    eps = np.array(eps_list)
    f_eps = np.array([float(bp.value(_sphere_points(e, p.n)).mean()) for e in eps_list])
    leading = f_eps / eps
    rows = []
    slopes = {}
    flat_slopes = {}
    for resolution, q in results:
        correction = 0.5 * (q["curved"] - q["mirrored"])
        flat_correction = q["curved"] - q["flat"]
        for i, e in enumerate(eps_list):
            rows.append(SweepRow(
                resolution=resolution,
                eps=e,
                quotient=float(q["curved"][i]),
                mirrored_quotient=float(q["mirrored"][i]),
                flat_quotient=float(q["flat"][i]),
                reference=float(m.quotient),
                correction=float(correction[i]),
                flat_correction=float(flat_correction[i]),
                leading_order=float(leading[i]),
            ))
        slopes[resolution] = _slope(np.abs(leading), correction)
        flat_slopes[resolution] = _slope(eps, q["flat"] - m.quotient)
        log.info("sweep N=%d: slope=%.4g flat slope=%.4g corrections=%s",
                 resolution, slopes[resolution], flat_slopes[resolution], np.round(correction, 6))
    return SweepReport(rows=tuple(rows), slopes=slopes, flat_slopes=flat_slopes)
