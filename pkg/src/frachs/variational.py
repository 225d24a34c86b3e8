"""
Quotient minimization and the diagnostics built on it.

``euler_lagrange_iteration`` is the engine shared with the half-space
minimizer: any object with ``coefficients``/``apply_power``/``quadratic_form``
(a spectral decomposition of a positive definite operator) drives it.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from .core import GridFunction, make_grid
from .errors import (
    GridMismatchError,
    IterationDivergedError,
    IterationLimitError,
    ParameterDomainError,
    ResolutionError,
)
from .extension import (
    conormal_derivative,
    extend,
    graded_t_nodes,
    t_gradient_integral,
    weighted_t_integral,
)
from .infrastructure.config import (
    EL_MAX_ITER,
    EL_TOL,
    POHOZAEV_EPS_FACTOR,
    PROJECTION_FLOOR,
    T_RATIO,
)
from .infrastructure.parallel import parallel_map
from .spectral import dirichlet_laplacian, eigenpairs, riesz_form, weighted_norm

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class MinimizeResult:
    params: object
    minimizer: GridFunction
    quotient: float
    history: tuple
    el_residual: float
    positivity_projections: int
    iterations: int

    @property
    def values(self):
        return self.minimizer.values


def _weight(grid, p):
    return grid.radius**p.weight_power


def _q_norm(grid, weight, values, q):
    return float(np.sum(grid.weights * weight * np.abs(values) ** q) ** (1.0 / q))


def quotient_of(calc, u, p):
    """Spectral quotient of ``u`` for any decomposition-like ``calc``."""
    if not np.any(u.values):
        raise ParameterDomainError("the quotient is undefined for u = 0")
    return calc.quadratic_form(u.values, p.s) / weighted_norm(u, p) ** 2


def el_residual(calc, grid, p, values):
    """||A^s u - J W |u|^{q-2} u|| / ||A^s u|| for u normalized in the weighted norm."""
    q = p.two_star_sigma
    weight = _weight(grid, p)
    u = values / _q_norm(grid, weight, values, q)
    lhs = calc.apply_power(u, p.s)
    J = calc.quadratic_form(u, p.s)
    rhs = J * weight * np.abs(u) ** (q - 2.0) * u
    num = np.sqrt(np.dot(grid.weights, (lhs - rhs) ** 2))
    den = np.sqrt(np.dot(grid.weights, lhs**2))
    return float(num / den)


def euler_lagrange_iteration(calc, grid, p, init, tol=EL_TOL, max_iter=EL_MAX_ITER):
    """Fixed-point iteration u <- A^{-s}(W |u|^{q-2} u), renormalized.

    Each step lowers the quotient (Hoelder plus Cauchy-Schwarz), so any
    increase beyond rounding means the operator is not what it claims.
    """
    values = np.asarray(init.values if isinstance(init, GridFunction) else init, dtype=float)
    if values.size != grid.size:
        raise GridMismatchError("initial guess does not match the grid")
    if not np.any(values):
        raise ParameterDomainError("initial guess must be nonzero")
    q = p.two_star_sigma
    weight = _weight(grid, p)

    u = values / _q_norm(grid, weight, values, q)
    J = calc.quadratic_form(u, p.s)
    history = [J]
    projections = 0
    for it in range(1, max_iter + 1):
        g = weight * np.abs(u) ** (q - 2.0) * u
        v = calc.apply_power(g, -p.s)
        negative = v < -PROJECTION_FLOOR * np.max(np.abs(v))
        projections += int(np.count_nonzero(negative))
        v = np.maximum(v, 0.0)
        v /= _q_norm(grid, weight, v, q)
        J_new = calc.quadratic_form(v, p.s)
        if J_new > J * (1.0 + 1e-12):
            history.append(J_new)
            raise IterationDivergedError(
                f"quotient increased at iteration {it}: {J:.12g} -> {J_new:.12g}", history
            )
        decrease = (J - J_new) / J
        u, J = v, J_new
        history.append(J)
        if decrease < tol:
            residual = el_residual(calc, grid, p, u)
            if residual < tol:
                log.info("EL iteration converged in %d steps, quotient=%.10g", it, J)
                return MinimizeResult(
                    params=p,
                    minimizer=GridFunction(grid, u),
                    quotient=J,
                    history=tuple(history),
                    el_residual=residual,
                    positivity_projections=projections,
                    iterations=it,
                )
    raise IterationLimitError(f"no convergence in {max_iter} iterations", history)


def minimize_quotient(dec, p, init, tol=EL_TOL, max_iter=EL_MAX_ITER):
    if init.grid is not dec.grid and init.grid != dec.grid:
        raise GridMismatchError("initial guess and decomposition live on different grids")
    return euler_lagrange_iteration(dec, dec.grid, p, init, tol=tol, max_iter=max_iter)


@dataclass(frozen=True)
class ConcentrationProfile:
    """Shares of the weighted 2*_sigma density around the origin.

    For each radius r: ``inside`` is the mass in |x| < r, ``annulus`` the
    mass in r <= |x| < 2r and ``outside`` the mass in |x| >= 2r.
    """

    radii: tuple
    inside: tuple
    annulus: tuple
    outside: tuple
    median_radius: float


def concentration_profile(u, p, radii=None):
    grid = u.grid
    q = p.two_star_sigma
    density = grid.weights * grid.radius**p.weight_power * np.abs(u.values) ** q
    density = density / np.sum(density)
    r = np.linalg.norm(grid.physical_nodes, axis=1)
    if radii is None:
        extent = max(max(abs(a), abs(b)) for a, b in grid.domain_bounds)
        radii = extent * 2.0 ** -np.arange(1, 8)
    radii = tuple(sorted(float(x) for x in radii))
    inside = tuple(float(np.sum(density[r < x])) for x in radii)
    outside = tuple(float(np.sum(density[r >= 2.0 * x])) for x in radii)
    annulus = tuple(
        float(np.sum(density[(r >= x) & (r < 2.0 * x)])) for x in radii
    )

    order = np.argsort(r, kind="stable")
    cumulative = np.cumsum(density[order])
    median = float(r[order][np.searchsorted(cumulative, 0.5)])
    return ConcentrationProfile(radii, inside, annulus, outside, median)


@dataclass(frozen=True)
class RefinementLevel:
    nodes: int
    h: float
    quotient: float
    riesz_quotient: float
    iterations: int
    projections: int
    el_residual: float
    profile: ConcentrationProfile


@dataclass(frozen=True)
class ConcentrationReport:
    levels: tuple
    radii: tuple = field(default=())
    mass_at_origin: tuple = field(default=())
    mass_at_infinity: tuple = field(default=())

    @property
    def median_mass_radius(self):
        return tuple(level.profile.median_radius for level in self.levels)

    @property
    def quotient_per_refinement(self):
        return tuple(level.quotient for level in self.levels)


def _level_nodes(base, level):
    return (base + 1) * 2**level - 1


def _nonattainment_level(job):
    bounds, nodes, p, tol, max_iter, radii = job
    grid = make_grid(bounds, nodes)
    dec = eigenpairs(dirichlet_laplacian(grid))
    init = GridFunction(grid, np.abs(dec.phis[:, 0]))
    result = minimize_quotient(dec, p, init, tol=tol, max_iter=max_iter)
    u = result.minimizer
    riesz_q = riesz_form(u, p.s) / weighted_norm(u, p) ** 2
    return RefinementLevel(
        nodes=int(np.prod(grid.counts)),
        h=min(grid.h),
        quotient=result.quotient,
        riesz_quotient=float(riesz_q),
        iterations=result.iterations,
        projections=result.positivity_projections,
        el_residual=result.el_residual,
        profile=concentration_profile(u, p, radii),
    )


def nonattainment_diagnostic(bounds, p, levels, base_nodes=63, tol=EL_TOL, max_iter=EL_MAX_ITER,
                             radii=None, processes=1):
    """Minimize on nested refinements of a domain containing the origin.

    Concentration at the origin shows up as a median mass radius that keeps
    shrinking with h while the quotient keeps decreasing.
    """
    bounds = [tuple(b) for b in bounds]
    if not all(a < 0.0 < b for a, b in bounds):
        raise ParameterDomainError("the origin must lie strictly inside the domain")
    if levels < 1:
        raise ParameterDomainError("at least one refinement level is required")
    if radii is None:
        extent = max(max(abs(a), abs(b)) for a, b in bounds)
        radii = tuple(extent * 2.0 ** -np.arange(1, 9))
    jobs = [
        (bounds, _level_nodes(base_nodes, level), p, tol, max_iter, radii)
        for level in range(levels)
    ]
    results = parallel_map(_nonattainment_level, jobs, processes)
    finest = results[-1].profile
    for level in results:
        log.info("level N=%d quotient=%.8g median radius=%.4g",
                 level.nodes, level.quotient, level.profile.median_radius)
    return ConcentrationReport(
        levels=tuple(results),
        radii=finest.radii,
        mass_at_origin=finest.inside,
        mass_at_infinity=finest.outside,
    )


def smoothstep_cutoff(rho, r):
    """phi_r(rho): 1 for rho <= r/2, 0 for rho >= r, quintic in between."""
    x = np.clip((np.asarray(rho, dtype=float) - 0.5 * r) / (0.5 * r), 0.0, 1.0)
    return 1.0 - x**3 * (10.0 - 15.0 * x + 6.0 * x**2)


def smoothstep_cutoff_derivative(rho, r):
    x = np.clip((np.asarray(rho, dtype=float) - 0.5 * r) / (0.5 * r), 0.0, 1.0)
    return -30.0 * x**2 * (1.0 - x) ** 2 / (0.5 * r)


@dataclass(frozen=True)
class PohozaevLedger:
    """Terms of the localized dilation identity B1 + ... + B5 = 0.

    ``final_terms`` holds the same identity rewritten for an Euler-Lagrange
    state v = J^{1/(q-2)} u: boundary_term + sum(final_terms) = 0.
    """

    b_terms: tuple
    boundary_term: float
    eps: float
    h: float
    imbalance: float
    relative_imbalance: float
    truncated_flux: float
    final_terms: tuple
    final_residual: float
    el_residual: float = float("nan")


def _trapezoid_weights(count, h):
    w = np.full(count, h)
    w[[0, -1]] = 0.5 * h
    return w


def pohozaev_terms(u, w, p, eps, quotient=None, residual=float("nan")):
    """Evaluate the localized identity for the trace ``u`` and its extension ``w``.

    One-dimensional domains only. The source is the extension's own flux
    ``-C_s lim t^{1-2s} dw/dt``; ``eps`` is the radius of the cutoff
    ``eta = 1 - phi_eps(|x|)``.
    """
    grid = u.grid
    if grid.dim != 1 or p.n != 1:
        raise ParameterDomainError("the Pohozaev ledger is implemented for n = 1")
    h = grid.h[0]
    if eps < 2.0 * h:
        raise ResolutionError(f"cutoff radius eps={eps:.3g} is below 2h={2 * h:.3g}")

    s = p.s
    a_lo, a_hi = grid.domain_bounds[0]
    x = np.concatenate([[a_lo], grid.axes[0], [a_hi]])
    xw = _trapezoid_weights(x.size, h)
    t = w.full_t
    W = np.zeros((x.size, t.size))
    W[1:-1] = w.full_values

    f = np.zeros(x.size)
    f[1:-1] = conormal_derivative(w, p).values
    eta = 1.0 - smoothstep_cutoff(np.abs(x), eps)
    deta = -smoothstep_cutoff_derivative(np.abs(x), eps) * np.sign(x)

    wx = np.gradient(W, h, axis=0, edge_order=2)
    twt = np.gradient(W, t, axis=1, edge_order=2) * t
    ux = wx[:, 0]

    gx = weighted_t_integral(t, wx**2, s)
    gt = t_gradient_integral(t, W, s)
    grad2 = gx + gt
    mixed = weighted_t_integral(t, wx * twt, s)

    ends = [(0, -1.0), (-1, 1.0)]
    lateral = sum(x[i] * nrm * eta[i] * gx[i] for i, nrm in ends)
    c = p.c_s
    n = p.n

    b1 = float(np.sum(xw * f * x * ux * eta))
    b2 = c * lateral
    b3 = -c * float(np.sum(xw * eta * grad2))
    b4 = -0.5 * c * lateral + 0.5 * c * float(
        np.sum(xw * ((n + 2.0 - 2.0 * s) * eta + x * deta) * grad2)
    )
    b5 = -c * float(np.sum(xw * deta * (x * gx + mixed)))
    b_terms = (b1, b2, b3, b4, b5)
    boundary_term = 0.5 * c * lateral
    imbalance = abs(sum(b_terms))
    scale = sum(abs(b) for b in b_terms)

    last = -1
    wt_last = (W[:, last] - W[:, last - 1]) / (t[last] - t[last - 1])
    flux = t[last] ** (1.0 - 2.0 * s) * wt_last * eta * (x * wx[:, last] + t[last] * wt_last)
    truncated_flux = abs(float(np.sum(xw * flux)))

    if quotient is None or not np.any(W):
        final_terms, final_residual = (), float("nan")
    else:
        v_scale = quotient ** (1.0 / (p.two_star_sigma - 2.0))
        final_terms = _final_identity_terms(x, xw, W[:, 0], eta, deta, grad2, gx, mixed, p, v_scale)
        final_residual = v_scale**2 * boundary_term + sum(final_terms)
    return PohozaevLedger(
        b_terms=b_terms,
        boundary_term=float(boundary_term),
        eps=float(eps),
        h=float(h),
        imbalance=float(imbalance),
        relative_imbalance=float(imbalance / scale) if scale > 0.0 else 0.0,
        truncated_flux=truncated_flux,
        final_terms=final_terms,
        final_residual=float(final_residual),
        el_residual=float(residual),
    )


def _final_identity_terms(x, xw, trace, eta, deta, grad2, gx, mixed, p, scale):
    """B-terms of v = scale * u with B1 integrated by parts against W v^{q-1}."""
    q = p.two_star_sigma
    v = scale * trace
    r = np.maximum(np.abs(x), 0.5 * (x[1] - x[0]))
    weight = r**p.weight_power
    c = p.c_s
    k = 0.5 * (p.n - 2.0 * p.s)
    vq = np.abs(v) ** q
    t1 = -k * float(np.sum(xw * weight * vq * eta))
    t2 = -float(np.sum(xw * weight * vq * x * deta)) / q
    t3 = k * c * scale**2 * float(np.sum(xw * eta * grad2))
    t4 = 0.5 * c * scale**2 * float(np.sum(xw * x * deta * grad2))
    t5 = -c * scale**2 * float(np.sum(xw * deta * (x * gx + mixed)))
    return (t1, t2, t3, t4, t5)


@dataclass(frozen=True)
class PohozaevRefinement:
    ledgers: tuple
    orders: tuple
    t_ratios: tuple


def _pohozaev_level(job):
    bounds, nodes, p, eps, t_ratio, state, tol, max_iter = job
    grid = make_grid(bounds, nodes)
    dec = eigenpairs(dirichlet_laplacian(grid))
    phi1 = GridFunction(grid, np.abs(dec.phis[:, 0]))
    if state == "mode":
        u, quotient, residual = phi1, None, float("nan")
    elif state == "minimizer":
        result = minimize_quotient(dec, p, phi1, tol=tol, max_iter=max_iter)
        u, quotient, residual = result.minimizer, result.quotient, result.el_residual
    else:
        raise ParameterDomainError(f"unknown Pohozaev state {state!r}")
    t_nodes = graded_t_nodes(dec.lambdas[0], dec.lambdas[-1], p.s, t_ratio=t_ratio)
    w = extend(dec, u, p, t_nodes)
    return pohozaev_terms(u, w, p, eps, quotient=quotient, residual=residual)


def pohozaev_refinement(p, bounds, base_nodes, levels, eps, t_ratio=T_RATIO, state="mode",
                        eps_schedule="halve", tol=EL_TOL, max_iter=EL_MAX_ITER, processes=1):
    """Ledgers under simultaneous halving of h and t_ratio - 1.

    ``eps_schedule="halve"`` halves the cutoff radius with h; ``"fixed"``
    keeps it, which is the schedule for minimizers concentrating at the
    origin. The radius never drops below ``POHOZAEV_EPS_FACTOR * h``.
    """
    if levels < 2:
        raise ParameterDomainError("an order needs at least two levels")
    if eps_schedule not in ("halve", "fixed"):
        raise ParameterDomainError(f"unknown cutoff schedule {eps_schedule!r}; expected 'halve' or 'fixed'")
    jobs = []
    ratios = []
    for level in range(levels):
        nodes = _level_nodes(base_nodes, level)
        h = min((b - a) / (nodes + 1) for a, b in bounds)
        user_eps = eps * 2.0**-level if eps_schedule == "halve" else eps
        level_eps = max(POHOZAEV_EPS_FACTOR * h, user_eps)
        ratio = 1.0 + (t_ratio - 1.0) * 2.0**-level
        ratios.append(ratio)
        jobs.append((bounds, nodes, p, level_eps, ratio, state, tol, max_iter))
    ledgers = parallel_map(_pohozaev_level, jobs, processes)
    imbalances = np.array([ledger.imbalance for ledger in ledgers])
    orders = tuple(float(x) for x in np.log2(imbalances[:-1] / imbalances[1:]))
    log.info("Pohozaev imbalances %s, orders %s", imbalances, orders)
    return PohozaevRefinement(ledgers=tuple(ledgers), orders=orders, t_ratios=tuple(ratios))
