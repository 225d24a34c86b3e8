import numpy as np
import pytest

from frachs.core import make_params
from frachs.errors import ParameterDomainError, ResolutionError
from frachs.geometry import (
    BoundaryProfile,
    MappedGrid,
    canonical_minimizer,
    convex,
    correction_integrals,
    curvature_functionals,
    flat,
    flatten_map,
    flattened_domain,
    mirrored,
    power_law,
    power_log,
    profile_from_config,
    trial_function,
    trial_quotient_sweep,
)
from frachs.halfspace import halfspace_minimizer
from frachs.spectral import dirichlet_laplacian, eigenpairs, weighted_norm

TAUS = np.geomspace(1e-3, 1e-1, 12)


@pytest.fixture(scope="module")
def small_minimizer():
    return halfspace_minimizer(make_params(2, 0.5, 0.25), 8.0, 16, tol=1e-6)


def test_paraboloid_closed_forms(params_3d):
    cr = curvature_functionals(power_law(2.0), TAUS, params_3d)
    assert cr.f == pytest.approx(-(TAUS**2), rel=1e-10)
    assert cr.f1 == pytest.approx(TAUS**4, rel=1e-10)
    assert cr.f2 == pytest.approx(4.0 * TAUS**2, rel=1e-10)
    assert cr.f3 == pytest.approx(2.0 * TAUS, rel=1e-10)
    assert cr.alpha_hat == pytest.approx(2.0, abs=1e-8)
    assert cr.admissible
    assert cr.cauchy_schwarz_margin >= -1e-12 * np.max(cr.f2)


@pytest.mark.parametrize("alpha", [1.5, 2.5])
def test_power_index_in_the_plane(params_2d, alpha):
    cr = curvature_functionals(power_law(alpha), TAUS, params_2d)
    assert cr.alpha_hat == pytest.approx(alpha, abs=1e-8)
    assert cr.concave and cr.rv_ok and cr.cond_ok and cr.f1_ok


def test_convex_control_is_not_concave(params_3d):
    cr = curvature_functionals(convex(), TAUS, params_3d)
    assert not cr.concave
    assert not cr.admissible


def test_power_log_profile_is_concave(params_3d):
    cr = curvature_functionals(power_log(2.0, 1.0), np.geomspace(1e-4, 1e-2, 12), params_3d)
    assert cr.concave
    assert cr.alpha_hat == pytest.approx(2.0, abs=0.2)


def test_profile_validation(params_3d):
    with pytest.raises(ParameterDomainError):
        power_law(1.0)
    with pytest.raises(ParameterDomainError):
        BoundaryProfile(lambda x: np.ones(len(x)), lambda x: np.zeros_like(x), 1.0)
    with pytest.raises(ParameterDomainError):
        profile_from_config({"kind": "wedge"})
    with pytest.raises(ParameterDomainError):
        profile_from_config({"kind": "power", "beta": 2.0})
    with pytest.raises(ParameterDomainError):
        curvature_functionals(power_law(2.0), [0.1, 0.5, 1.5], params_3d)
    with pytest.raises(ParameterDomainError):
        curvature_functionals(power_law(2.0), TAUS, make_params(4, 0.5, 0.25))
    assert profile_from_config({"kind": "power", "alpha": 1.5}).name.startswith("power")


def test_flattening_round_trip(rng):
    theta = flatten_map(power_law(2.0), 0.1)
    x = np.column_stack([rng.uniform(-0.05, 0.05, (20, 2)), rng.uniform(0.0, 0.05, 20)])
    assert theta.inverse(theta.forward(x)) == pytest.approx(x, abs=1e-14)
    X = np.column_stack([x, rng.uniform(0.0, 1.0, 20)])
    assert theta.inverse_extended(theta.forward_extended(X)) == pytest.approx(X, abs=1e-14)
    assert theta.jacobian(3) == pytest.approx(1e3)
    assert theta.jacobian_extended(3) == pytest.approx(1e4)
    boundary = np.column_stack([x[:, :2], -np.sum(x[:, :2] ** 2, axis=1)])
    assert theta.forward(boundary)[:, -1] == pytest.approx(np.zeros(20), abs=1e-14)
    with pytest.raises(ParameterDomainError):
        theta.inverse(np.array([[20.0, 0.0, 0.0]]))
    with pytest.raises(ParameterDomainError):
        flatten_map(power_law(2.0), 0.0)


def test_mapped_grid_reduces_to_the_flat_operator():
    curved = flattened_domain(flat(), 0.5, 9)
    assert isinstance(curved, MappedGrid)
    plain = eigenpairs(dirichlet_laplacian(curved))
    h = curved.h
    first = sum(4.0 / hh**2 * np.sin(0.5 * np.pi * hh / (b - a)) ** 2 for hh, (a, b) in zip(h, curved.bounds))
    assert plain.lambdas[0] == pytest.approx(first, rel=1e-10)


def test_mapped_operator_is_symmetric_positive():
    grid = flattened_domain(power_law(2.0), 0.5, 9)
    A = dirichlet_laplacian(grid).matrix.toarray()
    assert np.max(np.abs(A - A.T)) < 1e-10 * np.max(np.abs(A))
    assert np.min(np.linalg.eigvalsh(A)) > 0.0
    physical = grid.physical_nodes
    assert physical[:, 1] == pytest.approx(grid.nodes[:, 1] - grid.nodes[:, 0] ** 2)


def test_trial_function_guards(small_minimizer):
    m = small_minimizer
    grid = flattened_domain(power_law(2.0), 0.5, 15)
    u = trial_function(m, power_law(2.0), 0.2, 0.5, grid=grid)
    assert u.grid is grid
    assert np.all(u.values >= 0.0) and np.max(u.values) > 0.0
    with pytest.raises(ResolutionError):
        trial_function(m, power_law(2.0), 0.5 * max(grid.h), 0.5, grid=grid)
    with pytest.raises(ParameterDomainError):
        flattened_domain(power_law(2.0, r0=0.4), 0.5, 15)


def test_mirrored_profile_flips_the_sign(rng):
    bp = power_law(2.0)
    x = rng.uniform(-0.5, 0.5, (10, 1))
    assert mirrored(bp).value(x) == pytest.approx(-bp.value(x))
    assert mirrored(bp).grad(x) == pytest.approx(-bp.grad(x))
    assert mirrored(bp).r0 == bp.r0


def test_integer_resolution_gives_square_cells():
    grid = flattened_domain(power_law(2.0), 0.6, 47)
    assert tuple(grid.counts) == (47, 23)
    assert grid.h[0] == pytest.approx(grid.h[1])
    assert tuple(flattened_domain(power_law(2.0), 0.6, (9, 5)).counts) == (9, 5)


def test_trial_function_support_and_scaling(small_minimizer):
    m = small_minimizer
    p = m.params
    delta = 0.6
    grid = flattened_domain(flat(), delta, 47)
    eps = 0.1
    u = trial_function(m, flat(), eps, delta, grid=grid)
    y = grid.nodes
    r = np.linalg.norm(y, axis=1)
    assert np.all(u.values >= 0.0)
    assert np.all(u.values[r >= delta] == 0.0)
    core = r <= 0.5 * delta
    expected = eps ** (-0.5 * (p.n - 2.0 * p.s)) * canonical_minimizer(m, np.abs(y[core, 0]) / eps, y[core, 1] / eps)
    assert u.values[core] == pytest.approx(expected, rel=1e-12)
    assert 0.6 < weighted_norm(u, p) < 1.1


def test_correction_integrals_are_positive(small_minimizer):
    p = small_minimizer.params
    ci = correction_integrals(small_minimizer, p, 2.0)
    assert ci.c1 > 0.0 and ci.c2 > 0.0
    assert np.isfinite([ci.c1_error, ci.c2_error]).all()
    assert ci.scale > 0.0
    with pytest.raises(ParameterDomainError):
        correction_integrals(small_minimizer, p, 0.5)
    with pytest.raises(ParameterDomainError):
        correction_integrals(small_minimizer, p, p.n - 2.0 * p.s + 3.0)


def test_curved_boundary_lowers_the_trial_quotient(small_minimizer):
    p = small_minimizer.params
    report = trial_quotient_sweep(small_minimizer, power_law(2.0), p, [0.18, 0.12], 0.6, resolutions=(47,))
    corrections = [row.correction for row in report.rows]
    assert [row.eps for row in report.rows] == [0.12, 0.18]
    assert max(corrections) < 0.0
    assert report.slopes[47] < 0.0
    assert report.sign_stable
    for row in report.rows:
        assert row.leading_order == pytest.approx(-row.eps)


def test_flat_boundary_has_no_correction(small_minimizer):
    p = small_minimizer.params
    report = trial_quotient_sweep(small_minimizer, flat(), p, [0.12, 0.18], 0.6, resolutions=(31,))
    for row in report.rows:
        assert row.correction == pytest.approx(0.0, abs=1e-12)
        assert row.flat_correction == pytest.approx(0.0, abs=1e-12)
        assert np.isnan(row.scaled_excess)
    assert not report.sign_stable
