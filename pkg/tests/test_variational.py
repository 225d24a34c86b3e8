import numpy as np
import pytest

from frachs.core import GridFunction, make_grid
from frachs.errors import ParameterDomainError, ResolutionError
from frachs.extension import extend, graded_t_nodes
from frachs.spectral import dirichlet_laplacian, eigenpairs, weighted_norm
from frachs.variational import (
    concentration_profile,
    minimize_quotient,
    nonattainment_diagnostic,
    pohozaev_refinement,
    pohozaev_terms,
    quotient_of,
    smoothstep_cutoff,
    smoothstep_cutoff_derivative,
)


@pytest.fixture(scope="module")
def symmetric_decomposition():
    grid = make_grid([(-1.0, 1.0)], 31)
    return eigenpairs(dirichlet_laplacian(grid))


def test_cutoff_shape():
    r = 2.0
    assert smoothstep_cutoff(np.array([0.0, 1.0]), r) == pytest.approx([1.0, 1.0])
    assert smoothstep_cutoff(1.5, r) == pytest.approx(0.5)
    assert smoothstep_cutoff(np.array([2.0, 3.0]), r) == pytest.approx([0.0, 0.0])
    rho = np.linspace(1.05, 1.95, 7)
    h = 1e-6
    fd = (smoothstep_cutoff(rho + h, r) - smoothstep_cutoff(rho - h, r)) / (2.0 * h)
    assert smoothstep_cutoff_derivative(rho, r) == pytest.approx(fd, rel=1e-6)


def test_minimizer_on_an_interval(symmetric_decomposition, params_1d):
    dec = symmetric_decomposition
    init = GridFunction(dec.grid, np.abs(dec.phis[:, 0]))
    result = minimize_quotient(dec, params_1d, init, tol=1e-6)
    history = np.array(result.history)
    assert np.all(np.diff(history) <= 1e-12 * history[:-1])
    assert result.quotient <= quotient_of(dec, init, params_1d)
    assert np.all(result.values >= 0.0)
    assert weighted_norm(result.minimizer, params_1d) == pytest.approx(1.0, rel=1e-10)
    assert result.el_residual < 1e-6


def test_quotient_of_zero_is_rejected(symmetric_decomposition, params_1d):
    with pytest.raises(ParameterDomainError):
        quotient_of(symmetric_decomposition, GridFunction.zeros(symmetric_decomposition.grid), params_1d)


def test_concentration_shares_add_up(symmetric_decomposition, params_1d):
    u = GridFunction(symmetric_decomposition.grid, np.abs(symmetric_decomposition.phis[:, 0]))
    profile = concentration_profile(u, params_1d, radii=(0.1, 0.2, 0.4))
    for inside, annulus, outside in zip(profile.inside, profile.annulus, profile.outside):
        assert inside + annulus + outside == pytest.approx(1.0)
    assert np.all(np.diff(profile.inside) >= 0.0)
    assert 0.0 < profile.median_radius < 1.0


def test_pohozaev_ledger_of_the_first_mode(symmetric_decomposition, params_1d):
    dec = symmetric_decomposition
    u = GridFunction(dec.grid, np.abs(dec.phis[:, 0]))
    w = extend(dec, u, params_1d, graded_t_nodes(dec.lambdas[0], dec.lambdas[-1], params_1d.s))
    ledger = pohozaev_terms(u, w, params_1d, 0.5)
    assert len(ledger.b_terms) == 5
    assert ledger.boundary_term >= 0.0
    assert 0.0 <= ledger.relative_imbalance <= 1.0
    assert ledger.final_terms == ()
    with pytest.raises(ResolutionError):
        pohozaev_terms(u, w, params_1d, 1.5 * dec.grid.h[0])


def test_nonattainment_levels(params_1d):
    report = nonattainment_diagnostic([(-1.0, 1.0)], params_1d, 2, base_nodes=15, tol=1e-6)
    assert [level.nodes for level in report.levels] == [15, 31]
    assert len(report.median_mass_radius) == 2
    quotients = report.quotient_per_refinement
    assert all(q > 0.0 for q in quotients)
    assert quotients[1] < quotients[0]
    for level in report.levels:
        assert level.quotient >= level.riesz_quotient
    with pytest.raises(ParameterDomainError):
        nonattainment_diagnostic([(0.0, 1.0)], params_1d, 2)


def test_pohozaev_order_for_the_first_mode(params_1d):
    ref = pohozaev_refinement(params_1d, [(-1.0, 1.0)], 31, 3, 0.5, state="mode", eps_schedule="halve")
    assert len(ref.orders) == 2
    assert min(ref.orders) >= 0.9
    assert all(ledger.boundary_term >= 0.0 for ledger in ref.ledgers)
    assert ref.t_ratios[0] > ref.t_ratios[1] > ref.t_ratios[2] > 1.0


def test_pohozaev_ledger_of_the_minimizer_closes(params_1d):
    ref = pohozaev_refinement(params_1d, [(-1.0, 1.0)], 31, 2, 0.5, state="minimizer",
                              eps_schedule="fixed", tol=1e-7)
    assert [ledger.eps for ledger in ref.ledgers] == [0.5, 0.5]
    assert ref.ledgers[1].imbalance < ref.ledgers[0].imbalance
    assert all(ledger.el_residual < 1e-6 for ledger in ref.ledgers)


def test_pohozaev_schedule_is_validated(params_1d):
    with pytest.raises(ParameterDomainError):
        pohozaev_refinement(params_1d, [(-1.0, 1.0)], 15, 2, 0.5, eps_schedule="shrink")
    with pytest.raises(ParameterDomainError):
        pohozaev_refinement(params_1d, [(-1.0, 1.0)], 15, 1, 0.5)
