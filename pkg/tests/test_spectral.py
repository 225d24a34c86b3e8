import numpy as np
import pytest

from frachs.core import GridFunction, make_grid
from frachs.errors import GridMismatchError, ParameterDomainError
from frachs.spectral import (
    dirichlet_laplacian,
    bump,
    eigenpairs,
    max_principle_margin,
    random_bumps,
    rayleigh_quotient,
    riesz_form,
    spectral_form,
    weighted_norm,
)


def test_interval_eigenvalues_match_the_discrete_formula(interval_decomposition):
    dec = interval_decomposition
    h = dec.grid.h[0]
    k = np.arange(1, 6)
    exact = 4.0 / h**2 * np.sin(0.5 * k * h) ** 2
    assert dec.lambdas[:5] == pytest.approx(exact, rel=1e-9)
    assert dec.complete


def test_modes_are_orthonormal_in_the_grid_inner_product(interval_decomposition):
    dec = interval_decomposition
    gram = dec.phis[:, :6].T @ (dec.grid.weights[:, None] * dec.phis[:, :6])
    assert np.max(np.abs(gram - np.eye(6))) < 1e-10


def test_spectral_form_of_a_single_mode(interval_decomposition):
    dec = interval_decomposition
    u = GridFunction(dec.grid, 3.0 * dec.phis[:, 1])
    assert spectral_form(dec, u, 0.4) == pytest.approx(9.0 * dec.lambdas[1] ** 0.4, rel=1e-10)


def test_power_one_recovers_the_operator_energy(interval_decomposition):
    dec = interval_decomposition
    u = GridFunction.from_callable(dec.grid, lambda x: x * (np.pi - x))
    energy = dec.grid.inner(dec.operator.apply(u.values), u.values)
    assert spectral_form(dec, u, 1.0) == pytest.approx(energy, rel=1e-10)


def test_square_separates():
    grid = make_grid([(0.0, 1.0), (0.0, 1.0)], 12)
    dec = eigenpairs(dirichlet_laplacian(grid))
    h = grid.h[0]
    first = 2.0 * 4.0 / h**2 * np.sin(0.5 * np.pi * h) ** 2
    assert dec.lambdas[0] == pytest.approx(first, rel=1e-10)


def test_partial_decomposition_keeps_the_bottom():
    grid = make_grid([(0.0, 1.0)], 40)
    op = dirichlet_laplacian(grid)
    full = eigenpairs(op)
    part = eigenpairs(op, k=5)
    assert not part.complete
    assert part.lambdas == pytest.approx(full.lambdas[:5], rel=1e-10)
    with pytest.raises(ParameterDomainError):
        eigenpairs(op, k=0)


def test_maximum_principle_on_nonnegative_data(interval_decomposition, rng):
    dec = interval_decomposition
    for u in random_bumps(dec.grid, 5, rng):
        assert max_principle_margin(dec, abs(u), 0.5) >= -1e-12


def test_bumps_stay_inside_the_box(rng):
    grid = make_grid([(0.0, 1.0), (0.0, 1.0)], 20)
    for u in random_bumps(grid, 4, rng):
        values = u.reshaped()
        assert np.all(values[0] == 0.0) and np.all(values[-1] == 0.0)
        assert np.all(values >= 0.0) and np.max(values) > 0.0


def test_riesz_form_rejects_a_small_torus(interval_decomposition):
    u = GridFunction(interval_decomposition.grid, interval_decomposition.phis[:, 0])
    with pytest.raises(ParameterDomainError):
        riesz_form(u, 0.5, torus_factor=1)
    assert riesz_form(u, 0.5) > 0.0


def test_weighted_norm_scales_linearly(params_1d):
    grid = make_grid([(-1.0, 1.0)], 31)
    u = GridFunction.from_callable(grid, lambda x: 1.0 - x**2)
    assert weighted_norm(2.5 * u, params_1d) == pytest.approx(2.5 * weighted_norm(u, params_1d))


def test_mismatched_grid_is_rejected(interval_decomposition):
    other = GridFunction(make_grid([(0.0, 1.0)], 100), np.ones(100))
    with pytest.raises(GridMismatchError):
        spectral_form(interval_decomposition, other, 0.5)


def test_rayleigh_quotient_is_scale_invariant(interval_decomposition, params_1d):
    from frachs.variational import quotient_of

    dec = interval_decomposition
    u = GridFunction.from_callable(dec.grid, lambda x: np.sin(x) ** 2)
    q = rayleigh_quotient(dec, u, params_1d)
    assert q > 0.0
    assert rayleigh_quotient(dec, 4.0 * u, params_1d) == pytest.approx(q, rel=1e-10)
    assert quotient_of(dec, u, params_1d) == pytest.approx(q, rel=1e-10)
    with pytest.raises(ParameterDomainError):
        rayleigh_quotient(dec, GridFunction.zeros(dec.grid), params_1d)


@pytest.mark.parametrize("s", [0.3, 0.5, 0.8])
def test_modulus_lowers_the_form_on_an_interval(interval_decomposition, params_1d, s):
    dec = interval_decomposition
    u = GridFunction(dec.grid, dec.phis[:, 1] + 0.4 * dec.phis[:, 0] - 0.2 * dec.phis[:, 3])
    assert np.any(u.values < 0.0)
    assert spectral_form(dec, abs(u), s) <= spectral_form(dec, u, s)
    assert weighted_norm(abs(u), params_1d) == pytest.approx(weighted_norm(u, params_1d))
    assert rayleigh_quotient(dec, abs(u), params_1d) <= rayleigh_quotient(dec, u, params_1d)


def test_modulus_lowers_the_form_on_a_square(params_2d, rng):
    grid = make_grid([(-1.0, 1.0), (-1.0, 1.0)], 15)
    dec = eigenpairs(dirichlet_laplacian(grid))
    for _ in range(3):
        u = GridFunction(grid, dec.phis[:, :8] @ rng.normal(size=8))
        assert rayleigh_quotient(dec, abs(u), params_2d) <= rayleigh_quotient(dec, u, params_2d)


def test_riesz_form_at_power_one_is_the_dirichlet_energy(interval_decomposition):
    dec = interval_decomposition
    u = GridFunction(dec.grid, bump(dec.grid.nodes[:, 0], 0.5 * np.pi, 1.0))
    energy = dec.grid.inner(dec.operator.apply(u.values), u.values)
    assert riesz_form(u, 1.0) == pytest.approx(energy, rel=0.02)


def test_riesz_form_scaling():
    narrow = make_grid([(-1.0, 1.0)], 63)
    wide = make_grid([(-2.0, 2.0)], 63)
    values = bump(narrow.nodes[:, 0], 0.0, 0.6)
    s = 0.3
    # same samples on a grid twice as wide: u_wide(x) = u_narrow(x / 2)
    assert riesz_form(GridFunction(wide, values), s) == pytest.approx(
        2.0 ** (1.0 - 2.0 * s) * riesz_form(GridFunction(narrow, values), s), rel=1e-10
    )
    assert riesz_form(GridFunction(narrow, 3.0 * values), s) == pytest.approx(
        9.0 * riesz_form(GridFunction(narrow, values), s), rel=1e-10
    )


def test_concentrating_bumps_approach_the_riesz_form():
    grid = make_grid([(-1.0, 1.0)], 511)
    dec = eigenpairs(dirichlet_laplacian(grid))
    x = grid.nodes[:, 0]
    # s = 1/2 in one dimension: u(rho x) has a rho-independent whole-space form
    forms, gaps = [], []
    for rho in (2.0, 4.0, 8.0):
        u = GridFunction(grid, bump(rho * x, 0.0, 0.5))
        form = spectral_form(dec, u, 0.5)
        forms.append(form)
        gaps.append(abs(form - riesz_form(u, 0.5)))
    assert forms[0] > forms[1] > forms[2]
    assert gaps[2] < gaps[0]
