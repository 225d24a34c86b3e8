import numpy as np
import pytest

from frachs.core import GridFunction, extension_constant, make_grid, make_params
from frachs.errors import GridError, GridMismatchError, NumericalFailure, ParameterDomainError


def test_derived_exponents(params_3d):
    p = params_3d
    assert p.two_star_sigma == pytest.approx(2.4)
    assert p.two_star_s == pytest.approx(3.0)
    assert p.weight_power == pytest.approx(-0.6)
    assert p.y_frak == pytest.approx(1.0)
    assert p.q_frak == pytest.approx(0.25 * 2.0 / 2.5)


def test_extension_constant_at_one_half():
    assert extension_constant(0.5) == pytest.approx(1.0)


@pytest.mark.parametrize(
    "n, s, sigma",
    [(3, 0.5, 0.5), (3, 0.5, 0.0), (3, 1.0, 0.5), (3, 0.0, 0.1), (2, 0.5, 0.6)],
)
def test_rejects_parameters_outside_domain(n, s, sigma):
    with pytest.raises(ParameterDomainError):
        make_params(n, s, sigma)


def test_endpoint_and_dimension_switches():
    p = make_params(3, 0.5, 0.5, allow_endpoint=True)
    assert p.weight_power == pytest.approx(0.0)
    with pytest.raises(ParameterDomainError):
        make_params(1, 0.4, 0.2)
    assert make_params(1, 0.4, 0.2, min_dim=1).n == 1
    with pytest.raises(ParameterDomainError):
        make_params(1, 0.6, 0.2, min_dim=1)


def test_grid_nodes_and_spacing():
    grid = make_grid([(0.0, 1.0), (0.0, 2.0)], (3, 5))
    assert grid.h == pytest.approx((0.25, 1.0 / 3.0))
    assert grid.nodes.shape == (15, 2)
    assert grid.weights.sum() == pytest.approx(15 * 0.25 / 3.0)
    assert grid.origin_policy == "none"


def test_origin_node_is_shifted():
    grid = make_grid([(-1.0, 1.0)], 63)
    assert grid.offset == (True,)
    assert np.min(np.abs(grid.axes[0])) == pytest.approx(0.5 * grid.h[0])
    assert not make_grid([(-1.0, 1.0)], 62).offset[0]
    assert make_grid([(-1.0, 1.0)], 63, origin_policy="none").origin_policy == "none"


@pytest.mark.parametrize(
    "spec, resolution",
    [([(0.0, 1.0)], 2), ([(1.0, 0.0)], 10), ([(0.0, 1.0)] * 3, 10), ([(0.0, np.inf)], 10)],
)
def test_bad_grids(spec, resolution):
    with pytest.raises(GridError):
        make_grid(spec, resolution)


def test_grid_function_guards():
    grid = make_grid([(0.0, 1.0)], 9)
    u = GridFunction.from_callable(grid, np.sin)
    with pytest.raises(ValueError):
        u.values[0] = 1.0
    with pytest.raises(GridMismatchError):
        GridFunction(grid, np.ones(8))
    with pytest.raises(NumericalFailure):
        GridFunction(grid, np.full(9, np.nan))
    other = GridFunction(make_grid([(0.0, 2.0)], 9), np.ones(9))
    with pytest.raises(GridMismatchError):
        u + other
    assert (2.0 * u).norm() == pytest.approx(2.0 * u.norm())


def test_gamma_identities():
    from scipy.special import gamma

    x = np.linspace(0.05, 9.5, 40)
    assert gamma(x + 1.0) == pytest.approx(x * gamma(x), rel=1e-12)
    y = np.linspace(0.05, 0.95, 19)
    assert gamma(y) * gamma(1.0 - y) == pytest.approx(np.pi / np.sin(np.pi * y), rel=1e-12)


def test_reference_parameter_values():
    p = make_params(3, 0.75, 0.5)
    assert p.two_star_sigma == pytest.approx(3.0)
    assert p.q_frak == pytest.approx(0.375)
    assert make_params(2, 0.5, 0.25).c_s == pytest.approx(1.0)


def test_trapezoid_weights_sum_to_the_volume():
    grid = make_grid([(0.0, np.pi), (-1.0, 2.0)], (40, 17))
    assert grid.trapezoid_volume() == pytest.approx(3.0 * np.pi, rel=1e-12)
    assert make_grid([(0.0, 1.0), (0.0, 1.0)], 32).size == 1024
