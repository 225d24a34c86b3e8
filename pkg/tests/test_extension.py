import numpy as np
import pytest

from frachs.core import GridFunction, make_params
from frachs.errors import ParameterDomainError
from frachs.extension import (
    bessel_k,
    bessel_k_array,
    bessel_k_large,
    bessel_k_small,
    conormal_derivative,
    extend,
    extension_energy,
    extension_profile,
    graded_t_nodes,
    perturbed_competitor,
    richardson_energy,
    t_gradient_integral,
    weighted_t_integral,
)
from frachs.spectral import spectral_form


@pytest.mark.parametrize("tau", [0.05, 0.7, 1.9, 2.1, 3.0, 10.0])
def test_half_order_closed_form(tau):
    exact = np.sqrt(np.pi / (2.0 * tau)) * np.exp(-tau)
    assert bessel_k(0.5, tau) == pytest.approx(exact, rel=1e-8)


def test_array_evaluation_matches_scalar():
    taus = np.geomspace(0.01, 20.0, 25)
    values = bessel_k_array(0.3, taus)
    assert values == pytest.approx([bessel_k(0.3, t) for t in taus], rel=1e-14)
    assert np.all(np.diff(values) < 0.0)


def test_asymptotic_laws():
    assert bessel_k(0.7, 1e-3) / bessel_k_small(0.7, 1e-3, terms=2) == pytest.approx(1.0, abs=0.01)
    assert bessel_k(0.3, 1e-3) / bessel_k_small(0.3, 1e-3, terms=2) == pytest.approx(1.0, abs=0.01)
    assert bessel_k(0.3, 25.0) / bessel_k_large(0.3, 25.0) == pytest.approx(1.0, abs=0.01)


@pytest.mark.parametrize("nu, tau", [(0.0, 1.0), (1.0, 1.0), (0.5, 0.0), (0.5, -1.0)])
def test_bessel_domain(nu, tau):
    with pytest.raises(ParameterDomainError):
        bessel_k(nu, tau)


def test_profile_starts_at_one_and_decays():
    tau = np.array([0.0, 1e-6, 0.5, 2.0, 8.0])
    psi = extension_profile(0.4, tau)
    assert psi[0] == 1.0
    assert psi[1] == pytest.approx(1.0, abs=1e-3)
    assert np.all(np.diff(psi) < 0.0)
    assert extension_profile(0.5, np.array([1.3]))[0] == pytest.approx(np.exp(-1.3), rel=1e-8)


def test_exact_moment_quadratures():
    t = np.concatenate([[0.0], np.geomspace(1e-3, 4.0, 30)])
    s = 0.3
    e = 2.0 - 2.0 * s
    assert weighted_t_integral(t, np.ones_like(t), s) == pytest.approx(4.0**e / e, rel=1e-12)
    assert t_gradient_integral(t, 3.0 * t, s) == pytest.approx(9.0 * 4.0**e / e, rel=1e-12)


def test_graded_nodes():
    t = graded_t_nodes(1.0, 100.0, 0.5, t_ratio=1.2)
    assert t[0] == pytest.approx(1e-4 / 10.0)
    assert np.diff(np.log(t)) == pytest.approx(np.full(t.size - 1, np.log(1.2)))
    assert extension_profile(0.5, np.array([t[-1]]))[0] < 1e-13
    with pytest.raises(ParameterDomainError):
        graded_t_nodes(1.0, 100.0, 0.5, t_ratio=1.0)
    with pytest.raises(ParameterDomainError):
        graded_t_nodes(2.0, 1.0, 0.5)


def _extension(dec, s, coefficients):
    p = make_params(2, s, 0.5 * s)
    u = GridFunction(dec.grid, dec.phis[:, : len(coefficients)] @ np.asarray(coefficients))
    t = graded_t_nodes(dec.lambdas[0], dec.lambdas[-1], s)
    return p, u, extend(dec, u, p, t)


def test_energy_identity_at_one_half(interval_decomposition):
    p, u, w = _extension(interval_decomposition, 0.5, [1.0, -0.5, 0.25])
    energy, error = richardson_energy(w)
    form = spectral_form(interval_decomposition, u, 0.5)
    assert p.c_s * energy == pytest.approx(form, rel=0.02)
    assert error < 0.05 * energy


def test_trace_is_kept_and_competitor_costs_more(interval_decomposition, rng):
    _, u, w = _extension(interval_decomposition, 0.4, [1.0, 0.3])
    assert np.array_equal(w.trace, u.values)
    competitor = perturbed_competitor(w, interval_decomposition, rng)
    assert np.array_equal(competitor.trace, w.trace)
    assert extension_energy(competitor) > extension_energy(w)


def test_conormal_derivative_of_a_mode(interval_decomposition):
    dec = interval_decomposition
    p, u, w = _extension(dec, 0.5, [2.0])
    flux = conormal_derivative(w, p)
    expected = 2.0 * np.sqrt(dec.lambdas[0]) * dec.phis[:, 0]
    assert np.max(np.abs(flux.values - expected)) < 1e-4 * np.max(np.abs(expected))


def test_extend_rejects_bad_nodes(interval_decomposition):
    p = make_params(2, 0.5, 0.25)
    u = GridFunction(interval_decomposition.grid, interval_decomposition.phis[:, 0])
    with pytest.raises(ParameterDomainError):
        extend(interval_decomposition, u, p, [0.0, 1.0])
    with pytest.raises(ParameterDomainError):
        extend(interval_decomposition, u, p, [1.0, 0.5])


@pytest.mark.parametrize("s", [0.3, 0.7])
def test_energy_identity_away_from_one_half(interval_decomposition, s):
    dec = interval_decomposition
    p = make_params(2, s, 0.5 * s)
    u = GridFunction(dec.grid, dec.phis[:, :3] @ np.array([1.0, -0.5, 0.25]))
    w = extend(dec, u, p, graded_t_nodes(dec.lambdas[0], dec.lambdas[-1], s, t_ratio=1.05))
    energy, error = richardson_energy(w)
    assert p.c_s * energy == pytest.approx(spectral_form(dec, u, s), rel=0.01)
    assert error < 0.05 * energy


def test_modes_decouple_in_the_energy(interval_decomposition):
    dec = interval_decomposition
    p = make_params(2, 0.4, 0.2)
    t = graded_t_nodes(dec.lambdas[0], dec.lambdas[-1], p.s)

    def energy(values):
        return extension_energy(extend(dec, GridFunction(dec.grid, values), p, t))

    first, third = dec.phis[:, 0], dec.phis[:, 2]
    combined = energy(2.0 * first - 3.0 * third)
    assert combined == pytest.approx(4.0 * energy(first) + 9.0 * energy(third), rel=1e-9)


def test_extension_decays_away_from_the_trace(interval_decomposition):
    dec = interval_decomposition
    _, _, w = _extension(dec, 0.4, [1.0, 0.3])
    far = w.t_nodes >= 1.0 / np.sqrt(dec.lambdas[0])
    sup = w.sup_profile()[far]
    assert sup.size > 3
    assert np.all(np.diff(sup) <= 1e-12 * sup[0])
    assert sup[0] <= np.max(np.abs(w.trace))
