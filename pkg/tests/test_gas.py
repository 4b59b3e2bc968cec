import numpy as np
import pytest
from scipy.integrate import quad

from transonic.exceptions import DomainError
from transonic.gas import GasModel, bernoulli_residual


def test_critical_and_cavitation_speeds(gases):
    for g, gas in gases.items():
        assert gas.q_cr == pytest.approx(np.sqrt(2 / (g + 1)), rel=1e-15)
        if g == 1.0:
            assert np.isinf(gas.q_cav)
        else:
            assert gas.q_cav == pytest.approx(np.sqrt(2 / (g - 1)), rel=1e-15)
            assert gas.density(gas.q_cav) == pytest.approx(0.0, abs=1e-12)


def test_density_closed_forms(gases, rng):
    q = rng.uniform(0, 1.2, 200)
    assert np.allclose(gases[1.0].density(q), np.exp(-q * q / 2), rtol=1e-14)
    g = 1.4
    assert np.allclose(gases[g].density(q), (1 - (g - 1) / 2 * q * q) ** (1 / (g - 1)), rtol=1e-13)


def test_sonic_point_is_mach_one(gases):
    for gas in gases.values():
        assert gas.mach(gas.q_cr) == pytest.approx(1.0, rel=1e-14)
        assert gas.mach(0.5 * gas.q_cr) < 1 < gas.mach(1.1 * gas.q_cr)


def test_bernoulli_rearrangement_is_exact(gases, rng):
    for gas in gases.values():
        top = gas.q_cav * (1 - 1e-9) if np.isfinite(gas.q_cav) else 5.0
        q = rng.uniform(0, top, 1000)
        assert np.max(np.abs(bernoulli_residual(gas, q))) <= 1e-12 * max(1.0, top**2)


def test_pressure_derivative_is_sound_speed(air):
    # dp/drho = c^2 through the chain rule in q
    q = np.linspace(0.1, 1.2, 9)
    h = 1e-6
    dp = (air.pressure(q + h) - air.pressure(q - h)) / (2 * h)
    drho = (air.density(q + h) - air.density(q - h)) / (2 * h)
    assert np.allclose(dp / drho, air.sound_speed_squared(q), rtol=1e-7)


def test_sigma2_matches_formula_above_junction(gases, rng):
    for gas in gases.values():
        top = min(gas.q_cav, 6.0)
        q = rng.uniform(gas.q_junction, 0.999 * top, 100)
        c2 = gas.sound_speed_squared(q)
        assert np.allclose(gas.sigma2(q), (q * q - c2) / (q * q), rtol=1e-13)


def test_sigma2_continuation_is_c1_and_positive(gases):
    for gas in gases.values():
        qj = gas.q_junction
        h = 1e-7
        assert gas.sigma2(qj - h) == pytest.approx(gas.sigma2(qj + h), abs=1e-6)
        left = (gas.sigma2(qj - h) - gas.sigma2(qj - 2 * h)) / h
        right = (gas.sigma2(qj + 2 * h) - gas.sigma2(qj + h)) / h
        assert left == pytest.approx(right, rel=1e-4)
        assert np.all(np.asarray(gas.sigma2(np.linspace(0, qj, 50))) > 0)


def test_sigma_potential_against_quadrature(air):
    # sigma(rho) = int_1^rho sigma2 d rho, integrated in rho directly
    for rho in (0.95, 0.7, 0.4, 0.2):
        ref, _ = quad(lambda r: air.sigma2(air.speed_from_density(r)), 1.0, rho, epsabs=1e-13, epsrel=1e-12, limit=200)
        assert air.sigma_of_rho(rho) == pytest.approx(ref, rel=1e-9, abs=1e-12)


def test_speed_of_sigma_round_trip(gases, rng):
    for gas in gases.values():
        q = rng.uniform(0.0, 0.95 * min(gas.q_cav, 6.0), 300)
        back = gas.speed_of_sigma(gas.sigma_of_speed(q))
        assert np.max(np.abs(back - q)) < 1e-9


def test_mu_derivative_and_anchor(air):
    assert air.mu_of_rho(air.density(air.q_cr)) == pytest.approx(0.0, abs=1e-14)
    rho = np.array([0.3, 0.5, 0.8, 0.95])
    h = 1e-6
    d = (air.mu_of_rho(rho + h) - air.mu_of_rho(rho - h)) / (2 * h)
    q = air.speed_from_density(rho)
    assert np.allclose(d, air.sound_speed_squared(q) / q**2, rtol=1e-7)


def test_flux_potential_against_quadrature(air):
    for q in (0.05, 0.3, 0.9, 1.3):
        ref, _ = quad(lambda s: 1.0 / (air.density(s) * s), 0.5, q, epsabs=1e-13, epsrel=1e-12)
        assert air.flux_potential(q, 0.5) == pytest.approx(ref, rel=1e-10, abs=1e-12)


def test_domain_errors(air):
    with pytest.raises(DomainError):
        air.density(-0.1)
    with pytest.raises(DomainError):
        air.density(air.q_cav * 1.01)
    with pytest.raises(DomainError):
        air.speed_from_density(1.5)
    with pytest.raises(DomainError):
        GasModel(3.0)
    with pytest.raises(DomainError):
        air.mu_of_speed(0.0)
