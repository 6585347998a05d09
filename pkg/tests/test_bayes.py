import numpy as np
import pytest

from epistoch.bayes import (
    ExponentialPrior,
    TabulatedPrior,
    parse_prior,
    posterior_from_likelihood,
    posterior_mean,
    tau_grid,
    tau_posterior,
)
from epistoch.errors import ValidationError


@pytest.fixture(scope="module")
def fig5_grid():
    return tau_posterior(ExponentialPrior(0.5), 0.5)


def test_grid():
    g = tau_grid()
    assert g.size == 5001 and g[0] == 0.0 and g[-1] == 5.0
    with pytest.raises(ValidationError):
        tau_grid(1.0, 0.3)


def test_parse_prior():
    assert parse_prior("exp:0.5") == ExponentialPrior(0.5)
    for bad in ("exp:", "gamma:1", "exp:-1", "exp:x"):
        with pytest.raises(ValidationError):
            parse_prior(bad)


def test_fig5_posterior(fig5_grid):
    assert fig5_grid.mass == pytest.approx(1.0, abs=1e-6)
    assert posterior_mean(fig5_grid) == pytest.approx(0.384, abs=0.01)
    assert np.all(fig5_grid.posterior_cdf() >= fig5_grid.prior_cdf() - 1e-12)


def test_grid_convergence(fig5_grid):
    fine = tau_posterior(ExponentialPrior(0.5), 0.5, step=5e-4)
    assert abs(posterior_mean(fine) - posterior_mean(fig5_grid)) < 1e-4


def test_uniform_prior_density_decreases():
    prior = TabulatedPrior([0.0, 3.0], [1 / 3, 1 / 3])
    g = tau_posterior(prior, 0.5)
    i3 = int(np.searchsorted(g.tau, 3.0))
    assert g.posterior_density[0] > g.posterior_density[i3]


@pytest.mark.parametrize("prior", [ExponentialPrior(0.2), ExponentialPrior(1.0),
                                   ExponentialPrior(3.0),
                                   TabulatedPrior([0.0, 2.0, 4.0], [0.1, 0.3, 0.1])])
@pytest.mark.parametrize("rho", [0.1, 0.5, 0.9])
def test_posterior_shifts_down(prior, rho):
    g = tau_posterior(prior, rho)
    assert posterior_mean(g) <= g.prior_mean() + 1e-12
    assert np.all(g.posterior_cdf() >= g.prior_cdf() - 1e-12)


def test_constant_likelihood_returns_prior():
    tau = tau_grid()
    prior = ExponentialPrior(0.5)
    g = posterior_from_likelihood(prior, tau, np.full(tau.size, 0.3))
    assert posterior_mean(g) == pytest.approx(g.prior_mean(), rel=1e-12)


def test_point_mass_like_prior():
    prior = TabulatedPrior([0.999, 1.0, 1.001], [0.0, 1000.0, 0.0])
    g = tau_posterior(prior, 0.5)
    assert posterior_mean(g) == pytest.approx(1.0, abs=1e-6)


def test_degenerate_prior_rejected():
    prior = TabulatedPrior([6.0, 7.0], [1.0, 1.0])
    with pytest.raises(ValidationError):
        tau_posterior(prior, 0.5)


def test_unnormalized_grid_rejected(fig5_grid):
    from dataclasses import replace

    with pytest.raises(ValidationError):
        posterior_mean(replace(fig5_grid, posterior_density=2 * fig5_grid.posterior_density))


def test_tabulated_validation():
    with pytest.raises(ValidationError):
        TabulatedPrior([0.0, 0.0], [1.0, 1.0])
    with pytest.raises(ValidationError):
        TabulatedPrior([0.0, 1.0], [1.0, -1.0])
