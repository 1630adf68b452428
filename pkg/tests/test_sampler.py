import math

import numpy as np
import pytest
from scipy import stats

from conftest import batch_means_se
from localest.models import ForwardModel, ModelError, Observation, PolynomialModel, StekloffModel
from localest.sampler import (
    BoxPrior,
    Chain,
    LikelihoodSpec,
    chain_diagnostics,
    log_likelihood,
    log_posterior,
    mh_run,
    read_chain_csv,
    write_chain_csv,
)

IDENTITY = PolynomialModel((0.0, 1.0))


class _Identity2D(ForwardModel):
    param_dim = 2

    def forward(self, x):
        return np.asarray(x, dtype=float)


IDENTITY_2D = _Identity2D()


class CellModel(ForwardModel):
    """Piecewise-constant forward map on [0, 3): posterior mass w_i on cell i."""

    def __init__(self, weights):
        self.levels = [math.sqrt(-math.log(w)) for w in weights]

    def forward(self, x):
        return np.array([self.levels[min(int(x[0]), 2)]])


class FailingModel(ForwardModel):
    def forward(self, x):
        if x[0] > 0.5:
            raise ModelError("no solution here")
        return np.array([x[0]])


def test_box_prior_validation():
    with pytest.raises(ValueError):
        BoxPrior([1.0], [1.0])
    with pytest.raises(ValueError):
        BoxPrior([0.0, 0.0], [1.0])
    prior = BoxPrior([-2, -2], [2, 2])
    assert prior.dim == 2
    np.testing.assert_array_equal(prior.center, [0.0, 0.0])


def test_likelihood_validation():
    with pytest.raises(ValueError):
        LikelihoodSpec(0.0)
    with pytest.raises(ValueError):
        LikelihoodSpec(1.0, exponent=3)


def test_log_posterior_outside_box():
    prior = BoxPrior([0.0], [1.0])
    assert log_posterior(IDENTITY, prior, LikelihoodSpec(0.1), Observation([0.5]), [1.5]) == -math.inf


def test_log_posterior_exact_fit_is_zero():
    prior = BoxPrior([0.0], [1.0])
    assert log_posterior(IDENTITY, prior, LikelihoodSpec(0.1), Observation([0.25]), [0.25]) == 0.0


def test_log_posterior_one_sigma_residual():
    prior = BoxPrior([0.0], [2.0])
    sigma = 0.125
    lp = log_posterior(IDENTITY, prior, LikelihoodSpec(sigma), Observation([1.0]), [1.0 - sigma])
    assert lp == pytest.approx(-0.5, rel=1e-15)


def test_unsquared_exponent():
    prior = BoxPrior([0.0], [2.0])
    lp = log_posterior(IDENTITY, prior, LikelihoodSpec(0.5, exponent=1), Observation([1.0]), [0.75])
    assert lp == pytest.approx(-0.25 / (2 * 0.25))


def test_model_failure_is_minus_infinity():
    prior = BoxPrior([0.0], [1.0])
    assert log_posterior(FailingModel(), prior, LikelihoodSpec(0.1), Observation([0.0]), [0.7]) == -math.inf


def test_uniform_prior_ratio_equals_likelihood_ratio():
    prior = BoxPrior([0.0], [6.0])
    like = LikelihoodSpec(0.05)
    data = Observation([0.62])
    model = StekloffModel()
    rng = np.random.default_rng(5)
    for _ in range(50):
        a, b = rng.uniform(0.0, 6.0, size=2)
        post = log_posterior(model, prior, like, data, [a]) - log_posterior(model, prior, like, data, [b])
        lik = log_likelihood(model, like, data, np.array([a])) - log_likelihood(model, like, data, np.array([b]))
        assert post == lik


def test_flat_likelihood_accepts_everything():
    prior = BoxPrior([-1.0, 2.0], [3.0, 4.0])
    chain = mh_run(IDENTITY, prior, LikelihoodSpec(math.inf), Observation([0.0]), 20000, 0, seed=2)
    assert chain.accepted.all()
    assert chain_diagnostics(chain)["acceptance_rate"] == 1.0
    se = chain.samples.std(axis=0) / math.sqrt(len(chain.samples))
    assert np.all(np.abs(chain.samples.mean(axis=0) - prior.center) <= 3 * se)


def test_improvement_is_always_accepted():
    # start at the worst possible point of a monotone posterior: every proposal is better
    prior = BoxPrior([0.0], [1.0])
    chain = mh_run(IDENTITY, prior, LikelihoodSpec(0.2), Observation([1.0]), 1, 0, seed=0, initial=[0.0])
    assert chain.accepted[0]


def test_chain_records_every_iteration():
    prior = BoxPrior([0.0], [6.0])
    chain = mh_run(StekloffModel(), prior, LikelihoodSpec(0.05), Observation([0.62]), 500, 50, seed=4)
    assert len(chain) == 500
    assert chain.samples.shape == (450, 1)
    assert np.all(np.isfinite(chain.log_posteriors))
    # a rejected step repeats the previous state
    for i in range(1, len(chain)):
        if not chain.accepted[i]:
            assert np.array_equal(chain.states[i], chain.states[i - 1])
            assert chain.log_posteriors[i] == chain.log_posteriors[i - 1]
        else:
            lp = log_posterior(StekloffModel(), prior, LikelihoodSpec(0.05), Observation([0.62]), chain.states[i])
            assert chain.log_posteriors[i] == lp


def test_determinism():
    prior = BoxPrior([0.0], [6.0])
    args = (StekloffModel(), prior, LikelihoodSpec(0.05), Observation([0.62]), 800, 80)
    a, b = mh_run(*args, seed=9), mh_run(*args, seed=9)
    assert a.states.tobytes() == b.states.tobytes()
    assert a.accepted.tobytes() == b.accepted.tobytes()
    assert a.log_posteriors.tobytes() == b.log_posteriors.tobytes()
    c = mh_run(*args, seed=10)
    assert not np.array_equal(a.states, c.states)


def test_invalid_proposals_counted():
    prior = BoxPrior([0.0], [1.0])
    chain = mh_run(FailingModel(), prior, LikelihoodSpec(0.1), Observation([0.2]), 2000, 0, seed=1, initial=[0.1])
    diag = chain_diagnostics(chain)
    assert 800 < diag["invalid_proposals"] < 1200
    assert np.all(chain.samples <= 0.5)


def test_bad_arguments():
    prior = BoxPrior([0.0], [1.0])
    args = (IDENTITY, prior, LikelihoodSpec(0.1), Observation([0.5]))
    with pytest.raises(ValueError):
        mh_run(*args, 100, 100)
    with pytest.raises(ValueError):
        mh_run(*args, 100, 10, initial=[2.0])
    with pytest.raises(ValueError):
        mh_run(FailingModel(), prior, LikelihoodSpec(0.1), Observation([0.5]), 100, 10, initial=[0.9])
    assert mh_run(*args, 100).burn_in == 10


def test_diagnostics_of_constant_chain():
    chain = Chain(np.full((10, 1), 2.0), [False] * 10, [0.0] * 10, burn_in=2)
    diag = chain_diagnostics(chain)
    assert diag["variance"] == [0.0]
    assert diag["acceptance_rate"] == 0.0
    assert diag["post_burn_in"] == 8


def test_ip1_acceptance_rate_is_proper_fraction():
    prior = BoxPrior([0.0], [6.0])
    chain = mh_run(StekloffModel(), prior, LikelihoodSpec(0.05), Observation([0.62]), 3000, 300, seed=0)
    assert 0.0 < chain_diagnostics(chain)["acceptance_rate"] < 1.0


def truncated_gaussian_moments(mu, sigma, lo, hi):
    dist = stats.truncnorm((lo - mu) / sigma, (hi - mu) / sigma, loc=mu, scale=sigma)
    return dist.mean(), dist.var()


@pytest.mark.parametrize("seed", range(3))
def test_truncated_gaussian_target(seed):
    lo, hi, sigma = 0.0, 1.0, 0.1
    prior = BoxPrior([lo], [hi])
    chain = mh_run(IDENTITY, prior, LikelihoodSpec(sigma), Observation([0.5]), 20000, 2000, seed=seed)
    mean, var = truncated_gaussian_moments(0.5, sigma, lo, hi)
    x = chain.samples[:, 0]
    assert abs(x.mean() - mean) <= 3 * batch_means_se(x)
    sq = (x - mean) ** 2
    assert abs(sq.mean() - var) <= 3 * batch_means_se(sq)


def test_detailed_balance_on_three_cells():
    weights = (0.5, 0.3, 0.2)
    prior = BoxPrior([0.0], [3.0])
    like = LikelihoodSpec(1 / math.sqrt(2))
    chain = mh_run(CellModel(weights), prior, like, Observation([0.0]), 60000, 1000, seed=7)
    cells = np.minimum(chain.samples[:, 0].astype(int), 2)
    freq = np.bincount(cells, minlength=3) / len(cells)
    np.testing.assert_allclose(freq, weights, atol=0.02)
    counts = np.zeros((3, 3))
    np.add.at(counts, (cells[:-1], cells[1:]), 1)
    for i in range(3):
        for j in range(i + 1, 3):
            flow = counts[i, j] + counts[j, i]
            assert abs(counts[i, j] - counts[j, i]) <= 4 * math.sqrt(flow)
    # theoretical transition i -> j: (1/3) min(1, w_j / w_i)
    for i in range(3):
        for j in range(3):
            if i != j:
                expected = min(1.0, weights[j] / weights[i]) / 3
                assert counts[i, j] / counts[i].sum() == pytest.approx(expected, abs=0.02)


def test_csv_round_trip(tmp_path):
    prior = BoxPrior([-2.0, -2.0], [2.0, 2.0])
    chain = mh_run(IDENTITY_2D, prior, LikelihoodSpec(0.3), Observation([0.1, -0.4]), 300, 30, seed=1)
    path = tmp_path / "chain.csv"
    write_chain_csv(chain, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "iter,accepted,log_post,x1,x2"
    assert lines[1].split(",")[0] == "1"
    back = read_chain_csv(path, burn_in=30)
    assert back.states.tobytes() == chain.states.tobytes()
    assert back.log_posteriors.tobytes() == chain.log_posteriors.tobytes()
    assert np.array_equal(back.accepted, chain.accepted)


def test_csv_rejects_other_files(tmp_path):
    path = tmp_path / "x.csv"
    path.write_text("a,b,c\n1,2,3\n")
    with pytest.raises(ValueError):
        read_chain_csv(path)
