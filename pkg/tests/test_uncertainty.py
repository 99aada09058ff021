import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy import integrate, stats

from aqforecast.aggregation import mix_moments
from aqforecast.autodiff import RngStream
from aqforecast.errors import ContractError, NumericDomainError, NumericError
from aqforecast.models import BayesianMLP, MLPForecaster
from aqforecast.nn import Pass, Prior, get_flat, set_flat
from aqforecast.training import TrainConfig, train_ensemble, train_swag
from aqforecast.uncertainty import (
    EnsembleHandle,
    SwagState,
    data_term,
    elbo_loss,
    ensemble_predict,
    ensemble_samples,
    kl_gaussian_closed,
    kl_mc_estimate,
    mc_sample_predict,
    swag_collect,
    swag_sample,
)

from gradcheck import pass_fraction


def _normal_logpdf(mu, sigma):
    return lambda w: stats.norm.logpdf(w, mu, sigma)


def _mc_kl(mu_q, s_q, mu_p, s_p, n, seed=0):
    w = np.random.default_rng(seed).normal(mu_q, s_q, size=n)
    return kl_mc_estimate(w, _normal_logpdf(mu_q, s_q), _normal_logpdf(mu_p, s_p), return_stderr=True)


# -- KL -----------------------------------------------------------------------

def test_kl_identical_is_zero():
    assert kl_gaussian_closed(0.3, 0.7, 0.3, 0.7) == 0.0


@pytest.mark.parametrize("args,expected", [((1.0, 1.0, 0.0, 1.0), 0.5),
                                           ((0.0, 2.0, 0.0, 1.0), 0.8069)])
def test_kl_closed_examples_against_sampling(args, expected):
    closed = kl_gaussian_closed(*args)
    assert closed == pytest.approx(expected, abs=1e-4)
    mc, _ = _mc_kl(*args, n=1_000_000)
    assert abs(mc - closed) < 1e-2


def test_kl_closed_sums_over_weights():
    mu = np.array([1.0, 0.0])
    sig = np.array([1.0, 2.0])
    assert kl_gaussian_closed(mu, sig, 0.0, 1.0) == pytest.approx(0.5 + math.log(0.5) + 2 - 0.5)


@pytest.mark.parametrize("bad", [(0.0, 0.0, 0.0, 1.0), (0.0, 1.0, 0.0, -1.0)])
def test_kl_rejects_non_positive_scales(bad):
    with pytest.raises(NumericDomainError):
        kl_gaussian_closed(*bad)


@given(st.floats(-5, 5), st.floats(0.05, 5), st.floats(-5, 5), st.floats(0.05, 5))
def test_kl_non_negative(mq, sq, mp, sp):
    kl = kl_gaussian_closed(mq, sq, mp, sp)
    assert kl >= -1e-12
    if abs(mq - mp) > 1e-3 or abs(sq - sp) > 1e-3:
        assert kl > 0


def test_kl_mc_identical_mean_zero_and_shrinking_error():
    errs = []
    for n in (1_000, 100_000):
        est, se = _mc_kl(0.0, 1.0, 0.0, 1.0, n)
        assert est == 0.0
        errs.append(se)
    # log q - log p is identically zero, so the spread vanishes
    assert errs == [0.0, 0.0]
    # against a slightly different prior the standard error shrinks as 1/sqrt(M)
    se_small = _mc_kl(0.0, 1.0, 0.1, 1.1, 1_000)[1]
    se_large = _mc_kl(0.0, 1.0, 0.1, 1.1, 100_000)[1]
    assert se_large == pytest.approx(se_small / 10, rel=0.15)


def test_kl_mc_converges_to_closed_form():
    est, se = _mc_kl(1.0, 1.0, 0.0, 1.0, 100_000)
    assert abs(est - 0.5) < 3 * se


def test_kl_mc_against_laplace_quadrature():
    mu_q, s_q, b = 0.2, 0.3, 0.5
    prior = Prior("laplace", 0.0, b)
    q = stats.norm(mu_q, s_q)
    oracle, _ = integrate.quad(lambda w: q.pdf(w) * (q.logpdf(w) - prior.log_density(w)),
                               mu_q - 12 * s_q, mu_q + 12 * s_q, points=[0.0], limit=200)
    w = np.random.default_rng(3).normal(mu_q, s_q, 1_000_000)
    est = kl_mc_estimate(w, q.logpdf, prior.log_density)
    assert abs(est - oracle) < 1e-2


def test_kl_mc_unbiased_over_repetitions():
    closed = kl_gaussian_closed(1.0, 1.0, 0.0, 1.0)
    g = np.random.default_rng(11)
    ests = [kl_mc_estimate(g.normal(1.0, 1.0, 10_000), _normal_logpdf(1.0, 1.0),
                           _normal_logpdf(0.0, 1.0)) for _ in range(100)]
    se = np.std(ests, ddof=1) / math.sqrt(len(ests))
    assert abs(np.mean(ests) - closed) < 3 * se


def test_kl_mc_non_finite_density_names_layer():
    with pytest.raises(NumericError, match="layer2"):
        kl_mc_estimate(np.zeros(3), lambda w: np.full(3, -np.inf), lambda w: np.zeros(3), "layer2")


# -- ELBO ---------------------------------------------------------------------

def _tiny_bnn(task="regression", prior=None):
    return BayesianMLP(1, 1, task, hidden=(), prior=prior, rho_init=-1.0, seed=0)


def test_elbo_without_kl_is_data_term():
    m = _tiny_bnn()
    x, y = np.array([[0.5], [-1.0]]), np.array([[0.2], [0.1]])
    loss = elbo_loss(m, x, y, np.random.default_rng(0), 0.0).item()
    data = data_term(m, x, y, Pass(np.random.default_rng(0), True), "sum").item()
    assert loss == pytest.approx(data)


def test_elbo_posterior_at_prior_is_data_term():
    m = BayesianMLP(1, 1, "classification", hidden=(), prior={"family": "gaussian", "scale": 0.5})
    for layer in m.variational_layers():
        layer.weight_mu.data[:] = 0.0
        layer.bias_mu.data[:] = 0.0
        layer.weight_rho.data[:] = math.log(math.expm1(0.5))
        layer.bias_rho.data[:] = math.log(math.expm1(0.5))
    assert m.kl().item() == pytest.approx(0.0, abs=1e-12)
    x, y = np.array([[1.0]]), np.array([[1.0]])
    g = 7
    loss = elbo_loss(m, x, y, np.random.default_rng(g), 1.0).item()
    data = data_term(m, x, y, Pass(np.random.default_rng(g), True), "sum").item()
    assert loss == pytest.approx(data)


def test_elbo_rejects_empty_batch():
    with pytest.raises(ContractError):
        elbo_loss(_tiny_bnn(), np.zeros((0, 1)), np.zeros((0, 1)), np.random.default_rng(0), 1.0)


@pytest.mark.parametrize("family", ["gaussian", "laplace"])
def test_elbo_gradient_single_datum(family):
    m = _tiny_bnn(prior={"family": family, "loc": 0.0, "scale": 0.5})
    x, y = np.array([[0.7]]), np.array([[0.3]])
    assert pass_fraction(lambda: elbo_loss(m, x, y, np.random.default_rng(5), 0.5),
                         m.parameters()) >= 0.99


def test_prediction_leaves_no_stale_weight_sample():
    m = BayesianMLP(2, 1, hidden=(3,), seed=0)
    mc_sample_predict(m, np.zeros((1, 2)), 2, 0)
    assert all(layer._sampled is None for layer in m.variational_layers())


# -- Monte Carlo prediction ---------------------------------------------------

def test_single_sample_is_one_pass():
    m = MLPForecaster(3, 2, hidden=(4,), dropout=0.5)
    s = mc_sample_predict(m, np.ones((5, 3)), 1, 0)
    assert s.means.shape == (1, 5, 2) and s.n_samples == 1


def test_zero_dropout_samples_identical():
    m = MLPForecaster(3, 2, hidden=(4,), dropout=0.0)
    s = mc_sample_predict(m, np.ones((5, 3)), 6, 0)
    assert np.all(s.means == s.means[0]) and np.all(s.variances == s.variances[0])


@pytest.mark.parametrize("cls", ["mlp", "bnn"])
def test_mc_sampling_bitwise_reproducible(cls):
    m = MLPForecaster(3, 2, hidden=(8,), dropout=0.5) if cls == "mlp" else \
        BayesianMLP(3, 2, hidden=(8,), rho_init=-2.0)
    x = np.random.default_rng(0).normal(size=(4, 3))
    a = mc_sample_predict(m, x, 1000, RngStream(3, 1))
    b = mc_sample_predict(m, x, 1000, RngStream(3, 1))
    assert a.means.tobytes() == b.means.tobytes()
    assert np.std(a.means, axis=0).min() > 0


def test_mc_rejects_zero_samples():
    with pytest.raises(ContractError):
        mc_sample_predict(MLPForecaster(3, 2, hidden=(4,)), np.ones((1, 3)), 0, 0)


# -- SWAG ---------------------------------------------------------------------

def test_swag_one_snapshot():
    st_ = swag_collect(SwagState.empty(3), np.array([1.0, 2.0, 3.0]))
    np.testing.assert_array_equal(st_.mean, [1, 2, 3])
    np.testing.assert_array_equal(st_.diag_variance(), 0)


def test_swag_two_snapshots():
    st_ = SwagState.empty(2)
    swag_collect(st_, np.zeros(2))
    swag_collect(st_, np.full(2, 2.0))
    np.testing.assert_allclose(st_.mean, 1.0)
    np.testing.assert_allclose(st_.sq_mean, 2.0)
    np.testing.assert_allclose(st_.diag_variance(), 1.0)


def test_swag_ring_buffer():
    st_ = SwagState.empty(1, rank=2)
    for v in (1.0, 2.0, 6.0):
        swag_collect(st_, np.array([v]))
    assert st_.deviation_matrix().shape == (1, 2)
    # deviations are taken against the running mean at the time of collection
    np.testing.assert_allclose(st_.deviation_matrix()[0], [2.0 - 1.5, 6.0 - 3.0])


@given(arrays(np.float64, (5, 3), elements=st.floats(-100, 100)), st.randoms(use_true_random=False))
def test_swag_moments_order_insensitive(snaps, rnd):
    order = list(range(5))
    rnd.shuffle(order)
    a, b = SwagState.empty(3), SwagState.empty(3)
    for i in range(5):
        swag_collect(a, snaps[i])
        swag_collect(b, snaps[order[i]])
    np.testing.assert_allclose(a.mean, b.mean, atol=1e-10)
    np.testing.assert_allclose(a.sq_mean, b.sq_mean, atol=1e-10 * max(1.0, np.abs(a.sq_mean).max()))
    assert np.all(a.diag_variance() >= 0)


def test_swag_sample_needs_two_snapshots():
    st_ = swag_collect(SwagState.empty(2), np.ones(2))
    with pytest.raises(ContractError):
        swag_sample(st_, np.random.default_rng(0))


def test_swag_sample_degenerate_returns_mean():
    st_ = SwagState.empty(3)
    for _ in range(3):
        swag_collect(st_, np.array([1.0, -1.0, 0.5]))
    np.testing.assert_array_equal(swag_sample(st_, np.random.default_rng(0)), [1.0, -1.0, 0.5])


def test_swag_sample_moments():
    g = np.random.default_rng(2)
    st_ = SwagState.empty(4, rank=5)
    for _ in range(8):
        swag_collect(st_, g.normal(size=4) * [1.0, 0.5, 2.0, 0.1])
    draws = np.stack([swag_sample(st_, g) for _ in range(100_000)])
    D = st_.deviation_matrix()
    K = D.shape[1]
    cov = 0.5 * np.diag(st_.diag_variance()) + D @ D.T / (2 * (K - 1))
    se = np.sqrt(np.diag(cov) / len(draws))
    assert np.all(np.abs(draws.mean(0) - st_.mean) < 3 * se)
    emp = np.cov(draws, rowvar=False)
    assert np.linalg.norm(emp - cov) / np.linalg.norm(cov) < 0.05


def test_swag_training_and_sampling_restores_weights():
    g = np.random.default_rng(0)
    x = g.normal(size=(64, 3))
    y = x[:, :1] + 0.1 * g.normal(size=(64, 1))
    m = MLPForecaster(3, 1, hidden=(4,), dropout=0.0)
    post, _ = train_swag(m, x, y, TrainConfig(epochs=8, batch_size=16), rank=3)
    assert post.state.n == 2 and post.state.deviation_matrix().shape[1] == 2
    before = get_flat(m).copy()
    s = mc_sample_predict(post, x[:5], 10, 4)
    np.testing.assert_array_equal(get_flat(m), before)
    assert s.means.shape == (10, 5, 1)


def test_swag_with_adversarial_schedule_collects():
    g = np.random.default_rng(0)
    x, y = g.normal(size=(32, 2)), g.normal(size=(32, 1))
    cfg = TrainConfig(epochs=12, batch_size=16, adversarial=True, epsilon=0.01, replays=4)
    post, curve = train_swag(MLPForecaster(2, 1, hidden=(4,), dropout=0.0), x, y, cfg)
    assert len(curve.epoch) == 3 and post.state.n >= 2


# -- ensembles ----------------------------------------------------------------

def _trained(seed):
    m = MLPForecaster(3, 2, hidden=(4,), dropout=0.5, seed=seed)
    m.trained = True
    return m


def test_identical_members_zero_dispersion():
    members = [_trained(0) for _ in range(3)]
    s = ensemble_samples(EnsembleHandle(members, [1, 2, 3]), np.ones((2, 3)))
    assert np.all(mix_moments(s.means, s.variances).epistemic == 0)


def test_ensemble_order_and_arity():
    members = [_trained(i) for i in range(10)]
    x = np.ones((2, 3))
    preds = ensemble_predict(EnsembleHandle(members, list(range(10))), x)
    assert len(preds) == 10
    for m, p in zip(members, preds):
        np.testing.assert_array_equal(p[0], m(x)[0].data)


def test_ensemble_rejects_untrained_and_duplicate_seeds():
    with pytest.raises(ContractError):
        ensemble_predict(EnsembleHandle([_trained(0), MLPForecaster(3, 2, hidden=(4,))], [0, 1]),
                         np.ones((1, 3)))
    with pytest.raises(ContractError):
        EnsembleHandle([_trained(0), _trained(1)], [5, 5])


def test_ensemble_mixture_matches_hand_case():
    members = []
    for mu, log_var in ((1.0, 0.0), (3.0, math.log(4.0))):
        m = _trained(0)
        flat = np.zeros_like(get_flat(m))
        set_flat(m, flat)
        m.head.mean_layer.bias.data[:] = mu
        # softplus(b) + floor = target variance
        m.head.var_layer.bias.data[:] = math.log(math.expm1(math.exp(log_var)))
        members.append(m)
    s = ensemble_samples(EnsembleHandle(members, [0, 1]), np.zeros((1, 3)))
    mix = mix_moments(s.means, s.variances)
    np.testing.assert_allclose(mix.mean, 2.0)
    # mean of variances (1 + 4) / 2 plus spread of means 1
    np.testing.assert_allclose(mix.variance, 3.5, atol=1e-5)


def test_train_ensemble_distinct_seeds():
    g = np.random.default_rng(0)
    x, y = g.normal(size=(20, 3)), g.normal(size=(20, 2))
    handle, curves = train_ensemble(lambda s: MLPForecaster(3, 2, hidden=(4,), seed=s), x, y,
                                    TrainConfig(epochs=1, batch_size=10), size=3)
    assert len(set(handle.seeds)) == 3 and len(curves) == 3
    preds = ensemble_predict(handle, x[:2])
    assert not np.allclose(preds[0][0], preds[1][0])
