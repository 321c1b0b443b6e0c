import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from _oracles import grid_argmax, o_hat_loop, partial_loglik, score_loop
from carsurv import cox
from carsurv.trial_data import CaseSpec, TrialData, gen_case

# times 1..4, delta (1,1,0,1), arms (1,0,0,1), no covariates
HAND = TrialData([1.0, 2.0, 3.0, 4.0], [1, 1, 0, 1], [1, 0, 0, 1], np.zeros((4, 0)), [[0]] * 4, (1,))


def _data(x, delta, treat, w, strata=None):
    n = len(x)
    strata = np.zeros((n, 1), int) if strata is None else np.asarray(strata).reshape(n, 1)
    return TrialData(x, delta, treat, w, strata, (int(strata.max()) + 1,))


@st.composite
def datasets(draw, max_n=30, max_p=2):
    n = draw(st.integers(4, max_n))
    p = draw(st.integers(0, max_p))
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    # coarse times so ties are common
    x = rng.integers(1, max(3, n // 2), n).astype(float) + (rng.random(n) if draw(st.booleans()) else 0.0)
    delta = rng.integers(0, 2, n)
    delta[rng.integers(n)] = 1
    treat = rng.integers(0, 2, n)
    w = rng.normal(size=(n, p))
    strata = rng.integers(0, draw(st.integers(1, 4)), n)
    beta = rng.normal(scale=0.5, size=p)
    return _data(x, delta, treat, w, strata), beta


def test_hand_example_score():
    assert cox.score_theta([], HAND) == pytest.approx(1 / 6, abs=1e-15)


def test_hand_example_information():
    # events at t=1 (2 of 4 treated), t=2 (1 of 3), t=4 (1 of 1)
    expected = (0.5 * 0.5 + (1 / 3) * (2 / 3) + 1.0 * 0.0) / 4
    assert cox.info_theta([], HAND) == pytest.approx(expected, abs=1e-15)
    assert expected == pytest.approx(17 / 144)


def test_hand_example_o_hats():
    expected = 0.5 * np.array([1 - 1 / 4, 1 - 1 / 4 - 1 / 3, -1 / 4 - 1 / 3, 1 - 1 / 4 - 1 / 3 - 1])
    assert np.allclose(cox.o_hats([], HAND), expected, atol=1e-15)
    assert np.allclose(cox.o_hats([], HAND), o_hat_loop([], HAND.x, HAND.delta, HAND.w))


def test_all_censored():
    d = _data([1.0, 2.0, 3.0], [0, 0, 0], [1, 0, 1], np.zeros((3, 0)))
    assert cox.score_theta([], d) == 0.0
    assert cox.info_theta([], d) == 0.0
    assert cox.robust_var_b([], d) == 0.0
    with pytest.raises(cox.CoxFitError):
        cox.fit_null(d)


def test_one_arm_information_zero():
    d = _data([1.0, 2.0, 3.0], [1, 1, 1], [1, 1, 1], np.zeros((3, 0)))
    assert cox.info_theta([], d) == 0.0
    assert cox.logrank_sigma2(d) == 0.0


def test_censored_before_first_event_has_zero_residual():
    d = _data([0.5, 2.0, 3.0], [0, 1, 1], [1, 0, 1], np.zeros((3, 0)))
    assert cox.o_hats([], d)[0] == 0.0


def test_logrank_single_event_balanced():
    d = _data([1.0, 2.0, 2.0, 2.0], [1, 0, 0, 0], [1, 0, 1, 0], np.zeros((4, 0)))
    assert cox.logrank_sigma2(d) == pytest.approx(0.25 / 4)


def test_stratum_moments_examples():
    m = cox.stratum_moments([1.0, -1.0, 2.0, -2.0], ["A", "A", "B", "B"])
    assert m.mean.tolist() == [0.0, 0.0] and m.var.tolist() == [1.0, 4.0]
    one = cox.stratum_moments([0.3, -0.1, 0.5], [0, 0, 0])
    assert one.mean[0] == pytest.approx(0.7 / 3)
    assert one.denominator(1.0) == pytest.approx(0.35)


def test_stratum_moments_length_mismatch():
    with pytest.raises(ValueError):
        cox.stratum_moments([1.0, 2.0], [0])


@settings(max_examples=150, deadline=None)
@given(datasets())
def test_against_loop_oracles(case):
    data, beta = case
    ll = cox.log_partial_likelihood(0.0, beta, data)
    assert ll == pytest.approx(partial_loglik(0.0, beta, data.x, data.delta, data.treat, data.w), rel=1e-10, abs=1e-10)
    assert cox.score_theta(beta, data) == pytest.approx(
        score_loop(beta, data.x, data.delta, data.treat, data.w), rel=1e-10, abs=1e-10)
    assert np.allclose(cox.o_hats(beta, data), o_hat_loop(beta, data.x, data.delta, data.w), rtol=1e-10, atol=1e-12)


@settings(max_examples=150, deadline=None)
@given(datasets())
def test_identities(case):
    data, beta = case
    o = cox.o_hats(beta, data)
    assert cox.robust_var_b(beta, data) == pytest.approx(np.mean(o**2), rel=1e-12, abs=1e-15)
    m = cox.stratum_moments(o, data.stratum)
    assert m.denominator(1.0) == pytest.approx(np.sum(o**2), rel=1e-10, abs=1e-14)
    bare = data.without_covariates()
    assert cox.score_theta([], bare) == pytest.approx(cox.logrank_numerator(bare), abs=1e-12)
    assert cox.info_theta([], bare) == pytest.approx(cox.logrank_sigma2(bare), abs=1e-14)


@settings(max_examples=100, deadline=None)
@given(datasets(max_p=3))
def test_gradient_and_hessian_finite_differences(case):
    data, beta = case
    if not beta.size:
        return
    grad, hess = cox.beta_gradient_hessian(beta, data)
    h = 1e-5
    for j in range(beta.size):
        e = np.zeros_like(beta)
        e[j] = h
        fd = (cox.log_partial_likelihood(0.0, beta + e, data) - cox.log_partial_likelihood(0.0, beta - e, data)) / (2 * h)
        assert fd == pytest.approx(grad[j], rel=1e-5, abs=1e-6)
        g_plus, _ = cox.beta_gradient_hessian(beta + e, data)
        g_minus, _ = cox.beta_gradient_hessian(beta - e, data)
        assert np.allclose((g_plus - g_minus) / (2 * h), hess[:, j], rtol=1e-5, atol=1e-6)


@settings(max_examples=100, deadline=None)
@given(datasets())
def test_info_theta_second_difference(case):
    data, beta = case
    h = 1e-3
    f = lambda t: cox.log_partial_likelihood(t, beta, data)
    fd = -(f(h) - 2 * f(0.0) + f(-h)) / h**2 / data.n
    assert fd == pytest.approx(cox.info_theta(beta, data), rel=1e-5, abs=1e-7)
    score_fd = (f(1e-6) - f(-1e-6)) / 2e-6
    assert score_fd == pytest.approx(cox.score_theta(beta, data), rel=1e-5, abs=1e-6)


def test_fit_null_matches_grid_search_six_subjects():
    x = [2.0, 3.0, 5.0, 7.0, 8.0, 11.0]
    delta = [1, 1, 0, 1, 1, 1]
    w = [[1], [0], [1], [1], [0], [0]]
    d = _data(x, delta, [0, 1, 0, 1, 1, 0], w)
    best = grid_argmax(lambda b: partial_loglik(0.0, [b], x, delta, d.treat, w))
    fit = cox.fit_null(d)
    assert fit.converged and fit.beta_hat0[0] == pytest.approx(best, abs=1e-6)


@pytest.mark.parametrize("seed", range(20))
def test_fit_null_grid_oracle_small(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(5, 9))
    w = rng.integers(0, 2, (n, 1)).astype(float)
    w[0], w[1] = 0.0, 1.0
    x = rng.exponential(1.0, n) * np.exp(-0.7 * w[:, 0])
    delta = np.ones(n, int)
    delta[rng.integers(n)] = 0
    d = _data(x, delta, rng.integers(0, 2, n), w)
    best = grid_argmax(lambda b: partial_loglik(0.0, [b], x, delta, d.treat, w), -8, 8)
    try:
        fit = cox.fit_null(d)
    except cox.CoxFitError:
        # separated draw: the likelihood is monotone and the grid optimum sits on the edge
        assert abs(best) > 7.9
        return
    assert fit.beta_hat0[0] == pytest.approx(best, abs=1e-6)


def test_fit_null_empty_w_is_trivial():
    cohort = gen_case(CaseSpec(1, n=200), 0)
    data = cohort.observe(np.random.default_rng(0).integers(0, 2, 200)).without_covariates()
    fit = cox.fit_null(data)
    assert fit.iterations == 0 and fit.beta_hat0.size == 0
    assert fit.score_theta == pytest.approx(cox.logrank_numerator(data), abs=1e-12)


def test_fit_null_consistent_case1():
    cohort = gen_case(CaseSpec(1, n=5000), 21)
    data = cohort.observe(np.random.default_rng(1).integers(0, 2, 5000))
    fit = cox.fit_null(data)
    _, hess = cox.beta_gradient_hessian(fit.beta_hat0, data)
    se = np.sqrt(np.linalg.inv(-hess)[0, 0])
    assert abs(fit.beta_hat0[0] - 1.5) < 3 * se
    assert fit.gradient_norm <= 1e-8


def test_logrank_variance_consistency_large_n():
    cohort = gen_case(CaseSpec(1, n=5000), 22)
    data = cohort.observe(np.random.default_rng(2).integers(0, 2, 5000)).without_covariates()
    o = cox.o_hats([], data)
    assert cox.logrank_sigma2(data) == pytest.approx(np.mean(o**2), rel=0.05)


def test_fit_null_separation_raises():
    # covariate perfectly orders the event times: beta diverges
    x = np.arange(1.0, 9.0)
    w = np.array([[1]] * 4 + [[0]] * 4, float)
    d = _data(x, np.ones(8, int), np.zeros(8, int), w)
    with pytest.raises(cox.CoxFitError):
        cox.fit_null(d, max_iter=30)


def test_beta_shape_checked():
    cohort = gen_case(CaseSpec(2, n=50), 0)
    data = cohort.observe(np.zeros(50, int))
    with pytest.raises(ValueError):
        cox.score_theta([0.0], data)
