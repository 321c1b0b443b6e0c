import numpy as np
import pytest

from carsurv import asymptotics
from carsurv.asymptotics import LimitComponents, estimate_limit_components, pitman_are, predicted_type1
from carsurv.randomization import SchemeSpec
from carsurv.trial_data import CaseSpec

PB, URN, SR = SchemeSpec("permuted-block"), SchemeSpec("urn"), SchemeSpec("simple")


def _components(a, b, nu):
    return LimitComponents("logrank", a, b, nu, np.zeros(0), np.zeros(2), np.zeros(1), np.zeros(2), a + b, 100_000)


def test_predicted_type1_analytic():
    assert predicted_type1(_components(0.2, 0.0, 0.0)) == pytest.approx(0.05)
    assert predicted_type1(_components(0.2, 0.7, 1.0)) == pytest.approx(0.05)
    rates = [predicted_type1(_components(0.2, b, 1 / 3)) for b in (0.0, 0.05, 0.1, 0.4)]
    assert all(x > y for x, y in zip(rates, rates[1:]))


def test_predicted_type1_errors():
    with pytest.raises(ValueError):
        predicted_type1(_components(0.0, 0.0, 0.0))
    with pytest.raises(ValueError):
        predicted_type1(_components(0.2, 0.1, None))


def test_mc_size_floor():
    with pytest.raises(ValueError):
        estimate_limit_components(CaseSpec(1), PB, mc_size=1000)


@pytest.fixture(scope="module")
def case1_logrank():
    return estimate_limit_components(CaseSpec(1), PB, 200_000, seed=1, mode="logrank")


def test_case1_score_between_is_negligible():
    comp = estimate_limit_components(CaseSpec(1), PB, 200_000, seed=2, mode="score")
    assert comp.between_var < 3 * comp.between_se + 1e-4
    # correct model: p(t) estimates the constant baseline hazard
    assert np.median(comp.p_of_t / CaseSpec(1).lambda0) == pytest.approx(1.0, abs=0.05)


def test_case1_logrank_between_positive(case1_logrank):
    assert case1_logrank.between_var > 10 * case1_logrank.between_se
    assert case1_logrank.within_var >= 0 and np.all(case1_logrank.p_of_t >= 0)


def test_total_variance_decomposition(case1_logrank):
    c = case1_logrank
    assert c.within_var + c.between_var == pytest.approx(c.total_var, rel=1e-12)


def test_case1_logrank_prediction_near_two_percent(case1_logrank):
    assert predicted_type1(case1_logrank) == pytest.approx(0.020, abs=0.005)


def test_outcome_free_covariate_has_no_between_part():
    # with beta = 0 the stratifying covariate is independent of the outcome
    comp = estimate_limit_components(CaseSpec(1, beta=(0.0,)), PB, 200_000, seed=3, mode="logrank")
    assert comp.between_var < 3 * comp.between_se + 1e-5


def test_misspecified_beta_star_from_big_fit():
    b = asymptotics.beta_star(CaseSpec(5), seed=0, size=20_000)
    assert b.shape == (2,) and np.all(np.isfinite(b))


def test_are_one_without_covariate_effect():
    eff = pitman_are(CaseSpec(1, beta=(0.0,)), PB, 100_000, seed=4)
    assert eff.are == pytest.approx(1.0, abs=max(2 * eff.are_se, 1e-12))


def test_are_below_one_case1():
    eff = pitman_are(CaseSpec(1), PB, 100_000, seed=5)
    assert eff.are < 1 - 3 * eff.are_se
    assert eff.sigma_c2 <= eff.sigma_s2


def test_efficacy_decreases_with_nu():
    vals = [pitman_are(CaseSpec(1), None, 100_000, seed=6, nu=nu).efficacy_cl for nu in (0.0, 1 / 3, 1.0)]
    assert vals[0] > vals[1] > vals[2]


def test_pitman_needs_correct_model():
    with pytest.raises(ValueError):
        pitman_are(CaseSpec(4), PB, 100_000)


def test_csv_row(case1_logrank):
    row = asymptotics.components_row(CaseSpec(1), PB, case1_logrank)
    text = asymptotics.write_asymptotics_csv([row])
    header, line = text.strip().split("\n")
    assert header == "case,scheme,mode,A,B,nu_d,predicted_type1,sigma_s2,sigma_l2,sigma_c2,are"
    assert line.startswith("case1,permuted-block,logrank,")
    assert float(line.split(",")[5]) == 0.0
