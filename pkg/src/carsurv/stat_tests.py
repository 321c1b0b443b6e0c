"""The seven treatment-effect test statistics.

========  ===============================================================
T_M       model-based score test, variance from the information ``A_hat``
T_S       robust score test, variance ``B_hat = mean(O_i^2)``
T_L       log-rank test
T_CS      calibrated score test, stratum-moment variance with ``nu_D``
T_CL      calibrated log-rank test (T_CS without working covariates)
T_BS      score test with a re-randomization bootstrap variance
T_BL      log-rank test with a re-randomization bootstrap variance
========  ===============================================================

All tests are two-sided: reject when ``|T| > z_{alpha/2}``.
"""

import csv
import io
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from . import cox
from .randomization import BIASED_COIN, PERMUTED_BLOCK, POCOCK_SIMON, SIMPLE, URN, assign_sequence

FAMILIES = ("T_M", "T_S", "T_L", "T_CS", "T_CL", "T_BS", "T_BL")
CALIBRATED = ("T_CS", "T_CL")
BOOTSTRAP = ("T_BS", "T_BL")


class CalibrationInapplicable(ValueError):
    """Calibrated tests need a known ``nu_D``; Pocock-Simon has none."""


def z_crit(alpha=0.05):
    return float(norm.ppf(1.0 - alpha / 2.0))


@dataclass
class TestReport:
    family: str
    statistic: float
    variance: float
    nu_d: float | None
    reject: bool

    __test__ = False  # not a pytest class

    @classmethod
    def build(cls, family, statistic, variance, alpha, nu_d=None):
        return cls(family, float(statistic), float(variance), nu_d, bool(abs(statistic) > z_crit(alpha)))


def write_reports_csv(reports, fh=None):
    buf = fh if fh is not None else io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["family", "statistic", "variance", "nu_d", "reject"])
    for r in reports:
        w.writerow([r.family, f"{r.statistic:.12g}", f"{r.variance:.12g}",
                    "" if r.nu_d is None else f"{r.nu_d:.12g}", int(r.reject)])
    if fh is None:
        return buf.getvalue()


def nu_d(scheme):
    """Limiting variance of ``D_n(z)/sqrt(n_z)`` for a scheme; ``None`` for Pocock-Simon.

    Simple randomization gives 1 and the stratified urn 1/3 (any ``s``,
    ``omega > 0``); stratified blocks and the stratified biased coin keep the
    imbalance bounded, giving 0.
    """
    kind = scheme.kind
    if kind == SIMPLE:
        return 1.0
    if kind == POCOCK_SIMON:
        return None
    if not scheme.stratified:
        # balance is only enforced overall, so each stratum sees a thinned sequence
        return None
    if kind == URN:
        return 1.0 if scheme.urn_omega == 0 else 1.0 / 3.0
    if kind in (PERMUTED_BLOCK, BIASED_COIN):
        return 0.0
    raise ValueError(f"unknown scheme {kind!r}")


def t_model(fit, alpha=0.05):
    if not fit.info_a > 0:
        raise ValueError("information A_hat must be positive")
    return TestReport.build("T_M", fit.score_theta / np.sqrt(fit.n * fit.info_a), fit.info_a, alpha)


def t_score(fit, alpha=0.05):
    if not fit.robust_b > 0:
        raise ValueError("robust variance B_hat is zero")
    return TestReport.build("T_S", fit.score_theta / np.sqrt(fit.n * fit.robust_b), fit.robust_b, alpha)


def t_logrank(data, alpha=0.05):
    sigma2 = cox.logrank_sigma2(data)
    if not sigma2 > 0:
        raise ValueError("log-rank variance is zero")
    return TestReport.build("T_L", cox.logrank_numerator(data) / np.sqrt(data.n * sigma2), sigma2, alpha)


def t_calibrated(fit, strata, nu, alpha=0.05, family="T_CS"):
    """Calibrated statistic ``U / sqrt(sum_z n_z (var_z + nu * mean_z^2))``.

    Pass the fit without working covariates and ``family="T_CL"`` for the
    calibrated log-rank test. ``strata`` are the randomization strata.
    """
    if nu is None:
        raise CalibrationInapplicable("calibration inapplicable: nu_D is undefined for this scheme")
    moments = cox.stratum_moments(fit.o_hat, strata)
    denom = moments.denominator(nu)
    if not denom > 0:
        raise ValueError("calibrated variance is zero")
    return TestReport.build(family, fit.score_theta / np.sqrt(denom), denom / fit.n, alpha, nu_d=nu)


def bootstrap_variances(data, scheme, B, rng=None, max_redraws=None):
    """Re-randomization bootstrap variances of ``n^-1/2 U`` for the score and log-rank numerators.

    Each replicate resamples ``n`` subjects with replacement, runs the same
    randomization scheme on the resampled arrival sequence, refits the null
    model and recomputes both numerators. Resamples without events or with a
    failed fit are redrawn, at most ``max_redraws`` times in total.
    """
    if B < 2:
        raise ValueError("bootstrap needs B >= 2")
    gen = np.random.default_rng(rng)
    max_redraws = B if max_redraws is None else max_redraws
    n = data.n
    score, logrank = [], []
    redraws = 0
    while len(score) < B:
        idx = gen.integers(0, n, n)
        star = data.take(idx)
        star = star.with_treat(assign_sequence(scheme, star.strata, star.levels, gen))
        try:
            fit = cox.fit_null(star)
        except cox.CoxFitError:
            redraws += 1
            if redraws > max_redraws:
                raise
            continue
        score.append(fit.score_theta)
        logrank.append(cox.logrank_numerator(star))
    scale = 1.0 / n
    return float(np.var(score, ddof=1) * scale), float(np.var(logrank, ddof=1) * scale)


def t_bootstrap(data, scheme, B=200, which="score", rng=None, alpha=0.05, fit=None):
    """Bootstrap score (``which="score"``) or log-rank test."""
    if B < 50:
        raise ValueError("bootstrap tests need B >= 50")
    if which not in ("score", "logrank"):
        raise ValueError("which must be 'score' or 'logrank'")
    var_s, var_l = bootstrap_variances(data, scheme, B, rng)
    return bootstrap_reports(data, var_s, var_l, alpha, fit)["T_BS" if which == "score" else "T_BL"]


def bootstrap_reports(data, var_score, var_logrank, alpha=0.05, fit=None):
    fit = fit if fit is not None else cox.fit_null(data)
    root_n = np.sqrt(data.n)
    return {
        "T_BS": TestReport.build("T_BS", fit.score_theta / root_n / np.sqrt(var_score), var_score, alpha),
        "T_BL": TestReport.build("T_BL", cox.logrank_numerator(data) / root_n / np.sqrt(var_logrank),
                                 var_logrank, alpha),
    }
