"""Null-model partial likelihood and the score/variance pieces built from it.

Everything here works on a :class:`~carsurv.trial_data.TrialData`. The risk
set at time ``t`` is ``{k: x_k >= t}``; tied event times share one risk set
(Breslow) and a censoring tied with an event time is still at risk there.
Sums over risk sets are evaluated with one sort and cumulative sums, so every
statistic costs O(n log n + n p^2).

Notation follows the usual counting-process quantities: ``R0(t)`` is
``sum_k Y_k(t) exp(beta'W_k)`` (that is ``n * S0``), ``R1(t)`` the same sum
restricted to arm 1.
"""

from dataclasses import dataclass

import numpy as np


class CoxFitError(RuntimeError):
    """The null partial-likelihood fit is not defined for this data."""


class ConvergenceError(CoxFitError):
    pass


class _Sorted:
    """Data in increasing time order with tie-group boundaries."""

    def __init__(self, data):
        x = np.asarray(data.x, dtype=float)
        self.n = len(x)
        self.order = np.argsort(x, kind="stable")
        self.x = x[self.order]
        self.delta = np.asarray(data.delta, dtype=float)[self.order]
        self.treat = np.asarray(data.treat, dtype=float)[self.order]
        self.w = np.asarray(data.w, dtype=float)[self.order]
        self.first = np.searchsorted(self.x, self.x, side="left")
        self.last = np.searchsorted(self.x, self.x, side="right") - 1
        self.events = self.delta > 0

    def at_risk(self, v):
        """``sum_{k: x_k >= x_i} v_k`` for every (sorted) subject i."""
        return np.cumsum(v[::-1], axis=0)[::-1][self.first]

    def up_to(self, v):
        """``sum_{k: x_k <= x_i} v_k`` for every (sorted) subject i."""
        return np.cumsum(v, axis=0)[self.last]

    def unsort(self, v):
        out = np.empty_like(v)
        out[self.order] = v
        return out

    def relative_risk(self, beta):
        beta = np.asarray(beta, dtype=float).reshape(-1)
        if beta.shape[0] != self.w.shape[1]:
            raise ValueError(f"beta has {beta.shape[0]} entries, W has {self.w.shape[1]} columns")
        if beta.shape[0] == 0:
            return np.ones(self.n), 0.0
        eta = self.w @ beta
        if not np.all(np.isfinite(eta)):
            raise ValueError("beta must be finite")
        shift = eta.max()
        # exp(beta'W) up to a common factor, which cancels in every ratio used here
        return np.exp(eta - shift), shift


def _prepare(data):
    return data if isinstance(data, _Sorted) else _Sorted(data)


def _arm_fraction(s, beta):
    """``R1/R0`` at each (sorted) subject's time, plus the relative risks."""
    r, _ = s.relative_risk(beta)
    r0 = s.at_risk(r)
    r1 = s.at_risk(r * s.treat)
    return r1 / r0, r, r0


def log_partial_likelihood(theta, beta, data):
    """Log of the Cox partial likelihood in ``(theta, beta)`` (Breslow ties)."""
    s = _prepare(data)
    beta = np.asarray(beta, dtype=float).reshape(-1)
    eta = theta * s.treat + (s.w @ beta if beta.size else 0.0)
    shift = np.max(eta)
    log_r0 = np.log(s.at_risk(np.exp(eta - shift))) + shift
    return float(np.sum((eta - log_r0)[s.events]))


def beta_gradient_hessian(beta, data):
    """Gradient and Hessian in ``beta`` of the log partial likelihood at ``theta = 0``."""
    s = _prepare(data)
    r, _ = s.relative_risk(beta)
    r0 = s.at_risk(r)
    rw = s.at_risk(r[:, None] * s.w)
    rww = s.at_risk(r[:, None, None] * s.w[:, :, None] * s.w[:, None, :])
    ev = s.events
    mean_w = rw[ev] / r0[ev, None]
    grad = np.sum(s.w[ev] - mean_w, axis=0)
    cov = rww[ev] / r0[ev, None, None] - mean_w[:, :, None] * mean_w[:, None, :]
    return grad, -cov.sum(axis=0)


def score_theta(beta, data):
    """Treatment score ``U_theta(0, beta)``: sum over events of ``I_i - R1/R0``."""
    s = _prepare(data)
    if not s.events.any():
        return 0.0
    frac, _, _ = _arm_fraction(s, beta)
    return float(np.sum((s.treat - frac)[s.events]))


def info_theta(beta, data):
    """``-n^-1 d^2 log L / d theta^2`` at ``theta = 0``."""
    s = _prepare(data)
    if not s.events.any():
        return 0.0
    frac, _, _ = _arm_fraction(s, beta)
    f = frac[s.events]
    return float(np.sum(f * (1.0 - f)) / s.n)


def _o_hats_sorted(s, beta):
    r, _ = s.relative_risk(beta)
    r0 = s.at_risk(r)
    increments = np.where(s.events, 1.0 / r0, 0.0)
    return 0.5 * (s.delta - r * s.up_to(increments))


def o_hats(beta, data):
    """Per-subject ``O_i = (delta_i - exp(beta'W_i) * Lambda_hat(x_i)) / 2``,
    with ``Lambda_hat`` the Breslow cumulative hazard; returned in input order."""
    s = _prepare(data)
    return s.unsort(_o_hats_sorted(s, beta))


def robust_var_b(beta, data):
    """Robust variance ``B_hat(0, beta)``; equals ``mean(o_hats(beta, data)**2)``."""
    s = _prepare(data)
    return float(np.mean(_o_hats_sorted(s, beta) ** 2))


def logrank_numerator(data):
    """``sum_i delta_i (I_i - Ybar_1/Ybar)`` at each event time."""
    s = _prepare(data)
    y = s.at_risk(np.ones(s.n))
    y1 = s.at_risk(s.treat)
    return float(np.sum((s.treat - y1 / y)[s.events]))


def logrank_sigma2(data):
    """``n^-1 sum over events of Ybar_1 Ybar_0 / Ybar^2``."""
    s = _prepare(data)
    y = s.at_risk(np.ones(s.n))
    y1 = s.at_risk(s.treat)
    y0 = y - y1
    return float(np.sum((y1 * y0 / y**2)[s.events]) / s.n)


@dataclass
class NullCoxFit:
    beta_hat0: np.ndarray
    score_theta: float
    info_a: float
    robust_b: float
    o_hat: np.ndarray
    converged: bool
    iterations: int
    gradient_norm: float
    n: int
    loglik: float


def fit_null(data, tol=1e-8, max_iter=50, step_tol=1e-6):
    """Maximize the partial likelihood in ``beta`` with ``theta`` fixed at 0.

    Newton-Raphson from ``beta = 0`` with step halving whenever the log
    likelihood would decrease. Converged when the sup-norm of the gradient is
    at most ``tol`` and the Newton step is below ``step_tol``; the second
    condition catches monotone likelihoods (separated data), where the
    gradient decays towards zero while ``beta`` runs off to infinity. With no
    working covariates the fit is trivial and the score equals the log-rank
    numerator.
    """
    s = _prepare(data)
    if not s.events.any():
        raise CoxFitError("no events: the partial likelihood is empty")
    p = s.w.shape[1]
    beta = np.zeros(p)
    iterations = 0
    grad_norm = 0.0
    loglik = log_partial_likelihood(0.0, beta, s)
    if p:
        converged = False
        for iterations in range(max_iter + 1):
            grad, hess = beta_gradient_hessian(beta, s)
            grad_norm = float(np.max(np.abs(grad)))
            info = -hess
            try:
                if np.linalg.cond(info) > 1e12:
                    raise np.linalg.LinAlgError
                step = np.linalg.solve(info, grad)
            except np.linalg.LinAlgError:
                raise CoxFitError("singular information matrix in beta") from None
            if grad_norm <= tol and np.max(np.abs(step)) <= step_tol:
                converged = True
                break
            if iterations == max_iter:
                break
            for _ in range(40):
                trial = beta + step
                trial_ll = log_partial_likelihood(0.0, trial, s)
                if trial_ll >= loglik - 1e-12 * abs(loglik):
                    break
                step = step / 2.0
            beta, loglik = trial, trial_ll
        if not converged:
            raise ConvergenceError(
                f"Newton-Raphson did not converge in {max_iter} iterations "
                f"(gradient norm {grad_norm:.3g}, beta {beta}); the likelihood may be monotone"
            )
    frac, r, r0 = _arm_fraction(s, beta)
    ev = s.events
    o_sorted = 0.5 * (s.delta - r * s.up_to(np.where(ev, 1.0 / r0, 0.0)))
    return NullCoxFit(
        beta_hat0=beta,
        score_theta=float(np.sum((s.treat - frac)[ev])),
        info_a=float(np.sum(frac[ev] * (1.0 - frac[ev])) / s.n),
        robust_b=float(np.mean(o_sorted**2)),
        o_hat=s.unsort(o_sorted),
        converged=True,
        iterations=iterations,
        gradient_norm=grad_norm,
        n=s.n,
        loglik=loglik,
    )


@dataclass
class StratumMoments:
    """Per-stratum count, mean and divisor-``n_z`` variance of the ``O_i``."""

    strata: np.ndarray
    n_z: np.ndarray
    mean: np.ndarray
    var: np.ndarray

    def denominator(self, nu_d):
        """``sum_z n_z (var_z + nu_d * mean_z^2)``."""
        return float(np.sum(self.n_z * (self.var + nu_d * self.mean**2)))


def stratum_moments(o_hat, strata):
    """Stratum means and variances of ``o_hat``; ``strata`` is one label per subject."""
    o_hat = np.asarray(o_hat, dtype=float)
    strata = np.asarray(strata)
    if strata.shape[0] != o_hat.shape[0]:
        raise ValueError("every subject needs a stratum label")
    labels, inv = np.unique(strata, return_inverse=True, axis=0 if strata.ndim > 1 else None)
    inv = inv.reshape(-1)
    n_z = np.bincount(inv, minlength=len(labels))
    mean = np.bincount(inv, weights=o_hat, minlength=len(labels)) / n_z
    var = np.bincount(inv, weights=(o_hat - mean[inv]) ** 2, minlength=len(labels)) / n_z
    return StratumMoments(labels, n_z, mean, var)
