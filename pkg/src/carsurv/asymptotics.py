"""Large-sample plug-in values of the limit theory.

These are numeric oracles: they never look at a randomized trial. A large
sample of subjects is drawn under the null (the arm does not matter when
``theta = 0``), the baseline ratio ``p(t)`` is estimated on a grid of event
quantiles by occurrence/exposure ratios, and each subject's limiting
influence term

    O = (delta - exp(beta*'W) * P(X)) / 2,   P(t) = integral_0^t p(s) ds

is evaluated by integrating the piecewise-constant ``p`` exactly. Splitting
its variance by randomization stratum gives the within-stratum part ``A``
and the between-stratum part ``B`` that drive the limiting rejection rates
and Pitman efficacies.

The grid estimator deliberately shares no code with :mod:`carsurv.cox`
(whose Breslow increments live on the raw event times), so agreement between
the two is a genuine cross-check.
"""

import csv
import io
from dataclasses import dataclass, replace

import numpy as np
from scipy.integrate import trapezoid
from scipy.stats import norm

from . import cox
from . import rng as rng_mod
from .stat_tests import nu_d as scheme_nu_d
from .stat_tests import z_crit
from .trial_data import TrialData, gen_case

GRID_SIZE = 400
BETA_STAR_N = 100_000
N_BATCHES = 10


@dataclass
class LimitComponents:
    """Within-stratum variance ``A``, between-stratum variance ``B`` and the pieces behind them."""

    mode: str
    within_var: float
    between_var: float
    nu_d: float | None
    beta_star: np.ndarray
    grid: np.ndarray
    p_of_t: np.ndarray
    lambda0_cum: np.ndarray
    total_var: float
    mc_size: int
    within_se: float = float("nan")
    between_se: float = float("nan")


@dataclass
class EfficacyComponents:
    sigma_s2: float
    sigma_l2: float
    sigma_c2: float
    are: float
    are_se: float
    nu_d: float
    gamma: float = 1.0

    @property
    def efficacy_cs(self):
        return self.gamma**2 * self.sigma_s2

    @property
    def efficacy_cl(self):
        return self.gamma**2 * self.sigma_l2**2 / self.sigma_c2


def _null_sample(case, size, rng):
    cohort = gen_case(replace(case, theta=0.0, n=int(size)), rng)
    x = np.minimum(cohort.t0, cohort.c)
    delta = (cohort.t0 <= cohort.c).astype(float)
    return cohort, x, delta


def _grid(x, delta, size):
    ev = np.sort(x[delta > 0])
    if len(ev) < 2 * size:
        raise ValueError(f"only {len(ev)} events: too few for a {size}-point grid")
    inner = np.quantile(ev, np.linspace(0, 1, size + 1)[1:-1])
    return np.concatenate([[0.0], np.unique(inner), [x.max() * (1 + 1e-12) + 1e-12]])


def _ratio_on_grid(x, delta, weight, grid):
    """Occurrence/exposure ratio ``E{dN} / E{Y * weight}`` on each grid interval."""
    width = np.diff(grid)
    k = np.searchsorted(grid, x, side="left") - 1  # interval holding x
    k = np.clip(k, 0, len(width) - 1)
    events = np.bincount(k, weights=delta, minlength=len(width))
    partial = np.bincount(k, weights=weight * (x - grid[k]), minlength=len(width))
    # subjects whose time exceeds the interval contribute its full width
    w_after = np.bincount(k, weights=weight, minlength=len(width))
    beyond = np.concatenate([np.cumsum(w_after[::-1])[::-1][1:], [0.0]])
    exposure = partial + beyond * width
    with np.errstate(invalid="ignore", divide="ignore"):
        p = np.where(exposure > 0, events / exposure, 0.0)
    cum = np.concatenate([[0.0], np.cumsum(p * width)])
    return p, cum, k


def influence_terms(x, delta, w, beta, grid):
    """Limiting influence term ``O_i`` of every subject, with the ``p(t)`` grid estimate."""
    weight = np.exp(w @ beta) if len(beta) else np.ones(len(x))
    p, cum, k = _ratio_on_grid(x, delta, weight, grid)
    big_p = cum[k] + p[k] * (x - grid[k])
    return 0.5 * (delta - weight * big_p), p, cum


def _decompose(o, stratum):
    labels, inv = np.unique(stratum, return_inverse=True)
    n_z = np.bincount(inv, minlength=len(labels))
    mean_z = np.bincount(inv, weights=o, minlength=len(labels)) / n_z
    centred = o - o.mean()
    total = float(np.mean(centred**2))
    between = float(np.sum(n_z * (mean_z - o.mean()) ** 2) / len(o))
    return total - between, between, total


def beta_star(case, seed=0, size=BETA_STAR_N):
    """Limit of the null fit: the true coefficients for cases 1-3, a giant fit otherwise."""
    if case.correct_model:
        return case.true_beta.astype(float)
    cohort, x, delta = _null_sample(case, size, rng_mod.stream(seed, "beta-star", case.label))
    data = TrialData(x, delta, np.zeros(len(x)), cohort.w, cohort.strata, cohort.levels)
    return cox.fit_null(data).beta_hat0


def estimate_limit_components(case, scheme=None, mc_size=200_000, seed=0, mode="score", grid_size=GRID_SIZE):
    """Within/between-stratum variance of the limiting influence terms.

    ``mode="score"`` uses the working covariates at ``beta*``;
    ``mode="logrank"`` drops them (``beta = 0``).
    """
    if mc_size < 100_000:
        raise ValueError("mc_size must be at least 1e5")
    if mode not in ("score", "logrank"):
        raise ValueError("mode must be 'score' or 'logrank'")
    cohort, x, delta = _null_sample(case, mc_size, rng_mod.stream(seed, "limits", case.label))
    if mode == "score":
        w, beta = cohort.w, beta_star(case, seed)
    else:
        w, beta = np.zeros((len(x), 0)), np.zeros(0)
    grid = _grid(x, delta, grid_size)
    o, p, cum = influence_terms(x, delta, w, beta, grid)
    stratum = np.ravel_multi_index(tuple(cohort.strata.T), cohort.levels)
    within, between, total = _decompose(o, stratum)
    parts = np.array([_decompose(o[b], stratum[b])[:2] for b in np.array_split(np.arange(len(o)), N_BATCHES)])
    se = parts.std(axis=0, ddof=1) / np.sqrt(N_BATCHES)
    return LimitComponents(
        mode=mode,
        within_var=within,
        between_var=between,
        nu_d=None if scheme is None else scheme_nu_d(scheme),
        beta_star=np.asarray(beta),
        grid=grid,
        p_of_t=p,
        lambda0_cum=cum,
        total_var=total,
        mc_size=mc_size,
        within_se=float(se[0]),
        between_se=float(se[1]),
    )


def predicted_type1(components, alpha=0.05, nu=None):
    """Limiting rejection rate ``2 Phi(-z sqrt((A + B) / (A + nu B)))`` of T_S or T_L."""
    a, b = components.within_var, components.between_var
    nu = components.nu_d if nu is None else nu
    if nu is None:
        raise ValueError("nu_D undefined for this scheme")
    denom = a + nu * b
    if not denom > 0:
        raise ValueError("A + nu_D * B must be positive")
    return float(2.0 * norm.cdf(-z_crit(alpha) * np.sqrt((a + b) / denom)))


def _efficacy_parts(case, x, delta, w, stratum, beta, nu, grid):
    o, _, _ = influence_terms(x, delta, w, beta, grid)
    o_tilde, _, _ = influence_terms(x, delta, np.zeros((len(x), 0)), np.zeros(0), grid)
    sigma_s2 = _decompose(o, stratum)[0]
    within_t, between_t, _ = _decompose(o_tilde, stratum)
    sigma_c2 = within_t + nu * between_t
    # E{Y(t) e^{k beta'W}} for k = 0, 1, 2 on a fine time grid
    lin = w @ beta
    order = np.argsort(x)
    xs = x[order]
    t = np.linspace(0.0, xs[-1], 4001)
    start = np.searchsorted(xs, t, side="left")
    moments = []
    for k in (0, 1, 2):
        tail = np.concatenate([np.cumsum(np.exp(k * lin[order])[::-1])[::-1], [0.0]])
        moments.append(tail[start] / len(x))
    e0, e1, e2 = moments
    with np.errstate(invalid="ignore", divide="ignore"):
        bracket = np.where(e0 > 0, e2 - e1**2 / e0, 0.0)
    lam = case.lambda0
    sigma_l2 = sigma_s2 - 0.25 * trapezoid(lam * lam * t * bracket, x=t)
    return sigma_s2, sigma_l2, sigma_c2


def pitman_are(case, scheme=None, mc_size=200_000, seed=0, nu=None, grid_size=GRID_SIZE):
    """Efficacy pieces and ``ARE(T_CS, T_CL) = sigma_L^4 / (sigma_C^2 sigma_S^2)``.

    Only for the correctly specified cases (1-3), where ``beta* = beta`` and
    the baseline hazard is the constant ``lambda0``, so ``Lambda0(t) = lambda0 t``.
    ``nu`` overrides the scheme's ``nu_D``. The standard error comes from
    ``N_BATCHES`` independent sub-samples.
    """
    if not case.correct_model:
        raise ValueError("pitman_are needs a correctly specified case (1-3)")
    nu = scheme_nu_d(scheme) if nu is None else nu
    if nu is None:
        raise ValueError("nu_D undefined for this scheme")
    cohort, x, delta = _null_sample(case, mc_size, rng_mod.stream(seed, "pitman", case.label))
    beta = case.true_beta.astype(float)
    stratum = np.ravel_multi_index(tuple(cohort.strata.T), cohort.levels)
    grid = _grid(x, delta, grid_size)
    s2, l2, c2 = _efficacy_parts(case, x, delta, cohort.w, stratum, beta, nu, grid)
    batch_are = []
    for b in np.array_split(np.arange(len(x)), N_BATCHES):
        bs2, bl2, bc2 = _efficacy_parts(case, x[b], delta[b], cohort.w[b], stratum[b], beta, nu,
                                        _grid(x[b], delta[b], grid_size // 4))
        batch_are.append(bl2**2 / (bc2 * bs2))
    are_se = float(np.std(batch_are, ddof=1) / np.sqrt(N_BATCHES))
    return EfficacyComponents(s2, l2, c2, float(l2**2 / (c2 * s2)), are_se, nu)


ASYMPTOTICS_HEADER = ["case", "scheme", "mode", "A", "B", "nu_d", "predicted_type1",
                      "sigma_s2", "sigma_l2", "sigma_c2", "are"]


def components_row(case, scheme, components, efficacy=None, alpha=0.05):
    nu = components.nu_d
    pred = predicted_type1(components, alpha) if nu is not None else float("nan")
    row = [case.label, scheme.label, components.mode, components.within_var, components.between_var,
           "" if nu is None else nu, pred]
    if efficacy is None:
        row += ["", "", "", ""]
    else:
        row += [efficacy.sigma_s2, efficacy.sigma_l2, efficacy.sigma_c2, efficacy.are]
    return [f"{v:.8g}" if isinstance(v, float) else v for v in row]


def write_asymptotics_csv(rows, fh=None):
    buf = fh if fh is not None else io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(ASYMPTOTICS_HEADER)
    w.writerows(rows)
    if fh is None:
        return buf.getvalue()
