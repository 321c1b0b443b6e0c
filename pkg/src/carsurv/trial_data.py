"""Subjects, potential outcomes and the six simulation cases.

A :class:`Cohort` holds covariates and both potential event times for every
subject before randomization; :meth:`Cohort.observe` turns it into
:class:`TrialData` once assignments are known. Both arms' event times come
from the same underlying uniform (or exponential) draw, so at ``theta == 0``
they coincide exactly, and censoring is drawn once per subject and shared by
the two arms.

Stratification factors are stored as 0-based integer codes, one column per
factor; ``levels`` gives the number of categories of each factor.
"""

import csv
from dataclasses import dataclass, replace

import numpy as np
from scipy.stats import norm

LAMBDA0 = np.log(2.0) / 12.0

# True covariate coefficients of the correctly specified cases.
DEFAULT_BETA = {
    1: (1.5,),
    2: (1.5, -1.0, -0.5),
    3: (-1.5, 0.5),
}

CORRECT_MODEL_CASES = (1, 2, 3)


@dataclass(frozen=True)
class CaseSpec:
    """One simulation case: ``case_id`` in 1..6, treatment effect ``theta``, sample size ``n``.

    ``K`` is the number of equal-probability categories the normal covariate
    is cut into for randomization in Case 3 (Cases 5 and 6 always use 4).
    ``beta`` overrides the covariate coefficients of Cases 1-3.
    """

    case_id: int
    theta: float = 0.0
    n: int = 500
    lambda0: float = LAMBDA0
    K: int = 4
    beta: tuple | None = None

    def __post_init__(self):
        if self.case_id not in range(1, 7):
            raise ValueError(f"case_id must be in 1..6, got {self.case_id}")
        if self.n < 2:
            raise ValueError(f"n must be at least 2, got {self.n}")
        if not self.lambda0 > 0:
            raise ValueError(f"lambda0 must be positive, got {self.lambda0}")
        if self.K < 2:
            raise ValueError(f"K must be at least 2, got {self.K}")
        if self.beta is not None:
            if self.case_id not in CORRECT_MODEL_CASES:
                raise ValueError("beta can only be overridden for cases 1-3")
            beta = tuple(float(b) for b in self.beta)
            if len(beta) != len(DEFAULT_BETA[self.case_id]):
                raise ValueError(f"case {self.case_id} takes {len(DEFAULT_BETA[self.case_id])} coefficients")
            object.__setattr__(self, "beta", beta)

    @property
    def true_beta(self):
        """Coefficients of the true hazard in the working covariates (cases 1-3 only)."""
        if self.case_id not in CORRECT_MODEL_CASES:
            return None
        return np.asarray(self.beta if self.beta is not None else DEFAULT_BETA[self.case_id])

    @property
    def correct_model(self):
        return self.case_id in CORRECT_MODEL_CASES

    @property
    def label(self):
        return f"case{self.case_id}" + (f"-K{self.K}" if self.case_id == 3 else "")

    def with_theta(self, theta):
        return replace(self, theta=float(theta))


@dataclass(frozen=True)
class Subject:
    """Per-subject view of a cohort row."""

    z: tuple
    w: tuple
    t1_star: float
    t0_star: float
    c: float


@dataclass
class Cohort:
    strata: np.ndarray
    levels: tuple
    w: np.ndarray
    t1: np.ndarray
    t0: np.ndarray
    c: np.ndarray

    @property
    def n(self):
        return len(self.c)

    def subject(self, i):
        return Subject(tuple(int(v) for v in self.strata[i]), tuple(self.w[i]),
                       float(self.t1[i]), float(self.t0[i]), float(self.c[i]))

    def observe(self, treat):
        treat = np.asarray(treat).astype(np.int8)
        if treat.shape != (self.n,) or np.any((treat != 0) & (treat != 1)):
            raise ValueError("treat must be a 0/1 vector with one entry per subject")
        x, delta = observe(np.where(treat == 1, self.t1, self.t0), self.c)
        return TrialData(x=x, delta=delta, treat=treat, w=self.w, strata=self.strata, levels=self.levels)


@dataclass
class TrialData:
    """Observed trial: times ``x``, event indicators ``delta``, assignments ``treat``,
    working covariates ``w`` (n x p, p may be 0) and stratification codes."""

    x: np.ndarray
    delta: np.ndarray
    treat: np.ndarray
    w: np.ndarray
    strata: np.ndarray
    levels: tuple

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.delta = np.asarray(self.delta).astype(np.int8)
        self.treat = np.asarray(self.treat).astype(np.int8)
        w = np.asarray(self.w, dtype=float)
        self.w = w.reshape(len(self.x), -1) if w.size else np.zeros((len(self.x), 0))
        strata = np.asarray(self.strata, dtype=np.int64)
        self.strata = strata.reshape(len(self.x), -1) if strata.size else np.zeros((len(self.x), 0), dtype=np.int64)
        self.levels = tuple(int(v) for v in self.levels)

    @property
    def n(self):
        return len(self.x)

    @property
    def stratum(self):
        """Joint stratum code of each subject."""
        from .randomization import joint_codes

        return joint_codes(self.strata, self.levels)

    def without_covariates(self):
        return replace(self, w=np.zeros((self.n, 0)))

    def take(self, idx):
        return TrialData(self.x[idx], self.delta[idx], self.treat[idx], self.w[idx], self.strata[idx], self.levels)

    def with_treat(self, treat):
        return replace(self, treat=np.asarray(treat).astype(np.int8))


def sample_exp_cox_time(lambda0, eta, u):
    """Inverse-CDF draw from an exponential with hazard ``lambda0 * exp(eta)``.

    >>> round(float(sample_exp_cox_time(np.log(2) / 12, 0.0, 0.5)), 10)
    12.0
    """
    u = np.asarray(u, dtype=float)
    if np.any((u <= 0) | (u >= 1)):
        raise ValueError("u must lie strictly inside (0, 1)")
    if not lambda0 > 0:
        raise ValueError("lambda0 must be positive")
    return -np.log(u) / (lambda0 * np.exp(eta))


def discretize_normal(value, K):
    """Equal-probability category (1..K) of a N(0,1) value, intervals open left, closed right."""
    if K < 2:
        raise ValueError("K must be at least 2")
    cuts = norm.ppf(np.arange(1, K) / K)
    out = np.searchsorted(cuts, value, side="left") + 1
    return int(out) if np.ndim(out) == 0 else out


def observe(t_star, c):
    """Observed time and event indicator; an event tied with censoring counts as an event."""
    t_star = np.asarray(t_star, dtype=float)
    c = np.asarray(c, dtype=float)
    x = np.minimum(t_star, c)
    delta = (t_star <= c).astype(np.int8)
    if x.ndim == 0:
        return float(x), int(delta)
    return x, delta


def _uniforms(rng, n):
    # strictly inside (0, 1) as required by the inverse CDF
    return rng.uniform(np.finfo(float).tiny, 1.0, n)


def gen_case(spec, seed=None):
    """Draw an unassigned cohort of ``spec.n`` subjects for one of the six cases."""
    rng = np.random.default_rng(seed)
    n, lam, theta = spec.n, spec.lambda0, spec.theta
    cid = spec.case_id
    if cid == 1:
        z = rng.binomial(1, 0.5, n)
        (b,) = spec.true_beta
        eta = b * z
        c = rng.uniform(20, 50, n)
        strata, levels, w = z[:, None], (2,), z[:, None].astype(float)
    elif cid in (2, 4):
        z1 = rng.binomial(1, 0.5, n)
        z2 = rng.choice(3, size=n, p=[0.4, 0.3, 0.3])  # codes 0,1,2 for Z2 = 1,2,3
        z21, z22 = (z2 == 0).astype(float), (z2 == 1).astype(float)
        if cid == 2:
            b = spec.true_beta
            eta = b[0] * z1 + b[1] * z21 + b[2] * z22
            c = rng.uniform(20, 40, n)
            w = np.column_stack([z1, z21, z22]).astype(float)
        else:
            eta = z1 - 2.0 * z1 * z21 + z1 * z22
            c = rng.uniform(20, 50, n)
            w = np.column_stack([z1, z2 + 1]).astype(float)
        strata, levels = np.column_stack([z1, z2]), (2, 3)
    elif cid in (3, 5):
        z1 = rng.binomial(1, 0.5, n)
        z2 = rng.standard_normal(n)
        k = spec.K if cid == 3 else 4
        cat = discretize_normal(z2, k) - 1
        if cid == 3:
            b = spec.true_beta
            eta = b[0] * z1 + b[1] * z2**2
            c = rng.uniform(10, 40, n)
            w = np.column_stack([z1, z2**2])
        else:
            eta = -0.5 * z1 + 1.5 * z2**2
            # exponential with mean 2*Z1 is a point mass at 0 when Z1 = 0
            c = 10.0 + rng.exponential(1.0, n) * 2.0 * z1
            w = np.column_stack([z1, z2])
        strata, levels = np.column_stack([z1, cat]), (2, k)
    else:
        z = rng.standard_normal(n)
        eps = rng.exponential(1.0, n)
        c = rng.uniform(10, 20, n)
        t0 = np.exp(1.5 * z) + eps
        t1 = np.exp(theta + 1.5 * z) + eps
        strata = (discretize_normal(z, 4) - 1)[:, None]
        return Cohort(strata.astype(np.int64), (4,), z[:, None], t1, t0, c)
    u = _uniforms(rng, n)
    t0 = sample_exp_cox_time(lam, eta, u)
    t1 = sample_exp_cox_time(lam, eta + theta, u)
    return Cohort(np.asarray(strata, dtype=np.int64), levels, np.asarray(w, dtype=float), t1, t0, c)


def write_trial_csv(path, data):
    """Dump observed data as ``id,z1..,w1..,I,x,delta``."""
    m, p = data.strata.shape[1], data.w.shape[1]
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["id"] + [f"z{j + 1}" for j in range(m)] + [f"w{j + 1}" for j in range(p)] + ["I", "x", "delta"])
        for i in range(data.n):
            out.writerow([i] + data.strata[i].tolist() + [repr(float(v)) for v in data.w[i]]
                         + [int(data.treat[i]), repr(float(data.x[i])), int(data.delta[i])])


def read_trial_csv(path, levels=None):
    """Inverse of :func:`write_trial_csv`; ``levels`` defaults to the observed code ranges."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    zc = [i for i, h in enumerate(header) if h.startswith("z")]
    wc = [i for i, h in enumerate(header) if h.startswith("w")]
    col = {h: i for i, h in enumerate(header)}
    for name in ("I", "x", "delta"):
        if name not in col:
            raise ValueError(f"missing column {name!r} in {path}")
    arr = np.array(body, dtype=object)
    strata = arr[:, zc].astype(np.int64) if zc else np.zeros((len(body), 0), dtype=np.int64)
    w = arr[:, wc].astype(float) if wc else np.zeros((len(body), 0))
    if levels is None:
        levels = tuple(int(v) + 1 for v in strata.max(axis=0)) if strata.shape[1] else ()
    return TrialData(arr[:, col["x"]].astype(float), arr[:, col["delta"]].astype(np.int8),
                     arr[:, col["I"]].astype(np.int8), w, strata, levels)
