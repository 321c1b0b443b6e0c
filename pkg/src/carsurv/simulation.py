"""Replicated trial simulation: Type I error and power of the test families.

A replicate draws a cohort, randomizes it patient by patient, observes the
outcomes and computes every requested test. Streams are addressed by
``(seed, case, n, theta index, replicate)``; the data stream leaves the
scheme out, so different schemes see the same cohorts (common random
numbers) unless ``common_random_numbers`` is turned off.

Replicates are independent, so they can be farmed out to worker processes;
results are collected by replicate index and reduced as integer counts,
which keeps reports byte-identical for any number of workers.
"""

import csv
import io
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import cox
from . import rng as rng_mod
from .randomization import assign_sequence
from .stat_tests import (
    BOOTSTRAP,
    CALIBRATED,
    FAMILIES,
    bootstrap_reports,
    bootstrap_variances,
    nu_d,
    t_calibrated,
    t_logrank,
    t_model,
    t_score,
)
from .trial_data import gen_case

WORKERS_ENV = "CARSURV_WORKERS"
FAILURE_LIMIT = 0.01


class ReplicateFailureError(RuntimeError):
    pass


def default_workers():
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class SimConfig:
    """One simulation experiment.

    ``bootstrap`` is the bootstrap size B (0 leaves out T_BS and T_BL).
    ``families`` restricts the computed tests; by default every family that
    applies to the scheme is run.
    """

    case: object
    scheme: object
    theta_grid: tuple = (0.0,)
    replicates: int = 10_000
    bootstrap: int = 0
    alpha: float = 0.05
    seed: int = 0
    workers: int = 1
    families: tuple | None = None
    common_random_numbers: bool = True

    def __post_init__(self):
        object.__setattr__(self, "theta_grid", tuple(float(t) for t in self.theta_grid))
        if self.replicates < 1:
            raise ValueError("replicates must be at least 1")
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")
        if not self.theta_grid:
            raise ValueError("theta_grid must not be empty")
        if self.bootstrap and self.bootstrap < 50:
            raise ValueError("bootstrap size must be 0 or at least 50")
        if self.families is not None:
            fams = tuple(self.families)
            unknown = set(fams) - set(FAMILIES)
            if unknown:
                raise ValueError(f"unknown test families {sorted(unknown)}")
            if set(fams) & set(BOOTSTRAP) and not self.bootstrap:
                raise ValueError("bootstrap families requested with bootstrap size 0")
            object.__setattr__(self, "families", fams)

    @property
    def nu_d(self):
        return nu_d(self.scheme)

    def active_families(self):
        """Families computed per replicate, and those skipped as inapplicable."""
        wanted = self.families or tuple(f for f in FAMILIES if self.bootstrap or f not in BOOTSTRAP)
        if self.nu_d is None:
            return tuple(f for f in wanted if f not in CALIBRATED), tuple(f for f in wanted if f in CALIBRATED)
        return wanted, ()


@dataclass
class TrialResult:
    reports: dict
    failures: dict
    data: object = None


def _streams(config, theta_index, rep):
    case = config.case
    data_key = ["data", case.label, case.n, theta_index, rep]
    if not config.common_random_numbers:
        data_key.append(config.scheme.label)
    tail = (case.label, case.n, theta_index, rep, config.scheme.label)
    return (
        rng_mod.stream(config.seed, *data_key),
        rng_mod.stream(config.seed, "assign", *tail),
        rng_mod.stream(config.seed, "boot", *tail),
    )


def run_trial(config, theta_index, rep, keep_data=False):
    """Simulate replicate ``rep`` at ``config.theta_grid[theta_index]`` and run the tests."""
    data_rng, assign_rng, boot_rng = _streams(config, theta_index, rep)
    case = config.case.with_theta(config.theta_grid[theta_index])
    cohort = gen_case(case, data_rng)
    data = cohort.observe(assign_sequence(config.scheme, cohort.strata, cohort.levels, assign_rng))
    active, _ = config.active_families()
    alpha, nu = config.alpha, config.nu_d
    reports, failures = {}, {}

    def attempt(families, fn):
        todo = [f for f in families if f in active]
        if not todo:
            return
        try:
            out = fn()
        except (cox.CoxFitError, ValueError) as exc:
            for f in todo:
                failures[f] = str(exc)
            return
        for f in todo:
            reports[f] = out[f]

    fit_cache = {}

    def score_fit():
        if "w" not in fit_cache:
            fit_cache["w"] = cox.fit_null(data)
        return fit_cache["w"]

    def score_tests():
        fit = score_fit()
        out = {}
        if "T_M" in active:
            out["T_M"] = t_model(fit, alpha)
        if "T_S" in active:
            out["T_S"] = t_score(fit, alpha)
        if "T_CS" in active:
            out["T_CS"] = t_calibrated(fit, data.stratum, nu, alpha, "T_CS")
        return out

    def logrank_tests():
        out = {}
        if "T_L" in active:
            out["T_L"] = t_logrank(data, alpha)
        if "T_CL" in active:
            fit0 = cox.fit_null(data.without_covariates())
            out["T_CL"] = t_calibrated(fit0, data.stratum, nu, alpha, "T_CL")
        return out

    def boot_tests():
        var_s, var_l = bootstrap_variances(data, config.scheme, config.bootstrap, boot_rng)
        return bootstrap_reports(data, var_s, var_l, alpha, score_fit())

    attempt(("T_M", "T_S", "T_CS"), score_tests)
    attempt(("T_L", "T_CL"), logrank_tests)
    attempt(BOOTSTRAP, boot_tests)
    return TrialResult(reports, failures, data if keep_data else None)


def _run_chunk(config, theta_index, reps):
    active, _ = config.active_families()
    out = []
    for rep in reps:
        res = run_trial(config, theta_index, rep)
        out.append({f: (None if f in res.failures else res.reports[f].reject) for f in active})
    return out


@dataclass
class SimRow:
    case: str
    scheme: str
    n: int
    theta: float
    family: str
    R: int
    reject_rate: float
    mc_se: float
    failures: int


SIM_HEADER = ["case", "scheme", "n", "theta", "family", "R", "reject_rate", "mc_se", "failures"]


@dataclass
class SimReport:
    rows: list = field(default_factory=list)
    inapplicable: tuple = ()

    def rate(self, family, theta=None):
        return self.row(family, theta).reject_rate

    def se(self, family, theta=None):
        return self.row(family, theta).mc_se

    def row(self, family, theta=None):
        for r in self.rows:
            if r.family == family and (theta is None or np.isclose(r.theta, theta)):
                return r
        raise KeyError(f"no row for family {family} theta {theta}")

    def thetas(self):
        return sorted({r.theta for r in self.rows})

    def extend(self, other):
        self.rows.extend(other.rows)
        self.inapplicable = tuple(sorted(set(self.inapplicable) | set(other.inapplicable)))
        return self

    def to_csv(self, fh=None, header=True):
        buf = fh if fh is not None else io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        if header:
            w.writerow(SIM_HEADER)
        for r in self.rows:
            w.writerow([r.case, r.scheme, r.n, f"{r.theta:.6g}", r.family, r.R,
                        f"{r.reject_rate:.6f}", f"{r.mc_se:.6f}", r.failures])
        if fh is None:
            return buf.getvalue()


def read_sim_csv(fh):
    rows = []
    reader = csv.DictReader(fh)
    if reader.fieldnames != SIM_HEADER:
        raise ValueError(f"unexpected header {reader.fieldnames}")
    for rec in reader:
        rows.append(SimRow(rec["case"], rec["scheme"], int(rec["n"]), float(rec["theta"]), rec["family"],
                           int(rec["R"]), float(rec["reject_rate"]), float(rec["mc_se"]), int(rec["failures"])))
    return SimReport(rows)


def _chunks(n, k):
    bounds = np.linspace(0, n, k + 1).astype(int)
    return [range(a, b) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]


def estimate_rejection(config, theta_index=0):
    """Rejection rates with Monte Carlo standard errors at one grid value of theta."""
    active, skipped = config.active_families()
    R = config.replicates
    workers = max(1, int(config.workers))
    if workers == 1:
        results = _run_chunk(config, theta_index, range(R))
    else:
        chunks = _chunks(R, workers * 4)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = pool.map(_run_chunk, [config] * len(chunks), [theta_index] * len(chunks), chunks)
            results = [r for part in parts for r in part]
    theta = config.theta_grid[theta_index]
    report = SimReport(inapplicable=skipped)
    worst = 0.0
    for f in active:
        outcomes = [res[f] for res in results]
        failures = sum(o is None for o in outcomes)
        rejects = sum(1 for o in outcomes if o)
        used = R - failures
        rate = rejects / used if used else float("nan")
        se = float(np.sqrt(rate * (1 - rate) / used)) if used else float("nan")
        worst = max(worst, failures / R)
        report.rows.append(SimRow(config.case.label, config.scheme.label, config.case.n, theta, f,
                                  used, rate, se, failures))
    if worst > FAILURE_LIMIT:
        raise ReplicateFailureError(
            f"{worst:.1%} of replicates failed for {config.case.label}/{config.scheme.label} at theta={theta}"
        )
    return report


def power_sweep(config):
    """Rejection rates for every theta in ``config.theta_grid`` (must be sorted)."""
    grid = list(config.theta_grid)
    if grid != sorted(grid):
        raise ValueError("theta_grid must be sorted")
    report = SimReport()
    for i in range(len(grid)):
        report.extend(estimate_rejection(config, i))
    return report


def with_replicates(config, replicates):
    return replace(config, replicates=int(replicates))
