"""Command-line front end.

Subcommands: ``simulate``, ``power``, ``reproduce``, ``asymptotics`` and
``imbalance``. Settings come from an optional YAML run config (``--config``)
overridden by flags. Results go to ``--output`` or standard output as CSV;
progress goes to standard error.

Exit codes: 0 success, 2 invalid configuration, 3 too many failed replicates.
"""

import argparse
import contextlib
import csv
import sys
import time

import numpy as np
import yaml

from . import asymptotics, simulation
from . import rng as rng_mod
from .randomization import (
    CategoricalLaw,
    SchemeSpec,
    assign_sequence,
    imbalance_report,
    joint_codes,
    monte_carlo_imbalance,
)
from .simulation import ReplicateFailureError, SimConfig, default_workers
from .stat_tests import FAMILIES, nu_d
from .trial_data import LAMBDA0, CaseSpec, gen_case

EXIT_OK, EXIT_CONFIG, EXIT_FAILURES = 0, 2, 3

SCHEME_KEYS = {"kind", "stratified", "block_size", "block_schedule", "coin_p", "urn_s", "urn_omega",
               "ps_weights", "ps_metric"}
RUN_KEYS = {"case", "K", "n", "lambda0", "theta", "theta_grid", "scheme", "replicates", "bootstrap", "alpha",
            "seed", "workers", "families", "common_random_numbers", "output", "svg"}

# Paper-reported Type I error (%) at n = 200 and n = 500; None marks cells not reported.
TABLE1_FAMILIES = ("T_L", "T_BL", "T_CL", "T_S", "T_BS", "T_CS")
TABLE2_FAMILIES = ("T_M", "T_L", "T_BL", "T_CL", "T_S", "T_BS", "T_CS")
SCHEME_ROWS = ("biased-coin", "permuted-block", "pocock-simon", "urn", "simple")
PAPER_TABLE1 = {
    (1, None): [
        [2.2, 5.1, 5.0, 4.9, 5.0, 4.8, 1.7, 4.8, 4.6, 4.7, 4.9, 4.6],
        [2.0, 4.8, 4.7, 4.5, 4.6, 4.4, 2.2, 5.4, 5.1, 5.2, 5.2, 5.1],
        [2.3, 5.1, None, 5.0, 5.2, 4.9, 1.9, 5.1, None, 5.0, 5.0, 4.9],
        [3.0, 5.2, 4.8, 4.7, 5.0, 4.6, 3.0, 5.0, 4.8, 4.7, 5.0, 4.7],
        [4.7, 5.0, 4.5, 4.9, 5.1, 4.9, 4.6, 4.8, 4.5, 4.8, 4.9, 4.8],
    ],
    (2, None): [
        [1.9, 5.3, 5.8, 5.0, 5.2, 4.9, 1.6, 5.0, 5.0, 4.9, 5.0, 4.8],
        [1.7, 5.8, 5.4, 5.4, 5.5, 5.1, 1.6, 5.2, 5.0, 5.1, 5.3, 5.0],
        [1.9, 5.3, None, 5.0, 4.9, 4.8, 1.6, 5.5, None, 5.1, 5.0, 5.0],
        [2.7, 5.3, 5.0, 5.6, 5.7, 5.4, 2.6, 5.2, 5.0, 5.3, 5.4, 5.2],
        [4.7, 4.9, 4.5, 4.3, 4.6, 4.3, 5.0, 5.1, 5.0, 5.0, 5.3, 5.0],
    ],
    (3, 8): [
        [2.4, 5.2, 5.8, 4.8, 5.5, 4.7, 2.4, 5.5, 5.8, 5.1, 5.4, 5.0],
        [2.0, 6.2, 5.5, 5.4, 6.1, 5.3, 1.7, 5.5, 5.2, 5.3, 5.8, 5.2],
        [2.4, 5.5, None, 5.0, 5.4, 4.9, 2.0, 5.1, None, 4.8, 5.0, 4.8],
        [3.0, 5.4, 4.7, 5.1, 5.9, 4.6, 2.8, 5.5, 4.9, 5.0, 5.3, 4.9],
        [5.0, 5.2, 4.8, 4.9, 5.2, 4.9, 4.7, 5.0, 4.6, 4.7, 5.1, 4.7],
    ],
    (3, 4): [
        [2.5, 5.7, 6.0, 4.8, 5.2, 4.7, 2.4, 5.6, 5.5, 4.7, 5.1, 4.6],
        [2.2, 5.7, 5.3, 5.1, 5.6, 5.0, 2.0, 5.1, 4.8, 4.6, 5.0, 4.5],
        [2.4, 5.7, None, 5.3, 5.6, 5.2, 2.3, 5.6, None, 5.2, 5.5, 5.2],
        [3.7, 6.0, 5.6, 5.1, 5.4, 4.9, 3.0, 5.3, 4.9, 4.6, 4.7, 4.5],
        [5.0, 5.2, 4.8, 4.9, 5.2, 4.9, 4.7, 5.0, 4.6, 4.7, 5.1, 4.7],
    ],
    (3, 2): [
        [3.1, 5.4, 5.4, 5.2, 5.5, 5.1, 2.5, 5.0, 4.7, 4.6, 4.7, 4.6],
        [2.6, 5.0, 4.7, 4.6, 4.8, 4.5, 2.6, 5.3, 4.9, 5.4, 5.5, 5.4],
        [2.8, 5.5, None, 5.1, 5.3, 5.1, 2.5, 5.2, None, 5.1, 5.3, 5.1],
        [3.6, 5.4, 5.1, 5.0, 5.3, 4.9, 3.4, 5.3, 5.0, 5.2, 5.5, 5.2],
        [5.0, 5.2, 4.8, 4.9, 5.2, 4.9, 4.7, 5.0, 4.6, 4.7, 5.1, 4.7],
    ],
}
PAPER_TABLE2 = {
    (4, None): [
        [3.2, 2.0, 5.4, 5.5, 2.9, 5.0, 5.2, 2.8, 1.8, 4.8, 4.8, 2.6, 4.8, 4.7],
        [3.0, 1.8, 5.6, 5.1, 2.9, 5.2, 5.0, 3.0, 1.7, 5.0, 5.1, 2.8, 5.2, 4.9],
        [5.6, 3.7, 5.6, None, 5.1, 5.3, None, 5.8, 3.5, 5.5, None, 5.6, 5.6, None],
        [4.0, 2.7, 5.4, 4.9, 3.7, 5.3, 5.1, 3.6, 2.9, 5.6, 5.3, 3.5, 5.3, 5.1],
        [5.3, 4.9, 5.0, 4.8, 4.6, 4.9, 4.6, 5.1, 5.1, 5.0, 5.0, 4.8, 5.0, 4.8],
    ],
    (5, None): [
        [2.3, 2.3, 5.5, 5.8, 2.3, 5.2, 5.7, 2.4, 2.3, 5.8, 5.8, 2.4, 5.8, 5.8],
        [2.2, 2.2, 6.0, 5.5, 2.2, 5.7, 5.4, 2.0, 1.9, 5.2, 5.0, 2.0, 5.3, 5.0],
        [2.5, 2.3, 5.3, None, 2.4, 5.3, None, 2.0, 1.9, 5.0, None, 2.0, 5.0, None],
        [2.7, 2.6, 5.2, 4.8, 2.6, 5.1, 4.8, 3.1, 2.9, 5.5, 5.3, 3.1, 5.5, 5.3],
        [4.7, 4.9, 4.9, 4.8, 4.6, 4.8, 4.6, 4.9, 5.0, 5.2, 4.9, 4.8, 4.9, 4.8],
    ],
    (6, None): [
        [13.0, 0.3, 5.4, 6.9, 3.6, 5.0, 4.4, 15.3, 0.2, 5.4, 5.8, 3.6, 5.0, 4.4],
        [13.6, 0.1, 5.9, 5.7, 3.6, 5.2, 4.3, 15.3, 0.1, 5.3, 5.1, 3.9, 5.5, 4.7],
        [13.7, 0.2, 5.0, None, 3.5, 4.9, None, 14.8, 0.1, 5.1, None, 3.9, 5.1, None],
        [14.0, 0.9, 5.4, 5.1, 3.4, 4.5, 3.8, 15.7, 1.0, 5.6, 5.4, 4.1, 5.1, 4.6],
        [14.6, 5.0, 5.2, 4.8, 4.1, 4.8, 4.1, 15.6, 5.0, 5.2, 4.9, 4.2, 4.9, 4.2],
    ],
}
# var(D_n(z))/n for Pocock-Simon with two binary factors, strata (0,0),(0,1),(1,0),(1,1)
PAPER_IMBALANCE = {
    400: (0.057, 0.063, 0.055, 0.063),
    800: (0.059, 0.059, 0.057, 0.059),
    1200: (0.053, 0.055, 0.053, 0.055),
    1600: (0.057, 0.057, 0.058, 0.059),
    2000: (0.056, 0.056, 0.055, 0.056),
}
IMBALANCE_BAND = (0.045, 0.075)


class ConfigError(ValueError):
    pass


def _log(msg):
    print(msg, file=sys.stderr, flush=True)


def load_run_config(path):
    """Read and validate a YAML run config; unknown keys are rejected."""
    with open(path) as fh:
        doc = yaml.safe_load(fh) or {}
    if not isinstance(doc, dict):
        raise ConfigError("run config must be a mapping")
    unknown = set(doc) - RUN_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    scheme = doc.get("scheme")
    if isinstance(scheme, dict):
        bad = set(scheme) - SCHEME_KEYS
        if bad:
            raise ConfigError(f"unknown scheme keys: {sorted(bad)}")
        if "kind" not in scheme:
            raise ConfigError("scheme needs a 'kind'")
    return doc


def _theta_list(value):
    if value is None:
        return None
    if isinstance(value, (int, float)):
        return [float(value)]
    if isinstance(value, str):
        return [float(v) for v in value.split(",") if v.strip()]
    return [float(v) for v in value]


def _scheme_from(settings):
    raw = settings.get("scheme") or "simple"
    fields = dict(raw) if isinstance(raw, dict) else {"kind": raw}
    for key in SCHEME_KEYS - {"kind"}:
        if settings.get(key) is not None:
            fields[key] = settings[key]
    for key in ("block_schedule", "ps_weights"):
        if isinstance(fields.get(key), str):
            fields[key] = tuple(float(v) for v in fields[key].split(","))
    return SchemeSpec(**fields)


def _case_from(settings):
    return CaseSpec(int(settings.get("case") or 1), n=int(settings.get("n") or 500),
                    lambda0=float(settings.get("lambda0") or LAMBDA0), K=int(settings.get("K") or 4))


def build_settings(args):
    settings = load_run_config(args.config) if getattr(args, "config", None) else {}
    for key, value in vars(args).items():
        if key in ("config", "command", "func") or value is None:
            continue
        settings[key] = value
    if "theta_grid" in settings and "theta" not in settings:
        settings["theta"] = settings.pop("theta_grid")
    return settings


def sim_config_from(settings):
    families = settings.get("families")
    if isinstance(families, str):
        families = tuple(f.strip() for f in families.split(",") if f.strip())
    thetas = _theta_list(settings.get("theta")) or [0.0]
    reps = settings.get("replicates", 10_000)
    if int(reps) < 1:
        raise ConfigError("replicates must be at least 1")
    return SimConfig(
        case=_case_from(settings),
        scheme=_scheme_from(settings),
        theta_grid=tuple(thetas),
        replicates=int(reps),
        bootstrap=int(settings.get("bootstrap", 0)),
        alpha=float(settings.get("alpha", 0.05)),
        seed=int(settings.get("seed", 0)),
        workers=int(settings.get("workers") or default_workers()),
        families=tuple(families) if families else None,
        common_random_numbers=bool(settings.get("common_random_numbers", True)),
    )


@contextlib.contextmanager
def _output(path):
    if path in (None, "-"):
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def _summary(report):
    lines = [f"{'theta':>8} {'family':<6} {'R':>7} {'rate%':>7} {'se%':>6} {'fail':>5}"]
    for r in report.rows:
        lines.append(f"{r.theta:>8.4g} {r.family:<6} {r.R:>7} {100 * r.reject_rate:>7.2f} "
                     f"{100 * r.mc_se:>6.2f} {r.failures:>5}")
    return "\n".join(lines)


def cmd_simulate(args):
    settings = build_settings(args)
    config = sim_config_from(settings)
    _log(f"simulate {config.case.label} {config.scheme.label} n={config.case.n} "
         f"theta={list(config.theta_grid)} R={config.replicates}")
    start = time.time()
    if len(config.theta_grid) > 1:
        report = simulation.power_sweep(config)
    else:
        report = simulation.estimate_rejection(config)
    _log(f"done in {time.time() - start:.1f}s")
    if report.inapplicable:
        _log(f"inapplicable under {config.scheme.label}: {', '.join(report.inapplicable)}")
    with _output(settings.get("output")) as fh:
        report.to_csv(fh)
    if settings.get("output") in (None, "-"):
        _log(_summary(report))
    else:
        print(_summary(report))
    return EXIT_OK


def cmd_power(args):
    settings = build_settings(args)
    config = sim_config_from(settings)
    report = simulation.SimReport()
    for i, theta in enumerate(config.theta_grid):
        _log(f"power {config.case.label} {config.scheme.label} theta={theta}")
        report.extend(simulation.estimate_rejection(config, i))
    with _output(settings.get("output")) as fh:
        report.to_csv(fh)
    if settings.get("svg"):
        write_power_svg(report, settings["svg"])
    return EXIT_OK


def write_power_svg(report, path):
    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError as exc:
        raise ConfigError("SVG output needs matplotlib (pip install artifact[plot])") from exc
    fig, ax = plt.subplots(figsize=(6, 4))
    keys = sorted({(r.scheme, r.family) for r in report.rows})
    for scheme, family in keys:
        rows = sorted((r for r in report.rows if r.scheme == scheme and r.family == family), key=lambda r: r.theta)
        ax.plot([r.theta for r in rows], [r.reject_rate for r in rows], marker="o", label=f"{family} ({scheme})")
    ax.set_xlabel("theta")
    ax.set_ylabel("rejection rate")
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def _reproduce_cells(table, ns):
    paper = PAPER_TABLE1 if table == "table1" else PAPER_TABLE2
    families = TABLE1_FAMILIES if table == "table1" else TABLE2_FAMILIES
    for (case_id, K), rows in paper.items():
        for scheme_label, values in zip(SCHEME_ROWS, rows):
            for n_index, n in enumerate((200, 500)):
                if n not in ns:
                    continue
                chunk = values[n_index * len(families):(n_index + 1) * len(families)]
                yield case_id, K, scheme_label, n, dict(zip(families, chunk))


REPRODUCE_HEADER = ["table", "case", "scheme", "n", "family", "R", "reject_pct", "mc_se_pct", "paper_pct",
                    "z_vs_paper", "flag"]


def cmd_reproduce(args):
    scale = float(args.scale)
    if not 0 < scale <= 1:
        raise ConfigError("--scale must lie in (0, 1]")
    seed = int(args.seed or 0)
    if args.table == "imbalance":
        return _reproduce_imbalance(args, scale, seed)
    reps = max(1, int(round(10_000 * scale)))
    ns = [int(v) for v in (args.n or [200, 500])]
    cases = set(int(c) for c in args.cases) if args.cases else None
    schemes = set(SchemeSpec(s).label for s in args.schemes) if args.schemes else None
    bootstrap = int(args.bootstrap if args.bootstrap is not None else 200)
    workers = int(args.workers or default_workers())
    out_rows, wide = [], {}
    for case_id, K, scheme_label, n, paper in _reproduce_cells(args.table, ns):
        if (cases and case_id not in cases) or (schemes and scheme_label not in schemes):
            continue
        case = CaseSpec(case_id, n=n, K=K or 4)
        scheme = SchemeSpec(scheme_label)
        families = tuple(f for f in paper if bootstrap or not f.startswith("T_B"))
        config = SimConfig(case, scheme, (0.0,), reps, bootstrap, 0.05, seed, workers, families)
        _log(f"reproduce {args.table}: {case.label} {scheme_label} n={n} R={reps}")
        report = simulation.estimate_rejection(config)
        for fam, paper_pct in paper.items():
            try:
                row = report.row(fam)
            except KeyError:
                rate = se = None
            else:
                rate, se = 100 * row.reject_rate, 100 * row.mc_se
            z = flag = ""
            if rate is not None and paper_pct is not None:
                ref = paper_pct / 100
                ref_se = 100 * np.sqrt(ref * (1 - ref) / reps)
                z = (rate - paper_pct) / ref_se if ref_se > 0 else 0.0
                flags = []
                if abs(z) > 4:
                    flags.append("deviates>4SE")
                if fam == "T_M" and rate > 10:
                    flags.append("inflated")
                flag = ";".join(flags)
                z = f"{z:.2f}"
            out_rows.append([args.table, case.label, scheme_label, n, fam, reps,
                             "" if rate is None else f"{rate:.2f}", "" if se is None else f"{se:.2f}",
                             "" if paper_pct is None else f"{paper_pct:.1f}", z, flag])
            wide.setdefault((case.label, scheme_label), {})[(n, fam)] = "-" if rate is None else f"{rate:.1f}"
    with _output(args.output) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(REPRODUCE_HEADER)
        w.writerows(out_rows)
    _log(_wide_table(wide, ns, TABLE1_FAMILIES if args.table == "table1" else TABLE2_FAMILIES))
    return EXIT_OK


def _wide_table(wide, ns, families):
    head = f"{'case/scheme':<28}" + "".join(f"{f'{f}@{n}':>10}" for n in ns for f in families)
    lines = [head]
    for (case, scheme), cells in wide.items():
        lines.append(f"{case + ' ' + scheme:<28}" + "".join(f"{cells.get((n, f), ''):>10}" for n in ns for f in families))
    return "\n".join(lines)


def _reproduce_imbalance(args, scale, seed):
    reps = max(100, int(round(10_000 * scale)))
    spec = SchemeSpec("pocock-simon")
    law = CategoricalLaw(((0.5, 0.5), (0.5, 0.5)))
    ns = [int(v) for v in (args.n or sorted(PAPER_IMBALANCE))]
    rows = []
    for n in ns:
        _log(f"reproduce imbalance: n={n} R={reps}")
        m = monte_carlo_imbalance(spec, law, n, reps, seed)
        paper = PAPER_IMBALANCE.get(n, (None,) * 4)
        for i, stratum in enumerate(m.strata):
            ratio = m.var_d_over_n[i]
            flag = "" if IMBALANCE_BAND[0] <= ratio <= IMBALANCE_BAND[1] else "outside-band"
            rows.append([n, "-".join(map(str, stratum)), reps, f"{m.var_d[i]:.3f}", f"{ratio:.4f}",
                         f"{m.se_var_d[i] / n:.4f}", "" if paper[i] is None else f"{paper[i]:.3f}", flag])
    with _output(args.output) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["n", "stratum", "R", "var_D", "var_D_over_n", "se_var_D_over_n", "paper_var_D_over_n", "flag"])
        w.writerows(rows)
    return EXIT_OK


def cmd_asymptotics(args):
    case = CaseSpec(int(args.case), K=int(args.K or 4),
                    beta=tuple(float(b) for b in args.beta.split(",")) if args.beta else None)
    scheme = SchemeSpec(args.scheme)
    modes = ("score", "logrank") if args.mode == "both" else (args.mode,)
    rows = []
    efficacy = None
    if case.correct_model and nu_d(scheme) is not None:
        efficacy = asymptotics.pitman_are(case, scheme, args.mc_size, int(args.seed or 0))
    for mode in modes:
        comps = asymptotics.estimate_limit_components(case, scheme, args.mc_size, int(args.seed or 0), mode)
        rows.append(asymptotics.components_row(case, scheme, comps, efficacy))
    with _output(args.output) as fh:
        asymptotics.write_asymptotics_csv(rows, fh)
    return EXIT_OK


def cmd_imbalance(args):
    settings = build_settings(args)
    case = _case_from(settings)
    scheme = _scheme_from(settings)
    seed = int(settings.get("seed", 0))
    reps = settings.get("replicates")
    with _output(settings.get("output")) as fh:
        if reps and int(reps) > 1:
            probe = gen_case(case, 0)
            law = _CohortLaw(case, probe.levels)
            monte_carlo_imbalance(scheme, law, case.n, int(reps), seed).to_csv(fh)
        else:
            cohort = gen_case(case, rng_mod.stream(seed, "data", case.label, case.n))
            treat = assign_sequence(scheme, cohort.strata, cohort.levels,
                                    rng_mod.stream(seed, "assign", case.label, case.n, scheme.label))
            imbalance_report(joint_codes(cohort.strata, cohort.levels), treat).to_csv(fh)
    return EXIT_OK


class _CohortLaw:
    """Stratification factors drawn from a simulation case."""

    def __init__(self, case, levels):
        self.case, self.levels = case, levels

    def sample(self, rng, n):
        return gen_case(self.case.__class__(self.case.case_id, n=n, K=self.case.K), rng).strata


def _add_run_options(p):
    p.add_argument("--config", help="YAML run config")
    p.add_argument("--case", type=int)
    p.add_argument("--K", type=int, help="categories for the normal covariate in case 3")
    p.add_argument("--n", type=int)
    p.add_argument("--theta", help="treatment effect, or comma-separated grid")
    p.add_argument("--scheme")
    p.add_argument("--block-size", dest="block_size", type=int)
    p.add_argument("--coin-p", dest="coin_p", type=float)
    p.add_argument("--urn-s", dest="urn_s", type=float)
    p.add_argument("--urn-omega", dest="urn_omega", type=float)
    p.add_argument("--ps-metric", dest="ps_metric", choices=["absolute", "squared"])
    p.add_argument("--ps-weights", dest="ps_weights")
    p.add_argument("--reps", dest="replicates", type=int)
    p.add_argument("--bootstrap", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--families", help=f"comma-separated subset of {','.join(FAMILIES)}")
    p.add_argument("--no-crn", dest="common_random_numbers", action="store_const", const=False)
    p.add_argument("--output", "-o")


def build_parser():
    parser = argparse.ArgumentParser(prog="carsurv", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="Type I error / rejection rate at one theta")
    _add_run_options(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("power", help="rejection rates over a theta grid")
    _add_run_options(p)
    p.add_argument("--svg", help="write power curves to this SVG file")
    p.set_defaults(func=cmd_power)

    p = sub.add_parser("reproduce", help="rerun a published table at reduced scale")
    p.add_argument("table", choices=["table1", "table2", "imbalance"])
    p.add_argument("--scale", type=float, default=1.0, help="fraction of 10,000 replicates")
    p.add_argument("--bootstrap", type=int, help="bootstrap size (0 skips bootstrap tests; default 200)")
    p.add_argument("--n", type=int, action="append", help="restrict sample sizes (repeatable)")
    p.add_argument("--cases", type=int, action="append")
    p.add_argument("--schemes", action="append")
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_reproduce)

    p = sub.add_parser("asymptotics", help="limit-theory oracles for one case and scheme")
    p.add_argument("--case", type=int, required=True)
    p.add_argument("--K", type=int)
    p.add_argument("--beta", help="override true coefficients (cases 1-3), comma-separated")
    p.add_argument("--scheme", required=True)
    p.add_argument("--mode", choices=["score", "logrank", "both"], default="both")
    p.add_argument("--mc-size", dest="mc_size", type=int, default=200_000)
    p.add_argument("--seed", type=int)
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_asymptotics)

    p = sub.add_parser("imbalance", help="within-stratum imbalance of one trial or its MC moments")
    _add_run_options(p)
    p.set_defaults(func=cmd_imbalance)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) and EXIT_CONFIG
    try:
        return args.func(args)
    except ReplicateFailureError as exc:
        _log(f"error: {exc}")
        return EXIT_FAILURES
    except (ValueError, TypeError, OSError, yaml.YAMLError) as exc:
        _log(f"error: {exc}")
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
