"""Covariate-adaptive randomization and survival tests: simulation toolkit.

Modules
-------
randomization   treatment-assignment schemes and within-stratum imbalance
trial_data      simulation cases, potential outcomes and censoring
cox             null Cox fit, score, information, residual pieces
stat_tests      the seven test families
simulation      replicated Type I error / power harness
asymptotics     large-sample plug-in oracles of the limit theory
cli             command-line front end
"""

from .cox import fit_null
from .randomization import SchemeSpec, assign_sequence, imbalance
from .simulation import SimConfig, estimate_rejection, power_sweep
from .stat_tests import nu_d
from .trial_data import CaseSpec, gen_case

__version__ = "0.1.0"

__all__ = [
    "CaseSpec",
    "SchemeSpec",
    "SimConfig",
    "assign_sequence",
    "estimate_rejection",
    "fit_null",
    "gen_case",
    "imbalance",
    "nu_d",
    "power_sweep",
]
