# %% [markdown]
# # What the limit theory predicts
#
# The large-sample rejection rate of T_S or T_L is
# 2 Phi(-z sqrt((A + B) / (A + nu_D B))), where A and B are the within- and
# between-stratum variances of each subject's limiting influence term. Both
# are estimated here from 200,000 simulated subjects, with no trial or
# randomization involved.

# %%
from carsurv.asymptotics import estimate_limit_components, pitman_are, predicted_type1
from carsurv.randomization import SchemeSpec
from carsurv.simulation import SimConfig, estimate_rejection
from carsurv.trial_data import CaseSpec

case = CaseSpec(1, n=500)
for kind in ("permuted-block", "urn", "simple"):
    scheme = SchemeSpec(kind)
    comp = estimate_limit_components(case, scheme, 200_000, seed=0, mode="logrank")
    sim = estimate_rejection(SimConfig(case, scheme, (0.0,), 3000, seed=0, families=("T_L",)))
    print(f"{kind:15s} A={comp.within_var:.4f} B={comp.between_var:.4f} "
          f"predicted {100 * predicted_type1(comp):.2f}%  simulated {100 * sim.rate('T_L'):.2f}%")

# %% [markdown]
# Efficiency: calibrating the log-rank test restores its size, but it still
# ignores the covariate in the hazard. Its Pitman efficiency relative to the
# calibrated score test is below 1 unless beta = 0, and it drops as nu_D grows.

# %%
for nu in (0.0, 1 / 3, 1.0):
    eff = pitman_are(CaseSpec(1), None, 200_000, seed=0, nu=nu)
    print(f"nu_D={nu:.3f}  ARE(T_CL vs T_CS) = {eff.are:.3f} +- {eff.are_se:.3f}")
print("beta = 0:", pitman_are(CaseSpec(1, beta=(0.0,)), SchemeSpec("permuted-block"), 200_000).are)
