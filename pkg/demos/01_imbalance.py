# %% [markdown]
# # Within-stratum imbalance under five randomization schemes
#
# Each scheme assigns patients one at a time as they arrive. What differs is
# how hard it pushes the running imbalance D_n(z) (arm 1 minus arm 0 in
# stratum z) back towards zero.

# %%
import numpy as np

from carsurv.randomization import CategoricalLaw, SchemeSpec, SchemeState, monte_carlo_imbalance
from carsurv.stat_tests import nu_d

law = CategoricalLaw(((0.5, 0.5),))  # one binary stratification factor

# %% [markdown]
# A single stratum, watched patient by patient. The block scheme returns to
# zero every four patients; the biased coin wanders but is pulled back.

# %%
for kind in ("simple", "permuted-block", "biased-coin", "urn"):
    st = SchemeState(SchemeSpec(kind), (1,), rng=2)
    path = np.cumsum([2 * st.assign_next(0) - 1 for _ in range(40)])
    print(f"{kind:15s}", " ".join(f"{v:+d}" for v in path[::4]))

# %% [markdown]
# Over many trials the spread of D_n(z)/sqrt(n_z) settles at nu_D:
# 1 for simple randomization, 1/3 for the urn, 0 for blocks and the coin.

# %%
for kind in ("simple", "urn", "permuted-block", "biased-coin"):
    m = monte_carlo_imbalance(SchemeSpec(kind), law, 1000, 500, seed=1)
    print(f"{kind:15s} var(D/sqrt(n_z)) = {m.var_normalized.mean():.3f}   nu_D = {nu_d(SchemeSpec(kind))}")

# %% [markdown]
# Pocock-Simon balances the margins, not the joint strata. With two binary
# factors the joint-stratum imbalance keeps growing like sqrt(n), so there is
# no nu_D and the calibrated tests do not apply.

# %%
ps = SchemeSpec("pocock-simon")
for n in (400, 1200):
    m = monte_carlo_imbalance(ps, CategoricalLaw(((0.5, 0.5), (0.5, 0.5))), n, 300, seed=2)
    print(f"n={n}: var(D_n(z))/n =", np.round(m.var_d_over_n, 3), " nu_D:", nu_d(ps))
