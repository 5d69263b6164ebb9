# %% [markdown]
# # Ergodic measures and suspension flows
#
# Exponents of a Markov measure come from a long typical orbit with repeated
# QR steps. Periodic measures approximate it, and a suspension flow rescales
# the whole spectrum by the mean return time.

# %%
import numpy as np

from cocyclelab import (
    RoofFunction, closed_form_diagonal_exponents, continuity_probe,
    flow_signature_correspondence, enumerate_orbits_up_to, measure_lyapunov_exponents,
    suspend_spectrum,
)
from cocyclelab.systems import builtin

# %% [markdown]
# ## Birkhoff estimate against a closed form

# %%
sd = builtin("golden-mixed")
mu = sd.measure()
est = measure_lyapunov_exponents(sd.cocycle, mu, 200_000, 0)
ref = closed_form_diagonal_exponents(sd.cocycle, mu)
print(np.round(est.exponents, 4), "+/-", np.round(est.errors, 4))
print(np.round(ref.exponents, 4))

# %% [markdown]
# ## Periodic approximation

# %%
# the Parry measure has irrational symbol frequencies, so no orbit is exact
tab = continuity_probe(sd.cocycle, mu, [2, 4, 6, 8, 10, 12], sft=sd.sft)
for row, dev in zip(tab.rows, tab.max_deviation()):
    print(f"cap {row.period_cap:>2} word {row.word:>10} max deviation {dev:.4f}")

# %% [markdown]
# ## Suspension
#
# The flow gains a zero exponent and every base exponent is divided by the
# integral of the roof. Signatures carry over unchanged.

# %%
h = RoofFunction([1.0, 2.0])
fl = suspend_spectrum(est.exponents, h, mu)
print("normalization", round(fl.normalization, 4), np.round(fl.exponents, 4))

f3 = builtin("two-fixed-point")
rep = flow_signature_correspondence(f3.cocycle, enumerate_orbits_up_to(f3.sft, 6), h)
print("signatures preserved:", rep.ok, "orbits:", len(rep.rows))
