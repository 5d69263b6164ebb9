# %% [markdown]
# # Periodic orbits and their spectra
#
# A cocycle over a subshift of finite type assigns a matrix to every symbol.
# Along a periodic orbit the product of those matrices has well defined
# eigenvalue moduli, and their logs divided by the period are the Lyapunov
# exponents of the orbit's measure.

# %%
import numpy as np

from cocyclelab import (
    build_dense_periodic_word, count_periodic_points, cyclic_factors, enumerate_orbits_up_to,
    golden_mean_shift, orbit_cocycle, periodic_lyapunov_exponents, product_along_word,
)
from cocyclelab.systems import builtin

# %% [markdown]
# ## Counting orbits on the golden mean shift
#
# Words with no "11" factor. Fixed points of the n-th iterate are counted
# by the trace of the n-th power of the adjacency matrix (Lucas numbers).

# %%
sft = golden_mean_shift()
print([count_periodic_points(sft, n) for n in range(1, 9)])
print([str(w) for w in enumerate_orbits_up_to(sft, 5)])

# %% [markdown]
# ## A dense word
#
# The depth-k dense word visits every admissible cyclic k-factor.

# %%
w = build_dense_periodic_word(sft, 3)
print(w, w.period, sorted(cyclic_factors(w, 3)))

# %% [markdown]
# ## Exponents along orbits
#
# golden-mixed has diagonal generators, so each orbit exponent is an average
# of log diagonal entries weighted by symbol frequencies.

# %%
sd = builtin("golden-mixed")
for w in enumerate_orbits_up_to(sd.sft, 4):
    oc = orbit_cocycle(sd.cocycle, w)
    print(f"{str(w):>5}", np.round(periodic_lyapunov_exponents(oc), 4))

print(np.diag(product_along_word(orbit_cocycle(sd.cocycle, "001"))))
