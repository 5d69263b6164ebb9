# %% [markdown]
# # Orbit-level perturbations
#
# Small changes to the matrices along a single periodic orbit are enough to
# change its unstable signature: rotate eigenvalues into complex position,
# break a Jordan block, or pull apart equal eigenvalues.

# %%
import numpy as np

from cocyclelab import (
    LinearCocycle, classify_dichotomy, has_simple_spectrum, kill_nilpotent_report, make_dense_simple, orbit_cocycle,
    perturbation_norms, product_along_word, rotation_arc_experiment, split_equal_eigenvalues,
    unstable_signature,
)
from cocyclelab.systems import builtin

# %% [markdown]
# ## Breaking a Jordan block
#
# A shear distributed along a long orbit is cheap per site. The result has
# equal real eigenvalues and no nilpotent part, so a further split of size
# 0.01 makes the spectrum simple.

# %%
c = LinearCocycle.from_blocks([[[0.5]]], [np.array([[2.0, 0.1], [0.0, 2.0]])])
oc = orbit_cocycle(c, "0" * 100)
rep = kill_nilpotent_report(oc, 0.05)
print(rep.mode, "sites", len(rep.sites), "max norm", round(max(rep.norms), 4))
simple = split_equal_eigenvalues(rep.perturbed, 0.01, 0.02)
print("before", unstable_signature(oc), "after kill+split", unstable_signature(simple),
      "max norm", round(perturbation_norms(oc, simple).max(), 4))

# %% [markdown]
# ## Splitting equal eigenvalues

# %%
c = LinearCocycle.from_blocks([[[0.5]]], [np.diag([2.0, 2.0])])
oc = orbit_cocycle(c, "0")
sp = split_equal_eigenvalues(oc, 0.01, 0.02)
print(np.round(np.diag(product_along_word(sp)), 4))

# %% [markdown]
# ## Rotation numbers along an arc
#
# Rotating the marked symbol's unstable block by an angle t and following the
# rotation number of a long orbit. Past the threshold period the number
# oscillates by more than a full turn, so some t lands on a real eigenvalue.

# %%
sd = builtin("rotation-arc")
arc = rotation_arc_experiment(sd.cocycle, sd.sft, 0, 0.2, t_grid=9)
print("m_t", arc.m_t, "t*", round(arc.t_star, 4), "slope", round(arc.slope, 3))

# %% [markdown]
# ## A dense orbit with simple spectrum

# %%
rb = builtin("rotation-block")
res = make_dense_simple(rb.cocycle, rb.sft, 2, 0.2, seed=0)
print("period", res.word.period, "simple", has_simple_spectrum(res.perturbed), "max norm", round(res.max_factor_norm, 3))

# %% [markdown]
# ## The dichotomy
#
# Either the finest splitting is into lines, or a small perturbation produces
# a cycle between orbits of different signatures.

# %%
for name in ("golden-mixed", "two-fixed-point", "nilpotent"):
    sd = builtin(name)
    r = classify_dichotomy(sd.cocycle, sd.sft, eps=0.1, period_max=4, samples=40)
    print(f"{name:>13}: {r.outcome} case={r.case} dims={r.dims}")
