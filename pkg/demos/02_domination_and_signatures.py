# %% [markdown]
# # Dominated splittings and unstable signatures
#
# A splitting is m-dominated when, along every orbit, m steps shrink the
# weaker bundle relative to the stronger one by at least a factor one half.
# When the unstable block has no such splitting, different periodic orbits
# can carry different eigenvalue structures: the unstable signature.

# %%
from cocyclelab import (
    NoInvariantSplitting, NotDominated, detect_equidimensional_cycle, enumerate_orbits_up_to, finest_splitting_report,
    m_domination_test, orbit_cocycle, signature_robustness_margin, unstable_signature,
)
from cocyclelab.systems import builtin

# %% [markdown]
# ## A diagonal system splits into lines

# %%
sd = builtin("golden-mixed")
orbits = enumerate_orbits_up_to(sd.sft, 8)
dims, certs = finest_splitting_report(sd.cocycle, orbits)
print("finest splitting", dims)
for c in certs:
    print(f"  index {c.index}: m={c.m} margin={c.margin:.4f}")

# %% [markdown]
# ## A rotating unstable block does not
#
# The unstable 2x2 block of rotation-block turns directions, so some orbits
# have a complex pair and index 2 has no invariant splitting at all.

# %%
rb = builtin("rotation-block")
orbits = enumerate_orbits_up_to(rb.sft, 6)
print("finest splitting", finest_splitting_report(rb.cocycle, orbits)[0])
try:
    m_domination_test(rb.cocycle, orbits, 2, 4)
except NoInvariantSplitting as e:
    print(e)
except NotDominated as e:
    print("index 2 not dominated, ratio", round(e.ratio, 3))

# %% [markdown]
# ## Signatures and a cycle
#
# In two-fixed-point the fixed point at 0 has a complex unstable pair, (2), while the
# fixed point at 1 has two real unstable eigenvalues, (1,1). Both survive
# small perturbations, which makes them a robust heterodimensional-type cycle.

# %%
f3 = builtin("two-fixed-point")
for w in enumerate_orbits_up_to(f3.sft, 3):
    oc = orbit_cocycle(f3.cocycle, w)
    print(f"{str(w):>4}", unstable_signature(oc), round(signature_robustness_margin(oc, 50, 0), 3))

cyc = detect_equidimensional_cycle(f3.cocycle, enumerate_orbits_up_to(f3.sft, 1), samples=50, seed=1)
print("cycle:", cyc.orbit_p, cyc.sig_p, "<->", cyc.orbit_q, cyc.sig_q)
