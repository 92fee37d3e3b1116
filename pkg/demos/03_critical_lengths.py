# %% [markdown]
# # Critical lengths
#
# The critical length is the longest chain on which a target receiver state
# can still be created. For high-probability transfer the target is
# |f_N|^2 >= 0.9; the maximally mixed one-qubit state only needs 1/2.

# %%
from spinline import critical_length

for threshold, label in ((0.9, "high-probability transfer"), (0.5, "maximally mixed")):
    print(label)
    for ns in (1, 2, 3):
        row = [critical_length(ns, nr, threshold).n_critical for nr in (1, 2, 3)]
        print(f"  N_S={ns}: " + " ".join(f"{v:4d}" for v in row))

# %% [markdown]
# The tables are symmetric under exchanging the sender and receiver sizes:
# reversing the chain swaps their roles.

# %%
print(critical_length(2, 4, 0.5).n_critical, critical_length(4, 2, 0.5).n_critical)

# %% [markdown]
# The same sweeps run from the shell, with a resumable store:
#
#     spinline table --mode hpst --ns 1-3 --nr 1-3 --out results
