# %% [markdown]
# # Creating two-qubit spectra at the end of the chain
#
# A four-node sender prepares a state with up to two excitations. After a
# registration time chosen to maximize the average receiver excitation, the
# sender amplitudes are tuned so the last two nodes have a prescribed
# spectrum. The mismatch is measured on the characteristic-polynomial
# coefficients.

# %%
from spinline import VERTICES, ChainSpec, minimize_discrepancy, registration_time
from spinline.dynamics import chain_sectors

for n in (10, 16, 17):
    spec = ChainSpec(n, 4, 2)
    sectors = chain_sectors(n)
    t0 = registration_time(spec, sectors)
    for name in ("L3", "L4"):
        rec = minimize_discrepancy(spec, sectors, VERTICES[name], t0, restarts=4, stop_below=1e-12)
        print(f"N={n:2d} {name}: t0={t0:.3f}  eps={rec.epsilon:.2e}")

# %% [markdown]
# The equal mixture of two states needs only one excitation, so it rides the
# one-qubit protocol and survives on much longer chains.

# %%
from spinline import eigenvalue_critical_length

print(eigenvalue_critical_length(VERTICES["L2"]).n_total)
