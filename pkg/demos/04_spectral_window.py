# %% [markdown]
# # Which eigenmodes carry the transferred excitation
#
# The received amplitude is a sum over eigenmodes of the chain. Modes add
# constructively when their phases at the registration time agree.

# %%
import numpy as np

from spinline import ChainSpec, phase_window, run_protocol, significant_harmonics, spectral_profile
from spinline.protocol import one_excitation_eigensystem

spec = ChainSpec(31, 10, 1)
eig = one_excitation_eigensystem(31)
res = run_protocol(spec, eig=eig)
prof = spectral_profile(eig, spec, res.sender_vector, res.receiver_row, res.t0)

print(f"reconstructed f_N = {prof.projection:.10f}, w1 = {res.w1:.10f}")
print(f"{len(significant_harmonics(prof))} of {prof.n_modes} modes are above p_min = {prof.p_min:.2e}")

# %%
for k, (p, phi) in enumerate(zip(prof.amplitudes, prof.resulting_phases), 1):
    mark = "*" if abs(phi) < np.pi / 6 and p > prof.p_min else " "
    print(f"{k:3d} {p:.4f} {phi:+.3f} {mark}")

# %% [markdown]
# The longest run of significant modes with phases inside (-pi/6, pi/6):

# %%
print(phase_window(prof))
