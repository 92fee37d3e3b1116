# %% [markdown]
# # Optimal sender state and receiver unitary
#
# Encoding the state over several sender nodes and decoding it with a
# unitary on the last few nodes raises the arrival amplitude to the largest
# singular value of the sender-to-receiver transition block.

# %%
import numpy as np

from spinline import ChainSpec, receiver_projection, run_protocol, transition_matrix
from spinline.protocol import one_excitation_eigensystem

spec = ChainSpec(31, n_sender=10, n_ext_receiver=1)
res = run_protocol(spec)
print(f"t0 = {res.t0:.4f}, |f_N|^2 = {res.w1 ** 2:.4f}")

# %% [markdown]
# The optimal sender amplitudes are the leading right singular vector.

# %%
for n, a in enumerate(res.sender_vector, 1):
    print(f"node {n:2d}: |a| = {abs(a):.4f}, arg a = {np.angle(a):+.4f}")

# %% [markdown]
# Any other sender state does worse.

# %%
rng = np.random.default_rng(0)
tm = transition_matrix(one_excitation_eigensystem(31), spec, res.t0)
trials = rng.normal(size=(2000, 10)) + 1j * rng.normal(size=(2000, 10))
trials /= np.linalg.norm(trials, axis=1, keepdims=True)
best = max(abs(receiver_projection(u, tm, res.receiver_row)) for u in trials)
print(f"best random sender: {best:.4f}  vs optimum {res.w1:.4f}")

# %% [markdown]
# With an extended receiver, the decoding unitary empties the other receiver
# nodes: the profile |f_n(t0)| vanishes there and peaks on the last node.

# %%
res = run_protocol(ChainSpec(31, 5, 5))
print(np.round(res.f_profile[-6:], 12))
