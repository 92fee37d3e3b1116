"""Brute-force reference in the full ``2**N`` Hilbert space.

Only meant for small chains (``N <= 10``). Node 0 is the most significant
qubit and ``|1>`` marks an excited (flipped) spin.
"""

import numpy as np
from scipy.linalg import expm

from .lattice import build_couplings, pair_basis

_SX = np.array([[0, 1], [1, 0]], dtype=complex) / 2
_SY = np.array([[0, -1j], [1j, 0]], dtype=complex) / 2


def _site_op(op, site, n):
    out = np.array([[1.0 + 0j]])
    for k in range(n):
        out = np.kron(out, op if k == site else np.eye(2))
    return out


def xy_hamiltonian(n, couplings=None):
    """``sum_{i<j} D_ij (Ix_i Ix_j + Iy_i Iy_j)`` built from spin-1/2 operators."""
    D = build_couplings(n) if couplings is None else couplings
    sx = [_site_op(_SX, k, n) for k in range(n)]
    sy = [_site_op(_SY, k, n) for k in range(n)]
    H = np.zeros((2**n, 2**n), dtype=complex)
    for i in range(n):
        for j in range(i + 1, n):
            if D[i, j]:
                H += D[i, j] * (sx[i] @ sx[j] + sy[i] @ sy[j])
    return H


def basis_index(n, excited):
    """Computational-basis index of the state with the given nodes excited."""
    return sum(1 << (n - 1 - k) for k in excited)


def sector_projector(n, sector):
    """Columns selecting the ``sector``-excitation subspace in block order."""
    if sector == 0:
        labels = [()]
    elif sector == 1:
        labels = [(k,) for k in range(n)]
    else:
        labels = list(pair_basis(n))
    P = np.zeros((2**n, len(labels)))
    for col, lab in enumerate(labels):
        P[basis_index(n, lab), col] = 1.0
    return P


def embed(state):
    """Full state vector of a :class:`~spinline.dynamics.SectorState`."""
    n = state.n_total
    psi = np.zeros(2**n, dtype=complex)
    psi[0] = state.a0
    for k in range(n):
        psi[basis_index(n, (k,))] += state.one[k]
    if state.two is not None:
        for c, lab in enumerate(pair_basis(n)):
            psi[basis_index(n, lab)] += state.two[c]
    return psi


def evolve_full(psi, t, H):
    return expm(-1j * H * t) @ psi


def partial_trace_last_two(psi):
    """Reduced density matrix of the last two qubits of a pure state."""
    n = int(np.log2(psi.size))
    m = psi.reshape(2 ** (n - 2), 4)
    return m.T @ m.conj()
