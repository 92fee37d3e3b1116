"""Dipolar XY couplings and excitation-sector Hamiltonian blocks.

All quantities are dimensionless: the nearest-neighbour coupling is fixed to
one, so ``D[i, j] = |i - j|**-3`` and time is measured in units of its inverse.
Node indices in the public API are zero-based; node ``n`` in the usual
one-based chain labelling is index ``n - 1`` here.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations
from typing import Literal

import numpy as np

__all__ = [
    "ChainSpec",
    "ExcitationBlock",
    "EigenSystem",
    "build_couplings",
    "one_excitation_block",
    "two_excitation_block",
    "zero_excitation_block",
    "pair_basis",
    "pair_index",
    "eigendecompose",
]

Sector = Literal["zero", "one", "two"]


@dataclass(frozen=True)
class ChainSpec:
    """Chain of ``n_total`` spins split into sender, body and extended receiver.

    The sender occupies the first ``n_sender`` nodes, the extended receiver the
    last ``n_ext_receiver`` nodes. The one-qubit receiver is the last node.
    """

    n_total: int
    n_sender: int
    n_ext_receiver: int = 1

    def __post_init__(self):
        for name in ("n_total", "n_sender", "n_ext_receiver"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise ValueError(f"{name} must be a positive integer, got {value!r}")
        if self.n_sender + self.n_ext_receiver > self.n_total:
            raise ValueError(
                f"sender ({self.n_sender}) and extended receiver ({self.n_ext_receiver}) "
                f"do not fit in a chain of {self.n_total} nodes"
            )

    @property
    def sender_nodes(self) -> np.ndarray:
        return np.arange(self.n_sender)

    @property
    def receiver_nodes(self) -> np.ndarray:
        return np.arange(self.n_total - self.n_ext_receiver, self.n_total)

    def reversed(self) -> "ChainSpec":
        """Same chain with the roles of sender and extended receiver exchanged."""
        return ChainSpec(self.n_total, self.n_ext_receiver, self.n_sender)


@dataclass(frozen=True)
class ExcitationBlock:
    sector: Sector
    matrix: np.ndarray
    basis_labels: list = field(repr=False)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class EigenSystem:
    """Eigenvalues (ascending) and orthogonal eigenvector columns of a block."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    sector: Sector = "one"

    @property
    def dim(self) -> int:
        return self.eigenvalues.shape[0]

    def propagator(self, t: float) -> np.ndarray:
        """``W exp(-i Lambda t) W^T`` as a dense matrix."""
        W = self.eigenvectors
        return (W * np.exp(-1j * self.eigenvalues * t)) @ W.T


def _n_of(spec_or_n) -> int:
    n = spec_or_n.n_total if isinstance(spec_or_n, ChainSpec) else int(spec_or_n)
    return n


def build_couplings(spec_or_n, *, nearest_neighbor: bool = False) -> np.ndarray:
    """Dimensionless dipolar coupling matrix ``D[i, j] = |i - j|**-3``.

    Parameters
    ----------
    spec_or_n : ChainSpec or int
        Chain, or just its length.
    nearest_neighbor : bool
        Keep only ``|i - j| = 1`` couplings. Off by default; the model couples
        every pair of nodes.
    """
    n = _n_of(spec_or_n)
    if n < 2:
        raise ValueError(f"a chain needs at least 2 nodes, got {n}")
    idx = np.arange(n)
    dist = np.abs(idx[:, None] - idx[None, :]).astype(float)
    D = np.zeros((n, n))
    off = dist > 0
    D[off] = dist[off] ** -3.0
    if nearest_neighbor:
        D[dist > 1] = 0.0
    return D


def _check_couplings(D: np.ndarray) -> np.ndarray:
    D = np.asarray(D, dtype=float)
    if D.ndim != 2 or D.shape[0] != D.shape[1]:
        raise ValueError(f"coupling matrix must be square, got shape {D.shape}")
    if not np.allclose(D, D.T, atol=1e-14, rtol=0):
        raise ValueError("coupling matrix must be symmetric")
    if np.any(np.diag(D) != 0):
        raise ValueError("coupling matrix must have zero diagonal")
    return D


def one_excitation_block(couplings: np.ndarray) -> ExcitationBlock:
    """Single-excitation block: ``H1[m, n] = D[m, n] / 2``."""
    D = _check_couplings(couplings)
    return ExcitationBlock("one", D / 2.0, list(range(D.shape[0])))


def zero_excitation_block() -> ExcitationBlock:
    """The vacuum: a 1x1 block with energy zero."""
    return ExcitationBlock("zero", np.zeros((1, 1)), [()])


@lru_cache(maxsize=64)
def pair_basis(n: int) -> tuple[tuple[int, int], ...]:
    """Lexicographically ordered pairs ``(i, j)``, ``i < j``, of ``n`` nodes."""
    return tuple(combinations(range(n), 2))


@lru_cache(maxsize=64)
def _pair_index_table(n: int) -> np.ndarray:
    table = np.full((n, n), -1, dtype=np.intp)
    for k, (i, j) in enumerate(pair_basis(n)):
        table[i, j] = table[j, i] = k
    table.setflags(write=False)
    return table


def pair_index(n: int, i, j):
    """Position of the pair ``{i, j}`` in :func:`pair_basis` (order-insensitive)."""
    return _pair_index_table(n)[i, j]


def two_excitation_block(couplings: np.ndarray) -> ExcitationBlock:
    """Two-excitation block in the lexicographic pair basis.

    ``<ij|H|kl>`` is ``D[p, q] / 2`` when the pairs share exactly one node and
    ``p``, ``q`` are the unshared nodes; it vanishes otherwise.
    """
    D = _check_couplings(couplings)
    n = D.shape[0]
    pairs = pair_basis(n)
    table = _pair_index_table(n)
    H = np.zeros((len(pairs), len(pairs)))
    for a, (i, j) in enumerate(pairs):
        for k in range(n):
            if k == i or k == j:
                continue
            # hop the excitation at i to k, or the one at j to k
            H[a, table[k, j]] += D[i, k] / 2.0
            H[a, table[i, k]] += D[j, k] / 2.0
    return ExcitationBlock("two", H, list(pairs))


def eigendecompose(block: ExcitationBlock | np.ndarray) -> EigenSystem:
    """Symmetric eigendecomposition with ascending eigenvalues.

    Eigenvector signs are fixed so that the first component whose modulus
    exceeds ``1e-12`` is positive.

    Raises
    ------
    numpy.linalg.LinAlgError
        If the symmetric eigensolver does not converge.
    """
    if isinstance(block, ExcitationBlock):
        H, sector = block.matrix, block.sector
    else:
        H, sector = np.asarray(block, dtype=float), "one"
    if not np.allclose(H, H.T, atol=1e-12, rtol=0):
        raise ValueError("block must be symmetric")
    lam, W = np.linalg.eigh(H)
    lead = np.argmax(np.abs(W) > 1e-12, axis=0)
    signs = np.sign(W[lead, np.arange(W.shape[1])])
    signs[signs == 0] = 1.0
    return EigenSystem(lam, W * signs, sector)
