"""Excitation-conserving evolution, transition amplitudes and receiver states."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations

import numpy as np

from .lattice import (
    ChainSpec,
    EigenSystem,
    build_couplings,
    eigendecompose,
    one_excitation_block,
    pair_index,
    two_excitation_block,
)

__all__ = [
    "ChainSectors",
    "SectorState",
    "TransitionMatrix",
    "chain_sectors",
    "evolve",
    "evolve_state",
    "transition_matrix",
    "transition_matrices",
    "receiver_projection",
    "two_qubit_density",
    "validate_density",
]


@dataclass(frozen=True)
class ChainSectors:
    """Eigensystems of the one- and (optionally) two-excitation blocks of a chain."""

    n_total: int
    one: EigenSystem
    two: EigenSystem | None = None


@lru_cache(maxsize=32)
def chain_sectors(n_total: int, two: bool = True, nearest_neighbor: bool = False) -> ChainSectors:
    D = build_couplings(n_total, nearest_neighbor=nearest_neighbor)
    one = eigendecompose(one_excitation_block(D))
    pair = eigendecompose(two_excitation_block(D)) if two else None
    return ChainSectors(n_total, one, pair)


@dataclass
class SectorState:
    """Pure state living in the zero, one and two excitation sectors.

    ``one[n]`` is the amplitude of the single excitation on node ``n``;
    ``two[k]`` that of the pair ``pair_basis(n_total)[k]``. ``two`` may be
    ``None`` for purely one-excitation states.
    """

    a0: complex
    one: np.ndarray
    two: np.ndarray | None = None
    t: float = 0.0

    def __post_init__(self):
        self.a0 = complex(self.a0)
        self.one = np.asarray(self.one, dtype=complex)
        if self.two is not None:
            self.two = np.asarray(self.two, dtype=complex)
            n = self.one.shape[0]
            if self.two.shape != (n * (n - 1) // 2,):
                raise ValueError(f"two-excitation amplitudes must have length {n * (n - 1) // 2}")

    @property
    def n_total(self) -> int:
        return self.one.shape[0]

    @property
    def norm(self) -> float:
        sq = abs(self.a0) ** 2 + np.vdot(self.one, self.one).real
        if self.two is not None:
            sq += np.vdot(self.two, self.two).real
        return float(np.sqrt(sq))

    @classmethod
    def from_sender(cls, spec: ChainSpec, a0=0.0, ones=None, pairs=None) -> "SectorState":
        """Embed sender amplitudes into the full chain.

        ``ones`` has length ``n_sender``; ``pairs`` follows the lexicographic
        order of sender-node pairs, length ``n_sender * (n_sender - 1) / 2``.
        """
        n, ns = spec.n_total, spec.n_sender
        one = np.zeros(n, dtype=complex)
        if ones is not None:
            one[:ns] = ones
        two = None
        if pairs is not None:
            two = np.zeros(n * (n - 1) // 2, dtype=complex)
            two[sender_pair_indices(n, ns)] = pairs
        return cls(a0, one, two)


@lru_cache(maxsize=64)
def sender_pair_indices(n_total: int, n_sender: int) -> np.ndarray:
    """Positions of the sender-node pairs inside the chain's pair basis."""
    idx = np.array([pair_index(n_total, i, j) for i, j in combinations(range(n_sender), 2)], dtype=np.intp)
    return idx


def evolve(eig: EigenSystem, amplitudes, t: float) -> np.ndarray:
    """Apply ``W exp(-i Lambda t) W^T`` to an amplitude vector of one sector."""
    amplitudes = np.asarray(amplitudes, dtype=complex)
    if amplitudes.shape[0] != eig.dim:
        raise ValueError(f"state has dimension {amplitudes.shape[0]}, block has {eig.dim}")
    W = eig.eigenvectors
    return W @ (np.exp(-1j * eig.eigenvalues * t) * (W.T @ amplitudes))


def evolve_state(sectors: ChainSectors, state: SectorState, t: float) -> SectorState:
    """Evolve every sector of ``state`` by ``t``; the vacuum amplitude is static."""
    if state.n_total != sectors.n_total:
        raise ValueError(f"state is on {state.n_total} nodes, sectors on {sectors.n_total}")
    one = evolve(sectors.one, state.one, t)
    two = None
    if state.two is not None:
        if sectors.two is None:
            raise ValueError("state has two-excitation amplitudes but no two-excitation block was built")
        two = evolve(sectors.two, state.two, t)
    return SectorState(state.a0, one, two, state.t + t)


@dataclass(frozen=True)
class TransitionMatrix:
    """Sender-to-extended-receiver block of the one-excitation propagator.

    Rows index the last ``n_ext_receiver`` nodes, columns the first
    ``n_sender`` nodes.
    """

    entries: np.ndarray
    t: float


def _check_spec(eig: EigenSystem, spec: ChainSpec):
    if eig.dim != spec.n_total:
        raise ValueError(f"eigensystem has dimension {eig.dim}, chain has {spec.n_total} nodes")
    if spec.n_sender + spec.n_ext_receiver > spec.n_total:
        raise ValueError("sender and extended receiver overlap")


def transition_matrix(eig: EigenSystem, spec: ChainSpec, t: float) -> TransitionMatrix:
    _check_spec(eig, spec)
    W = eig.eigenvectors
    rows = W[spec.n_total - spec.n_ext_receiver :]
    P = (rows * np.exp(-1j * eig.eigenvalues * t)) @ W[: spec.n_sender].T
    return TransitionMatrix(P, float(t))


def transition_matrices(eig: EigenSystem, spec: ChainSpec, times, chunk: int = 1024) -> np.ndarray:
    """Stack of transition matrices, shape ``(len(times), n_ext_receiver, n_sender)``."""
    _check_spec(eig, spec)
    times = np.asarray(times, dtype=float)
    W = eig.eigenvectors
    rows = W[spec.n_total - spec.n_ext_receiver :]
    cols = W[: spec.n_sender]
    out = np.empty((times.size, spec.n_ext_receiver, spec.n_sender), dtype=complex)
    # bound the (chunk x N) phase table
    step = max(1, min(chunk, 2**22 // max(eig.dim, 1)))
    for start in range(0, times.size, step):
        phase = np.exp(-1j * np.outer(times[start : start + step], eig.eigenvalues))
        out[start : start + step] = np.einsum("rk,tk,sk->trs", rows, phase, cols, optimize=True)
    return out


def receiver_projection(psi0_sender, tm: TransitionMatrix | np.ndarray, v_row) -> complex:
    """Projection ``f_N = v_row . P . psi0_sender`` onto the receiver node."""
    P = tm.entries if isinstance(tm, TransitionMatrix) else np.asarray(tm)
    psi = np.asarray(psi0_sender, dtype=complex)
    v = np.asarray(v_row, dtype=complex)
    if psi.shape != (P.shape[1],) or v.shape != (P.shape[0],):
        raise ValueError(
            f"expected sender vector of length {P.shape[1]} and receiver row of length {P.shape[0]}"
        )
    return complex(v @ P @ psi)


@lru_cache(maxsize=64)
def _density_gather(n: int) -> np.ndarray:
    """Index table mapping environment configurations to receiver amplitudes.

    Amplitudes are read from the flat vector ``[a0, one(n), two(n), 0]``.
    Row ``e`` holds the indices of the amplitudes of receiver states
    ``|00>, |0 1_N>, |1_{N-1} 0>, |1_{N-1} 1_N>`` given environment
    configuration ``e`` of nodes ``0 .. n-3``; the trailing zero fills
    combinations that would exceed two excitations.
    """
    npairs = n * (n - 1) // 2
    zero = 1 + n + npairs
    a, b = n - 2, n - 1
    pidx = lambda i, j: 1 + n + int(pair_index(n, i, j))
    rows = [[0, 1 + b, 1 + a, pidx(a, b)]]
    for k in range(n - 2):
        rows.append([1 + k, pidx(k, b), pidx(k, a), zero])
    for i, j in combinations(range(n - 2), 2):
        rows.append([pidx(i, j), zero, zero, zero])
    table = np.array(rows, dtype=np.intp)
    table.setflags(write=False)
    return table


def _density_from_parts(a0: complex, one: np.ndarray, two: np.ndarray | None) -> np.ndarray:
    n = one.shape[0]
    if two is None:
        two = np.zeros(n * (n - 1) // 2, dtype=complex)
    flat = np.concatenate(([a0], one, two, [0.0]))
    amps = flat[_density_gather(n)]
    return amps.T @ amps.conj()


def two_qubit_density(state: SectorState, spec: ChainSpec | None = None) -> np.ndarray:
    """Reduced density matrix of the last two nodes.

    Basis order is ``|00>, |0 1_N>, |1_{N-1} 0>, |1_{N-1} 1_N>``, i.e. the
    last node is the least-significant qubit. The trace over the other nodes
    runs sector by sector, so the ``2**N`` state is never formed.
    """
    n = state.n_total
    if n < 4:
        raise ValueError(f"two-qubit receiver needs a chain of at least 4 nodes, got {n}")
    if spec is not None:
        if spec.n_total != n:
            raise ValueError(f"state is on {n} nodes, chain has {spec.n_total}")
        if n < spec.n_sender + 2:
            raise ValueError("sender overlaps the two-qubit receiver")
    return _density_from_parts(state.a0, state.one, state.two)


def validate_density(rho: np.ndarray, atol: float = 1e-10) -> np.ndarray:
    """Raise ``ValueError`` unless ``rho`` is Hermitian, unit-trace and PSD."""
    rho = np.asarray(rho, dtype=complex)
    if not np.allclose(rho, rho.conj().T, atol=atol, rtol=0):
        raise ValueError("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1) > atol:
        raise ValueError(f"density matrix has trace {np.trace(rho).real}")
    if np.linalg.eigvalsh(rho).min() < -atol:
        raise ValueError("density matrix has negative eigenvalues")
    return rho
