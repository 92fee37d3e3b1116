"""SVD-optimized one-qubit state creation and critical-length search.

The transition block ``P(t)`` from sender to extended receiver is factored as
``P = V_svd diag(w) U_svd^+``. Preparing the sender in the first right
singular vector and applying ``V = J V_svd^+`` (``J`` reverses the receiver
nodes) on the extended receiver puts the largest singular value ``w1`` on the
last node.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .dynamics import TransitionMatrix, transition_matrices, transition_matrix
from .lattice import ChainSpec, EigenSystem, build_couplings, eigendecompose, one_excitation_block
from .timesearch import EdgeOfWindowWarning, maximize_on_window

__all__ = [
    "SvdTriple",
    "ProtocolResult",
    "ScanConfig",
    "CriticalLengthRecord",
    "ScanExhausted",
    "one_excitation_eigensystem",
    "svd",
    "optimal_unitaries",
    "w1_curve",
    "maximize_w1",
    "default_window",
    "run_protocol",
    "critical_length",
]

HPST_THRESHOLD = 0.9
MIXED_THRESHOLD = 0.5


class ScanExhausted(RuntimeError):
    """A length scan ended without a single feasible chain."""


def one_excitation_eigensystem(n_total: int, nearest_neighbor: bool = False) -> EigenSystem:
    return eigendecompose(one_excitation_block(build_couplings(n_total, nearest_neighbor=nearest_neighbor)))


def _unit_phase(column: np.ndarray) -> complex:
    """Phase that makes the first non-negligible entry real and positive."""
    lead = column[np.argmax(np.abs(column) > 1e-12)]
    return np.conj(lead) / abs(lead) if lead != 0 else 1.0


@dataclass(frozen=True)
class SvdTriple:
    """``P = left @ diag(singulars) @ right^+`` with descending singular values."""

    left: np.ndarray
    singulars: np.ndarray
    right: np.ndarray

    @property
    def w1(self) -> float:
        return float(self.singulars[0])

    def reconstruct(self) -> np.ndarray:
        r = self.singulars.size
        return (self.left[:, :r] * self.singulars) @ self.right[:, :r].conj().T


def svd(tm: TransitionMatrix | np.ndarray) -> SvdTriple:
    """Phase-canonical SVD of a transition matrix.

    Each left singular vector gets its first non-negligible entry real and
    positive; the matching right singular vector picks up the same phase, so
    the product is unchanged. Unpaired columns are canonicalized on their own.

    Raises
    ------
    numpy.linalg.LinAlgError
        If the SVD does not converge.
    """
    P = tm.entries if isinstance(tm, TransitionMatrix) else np.asarray(tm, dtype=complex)
    left, s, right_h = np.linalg.svd(P, full_matrices=True)
    right = right_h.conj().T
    left = left.copy()
    for n in range(left.shape[1]):
        c = _unit_phase(left[:, n])
        left[:, n] *= c
        if n < s.size:
            right[:, n] *= c
    for n in range(s.size, right.shape[1]):
        right[:, n] *= _unit_phase(right[:, n])
    return SvdTriple(left, s, right)


def optimal_unitaries(triple: SvdTriple) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Optimal sender state and extended-receiver unitary.

    Returns
    -------
    sender_vector : ndarray, shape (n_sender,)
        First right singular vector.
    receiver_row : ndarray, shape (n_ext_receiver,)
        Last row of ``V``, i.e. the conjugated first left singular vector.
    V : ndarray, shape (n_ext_receiver, n_ext_receiver)
        ``J @ left^+`` with ``J`` the index reversal.
    """
    V = triple.left.conj().T[::-1]
    return triple.right[:, 0].copy(), V[-1].copy(), V


def default_window(n_total: int, window_factor: float = 0.5) -> tuple[float, float]:
    return ((1.0 - window_factor) * n_total, (1.0 + window_factor) * n_total)


def w1_curve(eig: EigenSystem, spec: ChainSpec, times) -> np.ndarray:
    """Largest singular value of ``P(t)`` for each time."""
    stack = transition_matrices(eig, spec, times)
    if spec.n_sender == 1 or spec.n_ext_receiver == 1:
        return np.linalg.norm(stack.reshape(stack.shape[0], -1), axis=1)
    return np.linalg.svd(stack, compute_uv=False)[:, 0]


def maximize_w1(
    eig: EigenSystem,
    spec: ChainSpec,
    window: tuple[float, float] | None = None,
    dt: float = 0.05,
    n_refine: int = 5,
    tol: float = 1e-4,
) -> tuple[float, float]:
    """Registration time maximizing ``w1`` and the value reached there."""
    if window is None:
        window = default_window(spec.n_total)
    return maximize_on_window(
        lambda ts: w1_curve(eig, spec, ts),
        lambda t: float(w1_curve(eig, spec, [t])[0]),
        window,
        dt=dt,
        n_refine=n_refine,
        tol=tol,
    )


@dataclass
class ProtocolResult:
    spec: ChainSpec
    t0: float
    w1: float
    sender_vector: np.ndarray
    receiver_row: np.ndarray
    receiver_unitary: np.ndarray
    f_profile: np.ndarray
    triple: SvdTriple = field(repr=False)

    @property
    def f_squared(self) -> float:
        return self.w1**2


def run_protocol(
    spec: ChainSpec,
    t0: float | None = None,
    eig: EigenSystem | None = None,
    **search,
) -> ProtocolResult:
    """Full optimization for one chain: best time, SVD, unitaries and node profile.

    ``search`` is forwarded to :func:`maximize_w1` when ``t0`` is not given.
    """
    if eig is None:
        eig = one_excitation_eigensystem(spec.n_total)
    if t0 is None:
        t0, _ = maximize_w1(eig, spec, **search)
    tm = transition_matrix(eig, spec, t0)
    triple = svd(tm)
    u, v_row, V = optimal_unitaries(triple)

    # state of the whole chain at t0, then V on the extended receiver
    psi = eig.propagator(t0)[:, : spec.n_sender] @ u
    tail = spec.n_total - spec.n_ext_receiver
    psi[tail:] = V @ psi[tail:]
    return ProtocolResult(spec, float(t0), triple.w1, u, v_row, V, np.abs(psi), triple)


@dataclass
class ScanConfig:
    """Knobs of a critical-length scan.

    ``n_max`` caps the scanned length; ``None`` means unbounded.
    """

    n_start: int | None = None
    k_fail: int = 10
    window_factor: float = 0.5
    dt: float = 0.05
    n_refine: int = 5
    n_max: int | None = None
    nearest_neighbor: bool = False


@dataclass
class CriticalLengthRecord:
    n_sender: int
    n_ext_receiver: int
    threshold: float
    n_critical: int | None
    t0_at_critical: float | None
    w1_at_critical: float | None
    capped: bool = False
    evaluations: dict = field(default_factory=dict, repr=False)


def critical_length(
    n_s: int,
    n_r: int,
    threshold: float,
    scan: ScanConfig | None = None,
    known: Mapping[int, tuple[float, float]] | None = None,
    on_evaluate: Callable[[int, float, float], None] | None = None,
) -> CriticalLengthRecord:
    """Largest chain length whose best ``w1**2`` reaches ``threshold``.

    Lengths are scanned upward from ``scan.n_start`` until ``scan.k_fail``
    consecutive lengths fail. ``known`` supplies already computed
    ``N -> (t0, w1)`` values (resume); ``on_evaluate`` is called after each
    fresh evaluation (checkpointing). When ``scan.n_max`` stops the scan first
    the record is flagged ``capped``.
    """
    scan = scan or ScanConfig()
    if not 0 <= threshold <= 1:
        raise ValueError(f"threshold must lie in [0, 1], got {threshold}")
    known = dict(known or {})
    n = scan.n_start if scan.n_start is not None else max(2, n_s + n_r)
    best = None
    fails = 0
    evaluations = {}
    capped = False
    while fails < scan.k_fail:
        if scan.n_max is not None and n > scan.n_max:
            capped = True
            break
        if n in known:
            t0, w1 = known[n]
        else:
            spec = ChainSpec(n, n_s, n_r)
            eig = one_excitation_eigensystem(n, scan.nearest_neighbor)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", EdgeOfWindowWarning)
                t0, w1 = maximize_w1(
                    eig, spec, default_window(n, scan.window_factor), dt=scan.dt, n_refine=scan.n_refine
                )
            if on_evaluate is not None:
                on_evaluate(n, t0, w1)
        evaluations[n] = (t0, w1)
        if w1 * w1 >= threshold:
            best = (n, t0, w1)
            fails = 0
        else:
            fails += 1
        n += 1
    if best is None:
        raise ScanExhausted(f"no feasible length for N_S={n_s}, N_R={n_r}, threshold={threshold}")
    return CriticalLengthRecord(n_s, n_r, threshold, best[0], best[1], best[2], capped, evaluations)
