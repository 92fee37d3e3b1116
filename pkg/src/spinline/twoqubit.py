"""Eigenvalue creation on a two-qubit receiver (the last two nodes).

The sender prepares ``a0|0> + sum_i a_i|i> + sum_{i<j} a_ij|ij>`` on its
first ``N_S`` nodes. After free evolution to a registration time ``t0`` the
receiver state's characteristic polynomial
``x**4 - x**3 + A x**2 + B x + C`` is matched to that of a target spectrum
by minimizing ``eps = |(A, B, C) - (A0, B0, C0)|`` over the sender amplitudes.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field, replace
from fractions import Fraction
from itertools import combinations
from typing import Callable

import numpy as np
from scipy.optimize import minimize

from .dynamics import (
    ChainSectors,
    SectorState,
    chain_sectors,
    evolve_state,
    sender_pair_indices,
    two_qubit_density,
)
from .lattice import ChainSpec, pair_index
from .protocol import ScanConfig, ScanExhausted, critical_length, run_protocol
from .timesearch import EdgeOfWindowWarning, maximize_on_window

__all__ = [
    "EigenTriple",
    "TargetCoefficients",
    "CreationRecord",
    "TwoQubitScan",
    "VERTICES",
    "n_sender_states",
    "kappa",
    "averaged_kappa",
    "averaged_kappa_curve",
    "registration_time",
    "characteristic_coefficients",
    "target_coefficients",
    "DiscrepancyObjective",
    "minimize_discrepancy",
    "eigenvalue_critical_length",
    "lattice_points",
    "lattice_scan",
    "accuracy_curve",
]

log = logging.getLogger(__name__)

_TOL = 1e-12


@dataclass(frozen=True)
class EigenTriple:
    """Three largest eigenvalues of a two-qubit state; the fourth is implied."""

    lambda1: float
    lambda2: float
    lambda3: float

    def __post_init__(self):
        lam = self.spectrum
        if lam[3] < -_TOL or np.any(np.diff(lam) > _TOL):
            raise ValueError(f"{tuple(lam)} is not an ordered spectrum inside the eigenvalue tetrahedron")

    @property
    def lambda4(self) -> float:
        return 1.0 - self.lambda1 - self.lambda2 - self.lambda3

    @property
    def spectrum(self) -> np.ndarray:
        return np.array([self.lambda1, self.lambda2, self.lambda3, self.lambda4])

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.lambda1, self.lambda2, self.lambda3)


VERTICES = {
    "L1": EigenTriple(1.0, 0.0, 0.0),
    "L2": EigenTriple(0.5, 0.5, 0.0),
    "L3": EigenTriple(1 / 3, 1 / 3, 1 / 3),
    "L4": EigenTriple(0.25, 0.25, 0.25),
}


@dataclass(frozen=True)
class TargetCoefficients:
    A0: float
    B0: float
    C0: float

    def as_array(self) -> np.ndarray:
        return np.array([self.A0, self.B0, self.C0])


@dataclass
class CreationRecord:
    """Outcome of creating ``target`` on a chain of ``n_total`` nodes.

    ``amplitudes`` are the sender amplitudes ordered ``a0, a_1..a_NS, a_ij``
    (pairs lexicographic). ``unbounded`` marks targets feasible on every
    scanned length. ``method`` is ``"two-excitation"`` or ``"svd"``.
    """

    target: EigenTriple
    n_total: int | None
    t0: float | None
    amplitudes: np.ndarray | None
    epsilon: float
    feasible: bool
    unbounded: bool = False
    method: str = "two-excitation"
    restart_eps: list = field(default_factory=list, repr=False)
    n_unconverged: int = 0
    evaluations: dict = field(default_factory=dict, repr=False)


def n_sender_states(n_sender: int) -> int:
    """Dimension of the sender space with at most two excitations."""
    return n_sender * (n_sender + 1) // 2 + 1


def kappa(rho) -> float:
    """Probability that at least one receiver qubit is excited."""
    rho = np.asarray(rho)
    return float((rho[1, 1] + rho[2, 2] + rho[3, 3]).real)


def _receiver_pairs(n: int) -> np.ndarray:
    """Pair-basis positions of pairs that touch node ``n-2`` or ``n-1``."""
    return np.array([k for k, (i, j) in enumerate(combinations(range(n), 2)) if j >= n - 2], dtype=np.intp)


def _two_qubit_setup(spec: ChainSpec, sectors: ChainSectors | None) -> ChainSectors:
    if spec.n_total < max(4, spec.n_sender + 2):
        raise ValueError(f"a {spec.n_sender}-node sender and a two-qubit receiver need N >= {spec.n_sender + 2}")
    if sectors is None:
        sectors = chain_sectors(spec.n_total)
    if sectors.two is None or sectors.n_total != spec.n_total:
        raise ValueError("two-excitation eigensystem for this chain is required")
    return sectors


def averaged_kappa_curve(spec: ChainSpec, sectors: ChainSectors | None, times) -> np.ndarray:
    """Average of :func:`kappa` over all sender basis states, for each time.

    Every excited sender basis state contributes its receiver excitation
    probability; the vacuum contributes zero but counts in the normalization.
    """
    sectors = _two_qubit_setup(spec, sectors)
    n, ns = spec.n_total, spec.n_sender
    times = np.atleast_1d(np.asarray(times, dtype=float))
    W1, l1 = sectors.one.eigenvectors, sectors.one.eigenvalues
    W2, l2 = sectors.two.eigenvectors, sectors.two.eigenvalues
    rec1 = W1[n - 2 :]
    snd1 = W1[:ns]
    rec2 = W2[_receiver_pairs(n)]
    snd2 = W2[sender_pair_indices(n, ns)]
    total = np.zeros(times.size)
    for start in range(0, times.size, 512):
        ts = times[start : start + 512]
        ph1 = np.exp(-1j * np.outer(ts, l1))
        ph2 = np.exp(-1j * np.outer(ts, l2))
        amp1 = np.einsum("rk,tk,sk->trs", rec1, ph1, snd1, optimize=True)
        amp2 = np.einsum("rk,tk,sk->trs", rec2, ph2, snd2, optimize=True)
        total[start : start + 512] = (np.abs(amp1) ** 2).sum(axis=(1, 2)) + (np.abs(amp2) ** 2).sum(axis=(1, 2))
    return total / n_sender_states(ns)


def averaged_kappa(spec: ChainSpec, sectors: ChainSectors | None, t: float) -> float:
    return float(averaged_kappa_curve(spec, sectors, [t])[0])


def registration_time(
    spec: ChainSpec,
    sectors: ChainSectors | None = None,
    window: tuple[float, float] | None = None,
    dt: float = 0.05,
    n_refine: int = 5,
    tol: float = 1e-4,
) -> float:
    """Time maximizing the sender-averaged receiver excitation probability."""
    sectors = _two_qubit_setup(spec, sectors)
    if window is None:
        window = (0.5 * spec.n_total, 1.5 * spec.n_total)
    t0, _ = maximize_on_window(
        lambda ts: averaged_kappa_curve(spec, sectors, ts),
        lambda t: averaged_kappa(spec, sectors, t),
        window,
        dt=dt,
        n_refine=n_refine,
        tol=tol,
    )
    return t0


_I2 = np.array(list(combinations(range(4), 2)))
_I3 = np.array(list(combinations(range(4), 3)))


def characteristic_coefficients(rho) -> tuple[float, float, float]:
    """``(A, B, C)`` of ``det(rho - x I) = x^4 - x^3 + A x^2 + B x + C``.

    ``A`` is the sum of the 2x2 principal minors, ``B`` minus the sum of the
    3x3 principal minors and ``C`` the determinant.
    """
    r = np.asarray(rho, dtype=complex)
    i, j = _I2[:, 0], _I2[:, 1]
    A = np.sum(r[i, i] * r[j, j] - r[i, j] * r[j, i])
    B = -np.sum(np.linalg.det(r[_I3[:, :, None], _I3[:, None, :]]))
    C = np.linalg.det(r)
    return float(A.real), float(B.real), float(C.real)


def target_coefficients(target: EigenTriple) -> TargetCoefficients:
    """Elementary symmetric polynomials ``(e2, -e3, e4)`` of the target spectrum."""
    lam = target.spectrum
    e2 = sum(lam[a] * lam[b] for a, b in combinations(range(4), 2))
    e3 = sum(lam[a] * lam[b] * lam[c] for a, b, c in combinations(range(4), 3))
    return TargetCoefficients(float(e2), float(-e3), float(np.prod(lam)))


class DiscrepancyObjective:
    """``eps`` as a function of a real parameter vector, at fixed ``t0``.

    ``x`` holds the real parts of all sender amplitudes followed by the
    imaginary parts of all but the first (the global phase is fixed). The
    amplitude vector is normalized on every call.

    Only the amplitudes that can reach the receiver are propagated; the
    ``|00>`` population follows from the unit trace.
    """

    def __init__(self, spec: ChainSpec, sectors: ChainSectors | None, target: EigenTriple, t0: float):
        sectors = _two_qubit_setup(spec, sectors)
        self.spec, self.target, self.t0 = spec, target, float(t0)
        n, ns = spec.n_total, spec.n_sender
        self.dim = n_sender_states(ns)
        self.goal = target_coefficients(target).as_array()
        # one-excitation amplitudes on every node: env nodes 0..n-3, receiver n-2, n-1
        U1 = sectors.one.propagator(t0)
        self._P1 = U1[:, :ns]
        # two-excitation amplitudes of pairs (k, n-1), (k, n-2) for env k, and (n-2, n-1)
        W2, l2 = sectors.two.eigenvectors, sectors.two.eigenvalues
        env = np.arange(n - 2)
        rows = np.concatenate(
            [pair_index(n, env, n - 1), pair_index(n, env, n - 2), [pair_index(n, n - 2, n - 1)]]
        )
        self._P2 = (W2[rows] * np.exp(-1j * l2 * t0)) @ W2[sender_pair_indices(n, ns)].T
        self._m = n - 2

    def amplitudes(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        d = self.dim
        z = x[:d] + 1j * np.concatenate(([0.0], x[d:]))
        nrm = np.linalg.norm(z)
        if nrm == 0:
            raise ValueError("zero amplitude vector")
        z = z / nrm
        if z[0].real < 0:
            z = -z
        return z

    def density(self, z) -> np.ndarray:
        ns, m = self.spec.n_sender, self._m
        g1 = self._P1 @ z[1 : 1 + ns]
        g2 = self._P2 @ z[1 + ns :]
        # rows: vacuum environment, then single environment excitation at k
        c0 = np.concatenate(([z[0]], g1[:m]))
        c1 = np.concatenate(([g1[m + 1]], g2[:m]))
        c2 = np.concatenate(([g1[m]], g2[m : 2 * m]))
        c3 = g2[2 * m]
        amps = np.stack([c0, c1, c2, np.concatenate(([c3], np.zeros(m)))], axis=1)
        rho = amps.T @ amps.conj()
        rho[0, 0] = 1.0 - (rho[1, 1] + rho[2, 2] + rho[3, 3]).real
        return rho

    def epsilon_of(self, z) -> float:
        return float(np.linalg.norm(np.array(characteristic_coefficients(self.density(z))) - self.goal))

    def __call__(self, x) -> float:
        try:
            z = self.amplitudes(x)
        except ValueError:
            return 1.0
        return self.epsilon_of(z)


def _restart_rng(seed: int, n_total: int, target: EigenTriple) -> np.random.Generator:
    key = (n_total,) + tuple(int(round(v * 2**30)) for v in target.as_tuple())
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=key))


def minimize_discrepancy(
    spec: ChainSpec,
    sectors: ChainSectors | None,
    target: EigenTriple,
    t0: float,
    restarts: int = 32,
    seed: int = 0,
    eps_threshold: float = 1e-8,
    maxfev: int = 8000,
    rounds: int = 3,
    stop_below: float | None = None,
) -> CreationRecord:
    """Best-of-``restarts`` Nelder-Mead minimization of ``eps`` at fixed ``t0``.

    Each restart starts from a uniformly random point of the parameter sphere
    and reruns the simplex from its own result up to ``rounds`` times. When
    ``stop_below`` is given, the remaining restarts are skipped once a restart
    reaches it.
    """
    if restarts < 1:
        raise ValueError("at least one restart is required")
    obj = DiscrepancyObjective(spec, sectors, target, t0)
    rng = _restart_rng(seed, spec.n_total, target)
    opts = dict(maxfev=maxfev, maxiter=maxfev, xatol=1e-14, fatol=1e-18, adaptive=True)
    best_x, best_eps = None, np.inf
    restart_eps, unconverged = [], 0
    for r in range(restarts):
        x = rng.normal(size=2 * obj.dim - 1)
        x /= np.linalg.norm(x)
        fun = obj(x)
        for _ in range(rounds):
            res = minimize(obj, x, method="Nelder-Mead", options=opts)
            improved = res.fun < fun
            x, fun = res.x, min(res.fun, fun)
            if not improved or fun == 0:
                break
        if not res.success:
            unconverged += 1
            log.debug("restart %d at N=%d stopped without convergence: %s", r, spec.n_total, res.message)
        restart_eps.append(float(fun))
        if fun < best_eps:
            best_x, best_eps = x, float(fun)
        if stop_below is not None and best_eps <= stop_below:
            break
    z = obj.amplitudes(best_x)
    return CreationRecord(
        target,
        spec.n_total,
        float(t0),
        z,
        best_eps,
        best_eps <= eps_threshold,
        restart_eps=restart_eps,
        n_unconverged=unconverged,
    )


@dataclass
class TwoQubitScan:
    """Settings of a two-qubit critical-length scan.

    ``n_max`` bounds the two-excitation scan and the length up to which a pure
    target is checked; ``svd_scan`` drives the one-excitation path used for
    targets with ``lambda3 = lambda4 = 0``.
    """

    n_sender: int = 4
    n_start: int | None = None
    k_fail: int = 10
    n_max: int | None = 40
    restarts: int = 32
    seed: int = 0
    eps_threshold: float = 1e-8
    stop_below: float | None = 1e-12
    window_factor: float = 0.5
    dt: float = 0.05
    maxfev: int = 8000
    rounds: int = 3
    svd_scan: ScanConfig = field(default_factory=ScanConfig)


def _create_at(target: EigenTriple, n: int, scan: TwoQubitScan) -> CreationRecord:
    spec = ChainSpec(n, scan.n_sender, 2)
    sectors = chain_sectors(n)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", EdgeOfWindowWarning)
        t0 = registration_time(
            spec, sectors, (n * (1 - scan.window_factor), n * (1 + scan.window_factor)), dt=scan.dt
        )
    return minimize_discrepancy(
        spec,
        sectors,
        target,
        t0,
        restarts=scan.restarts,
        seed=scan.seed,
        eps_threshold=scan.eps_threshold,
        maxfev=scan.maxfev,
        rounds=scan.rounds,
        stop_below=scan.stop_below,
    )


def _is_rank_two(target: EigenTriple) -> bool:
    return abs(target.lambda3) <= _TOL and abs(target.lambda4) <= _TOL


def _svd_path(target: EigenTriple, scan: TwoQubitScan) -> CreationRecord:
    """Rank-two targets via the one-excitation SVD protocol.

    With one excitation the receiver spectrum is ``(1 - p, p, 0, 0)`` where
    ``p`` is the excitation probability of the two receiver nodes, which the
    sender can tune anywhere in ``[0, w1**2]``.
    """
    ns = scan.n_sender
    p = target.lambda2
    if p <= _TOL:
        n_lo = scan.n_start or ns + 2
        n_hi = scan.n_max or n_lo
        z = np.zeros(n_sender_states(ns), dtype=complex)
        z[0] = 1.0
        eps = 0.0
        for n in range(n_lo, n_hi + 1):
            rho = two_qubit_density(SectorState.from_sender(ChainSpec(n, ns, 2), a0=1.0))
            eps = max(eps, float(np.linalg.norm(np.array(characteristic_coefficients(rho)) - target_coefficients(target).as_array())))
        return CreationRecord(target, n_hi, None, z, eps, eps <= scan.eps_threshold, unbounded=True, method="svd")

    rec = critical_length(ns, 2, p, scan.svd_scan)
    spec = ChainSpec(rec.n_critical, ns, 2)
    res = run_protocol(spec, t0=rec.t0_at_critical)
    s = res.triple.singulars
    w_lo = 0.0 if ns > 2 else float(s[-1])
    w_hi = res.w1
    alpha = 1.0 if w_hi**2 - w_lo**2 <= 0 else float(np.clip((p - w_lo**2) / (w_hi**2 - w_lo**2), 0.0, 1.0))
    ones = np.sqrt(alpha) * res.triple.right[:, 0] + np.sqrt(1 - alpha) * res.triple.right[:, -1]
    state = SectorState.from_sender(spec, ones=ones)
    sectors = chain_sectors(spec.n_total, two=False)
    rho = two_qubit_density(evolve_state(sectors, state, rec.t0_at_critical))
    eps = float(np.linalg.norm(np.array(characteristic_coefficients(rho)) - target_coefficients(target).as_array()))
    z = np.zeros(n_sender_states(ns), dtype=complex)
    z[1 : 1 + ns] = ones
    return CreationRecord(
        target,
        rec.n_critical,
        rec.t0_at_critical,
        z,
        eps,
        eps <= scan.eps_threshold,
        unbounded=rec.capped,
        method="svd",
        evaluations=rec.evaluations,
    )


def eigenvalue_critical_length(
    target: EigenTriple,
    scan: TwoQubitScan | None = None,
    known: dict | None = None,
    on_evaluate: Callable[[CreationRecord], None] | None = None,
) -> CreationRecord:
    """Largest chain on which ``target`` can be created to within ``eps_threshold``.

    Rank-two targets use the one-excitation SVD protocol; others scan lengths
    upward from ``n_sender + 2`` with the two-excitation minimization until
    ``k_fail`` consecutive failures. ``known`` maps lengths to previously
    computed records (resume).
    """
    scan = scan or TwoQubitScan()
    if _is_rank_two(target):
        return _svd_path(target, scan)
    known = dict(known or {})
    n = scan.n_start or scan.n_sender + 2
    best, fails, evaluations = None, 0, {}
    capped = False
    while fails < scan.k_fail:
        if scan.n_max is not None and n > scan.n_max:
            capped = True
            break
        rec = known.get(n)
        if rec is None:
            rec = _create_at(target, n, scan)
            if on_evaluate is not None:
                on_evaluate(rec)
        evaluations[n] = rec.epsilon
        if rec.epsilon <= scan.eps_threshold:
            best, fails = rec, 0
        else:
            fails += 1
        n += 1
    if best is None:
        raise ScanExhausted(f"target {target.as_tuple()} is not creatable for any scanned length")
    return replace(best, unbounded=capped, evaluations=evaluations)


def lattice_points(resolution: int = 12) -> list[EigenTriple]:
    """Ordered spectra ``p_i / resolution`` inside the tetrahedron."""
    if resolution < 1:
        raise ValueError("resolution must be positive")
    pts = []
    for p1 in range(resolution, -1, -1):
        for p2 in range(min(p1, resolution - p1), -1, -1):
            for p3 in range(min(p2, resolution - p1 - p2), -1, -1):
                p4 = resolution - p1 - p2 - p3
                if 0 <= p4 <= p3:
                    pts.append(EigenTriple(*(float(Fraction(p, resolution)) for p in (p1, p2, p3))))
    return pts


def lattice_scan(resolution: int = 12, scan: TwoQubitScan | None = None, points=None) -> list[CreationRecord]:
    """Critical length of every lattice spectrum.

    Points that fail already at the shortest length come back with
    ``n_total=None`` and ``feasible=False``.
    """
    scan = scan or TwoQubitScan()
    out = []
    for target in points if points is not None else lattice_points(resolution):
        try:
            out.append(eigenvalue_critical_length(target, scan))
        except ScanExhausted:
            out.append(CreationRecord(target, None, None, None, float("inf"), False))
    return out


def accuracy_curve(
    n_values,
    targets=(VERTICES["L3"], VERTICES["L4"]),
    scan: TwoQubitScan | None = None,
) -> list[tuple[int, list[CreationRecord]]]:
    """Minimized discrepancy of each target for each chain length."""
    scan = scan or TwoQubitScan()
    return [(int(n), [_create_at(t, int(n), scan) for t in targets]) for n in n_values]
