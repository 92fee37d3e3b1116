"""Eigenmode decomposition of the created receiver projection.

For sender amplitudes ``a`` and receiver row ``v`` the projection splits as
``f_N = sum_k P_k exp(i (phi_k - lambda_k t0))`` with
``P_k exp(i phi_k) = (v . W_R[:, k]) (W_S[:, k] . a)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lattice import ChainSpec, EigenSystem

__all__ = [
    "SpectralProfile",
    "wrap_phase",
    "spectral_profile",
    "significant_harmonics",
    "phase_window",
    "qualifying_modes",
]


def wrap_phase(x):
    """Map angles to the half-open interval ``(-pi, pi]``."""
    x = np.asarray(x, dtype=float)
    return x - 2 * np.pi * np.ceil((x - np.pi) / (2 * np.pi))


@dataclass
class SpectralProfile:
    """Per-mode amplitudes and phases; mode ``k`` is the k-th lowest eigenvalue.

    ``resulting_phases`` are measured relative to ``global_phase = arg f_N``.
    """

    amplitudes: np.ndarray
    phases: np.ndarray
    resulting_phases: np.ndarray
    t0: float
    p_min: float
    global_phase: float = 0.0

    @property
    def n_modes(self) -> int:
        return self.amplitudes.size

    @property
    def shifted_phases(self) -> np.ndarray:
        """``phi_k + pi k`` (one-based k), wrapped; the form usually plotted."""
        k = np.arange(1, self.n_modes + 1)
        return wrap_phase(self.phases + np.pi * k)

    @property
    def projection(self) -> complex:
        return complex(np.sum(self.amplitudes * np.exp(1j * (self.resulting_phases + self.global_phase))))


def spectral_profile(
    eig: EigenSystem,
    spec: ChainSpec,
    sender_vector,
    receiver_row,
    t0: float,
    p_min: float | None = None,
) -> SpectralProfile:
    """Amplitudes ``P_Nk`` and phases of every eigenmode at time ``t0``.

    ``p_min`` defaults to ``0.01 * max_k P_Nk``.
    """
    u = np.asarray(sender_vector, dtype=complex)
    v = np.asarray(receiver_row, dtype=complex)
    if u.shape != (spec.n_sender,) or v.shape != (spec.n_ext_receiver,):
        raise ValueError("sender/receiver vectors do not match the chain partition")
    if eig.dim != spec.n_total:
        raise ValueError("eigensystem and chain length differ")
    W = eig.eigenvectors
    weights = (v @ W[spec.n_total - spec.n_ext_receiver :]) * (u @ W[: spec.n_sender])
    amps = np.abs(weights)
    phases = np.angle(weights)
    f = np.sum(weights * np.exp(-1j * eig.eigenvalues * t0))
    g = float(np.angle(f)) if abs(f) > 0 else 0.0
    resulting = wrap_phase(phases - eig.eigenvalues * t0 - g)
    if p_min is None:
        p_min = 0.01 * float(amps.max())
    return SpectralProfile(amps, wrap_phase(phases), resulting, float(t0), float(p_min), g)


def significant_harmonics(profile: SpectralProfile, p_min: float | None = None) -> np.ndarray:
    """One-based indices of modes with ``P_Nk > p_min``."""
    p_min = profile.p_min if p_min is None else p_min
    return np.flatnonzero(profile.amplitudes > p_min) + 1


def qualifying_modes(profile: SpectralProfile, bound: float = np.pi / 6) -> np.ndarray:
    """One-based indices of significant modes whose phase lies inside ``(-bound, bound)``."""
    sig = significant_harmonics(profile)
    return sig[np.abs(profile.resulting_phases[sig - 1]) < bound]


def phase_window(profile: SpectralProfile, bound: float = np.pi / 6) -> tuple[int, int] | None:
    """Longest run of significant modes whose resulting phase is within ``bound``.

    Runs are contiguous in the sequence of significant modes: negligible
    modes in between are skipped, a significant mode outside the bound ends
    the run. Returns one-based ``(k_min, k_max)`` inclusive, or ``None``.
    """
    sig = significant_harmonics(profile)
    ok = np.abs(profile.resulting_phases[sig - 1]) < bound
    best, start = None, None
    for pos, good in enumerate(np.r_[ok, False]):
        if good and start is None:
            start = pos
        elif not good and start is not None:
            length = pos - start
            if best is None or length > best[0]:
                best = (length, int(sig[start]), int(sig[pos - 1]))
            start = None
    return None if best is None else best[1:]
