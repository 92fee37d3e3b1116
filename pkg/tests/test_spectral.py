import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spinline.harness import spectrum_from_file, spectrum_to_file
from spinline.lattice import ChainSpec
from spinline.protocol import one_excitation_eigensystem, run_protocol
from spinline.spectral import (
    phase_window,
    qualifying_modes,
    significant_harmonics,
    spectral_profile,
    wrap_phase,
)


@pytest.fixture(scope="module")
def hpst31():
    spec = ChainSpec(31, 10, 1)
    eig = one_excitation_eigensystem(31)
    res = run_protocol(spec, eig=eig)
    return eig, spec, res, spectral_profile(eig, spec, res.sender_vector, res.receiver_row, res.t0)


def test_reconstruction(hpst31):
    _, _, res, prof = hpst31
    assert abs(prof.projection - res.w1) < 1e-10
    assert np.all(prof.amplitudes <= 1)


def test_two_node_modes():
    spec = ChainSpec(2, 1, 1)
    eig = one_excitation_eigensystem(2)
    prof = spectral_profile(eig, spec, [1.0], [1.0], np.pi)
    assert np.allclose(prof.amplitudes, 0.5, atol=1e-15)
    assert abs(abs(prof.projection) - 1) < 1e-14
    assert np.abs(prof.resulting_phases).max() < 1e-12


def test_symmetric_placement_kills_odd_modes():
    # sender and receiver both on the middle node of a 5-node chain
    n = 5
    eig = one_excitation_eigensystem(n)
    W = eig.eigenvectors
    weights = W[2] * W[2]
    antisym = np.abs(W[0] + W[-1]) < 1e-12
    assert np.all(weights[antisym] < 1e-24)


def test_significant_harmonics_degenerate_thresholds(hpst31):
    prof = hpst31[3]
    assert np.array_equal(significant_harmonics(prof, 0.0), np.flatnonzero(prof.amplitudes > 0) + 1)
    assert significant_harmonics(prof, 1.0).size == 0


def test_most_modes_significant(hpst31):
    prof = hpst31[3]
    assert significant_harmonics(prof).size >= 0.8 * prof.n_modes


def test_hpst_window(hpst31):
    prof = hpst31[3]
    assert phase_window(prof) == (8, 30)
    q = qualifying_modes(prof)
    assert set(range(8, 31)) <= set(q.tolist())


def test_window_none_when_nothing_qualifies(hpst31):
    assert phase_window(hpst31[3], bound=0.0) is None


@given(st.floats(min_value=-1e4, max_value=1e4, allow_nan=False))
@settings(max_examples=200, deadline=None)
def test_wrap_phase_range_and_idempotent(x):
    w = wrap_phase(x)
    assert -np.pi < w <= np.pi
    assert wrap_phase(w) == w
    assert abs(np.exp(1j * w) - np.exp(1j * x)) < 1e-9


def test_wrap_phase_pi_maps_to_pi():
    assert wrap_phase(np.pi) == np.pi
    assert wrap_phase(-np.pi) == np.pi


@pytest.mark.parametrize("phase", [0.3, 2.0, -2.9])
def test_window_invariant_under_global_phase(hpst31, phase):
    eig, spec, res, prof = hpst31
    u = res.sender_vector * np.exp(1j * phase)
    v = res.receiver_row * np.exp(-0.7j * phase)
    other = spectral_profile(eig, spec, u, v, res.t0)
    assert phase_window(other) == phase_window(prof)
    assert np.abs(other.resulting_phases - prof.resulting_phases).max() < 1e-9


def test_dimension_mismatch():
    eig = one_excitation_eigensystem(6)
    with pytest.raises(ValueError):
        spectral_profile(eig, ChainSpec(6, 2, 1), [1.0], [1.0], 3.0)


def test_export_roundtrip_bit_exact(hpst31, tmp_path):
    prof = hpst31[3]
    path = tmp_path / "spectrum.dat"
    text = spectrum_to_file(prof, path)
    assert text.splitlines()[0].startswith("# k,P_Nk,phi_Nk,phi_tilde_Nk,Phi_Nk")
    back = spectrum_from_file(path)
    assert np.array_equal(back.amplitudes, prof.amplitudes)
    assert np.array_equal(back.phases, prof.phases)
    assert np.array_equal(back.resulting_phases, prof.resulting_phases)
    assert (back.t0, back.p_min, back.global_phase) == (prof.t0, prof.p_min, prof.global_phase)
    assert spectrum_to_file(back) == text
