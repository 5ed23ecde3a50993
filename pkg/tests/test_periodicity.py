import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spectralpfr.dichotomy import LedgerConfig
from spectralpfr.groups import GroupSpec, ShapeError
from spectralpfr.periodicity import (autocorrelation, balanced_autocorrelation, bohr_set, good_shifts,
                                     packet_bias, packet_from_members, packet_in_difference_set,
                                     packet_l2_error, packet_size, polybog_search, regularity_constant,
                                     regularize, sample_packet)


def test_autocorrelation_mass():
    G = GroupSpec.cyclic(31)
    g = autocorrelation(G, [0, 1, 5, 9])
    assert g.sum() == pytest.approx(16 / 31) and g[0] == pytest.approx(4 / 31)


def test_balanced_autocorrelation_of_whole_group_is_flat():
    G = GroupSpec.cyclic(10)
    h = balanced_autocorrelation(G, range(10))
    assert np.allclose(h.values, 0) and h.spectral_residual < 1e-12


def test_trivial_packets():
    G = GroupSpec.cyclic(31)
    T = packet_from_members(G, [0, 0, 0])
    rep = good_shifts(G, [0, 1, 5], T)
    assert rep.E == pytest.approx(0, abs=1e-20) and len(rep.X) == 3
    assert packet_l2_error(G, [0, 1, 5], T).E == pytest.approx(0, abs=1e-20)
    assert good_shifts(G, range(31), packet_from_members(G, [0, 3, 7])).E == pytest.approx(0, abs=1e-15)
    assert packet_bias(G, [], [1, 2]) == 0.0


def test_sample_packet_is_seeded():
    G = GroupSpec.cyclic(997)
    S = [3, 17, 200]
    a = sample_packet(G, S, 0.2, 0.05, seed=5)
    b = sample_packet(G, S, 0.2, 0.05, seed=5)
    assert np.array_equal(a.members, b.members) and a.success
    assert len(a) == packet_size(3, 0.2, 0.05)
    assert a.achieved_bias == pytest.approx(packet_bias(G, S, a.members))
    with pytest.raises(ValueError):
        sample_packet(G, [0, 3], 0.2, 0.05, seed=5)


def test_printed_shift_identity_is_off_by_the_spread():
    G = GroupSpec.cyclic(97)
    T = sample_packet(G, [1, 2, 3, 4, 5], 0.2, 0.05, seed=0)
    rep = good_shifts(G, range(24), T)
    assert rep.corrected_residual <= 1e-8
    assert rep.printed_residual > 0.1 and not rep.identity_ok
    assert rep.spread > 0 and rep.half_ok_corrected


def test_packet_l2_corrected_bound_holds_printed_does_not():
    G = GroupSpec.cyclic(97)
    T = sample_packet(G, [1, 2, 3, 4, 5], 0.2, 0.05, seed=0)
    rep = packet_l2_error(G, range(24), T)
    assert rep.corrected_ok and not rep.printed_ok
    assert rep.E == pytest.approx(rep.E_spectral)


def test_packet_in_difference_set():
    G = GroupSpec.cyclic(97)
    assert packet_in_difference_set(G, range(24), packet_from_members(G, [0, 5, 23, 50])) == 0.75


def test_bohr_sets():
    G = GroupSpec.cyclic(97)
    assert set(bohr_set(G, [1], 0.1).indices.tolist()) == {0, 1, 96}
    assert len(bohr_set(G, [], 0.01)) == 97
    assert len(bohr_set(G, [1], 0.0)) == 1
    with pytest.raises(ValueError):
        bohr_set(G, [1], -1)


def test_regularize_stays_in_range():
    G = GroupSpec.cyclic(97)
    rep = regularize(G, [1, 5], 0.8)
    assert 0.4 - 1e-12 <= rep.rho_prime <= 0.8 + 1e-12
    sd = np.sort(np.zeros(5))
    assert regularity_constant(sd, 0, 1.0) == 0.0   # empty frequency set: sizes constant


def test_polybog():
    G = GroupSpec.cyclic(97)
    res = polybog_search(G, range(24), LedgerConfig())
    assert res.rho_prime == 2.0 and res.target_size == 97
    res = polybog_search(G, [0], LedgerConfig())
    assert res.rho_prime == pytest.approx(1.71, abs=0.01)
    assert set(res.bohr.indices.tolist()) == {0}
    with pytest.raises(ShapeError):
        polybog_search(GroupSpec.parse("2,2"), [(0, 1)], LedgerConfig())


@settings(max_examples=50, deadline=None)
@given(st.sampled_from(["31", "64", "2,2,2,2,2", "3,9"]), st.data())
def test_shift_identity_and_l2_bound(text, data):
    G = GroupSpec.parse(text)
    A = np.array(sorted(data.draw(st.sets(st.integers(0, G.order - 1), min_size=1))))
    S = data.draw(st.sets(st.integers(1, G.order - 1), max_size=4))
    T = sample_packet(G, [G.element(s) for s in S], 0.3, 0.1, seed=data.draw(st.integers(0, 2 ** 32)))
    rep = good_shifts(G, A, T)
    assert rep.corrected_residual <= 1e-8
    assert rep.half_ok_corrected
    assert packet_l2_error(G, A, T).corrected_ok
    h = balanced_autocorrelation(G, A)
    assert h.spectral_residual < 1e-10


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 64), st.data())
def test_bohr_monotone_in_radius(N, data):
    G = GroupSpec.cyclic(N)
    Gamma = data.draw(st.lists(st.integers(0, N - 1), max_size=3))
    r1, r2 = sorted(data.draw(st.lists(st.floats(0, 2), min_size=2, max_size=2)))
    small, big = bohr_set(G, Gamma, r1), bohr_set(G, Gamma, r2)
    assert set(small.indices.tolist()) <= set(big.indices.tolist())
