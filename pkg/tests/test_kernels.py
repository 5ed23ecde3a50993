import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spectralpfr import _pykernels, kernels
from spectralpfr.fourier import additive_energy, sumset
from spectralpfr.groups import GroupSpec
from spectralpfr.harness.scanner import mask_to_set, subset_masks


def test_auto_prefers_compiled():
    kernels.set_backend("auto")
    assert kernels.BACKEND == ("cython" if kernels.compiled is not None else "python")
    with pytest.raises(ValueError):
        kernels.set_backend("fortran")


def test_python_backend_switch():
    kernels.set_backend("python")
    try:
        assert kernels.cyclic_stats is _pykernels.cyclic_stats
    finally:
        kernels.set_backend("auto")


def test_cyclic_stats_against_definitions(backend):
    N = 9
    masks = subset_masks(N)[::7]
    sums, sizes, energies = kernels.cyclic_stats(masks, N)
    G = GroupSpec.cyclic(N)
    for k, m in enumerate(masks):
        A = list(mask_to_set(m, N))
        assert sizes[k] == len(sumset(G, A))
        assert energies[k] == additive_energy(G, A).combinatorial


def test_canonical_is_orbit_minimum(backend):
    N = 10
    units = [u for u in range(1, N) if np.gcd(u, N) == 1]
    for m in subset_masks(N)[::13]:
        A = mask_to_set(m, N)
        orbit = min(sum(1 << ((u * a + t) % N) for a in A) for u in units for t in range(N))
        assert int(kernels.cyclic_canonical(np.array([m], dtype=np.uint64), N)[0]) == orbit


@settings(max_examples=40, deadline=None)
@given(st.integers(3, 20), st.data())
def test_backends_agree(N, data):
    masks = np.array(data.draw(st.lists(st.integers(1, (1 << N) - 1), min_size=1, max_size=20)), dtype=np.uint64)
    outs = []
    for mod in kernels.backends():
        outs.append((mod.cyclic_stats(masks, N), mod.cyclic_canonical(masks, N),
                     mod.subset_min_sumsets(int(masks[0]) & 0x3FF, N)))
    for other in outs[1:]:
        for a, b in zip(outs[0][0], other[0]):
            assert np.array_equal(a, b)
        assert np.array_equal(outs[0][1], other[1])
        assert list(outs[0][2]) == list(other[2])
