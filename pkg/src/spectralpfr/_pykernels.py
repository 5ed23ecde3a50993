"""Pure-Python implementations of the hot loops.

Subsets of ``Z/n`` (``n <= 64``) are passed as integer bitmasks, bit ``i``
standing for the residue ``i``.  Every function here has a compiled twin in
``_ckernels.pyx`` with the same signature and output.
"""
from __future__ import annotations

import math

import numpy as np

BACKEND = "python"


def _rotl(a: int, s: int, n: int, full: int) -> int:
    if s == 0:
        return a
    return ((a << s) | (a >> (n - s))) & full


def _bits(a: int):
    while a:
        low = a & -a
        yield low.bit_length() - 1
        a ^= low


def _sumset(a: int, n: int, full: int) -> int:
    s = 0
    for i in _bits(a):
        s |= _rotl(a, i, n, full)
    return s


def cyclic_stats(masks, n: int):
    """Sumset masks, sumset sizes and additive energies of a batch of subsets of ``Z/n``.

    Energy uses ``E(A) = sum_d |A cap (A + d)|^2``.
    """
    full = (1 << n) - 1
    masks = [int(m) for m in np.asarray(masks, dtype=np.uint64)]
    sums = np.empty(len(masks), dtype=np.uint64)
    sizes = np.empty(len(masks), dtype=np.int64)
    energies = np.empty(len(masks), dtype=np.int64)
    for k, a in enumerate(masks):
        s = _sumset(a, n, full)
        sums[k] = s
        sizes[k] = s.bit_count()
        energies[k] = sum((a & _rotl(a, d, n, full)).bit_count() ** 2 for d in range(n))
    return sums, sizes, energies


def cyclic_canonical(masks, n: int):
    """Least bitmask in the orbit of each subset under ``x -> u x + t`` (``u`` a unit)."""
    full = (1 << n) - 1
    units = [u for u in range(1, n + 1) if math.gcd(u, n) == 1] if n > 1 else [1]
    out = np.empty(len(masks), dtype=np.uint64)
    for k, a in enumerate(int(m) for m in np.asarray(masks, dtype=np.uint64)):
        best = a
        elems = list(_bits(a))
        for u in units:
            img = 0
            for i in elems:
                img |= 1 << (u * i % n)
            for t in range(n):
                r = _rotl(img, t, n, full)
                if r < best:
                    best = r
        out[k] = best
    return out


def signed_sum_vanishes(coords, moduli) -> bool:
    """True iff some nontrivial ``{-1, 0, 1}``-combination of the rows is zero.

    Tracks the set of values reached by nontrivial signed combinations of a
    growing prefix (a subset-sum walk over the group) instead of enumerating
    all ``3^d`` sign vectors.
    """
    moduli = np.asarray(moduli, dtype=np.int64)
    coords = np.asarray(coords, dtype=np.int64).reshape(-1, len(moduli)) % moduli
    if len(coords) == 0:
        return False
    shape = tuple(int(m) for m in moduli)
    order = math.prod(shape)
    strides = np.array([math.prod(shape[i + 1:]) for i in range(len(shape))], dtype=np.int64)
    table = np.indices(shape).reshape(len(shape), -1).T if shape else np.zeros((1, 0), np.int64)

    def shift(mask, x, sign):
        src = np.flatnonzero(mask)
        dst = ((table[src] + sign * x) % moduli) @ strides if shape else np.zeros_like(src)
        out = np.zeros(order, dtype=bool)
        out[dst] = True
        return out

    zero_only = np.zeros(order, dtype=bool)
    zero_only[0] = True
    reach = np.zeros(order, dtype=bool)  # sums of nontrivial combinations
    for x in coords:
        base = reach | zero_only
        reach = reach | shift(base, x, 1) | shift(base, x, -1)
        if reach[0]:
            return True
    return False


def subset_min_sumsets(mask: int, n: int):
    """``best[s] = min |B + B|`` over ``B`` subset of the mask with ``|B| = s``."""
    full = (1 << n) - 1
    mask = int(mask)
    bits = list(_bits(mask))
    best = np.full(len(bits) + 1, -1, dtype=np.int64)
    for code in range(1 << len(bits)):
        sub = 0
        for j, b in enumerate(bits):
            if code >> j & 1:
                sub |= 1 << b
        s = sub.bit_count()
        c = _sumset(sub, n, full).bit_count()
        if best[s] < 0 or c < best[s]:
            best[s] = c
    return best
