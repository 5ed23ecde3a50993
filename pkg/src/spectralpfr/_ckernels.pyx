# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops.  Same signatures as ``_pykernels``; see that module for the contracts."""
import numpy as np
cimport numpy as cnp
from libc.stdint cimport uint64_t, int64_t

cnp.import_array()

cdef extern from *:
    int __builtin_popcountll(unsigned long long) nogil
    int __builtin_ctzll(unsigned long long) nogil

BACKEND = "cython"


cdef inline uint64_t _rotl(uint64_t a, int s, int n, uint64_t full) nogil:
    if s == 0:
        return a
    return ((a << s) | (a >> (n - s))) & full


cdef inline int _popcount(uint64_t x) nogil:
    return __builtin_popcountll(x)


cdef inline uint64_t _full(int n) nogil:
    if n == 64:
        return <uint64_t>0xFFFFFFFFFFFFFFFF
    return ((<uint64_t>1) << n) - 1


cdef inline uint64_t _sumset(uint64_t a, int n, uint64_t full) nogil:
    cdef uint64_t s = 0, rest = a
    cdef int i
    while rest:
        i = __builtin_ctzll(rest)
        rest &= rest - 1
        s |= _rotl(a, i, n, full)
    return s


def cyclic_stats(masks, int n):
    cdef const uint64_t[:] m = np.ascontiguousarray(masks, dtype=np.uint64)
    cdef Py_ssize_t k, count = m.shape[0]
    out_sum = np.empty(count, dtype=np.uint64)
    out_size = np.empty(count, dtype=np.int64)
    out_energy = np.empty(count, dtype=np.int64)
    cdef uint64_t[:] osum = out_sum
    cdef int64_t[:] osize = out_size
    cdef int64_t[:] oen = out_energy
    cdef uint64_t full = _full(n), a, s
    cdef int d, c
    cdef int64_t e
    with nogil:
        for k in range(count):
            a = m[k]
            s = _sumset(a, n, full)
            osum[k] = s
            osize[k] = _popcount(s)
            e = 0
            for d in range(n):
                c = _popcount(a & _rotl(a, d, n, full))
                e += c * c
            oen[k] = e
    return out_sum, out_size, out_energy


def cyclic_canonical(masks, int n):
    cdef const uint64_t[:] m = np.ascontiguousarray(masks, dtype=np.uint64)
    cdef Py_ssize_t k, count = m.shape[0]
    units_list = [u for u in range(1, n + 1) if np.gcd(u, n) == 1] if n > 1 else [1]
    cdef int64_t[:] units = np.array(units_list, dtype=np.int64)
    cdef int nu = units.shape[0]
    out = np.empty(count, dtype=np.uint64)
    cdef uint64_t[:] o = out
    cdef uint64_t full = _full(n), a, rest, img, best, r
    cdef int ui, i, t
    with nogil:
        for k in range(count):
            a = m[k]
            best = a
            for ui in range(nu):
                img = 0
                rest = a
                while rest:
                    i = __builtin_ctzll(rest)
                    rest &= rest - 1
                    img |= (<uint64_t>1) << ((units[ui] * i) % n)
                for t in range(n):
                    r = _rotl(img, t, n, full)
                    if r < best:
                        best = r
            o[k] = best
    return out


cdef int _odometer(const int64_t[:, :] x, const int64_t[:] mod, int64_t[:] sign,
                   int64_t[:] acc) noexcept nogil:
    cdef Py_ssize_t d = x.shape[0], r = mod.shape[0], i, j
    cdef int nonzero = <int>d, ok
    while True:
        if nonzero > 0:
            ok = 1
            for j in range(r):
                if acc[j] != 0:
                    ok = 0
                    break
            if ok:
                return 1
        i = 0
        while True:
            if i == d:
                return 0
            if sign[i] < 1:
                sign[i] += 1
                if sign[i] == 1:
                    nonzero += 1
                else:
                    nonzero -= 1
                for j in range(r):
                    acc[j] = (acc[j] + x[i, j]) % mod[j]
                break
            sign[i] = -1
            for j in range(r):
                acc[j] = (acc[j] - 2 * x[i, j]) % mod[j]
                if acc[j] < 0:
                    acc[j] += mod[j]
            i += 1


def signed_sum_vanishes(coords, moduli):
    moduli = np.ascontiguousarray(moduli, dtype=np.int64)
    coords = np.ascontiguousarray(np.asarray(coords, dtype=np.int64) % moduli, dtype=np.int64)
    cdef const int64_t[:, :] x = coords
    cdef const int64_t[:] mod = moduli
    cdef Py_ssize_t d = x.shape[0]
    if d == 0:
        return False
    cdef int64_t[:] sign = np.full(d, -1, dtype=np.int64)
    acc_arr = (-coords.sum(axis=0)) % moduli
    cdef int64_t[:] acc = np.ascontiguousarray(acc_arr, dtype=np.int64)
    cdef int hit
    with nogil:
        hit = _odometer(x, mod, sign, acc)
    return bool(hit)


def subset_min_sumsets(uint64_t mask, int n):
    cdef uint64_t full = _full(n)
    cdef int size = _popcount(mask)
    bits_list = [i for i in range(n) if (mask >> i) & 1]
    cdef int64_t[:] bits = np.array(bits_list, dtype=np.int64)
    best_arr = np.full(size + 1, -1, dtype=np.int64)
    cdef int64_t[:] best = best_arr
    cdef uint64_t code, sub
    cdef int j, s, c
    with nogil:
        for code in range((<uint64_t>1) << size):
            sub = 0
            for j in range(size):
                if (code >> j) & 1:
                    sub |= (<uint64_t>1) << bits[j]
            s = _popcount(sub)
            c = _popcount(_sumset(sub, n, full))
            if best[s] < 0 or c < best[s]:
                best[s] = c
    return best_arr
