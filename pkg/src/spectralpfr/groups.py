"""Finite abelian groups as products of cyclic factors.

Elements are coordinate tuples ``(x_1, ..., x_k)`` with ``0 <= x_i < n_i``.
Internally every element also has a row-major integer index, which is what
the numeric code works with; the index order is the canonical element order.

The dual group of ``Z/n_1 x ... x Z/n_k`` is labelled by the same tuples via
the pairing ``<xi, x> = sum_i xi_i * x_i / n_i  (mod 1)``, so a dual subgroup
is stored with exactly the same machinery as a subgroup of ``G``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, reduce
from typing import Iterable, Sequence

import numpy as np

Element = tuple  # coordinate tuple; also used for dual elements


class ShapeError(ValueError):
    """An element or function does not fit the group it is used with."""


@dataclass(frozen=True)
class GroupSpec:
    factors: tuple[int, ...]

    def __post_init__(self):
        facs = tuple(int(n) for n in self.factors)
        if any(n < 2 for n in facs):
            raise ShapeError(f"cyclic factors must be >= 2, got {facs}")
        object.__setattr__(self, "factors", facs)

    @classmethod
    def parse(cls, text: str) -> "GroupSpec":
        """Parse a group literal such as ``"97"`` or ``"3,3,3"``; ``"1"`` or ``""`` is trivial."""
        text = text.strip()
        if text in ("", "1", "()"):
            return cls(())
        return cls(tuple(int(t) for t in text.replace(" ", "").split(",") if t))

    @classmethod
    def cyclic(cls, n: int) -> "GroupSpec":
        return cls((n,)) if n > 1 else cls(())

    @classmethod
    def elementary(cls, p: int, n: int) -> "GroupSpec":
        return cls((p,) * n)

    def __str__(self):
        return ",".join(map(str, self.factors)) or "1"

    @property
    def rank(self) -> int:
        return len(self.factors)

    @cached_property
    def order(self) -> int:
        return math.prod(self.factors)

    @property
    def is_cyclic(self) -> bool:
        return self.rank == 1

    @cached_property
    def exponent(self) -> int:
        return reduce(math.lcm, self.factors, 1)

    @cached_property
    def _strides(self) -> np.ndarray:
        strides = [1] * self.rank
        for i in range(self.rank - 2, -1, -1):
            strides[i] = strides[i + 1] * self.factors[i + 1]
        return np.array(strides, dtype=np.int64)

    @cached_property
    def coords_table(self) -> np.ndarray:
        """``(order, rank)`` array of coordinates in canonical (row-major) order."""
        if self.rank == 0:
            return np.zeros((1, 0), dtype=np.int64)
        grids = np.indices(self.factors).reshape(self.rank, -1).T
        return np.ascontiguousarray(grids, dtype=np.int64)

    @cached_property
    def _moduli(self) -> np.ndarray:
        return np.array(self.factors, dtype=np.int64)

    # -- elements ---------------------------------------------------------

    @property
    def zero(self) -> Element:
        return (0,) * self.rank

    def check(self, x) -> Element:
        """Return ``x`` as a coordinate tuple, raising ShapeError if out of range."""
        if isinstance(x, (int, np.integer)):
            if self.rank != 1:
                raise ShapeError(f"integer element {x} needs a cyclic group, got [{self}]")
            x = (int(x),)
        x = tuple(int(c) for c in x)
        if len(x) != self.rank or any(not 0 <= c < n for c, n in zip(x, self.factors)):
            raise ShapeError(f"element {x} is not in [{self}]")
        return x

    def reduce(self, x) -> Element:
        """Reduce an integer vector componentwise into the group."""
        if isinstance(x, (int, np.integer)):
            x = (int(x),)
        if len(x) != self.rank:
            raise ShapeError(f"element {tuple(x)} has wrong length for [{self}]")
        return tuple(int(c) % n for c, n in zip(x, self.factors))

    def index(self, x) -> int:
        return int(np.dot(self.check(x), self._strides)) if self.rank else 0

    def element(self, i: int) -> Element:
        return tuple(int(c) for c in self.coords_table[i])

    def elements(self) -> list[Element]:
        return [tuple(map(int, row)) for row in self.coords_table]

    def ravel(self, coords: np.ndarray) -> np.ndarray:
        """Indices of an ``(m, rank)`` coordinate array (already reduced)."""
        if self.rank == 0:
            return np.zeros(np.shape(coords)[:-1], dtype=np.int64)
        return coords @ self._strides

    def add_idx(self, i, j):
        """Vectorised addition on indices (broadcasts like numpy)."""
        ct = self.coords_table
        return self.ravel((ct[i] + ct[j]) % self._moduli)

    def sub_idx(self, i, j):
        ct = self.coords_table
        return self.ravel((ct[i] - ct[j]) % self._moduli)

    def neg_idx(self, i):
        return self.ravel((-self.coords_table[i]) % self._moduli)

    def scale_idx(self, k: int, i):
        return self.ravel((k * self.coords_table[i]) % self._moduli)

    def add(self, x, y) -> Element:
        return tuple((a + b) % n for a, b, n in zip(self.check(x), self.check(y), self.factors))

    def neg(self, x) -> Element:
        return tuple((-a) % n for a, n in zip(self.check(x), self.factors))

    def index_array(self, A: Iterable) -> np.ndarray:
        """Sorted unique index array of a set of elements (ints allowed for cyclic groups)."""
        idx = sorted({self.index(a) for a in A})
        return np.array(idx, dtype=np.int64)

    def mask(self, idx) -> np.ndarray:
        m = np.zeros(self.order, dtype=bool)
        m[np.asarray(idx, dtype=np.int64)] = True
        return m

    def to_elements(self, idx) -> tuple[Element, ...]:
        return tuple(self.element(int(i)) for i in np.sort(np.asarray(idx, dtype=np.int64)))

    # -- duality ------------------------------------------------------------

    def pairing(self, xi, x) -> Fraction:
        """``<xi, x>`` as an exact rational in ``[0, 1)``."""
        xi, x = self.check(xi), self.check(x)
        return sum((Fraction(a * b, n) for a, b, n in zip(xi, x, self.factors)), Fraction(0)) % 1

    def pairing_numerators(self, xi) -> np.ndarray:
        """``L * <xi, x> mod L`` over all ``x`` in canonical order, ``L`` the exponent."""
        xi = np.array(self.check(xi), dtype=np.int64)
        L = self.exponent
        w = xi * (L // self._moduli) if self.rank else xi
        return (self.coords_table @ w) % L

    def phases(self, xi) -> np.ndarray:
        """Pairing values ``<xi, x>`` in ``[0, 1)`` as floats, for every ``x``."""
        return self.pairing_numerators(xi) / self.exponent

    def character(self, xi) -> np.ndarray:
        return np.exp(2j * np.pi * self.phases(xi))

    def annihilator_mask(self, gens_idx) -> np.ndarray:
        """Mask of ``{x : <g, x> = 0 for every g}``; symmetric in the roles of G and its dual."""
        keep = np.ones(self.order, dtype=bool)
        for g in np.asarray(gens_idx, dtype=np.int64).ravel():
            keep &= self.pairing_numerators(self.element(int(g))) == 0
        return keep


@dataclass(frozen=True, eq=False)
class Subgroup:
    """A subgroup, stored as generators plus the sorted element list."""

    parent: GroupSpec
    generators: tuple[Element, ...]
    elements: tuple[Element, ...]
    index: int

    @cached_property
    def indices(self) -> np.ndarray:
        return np.array([self.parent.index(e) for e in self.elements], dtype=np.int64)

    @cached_property
    def mask(self) -> np.ndarray:
        return self.parent.mask(self.indices)

    @property
    def order(self) -> int:
        return len(self.elements)

    def __len__(self):
        return len(self.elements)

    def __contains__(self, x) -> bool:
        return bool(self.mask[self.parent.index(x)])

    def __iter__(self):
        return iter(self.elements)

    def __eq__(self, other):
        if not isinstance(other, Subgroup):
            return NotImplemented
        return self.parent == other.parent and set(self.elements) == set(other.elements)

    def __hash__(self):
        return hash((self.parent, frozenset(self.elements)))

    def __repr__(self):
        shown = list(self.elements[:8])
        more = "" if self.order <= 8 else f", ... ({self.order} total)"
        return f"{type(self).__name__}([{self.parent}], {shown}{more})"


@dataclass(frozen=True, eq=False, repr=False)
class DualSubgroup(Subgroup):
    """A subgroup of the dual, optionally carrying a dissociated generating set."""

    dissociated_basis: tuple[Element, ...] | None = None

    @property
    def dim(self) -> int:
        return len(self.dissociated_basis) if self.dissociated_basis is not None else 0


def _closure_mask(G: GroupSpec, gens_idx: Sequence[int]) -> np.ndarray:
    members = np.zeros(G.order, dtype=bool)
    members[0] = True
    for g in gens_idx:
        if members[g]:
            continue
        cyc = [0]
        cur = int(g)
        while cur != 0:
            cyc.append(cur)
            cur = int(G.add_idx(cur, g))
        cur_idx = np.flatnonzero(members)
        new = G.add_idx(cur_idx[:, None], np.array(cyc, dtype=np.int64)[None, :]).ravel()
        members[new] = True
    return members


def _generating_set(G: GroupSpec, mask: np.ndarray) -> tuple[Element, ...]:
    """Greedy generating set: walk the canonical order, keep anything not yet generated."""
    gens: list[int] = []
    span = np.zeros(G.order, dtype=bool)
    span[0] = True
    for i in np.flatnonzero(mask):
        if not span[i]:
            gens.append(int(i))
            span = _closure_mask(G, gens)
            if span.sum() == mask.sum():
                break
    return tuple(G.element(i) for i in gens)


def _subgroup_from_mask(G: GroupSpec, mask: np.ndarray, generators=None, cls=Subgroup, **extra):
    if generators is None:
        generators = _generating_set(G, mask)
    elements = tuple(G.element(int(i)) for i in np.flatnonzero(mask))
    return cls(G, tuple(generators), elements, G.order // len(elements), **extra)


def enumerate_subgroup(G: GroupSpec, gens: Iterable) -> Subgroup:
    """Closure of ``gens`` in ``G``."""
    gens = [G.check(g) for g in gens]
    if not gens:
        raise ValueError("need at least one generator")
    mask = _closure_mask(G, [G.index(g) for g in gens])
    return _subgroup_from_mask(G, mask, generators=gens)


def trivial_subgroup(G: GroupSpec) -> Subgroup:
    return enumerate_subgroup(G, [G.zero])


def whole_group(G: GroupSpec) -> Subgroup:
    return _subgroup_from_mask(G, np.ones(G.order, dtype=bool))


def dual_subgroup(G: GroupSpec, gens: Iterable, dissociated_basis=None) -> DualSubgroup:
    """Subgroup of the dual generated by ``gens``."""
    gens = [G.check(g) for g in gens] or [G.zero]
    mask = _closure_mask(G, [G.index(g) for g in gens])
    basis = None if dissociated_basis is None else tuple(G.check(b) for b in dissociated_basis)
    return _subgroup_from_mask(G, mask, generators=gens, cls=DualSubgroup, dissociated_basis=basis)


def annihilator(V: Subgroup) -> Subgroup:
    """``V^perp = {x in G : <xi, x> = 0 for all xi in V}``."""
    G = V.parent
    mask = G.annihilator_mask([G.index(g) for g in V.generators])
    H = _subgroup_from_mask(G, mask)
    if H.order * V.order != G.order:
        raise AssertionError(f"|H||V| = {H.order}*{V.order} != |G| = {G.order}")
    return H


def dual_annihilator(H: Subgroup) -> DualSubgroup:
    """``H^perp`` inside the dual: the characters trivial on ``H``."""
    G = H.parent
    mask = G.annihilator_mask([G.index(g) for g in H.generators])
    V = _subgroup_from_mask(G, mask, cls=DualSubgroup)
    if V.order * H.order != G.order:
        raise AssertionError(f"|V||H| = {V.order}*{H.order} != |G| = {G.order}")
    return V


def all_subgroups_cyclic(N: int) -> list[Subgroup]:
    """Every subgroup of ``Z/N``, one per divisor, smallest first."""
    G = GroupSpec.cyclic(N)
    if N == 1:
        return [trivial_subgroup(G)]
    return [enumerate_subgroup(G, [N // d % N]) for d in range(1, N + 1) if N % d == 0]


# -- quotients ----------------------------------------------------------------

def smith_normal_form(M: Sequence[Sequence[int]]) -> tuple[list[int], list[list[int]]]:
    """Diagonal of the Smith form of an integer matrix and the column transform.

    Returns ``(d, V)`` with ``U @ M @ V = diag(d)`` for some unimodular ``U``;
    ``d`` has one entry per column (zeros allowed) and ``d[i] | d[i+1]``.
    """
    A = [list(map(int, row)) for row in M]
    m = len(A)
    k = len(A[0]) if m else 0
    V = [[int(i == j) for j in range(k)] for i in range(k)]

    def col_op(dst, src, q):  # column dst -= q * column src
        for row in A:
            row[dst] -= q * row[src]
        for row in V:
            row[dst] -= q * row[src]

    def swap_cols(a, b):
        for row in A:
            row[a], row[b] = row[b], row[a]
        for row in V:
            row[a], row[b] = row[b], row[a]

    for t in range(min(m, k)):
        while True:
            piv = None
            for i in range(t, m):
                for j in range(t, k):
                    if A[i][j] and (piv is None or abs(A[i][j]) < abs(A[piv[0]][piv[1]])):
                        piv = (i, j)
            if piv is None:
                break
            A[t], A[piv[0]] = A[piv[0]], A[t]
            swap_cols(t, piv[1])
            p = A[t][t]
            done = True
            for i in range(t + 1, m):
                q = A[i][t] // p
                if q:
                    A[i] = [a - q * b for a, b in zip(A[i], A[t])]
                if A[i][t]:
                    done = False
            for j in range(t + 1, k):
                q = A[t][j] // p
                if q:
                    col_op(j, t, q)
                if A[t][j]:
                    done = False
            if not done:
                continue
            bad = next((i for i in range(t + 1, m) for j in range(t + 1, k) if A[i][j] % p), None)
            if bad is None:
                break
            A[t] = [a + b for a, b in zip(A[t], A[bad])]
        if A[t][t] < 0:
            A[t] = [-a for a in A[t]]
    d = [abs(A[i][i]) if i < m else 0 for i in range(k)]
    return d, V


@dataclass(frozen=True, eq=False)
class QuotientMap:
    parent: GroupSpec
    kernel: Subgroup
    image: GroupSpec
    table: np.ndarray = field(repr=False)  # parent index -> image index
    transform: tuple = field(repr=False, default=())

    def project(self, x) -> Element:
        return self.image.element(int(self.table[self.parent.index(x)]))

    def project_idx(self, idx) -> np.ndarray:
        return np.unique(self.table[np.asarray(idx, dtype=np.int64)])

    @property
    def codim(self) -> float:
        """Logarithmic index ``log |G/H|``."""
        return math.log(self.image.order)

    @cached_property
    def section(self) -> np.ndarray:
        """Smallest parent index in each fibre."""
        _, first = np.unique(self.table, return_index=True)
        return first.astype(np.int64)

    def dual_label(self, xi) -> Element:
        """Image-dual label of a character ``xi`` of G that is trivial on the kernel."""
        G, Q = self.parent, self.image
        if not bool(G.annihilator_mask([G.index(g) for g in self.kernel.generators])[G.index(xi)]):
            raise ValueError(f"{xi} is not trivial on the kernel")
        label = []
        for j, d in enumerate(Q.factors):
            unit = tuple(int(i == j) for i in range(Q.rank))
            x = G.element(int(self.section[Q.index(unit)]))
            val = G.pairing(xi, x) * d
            if val.denominator != 1:
                raise AssertionError("character does not descend to the quotient")
            label.append(int(val) % d)
        return tuple(label)


def quotient(G: GroupSpec, H: Subgroup) -> QuotientMap:
    """``G -> G/H`` with the image written in invariant-factor form."""
    if H.parent != G:
        raise ShapeError("subgroup belongs to a different group")
    k = G.rank
    rel = [[n if i == j else 0 for j in range(k)] for i, n in enumerate(G.factors)]
    rel += [list(h) for h in H.generators]
    d, V = smith_normal_form(rel) if k else ([], [])
    keep = [i for i, di in enumerate(d) if di != 1]
    if any(d[i] == 0 for i in keep):
        raise AssertionError("quotient of a finite group cannot be infinite")
    image = GroupSpec(tuple(d[i] for i in keep))
    Vm = np.array(V, dtype=object).reshape(k, k) if k else np.zeros((0, 0), dtype=object)
    if keep:
        y = (G.coords_table.astype(object) @ Vm[:, keep]) % np.array([d[i] for i in keep], dtype=object)
        table = image.ravel(y.astype(np.int64))
    else:
        table = np.zeros(G.order, dtype=np.int64)
    q = QuotientMap(G, H, image, np.asarray(table, dtype=np.int64), tuple(map(tuple, V)))
    kernel_mask = q.table == q.table[0]
    if not np.array_equal(kernel_mask, H.mask) or len(np.unique(q.table)) != image.order:
        raise AssertionError("projection is not a surjection with the requested kernel")
    return q


def push_forward(values, q: QuotientMap, averaged: bool = False) -> np.ndarray:
    """Fibre sums ``F(y) = sum_{pi(x) = y} f(x)``, optionally divided by ``|kernel|``."""
    values = np.asarray(values)
    if values.shape != (q.parent.order,):
        raise ShapeError("function does not live on the quotient's parent group")
    n = q.image.order
    if np.iscomplexobj(values):
        out = np.bincount(q.table, weights=values.real, minlength=n) + 1j * np.bincount(
            q.table, weights=values.imag, minlength=n)
    else:
        out = np.bincount(q.table, weights=values.astype(float), minlength=n)
    return out / q.kernel.order if averaged else out


# -- Freiman modelling of integer sets ------------------------------------------

@dataclass(frozen=True)
class ModelingResult:
    modulus: int
    shift: int
    order: int
    wrap_certificate: dict
    baseline_modulus: int
    within_budget: bool | None = None

    def map(self, a: int) -> int:
        return (a - self.shift) % self.modulus


def _iterated_difference(A: Sequence[int], m: int) -> set[int]:
    s = {0}
    for _ in range(m):
        s = {x + a for x in s for a in A}
    return {x - y for x in s for y in s}


def _injective_mod(values: set[int], N: int) -> bool:
    return len({v % N for v in values}) == len(values)


def model_in_cyclic(A: Iterable[int], m: int = 4, K: float | None = None,
                    budget_C: float | None = None) -> ModelingResult:
    """Reduce an integer set into ``Z/N`` with no wrap-around on ``m'A - m'A`` for ``m' <= m``.

    Baseline ``N = 2 m diam(A) + 1`` always works; every smaller modulus down to 2
    is then tried with an exhaustive injectivity check and the smallest admissible
    one is returned.  If ``K`` and ``budget_C`` are given, ``within_budget``
    records whether ``N <= budget_C * K**budget_C * |A|``.
    """
    A = sorted(set(int(a) for a in A))
    if not A:
        raise ValueError("cannot model an empty set")
    if m not in (1, 2, 3, 4):
        raise ValueError(f"modelling order must be in 1..4, got {m}")
    shift = A[0]
    A0 = [a - shift for a in A]
    diam = A0[-1]
    baseline = max(2 * m * diam + 1, 2)
    diffs = {mm: _iterated_difference(A0, mm) for mm in range(1, m + 1)}
    best = baseline
    for N in range(baseline - 1, 1, -1):
        if _injective_mod(diffs[m], N):
            best = N
    cert = {mm: _injective_mod(diffs[mm], best) for mm in range(1, m + 1)}
    ok = None
    if K is not None and budget_C is not None:
        ok = best <= budget_C * K ** budget_C * len(A)
    return ModelingResult(best, shift, m, cert, baseline, ok)


def iter_subsets(n: int, max_size: int | None = None):
    """All subsets of ``range(n)`` of size <= max_size, by size then lexicographically."""
    top = n if max_size is None else min(n, max_size)
    for k in range(top + 1):
        yield from itertools.combinations(range(n), k)
