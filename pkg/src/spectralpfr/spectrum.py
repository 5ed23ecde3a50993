"""Large spectra, dissociated sets, spans, and Chang-type audits."""
from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import kernels
from .fourier import FourierTable, _idx, dft, indicator
from .groups import DualSubgroup, Element, GroupSpec, dual_subgroup, quotient

DISSOCIATION_BUDGET = 20  # exhaustive 3^d enumeration limit


class BudgetError(RuntimeError):
    """An exhaustive enumeration would exceed its configured budget."""


class WindowWarning(UserWarning):
    """Density outside the window ``alpha <= 1/2`` that the Chang bound is stated for."""


@dataclass(frozen=True)
class SpectrumSet:
    group: GroupSpec
    tau: float
    alpha: float
    members: tuple[Element, ...]

    def __contains__(self, xi):
        return self.group.check(xi) in set(self.members)

    def __len__(self):
        return len(self.members)

    @property
    def indices(self) -> np.ndarray:
        return np.array([self.group.index(m) for m in self.members], dtype=np.int64)


@dataclass(frozen=True)
class DissociatedSet:
    group: GroupSpec
    members: tuple[Element, ...]

    def __len__(self):
        return len(self.members)

    def __iter__(self):
        return iter(self.members)


@dataclass(frozen=True)
class ChangReport:
    dissociated_size: int
    tau: float
    alpha: float
    C_RC: float
    bound_rhs: float              # C_RC tau^-2 log(1/alpha)
    coefficient_mass: float       # sum_{eta in D} |fhat(eta)|^2
    mass_rhs: float               # C_RC alpha^2 log(1/alpha)
    measured_constant: float      # coefficient_mass / (alpha^2 log(1/alpha))
    size_constant: float          # |D| tau^2 / log(1/alpha), smallest C_RC for the size bound
    size_chain_ok: bool           # |D| tau^2 alpha^2 <= coefficient_mass
    in_window: bool
    pass_size: bool
    pass_mass: bool

    @property
    def passed(self) -> bool:
        return self.pass_size


def _table(G, A, table):
    return dft(indicator(G, _idx(G, A))) if table is None else table


def large_spectrum(G: GroupSpec, A, tau: float, table: FourierTable | None = None) -> SpectrumSet:
    """``{xi : |fhat(xi)| >= tau alpha}``, ties included (with a 1e-12 relative slack)."""
    if not 0 < tau < 1:
        raise ValueError(f"threshold tau must lie in (0, 1), got {tau}")
    idx = _idx(G, A)
    if len(idx) == 0:
        raise ValueError("large spectrum of the empty set")
    alpha = len(idx) / G.order
    mags = _table(G, idx, table).magnitudes
    keep = np.flatnonzero(mags >= tau * alpha * (1 - 1e-12))
    return SpectrumSet(G, tau, alpha, tuple(G.element(int(i)) for i in keep))


def is_dissociated(G: GroupSpec, elems) -> bool:
    """No nontrivial ``{-1, 0, +1}``-combination of ``elems`` vanishes."""
    elems = [G.check(e) for e in elems]
    if len(elems) > DISSOCIATION_BUDGET:
        raise BudgetError(f"{len(elems)} elements exceed the 3^{DISSOCIATION_BUDGET} enumeration budget")
    if not elems:
        return True
    return not kernels.signed_sum_vanishes(np.array(elems, dtype=np.int64), np.array(G.factors))


def is_dissociated_bruteforce(G: GroupSpec, elems) -> bool:
    """Reference check: literally try every sign vector."""
    elems = [G.check(e) for e in elems]
    for signs in itertools.product((-1, 0, 1), repeat=len(elems)):
        if any(signs) and G.reduce(
                [sum(s * e[i] for s, e in zip(signs, elems)) for i in range(G.rank)]) == G.zero:
            return False
    return True


def _greedy_dissociated(G: GroupSpec, candidates_idx) -> list[int]:
    """Greedy maximal dissociated subset, in the given candidate order.

    Keeps the set ``P`` of all signed sums of the chosen elements; a candidate
    ``s`` can be added iff ``s`` is not in ``P`` (``P`` contains 0).
    """
    reach = np.zeros(G.order, dtype=bool)
    reach[0] = True
    chosen: list[int] = []
    for s in candidates_idx:
        s = int(s)
        if reach[s]:
            continue
        chosen.append(s)
        src = np.flatnonzero(reach)
        reach[G.add_idx(src, s)] = True
        reach[G.sub_idx(src, s)] = True
    if len(chosen) > DISSOCIATION_BUDGET:
        raise BudgetError(f"dissociated set of size {len(chosen)} exceeds the budget")
    return chosen


def _magnitude_order(idx, mags):
    idx = np.asarray(idx, dtype=np.int64)
    # magnitude descending, canonical index ascending on ties
    return idx[np.lexsort((idx, -np.round(mags[idx], 12)))]


def extract_maximal_dissociated(S: SpectrumSet, table: FourierTable | None = None, A=None) -> DissociatedSet:
    """Greedy pass over ``S`` by ``|fhat|`` descending; the zero character is never addable."""
    G = S.group
    if table is None:
        if A is None:
            raise ValueError("need the Fourier table or the set A to order the spectrum")
        table = _table(G, A, None)
    order = _magnitude_order(S.indices, table.magnitudes)
    chosen = _greedy_dissociated(G, order)
    return DissociatedSet(G, tuple(G.element(i) for i in chosen))


def maximum_dissociated_size(G: GroupSpec, members, limit: int = 12) -> int:
    """Exhaustive maximum dissociated subset size (reported, never asserted equal to greedy)."""
    members = [G.check(m) for m in members if G.check(m) != G.zero]
    if len(members) > limit:
        raise BudgetError(f"exhaustive maximum limited to {limit} elements")
    for r in range(len(members), 0, -1):
        if any(is_dissociated(G, c) for c in itertools.combinations(members, r)):
            return r
    return 0


def span(G: GroupSpec, D) -> DualSubgroup:
    """Subgroup of the dual generated by ``D``, carrying ``D`` as its dissociated basis."""
    members = tuple(D.members if isinstance(D, DissociatedSet) else (G.check(d) for d in D))
    return dual_subgroup(G, members or [G.zero], dissociated_basis=members)


def chang_audit(G: GroupSpec, A, tau: float, C_RC: float, table: FourierTable | None = None) -> ChangReport:
    """Both sides of the Rudin-Chang mass bound and the derived ``|D|`` bound."""
    idx = _idx(G, A)
    alpha = len(idx) / G.order
    if not 0 < alpha < 1:
        raise ValueError(f"density must be strictly inside (0, 1), got {alpha}")
    in_window = alpha <= 0.5
    if not in_window:
        warnings.warn(f"density {alpha:.3f} above 1/2", WindowWarning, stacklevel=2)
    table = _table(G, idx, table)
    S = large_spectrum(G, idx, tau, table) if tau < 1 else _spectrum_at_one(G, idx, table)
    D = extract_maximal_dissociated(S, table)
    mags = table.magnitudes
    mass = float(sum(mags[G.index(d)] ** 2 for d in D))
    log_term = math.log(1 / alpha)
    return ChangReport(
        dissociated_size=len(D), tau=tau, alpha=alpha, C_RC=C_RC,
        bound_rhs=C_RC * tau ** -2 * log_term,
        coefficient_mass=mass,
        mass_rhs=C_RC * alpha ** 2 * log_term,
        measured_constant=mass / (alpha ** 2 * log_term),
        size_constant=len(D) * tau ** 2 / log_term,
        size_chain_ok=len(D) * tau ** 2 * alpha ** 2 <= mass * (1 + 1e-9) + 1e-300,
        in_window=in_window,
        pass_size=len(D) <= C_RC * tau ** -2 * log_term,
        pass_mass=mass <= C_RC * alpha ** 2 * log_term,
    )


def _spectrum_at_one(G, idx, table) -> SpectrumSet:
    # tau = 1 boundary: only coefficients of full magnitude alpha
    alpha = len(idx) / G.order
    keep = np.flatnonzero(table.magnitudes >= alpha * (1 - 1e-12))
    return SpectrumSet(G, 1.0, alpha, tuple(G.element(int(i)) for i in keep))


@dataclass(frozen=True)
class ModVExtraction:
    V_prime: DualSubgroup
    lifts: tuple[Element, ...]          # chosen representatives, one per dissociated class
    class_labels: tuple[Element, ...]   # their images in dual / V
    intersection: tuple[Element, ...]   # V' cap V
    signed_sums_avoid_V: bool           # no nontrivial {-1,0,1}-combination of lifts lies in V

    @property
    def trivially_meets_V(self) -> bool:
        return self.intersection == (self.V_prime.parent.zero,)


def dissociated_extraction_mod_V(G: GroupSpec, S_tail, V: DualSubgroup,
                                 table: FourierTable) -> ModVExtraction:
    """Dissociated extraction among classes of ``S_tail`` modulo ``V``, lifted back.

    ``V' = Span(lifts)`` is the subgroup *generated* by the lifts, so it can
    meet ``V`` nontrivially even though no signed sum of lifts lies in ``V``
    (``Z/12``, ``V = {0, 6}``, lift ``3``).  Both facts are reported.
    """
    tail = [G.index(s) for s in S_tail]
    Vmask = V.mask
    if any(Vmask[t] for t in tail):
        raise ValueError("S_tail must avoid V")
    if not tail:
        Vp = span(G, ())
        return ModVExtraction(Vp, (), (), (G.zero,), True)
    q = quotient(G, V)  # the dual has the same shape as G
    mags = table.magnitudes
    classes: dict[int, int] = {}
    for t in _magnitude_order(tail, mags):
        classes.setdefault(int(q.table[t]), int(t))  # first seen = largest |fhat|
    reps = list(classes.values())  # already in magnitude order
    chosen_cls = _greedy_dissociated(q.image, [q.table[r] for r in reps])
    lifts = [classes[c] for c in chosen_cls]
    Vp = span(G, [G.element(i) for i in lifts])
    inter = tuple(sorted(set(Vp.elements) & set(V.elements)))
    reach = np.zeros(G.order, dtype=bool)
    reach[0] = True
    hits = False
    for s in lifts:
        src = np.flatnonzero(reach)
        new = np.concatenate([G.add_idx(src, s), G.sub_idx(src, s)])
        # a combination that uses s nontrivially lands in V?
        if Vmask[new].any():
            hits = True
        reach[new] = True
    return ModVExtraction(Vp, tuple(G.element(i) for i in lifts),
                          tuple(q.image.element(c) for c in chosen_cls), inter, not hits)
