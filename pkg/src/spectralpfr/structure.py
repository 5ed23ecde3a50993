"""Subgroup projectors, the L4 concentration ratio, near-cosets, and quotient lifts."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .fourier import DensityFunction, FourierTable, _idx, dft, indicator
from .groups import (DualSubgroup, Element, GroupSpec, Subgroup, annihilator, dual_annihilator,
                     push_forward, quotient)

TOL = 1e-10


@dataclass(frozen=True, eq=False)
class ProjectionSplit:
    low: DensityFunction
    high: DensityFunction
    V: DualSubgroup
    H: Subgroup
    support_error: float  # max of |low^| off V and |high^| on V


@dataclass(frozen=True)
class ConcentrationRatio:
    beta: float
    mass_in_V: float
    mass_total: float


@dataclass(frozen=True)
class NearCoset:
    H: Subgroup
    representative: Element
    covered: int
    covered_fraction: Fraction
    size_bound_ok: bool | None = None  # |H| <= K^C |A| when a budget is supplied


def coset_counts(G: GroupSpec, A, H: Subgroup) -> np.ndarray:
    """``|A cap (x + H)|`` for every ``x`` (constant on cosets)."""
    a = G.mask(_idx(G, A)).astype(np.int64)
    x = np.arange(G.order)
    return a[G.add_idx(x[:, None], H.indices[None, :])].sum(axis=1)


def project(G: GroupSpec, A, H: Subgroup) -> ProjectionSplit:
    """``low = 1_A * mu_H`` (so ``low(x) = |A cap (x+H)|/|H|``) and ``high = 1_A - low``."""
    f = indicator(G, _idx(G, A))
    low = DensityFunction(G, coset_counts(G, A, H) / H.order)
    high = DensityFunction(G, f.values - low.values)
    V = dual_annihilator(H)
    lo_hat, hi_hat = dft(low).coeffs, dft(high).coeffs
    err = max(float(np.max(np.abs(lo_hat[~V.mask]), initial=0.0)),
              float(np.max(np.abs(hi_hat[V.mask]), initial=0.0)))
    return ProjectionSplit(low, high, V, H, err)


def project_function(f: DensityFunction, H: Subgroup) -> DensityFunction:
    """``f * mu_H`` for an arbitrary function."""
    G = f.group
    x = np.arange(G.order)
    return DensityFunction(G, f.values[G.sub_idx(x[:, None], H.indices[None, :])].mean(axis=1))


def concentration_beta(G: GroupSpec, A, V: DualSubgroup, table: FourierTable | None = None) -> ConcentrationRatio:
    """``beta = sum_{xi in V} |fhat|^4 / sum_xi |fhat|^4``."""
    idx = _idx(G, A)
    if len(idx) == 0:
        raise ValueError("concentration ratio of the empty set")
    if table is None:
        table = dft(indicator(G, idx))
    m4 = table.magnitudes ** 4
    inside, total = float(m4[V.mask].sum()), float(m4.sum())
    return ConcentrationRatio(min(1.0, inside / total), inside, total)


def best_coset(G: GroupSpec, A, H: Subgroup) -> NearCoset:
    """The coset with the largest share of ``A``; smallest canonical representative on ties."""
    counts = coset_counts(G, A, H)
    i = int(np.argmax(counts))  # argmax returns the first, i.e. smallest, index
    # the smallest element of that coset is the canonical representative
    rep = int(np.min(G.add_idx(i, H.indices)))
    c = int(counts[i])
    return NearCoset(H, G.element(rep), c, Fraction(c, H.order))


def find_near_coset(G: GroupSpec, A, H: Subgroup, eps: float, K=None, C=None) -> NearCoset | None:
    """Best coset if it is at least ``1 - eps`` full, otherwise None."""
    if not 0 < eps < 1:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    best = best_coset(G, A, H)
    if best.covered_fraction < 1 - Fraction(eps).limit_denominator(10 ** 12):
        return None
    if K is not None and C is not None:
        ok = H.order <= float(K) ** C * len(_idx(G, A))
        best = NearCoset(best.H, best.representative, best.covered, best.covered_fraction, ok)
    return best


@dataclass(frozen=True)
class PZReport:
    theta: float
    mean: float
    second_moment: float
    variance: float
    pz_bound: float
    true_probability: float
    l2_ratio: float  # ||1_A * mu_H||_2^2 / (alpha^2 |G|), the measured c_1 proxy

    @property
    def holds(self) -> bool:
        return self.true_probability >= self.pz_bound - 1e-12


def paley_zygmund_certificate(G: GroupSpec, A, H: Subgroup, theta: float) -> PZReport:
    """Compare ``P{g >= theta alpha}`` with the Paley-Zygmund lower bound for ``g = 1_A * mu_H``."""
    if not 0 < theta < 1:
        raise ValueError(f"theta must lie in (0, 1), got {theta}")
    idx = _idx(G, A)
    g = coset_counts(G, idx, H) / H.order
    alpha = len(idx) / G.order
    m2 = float(np.mean(g ** 2))
    bound = (1 - theta) ** 2 * alpha ** 2 / m2 if m2 > 0 else 0.0
    true = float(np.mean(g >= theta * alpha - 1e-15))
    return PZReport(theta, float(np.mean(g)), m2, m2 - alpha ** 2, bound, true,
                    float(np.sum(g ** 2)) / (alpha ** 2 * G.order) if alpha else 0.0)


@dataclass(frozen=True)
class LiftRow:
    xi: Element
    psi: Element
    on_G: complex
    averaged: complex
    image_indicator: complex


@dataclass(frozen=True)
class LiftReport:
    H: Subgroup
    rows: tuple[LiftRow, ...]
    saturated: bool              # A is a union of H-cosets
    averaged_error: float        # max |(a) - (b)|
    indicator_error: float       # max |(a) - (c)|

    @property
    def averaged_ok(self) -> bool:
        return self.averaged_error <= TOL

    @property
    def indicator_ok(self) -> bool:
        return self.indicator_error <= TOL

    @property
    def classification(self) -> str:
        if self.indicator_ok:
            return "all-equal"
        return "indicator-discrepancy" if self.averaged_ok else "averaged-mismatch"


def quotient_lift_check(G: GroupSpec, A, Hp: Subgroup) -> LiftReport:
    """Compare ``fhat(xi)`` with the quotient transforms of the averaged push-forward and of ``1_{pi(A)}``."""
    idx = _idx(G, A)
    q = quotient(G, Hp)
    f = indicator(G, idx)
    F_avg = push_forward(f.values, q, averaged=True)
    image_ind = np.zeros(q.image.order)
    image_ind[q.project_idx(idx)] = 1.0
    Q = q.image
    tab_G = dft(f).coeffs
    tab_avg = dft(DensityFunction(Q, F_avg)).coeffs
    tab_ind = dft(DensityFunction(Q, image_ind)).coeffs
    Vp = dual_annihilator(Hp)
    rows = []
    for xi in Vp.elements:
        psi = q.dual_label(xi)
        j = Q.index(psi)
        rows.append(LiftRow(xi, psi, complex(tab_G[G.index(xi)]), complex(tab_avg[j]), complex(tab_ind[j])))
    a = np.array([r.on_G for r in rows])
    return LiftReport(
        Hp, tuple(rows),
        saturated=bool(np.all((F_avg == 0) | (F_avg == 1))),
        averaged_error=float(np.max(np.abs(a - np.array([r.averaged for r in rows])))),
        indicator_error=float(np.max(np.abs(a - np.array([r.image_indicator for r in rows])))),
    )


def cyclic_lift_errors(bits: np.ndarray, N: int, m: int) -> tuple[np.ndarray, np.ndarray]:
    """Batched lift check on ``Z/N`` against the subgroup of order ``m`` (``m | N``).

    ``bits`` is a ``(batch, N)`` 0/1 array.  Returns the per-row max errors of the
    averaged and the image-indicator readings.  The quotient ``Z/N -> Z/(N/m)``
    is reduction mod ``N/m`` and the character ``xi = m psi`` descends to ``psi``.
    """
    n = N // m
    fhat = np.fft.fft(bits, axis=1) / N
    fibres = bits.reshape(len(bits), m, n)
    avg = fibres.mean(axis=1)
    ind = fibres.max(axis=1)
    on_G = fhat[:, ::m]  # xi = 0, m, 2m, ...
    err_avg = np.abs(on_G - np.fft.fft(avg, axis=1) / n).max(axis=1)
    err_ind = np.abs(on_G - np.fft.fft(ind, axis=1) / n).max(axis=1)
    return err_avg, err_ind


def annihilator_pair(V: DualSubgroup) -> tuple[Subgroup, DualSubgroup]:
    H = annihilator(V)
    return H, dual_annihilator(H)
