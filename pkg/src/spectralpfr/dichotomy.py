"""One step of the concentration / improvement dichotomy, with its audits.

Doubling constants and energies are exact (``Fraction`` / ``int``); only
Fourier magnitudes are floating point.
"""
from __future__ import annotations

import itertools
import json
import math
import warnings
from dataclasses import asdict, dataclass, field, fields, replace
from fractions import Fraction
from pathlib import Path
from typing import Any

import numpy as np

from . import kernels
from .fourier import (FourierTable, _idx, dft, doubling_constant, fourth_moment,
                      indicator, representation_counts, sumset)
from .groups import DualSubgroup, Element, GroupSpec, QuotientMap, Subgroup, annihilator, quotient
from .spectrum import (ChangReport, WindowWarning, _spectrum_at_one, chang_audit,
                       dissociated_extraction_mod_V, extract_maximal_dissociated, large_spectrum, span)
from .structure import NearCoset, best_coset, concentration_beta, find_near_coset

MAG_SLACK = 1e-8
BSG_ORACLE_LIMIT = 10


# -- configuration --------------------------------------------------------------

@dataclass(frozen=True)
class LedgerConfig:
    c0: float = 1 / 16          # tau = K^-c0
    c: float = 1 / 32           # regime exponent
    C: float = 1.0              # exponent budget for decrements and size losses
    eps: float = 0.25           # near-coset slack
    gamma: float | None = None  # potential exponent, None means 4C + 8
    C_RC: float = 8.0           # Chang constant
    packet_eps: float = 0.2
    packet_eta: float | None = None  # None means min(K^-10, 1/2)
    seed: int = 0
    C_pkt: float = 2.0
    retries: int = 16
    reg_c: float = 0.01         # regularity window constant
    grid: int = 64              # regularity grid resolution
    theta: float = 0.5          # Paley-Zygmund threshold

    def __post_init__(self):
        if self.gamma is None:
            object.__setattr__(self, "gamma", 4 * self.C + 8)
        for name in ("c0", "c", "C", "gamma", "C_RC", "C_pkt", "reg_c"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if self.gamma < 2 * self.C + 4:
            raise ValueError(f"gamma = {self.gamma} below the admissible floor 2C + 4 = {2 * self.C + 4}")
        for name in ("eps", "theta"):
            if not 0 < getattr(self, name) < 1:
                raise ValueError(f"{name} must lie in (0, 1)")
        if not self.packet_eps > 0:
            raise ValueError("packet_eps must be positive")
        if self.packet_eta is not None and not 0 < self.packet_eta < 1:
            raise ValueError("packet_eta must lie in (0, 1)")
        if self.retries < 1 or self.grid < 2:
            raise ValueError("retries >= 1 and grid >= 2 required")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    def eta_for(self, K) -> float:
        if self.packet_eta is not None:
            return self.packet_eta
        return min(float(K) ** -10, 0.5)

    def tau_for(self, K) -> float:
        return float(K) ** -self.c0

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "LedgerConfig":
        data = dict(data)
        base = PRESETS[data.pop("preset")] if "preset" in data else cls()
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        if "C" in data and "gamma" not in data:
            data["gamma"] = None  # re-derive from the new C
        return replace(base, **data)

    @classmethod
    def load(cls, path) -> "LedgerConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))

    @classmethod
    def preset(cls, name: str) -> "LedgerConfig":
        try:
            return PRESETS[name]
        except KeyError:
            raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None


PRESETS = {
    "ledger-C": LedgerConfig(c0=1 / 16),
    "ledger-S2": LedgerConfig(c0=1 / 4 + 1 / 64),
}


# -- regimes --------------------------------------------------------------------

CONCENTRATED, GRAY, DISPERSED = "Concentrated", "Gray", "Dispersed"


@dataclass(frozen=True)
class RegimeClass:
    kind: str
    beta: float
    thresholds: tuple[float, float]  # (1 - K^-c, 1 - 2K^-c)
    forced: bool = False             # K < 2 routed to Concentrated


def regime_of(beta: float, K, c: float) -> RegimeClass:
    hi, lo = 1 - float(K) ** -c, 1 - 2 * float(K) ** -c
    if K < 2:
        return RegimeClass(CONCENTRATED, beta, (hi, lo), forced=True)
    if beta >= hi:
        kind = CONCENTRATED
    elif beta >= lo:
        kind = GRAY
    else:
        kind = DISPERSED
    return RegimeClass(kind, beta, (hi, lo))


def classify_regime(G: GroupSpec, A, V: DualSubgroup, cfg: LedgerConfig,
                    table: FourierTable | None = None) -> RegimeClass:
    idx = _idx(G, A)
    K = doubling_constant(G, idx)
    return regime_of(concentration_beta(G, idx, V, table).beta, K, cfg.c)


def tail_level_set(G: GroupSpec, A, V: DualSubgroup, lam: float,
                   table: FourierTable | None = None) -> tuple[Element, ...]:
    """``{xi not in V : |fhat(xi)| >= lam}``, ties included."""
    if not lam > 0:
        raise ValueError(f"level must be positive, got {lam}")
    idx = _idx(G, A)
    if table is None:
        table = dft(indicator(G, idx))
    hit = (table.magnitudes >= lam * (1 - 1e-12)) & ~V.mask
    return G.to_elements(np.flatnonzero(hit))


# -- energy to doubling ---------------------------------------------------------

@dataclass(frozen=True)
class E2DCheck:
    xi: Element
    eta: float
    fourth_moment: float   # sum_zeta |fhat|^4
    rhs: float             # alpha^4 (1 + eta^4)

    @property
    def holds(self) -> bool:
        return self.fourth_moment >= self.rhs * (1 - 1e-12)


def energy_to_doubling_check(G: GroupSpec, A, xi, table: FourierTable | None = None) -> E2DCheck:
    xi = G.check(xi)
    if xi == G.zero:
        raise ValueError("the zero character carries no energy boost")
    idx = _idx(G, A)
    if table is None:
        table = dft(indicator(G, idx))
    alpha = len(idx) / G.order
    eta = float(abs(table[xi])) / alpha
    return E2DCheck(xi, eta, fourth_moment(table), alpha ** 4 * (1 + eta ** 4))


def e2d_batch(fhat: np.ndarray, alpha: np.ndarray) -> np.ndarray:
    """Vectorised E2D margin at the largest nonzero coefficient, one row per set.

    Returns ``sum|fhat|^4 / (alpha^4 (1 + eta^4))`` which must be ``>= 1``.
    """
    mags = np.abs(fhat)
    eta = mags[:, 1:].max(axis=1) / alpha if mags.shape[1] > 1 else np.zeros(len(alpha))
    return (mags ** 4).sum(axis=1) / (alpha ** 4 * (1 + eta ** 4))


# -- outcomes -------------------------------------------------------------------

@dataclass(frozen=True)
class DecrementReport:
    eta: float                # |F'^(psi)| / alpha' in the quotient, at the witness
    eta_parent: float         # |fhat(xi)| / alpha on G
    energy_boost: float       # E(A') |G'| / |A'|^4 - 1
    delta: Fraction
    floor_ok: bool            # delta >= K^-C

    @property
    def e2d_ok(self) -> bool:
        return self.energy_boost >= self.eta ** 4 - 1e-9


@dataclass
class PSLOutcome:
    variant: str                          # NearCoset | Improvement | Undetermined
    K: Fraction
    alpha: Fraction
    near_coset: NearCoset | None = None
    H_prime: Subgroup | None = None
    quotient_map: QuotientMap | None = None
    A_prime: tuple[Element, ...] | None = None
    K_prime: Fraction | None = None
    delta: Fraction | None = None
    witness: Element | None = None
    decrement: DecrementReport | None = None
    reason: str = ""
    artifacts: dict[str, Any] = field(default_factory=dict)

    @property
    def image(self) -> GroupSpec | None:
        return None if self.quotient_map is None else self.quotient_map.image


def _lambda(regime: RegimeClass, tau: float, alpha: float) -> float:
    return (0.25 if regime.kind == GRAY else 0.5) * tau * alpha


def improvement_step(G: GroupSpec, A, V: DualSubgroup, cfg: LedgerConfig, regime: RegimeClass | None = None,
                     table: FourierTable | None = None, tau: float | None = None) -> PSLOutcome:
    """Tail set, extraction modulo ``V``, quotient, and the measured decrement."""
    idx = _idx(G, A)
    if table is None:
        table = dft(indicator(G, idx))
    K = doubling_constant(G, idx)
    alpha = Fraction(len(idx), G.order)
    if regime is None:
        regime = classify_regime(G, idx, V, cfg, table)
    if regime.kind == CONCENTRATED:
        raise ValueError("improvement step called in the concentrated regime")
    if tau is None:
        tau = cfg.tau_for(K)
    lam = _lambda(regime, tau, float(alpha))
    tail = tail_level_set(G, idx, V, lam, table)
    art = {"lambda": lam, "tail_size": len(tail)}
    if not tail:
        return PSLOutcome("Undetermined", K, alpha, reason="no tail mass at lambda", artifacts=art)
    ext = dissociated_extraction_mod_V(G, tail, V, table)
    art.update(V_prime_order=ext.V_prime.order, V_prime_dim=len(ext.lifts),
               V_prime_meets_V=[list(x) for x in ext.intersection],
               signed_sums_avoid_V=ext.signed_sums_avoid_V)
    Hp = annihilator(ext.V_prime)
    q = quotient(G, Hp)
    Q = q.image
    img = q.project_idx(idx)
    Kp = doubling_constant(Q, img)
    delta = K - Kp
    # witness: the lift with the largest |fhat|
    mags = table.magnitudes
    xi = max(ext.lifts, key=lambda e: (round(float(mags[G.index(e)]), 12), [-v for v in e]))
    psi = q.dual_label(xi)
    alpha_p = len(img) / Q.order
    qtab = dft(indicator(Q, img))
    Ep = int(np.dot(r := representation_counts(Q, img), r))
    boost = Ep * Q.order / len(img) ** 4 - 1
    floor = float(K) ** -cfg.C
    dec = DecrementReport(
        eta=float(abs(qtab[psi])) / alpha_p,
        eta_parent=float(mags[G.index(xi)]) / float(alpha),
        energy_boost=boost, delta=delta, floor_ok=float(delta) >= floor)
    size_ok = len(img) >= floor * len(idx)
    art.update(size_floor_ok=size_ok, quotient_order=Q.order)
    out = PSLOutcome("Undetermined", K, alpha, H_prime=Hp, quotient_map=q, A_prime=Q.to_elements(img),
                     K_prime=Kp, delta=delta, witness=xi, decrement=dec, artifacts=art)
    if delta > 0 and size_ok:
        out.variant = "Improvement"
    else:
        out.reason = "non-positive decrement" if delta <= 0 else "image below the size floor"
    return out


def psl_step(G: GroupSpec, A, cfg: LedgerConfig, table: FourierTable | None = None,
             audit_chang: bool = True, tau: float | None = None) -> PSLOutcome:
    """``tau`` overrides the ``K^-c0`` spectral threshold (the toy example fixes it)."""
    idx = _idx(G, A)
    if len(idx) == 0:
        raise ValueError("PSL step on the empty set")
    if table is None:
        table = dft(indicator(G, idx))
    K = doubling_constant(G, idx)
    alpha = Fraction(len(idx), G.order)
    if tau is None:
        tau = cfg.tau_for(K)
    S = large_spectrum(G, idx, tau, table) if tau < 1 else _spectrum_at_one(G, idx, table)
    D = extract_maximal_dissociated(S, table)
    V = span(G, D)
    chang = None
    if audit_chang and 0 < alpha < 1:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", WindowWarning)
            chang = chang_audit(G, idx, tau, cfg.C_RC, table)
    regime = regime_of(concentration_beta(G, idx, V, table).beta, K, cfg.c)
    art = {"tau": tau, "spectrum_size": len(S), "D": [list(d) for d in D], "dim_V": len(D),
           "V_order": V.order, "regime": regime.kind, "beta": regime.beta,
           "thresholds": list(regime.thresholds), "chang": chang}
    if regime.kind == CONCENTRATED:
        H = annihilator(V)
        nc = find_near_coset(G, idx, H, cfg.eps, K, cfg.C)
        if nc is None:
            return PSLOutcome("Undetermined", K, alpha, near_coset=best_coset(G, idx, H),
                              reason="no coset reaches 1 - eps", artifacts=art)
        return PSLOutcome("NearCoset", K, alpha, near_coset=nc, artifacts=art)
    out = improvement_step(G, idx, V, cfg, regime, table, tau)
    out.artifacts = {**art, **out.artifacts}
    return out


# -- L4 compression --------------------------------------------------------------

@dataclass(frozen=True)
class L4Report:
    K: Fraction
    tau: float
    spectrum_size: int
    mass_in_S: float
    mass_total: float
    compress_rhs: float       # (1 - K^-c) * total
    tail_g: float             # sum_{xi not in S} |ghat|^2 = sum |fhat|^4 off S
    tail_rhs: float           # K^-c alpha^2
    compress_ok: bool
    tail_ok: bool
    tight_c_compress: float   # largest c for which the compression holds
    tight_c_tail: float


def _tight_exponent(ratio: float, K) -> float:
    # largest c with K^-c >= ratio
    if ratio <= 0:
        return math.inf
    if float(K) <= 1:
        return math.inf if ratio <= 1 else -math.inf
    return -math.log(ratio) / math.log(float(K))


def l4_compression_audit(G: GroupSpec, A, cfg: LedgerConfig, table: FourierTable | None = None) -> L4Report:
    idx = _idx(G, A)
    if table is None:
        table = dft(indicator(G, idx))
    K = doubling_constant(G, idx)
    alpha = len(idx) / G.order
    tau = cfg.tau_for(K)
    S = large_spectrum(G, idx, tau, table) if tau < 1 else _spectrum_at_one(G, idx, table)
    m4 = table.magnitudes ** 4
    inS = np.zeros(G.order, dtype=bool)
    inS[S.indices] = True
    mass_S, total = float(m4[inS].sum()), float(m4.sum())
    tail = float(m4[~inS].sum())
    Kc = float(K) ** -cfg.c
    return L4Report(
        K, tau, len(S), mass_S, total, (1 - Kc) * total, tail, Kc * alpha ** 2,
        compress_ok=mass_S >= (1 - Kc) * total * (1 - 1e-12),
        tail_ok=tail <= Kc * alpha ** 2 * (1 + 1e-12) + 1e-300,
        tight_c_compress=_tight_exponent(1 - mass_S / total, K),
        tight_c_tail=_tight_exponent(tail / alpha ** 2, K),
    )


# -- BSG, covering ---------------------------------------------------------------

@dataclass(frozen=True)
class BSGReport:
    A0: tuple[Element, ...]
    fraction: Fraction          # |A0| / |A|
    doubling: Fraction          # doubling(A0)
    energy_boost: float         # E |G| / |A|^4 - 1
    popular_threshold: Fraction
    popular_count: int
    fallback: bool              # A0 came out empty and A was returned
    oracle_best_ratio: Fraction | None = None    # min over s >= |A0| of min |B+B| / s
    oracle_max_size: int | None = None           # largest B with doubling(B) <= doubling(A0)

    @property
    def oracle_ok(self) -> bool | None:
        if self.oracle_best_ratio is None:
            return None
        return self.doubling <= 2 * self.oracle_best_ratio


def normalized_energy_boost(E: int, size: int, order: int) -> float:
    return E * order / size ** 4 - 1


def subset_min_sumsets(G: GroupSpec, idx) -> list[int]:
    """``best[s] = min |B + B|`` over ``B`` of size ``s`` inside ``idx`` (exhaustive)."""
    idx = np.asarray(idx, dtype=np.int64)
    if G.is_cyclic and G.order <= kernels.MAX_BITMASK_ORDER:
        mask = 0
        for i in idx:
            mask |= 1 << int(i)
        return [int(v) for v in kernels.subset_min_sumsets(mask, G.order)]
    best = [0] + [-1] * len(idx)
    for r in range(1, len(idx) + 1):
        best[r] = min(len(sumset(G, np.array(c))) for c in itertools.combinations(idx, r))
    return best


def bsg_extract(G: GroupSpec, A, beta_boost: float, oracle: bool = True) -> BSGReport:
    idx = _idx(G, A)
    n = len(idx)
    if n == 0:
        raise ValueError("BSG extraction on the empty set")
    r = representation_counts(G, idx)
    E = int(np.dot(r, r))
    boost = normalized_energy_boost(E, n, G.order)
    if boost < beta_boost - 1e-12:
        raise ValueError(f"energy boost {boost:.6g} below the required {beta_boost}")
    threshold = Fraction(E, 2 * n * n)  # half the r-weighted mean of r
    popular = np.array([v >= threshold for v in r], dtype=bool)
    pair = popular[G.add_idx(idx[:, None], idx[None, :])]
    counts = pair.sum(axis=1)
    keep = counts >= 0.5 * float(np.median(counts))
    fallback = not keep.any()
    A0 = idx if fallback else idx[keep]
    K0 = doubling_constant(G, A0)
    best_ratio = max_size = None
    if oracle and n <= BSG_ORACLE_LIMIT:
        best = subset_min_sumsets(G, idx)
        best_ratio = min(Fraction(best[s], s) for s in range(len(A0), n + 1))
        max_size = max(s for s in range(1, n + 1) if Fraction(best[s], s) <= K0)
    return BSGReport(G.to_elements(A0), Fraction(len(A0), n), K0, boost, threshold,
                     int(popular.sum()), fallback, best_ratio, max_size)


@dataclass(frozen=True)
class CoverReport:
    m: int
    representatives: tuple[Element, ...]
    H_order: int
    count_ok: bool | None     # m <= K^C
    size_ok: bool | None      # |H| <= K^C |A|


def coset_cover(G: GroupSpec, A, H: Subgroup, K=None, C: float | None = None) -> CoverReport:
    idx = _idx(G, A)
    reps = np.unique(G.add_idx(idx[:, None], H.indices[None, :]).min(axis=1))
    m = len(reps)
    count_ok = size_ok = None
    if C is not None:
        if K is None:
            K = doubling_constant(G, idx)
        budget = float(K) ** C
        count_ok, size_ok = m <= budget, H.order <= budget * len(idx)
    return CoverReport(m, G.to_elements(reps), H.order, count_ok, size_ok)


@dataclass(frozen=True)
class CoveringAudit:
    theta: Fraction
    K0: Fraction
    K: Fraction
    rhs: float        # C K0^C theta^-C
    passed: bool


def covering_upgrade_audit(G: GroupSpec, A, A0, C: float) -> CoveringAudit:
    idx, idx0 = _idx(G, A), _idx(G, A0)
    if len(idx0) == 0:
        raise ValueError("A0 must be nonempty")
    if not np.isin(idx0, idx).all():
        raise ValueError("A0 must be a subset of A")
    theta = Fraction(len(idx0), len(idx))
    K0, K = doubling_constant(G, idx0), doubling_constant(G, idx)
    rhs = C * float(K0) ** C * float(theta) ** -C
    return CoveringAudit(theta, K0, K, rhs, float(K) <= rhs * (1 + 1e-12))

