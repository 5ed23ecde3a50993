"""The PSL iteration with its monotone potential ``I = K alpha^-gamma``."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from ..dichotomy import LedgerConfig, PSLOutcome, psl_step
from ..fourier import _idx, doubling_constant
from ..groups import GroupSpec
from ..structure import NearCoset

BUDGET_CAP = 10 ** 4


def potential(K, alpha, gamma: float) -> float:
    if alpha <= 0:
        raise ValueError(f"density must be positive, got {alpha}")
    return float(K) * float(alpha) ** -gamma


def _log_potential(K, alpha, gamma: float) -> float:
    return math.log(float(K)) - gamma * math.log(float(alpha))


def potential_nonincreasing(K1, a1, K0, a0, gamma: float) -> bool:
    """``I(K1, a1) <= I(K0, a0)``; exact when gamma is an integer."""
    if float(gamma).is_integer():
        g = int(gamma)
        return Fraction(K1) * Fraction(a0) ** g <= Fraction(K0) * Fraction(a1) ** g
    return _log_potential(K1, a1, gamma) <= _log_potential(K0, a0, gamma) + 1e-12


def default_budget(K0, C: float) -> int:
    return min(math.ceil(float(K0) ** (C + 1)), BUDGET_CAP)


@dataclass(frozen=True)
class StepRecord:
    j: int
    group: str
    order: int
    K: Fraction
    alpha: Fraction
    I: float
    codim: float        # accumulated dim V' over the improvement steps so far
    log_index: float    # accumulated log |G_0 / G_j|
    outcome: str
    delta: Fraction | None
    reason: str = ""


@dataclass
class IterationTrace:
    steps: list[StepRecord]
    terminal: str                   # NearCoset | Undetermined | budget-exhausted
    budget: int
    total_codim: float
    codim_budget: float             # K0^((C+1) 4 C_RC)
    near_coset: NearCoset | None = None
    findings: list[dict] = field(default_factory=list)

    @property
    def improvements(self) -> int:
        return sum(s.outcome == "Improvement" for s in self.steps)


def iterate_psl(G: GroupSpec, A, cfg: LedgerConfig, budget: int | None = None,
                tau: float | None = None) -> IterationTrace:
    """Apply the PSL step, recursing into ``(G/H', pi(A))`` after each improvement.

    Every audit failure becomes a finding on the trace; nothing aborts.
    """
    idx = _idx(G, A)
    if len(idx) == 0:
        raise ValueError("iteration on the empty set")
    group, cur = G, idx
    steps: list[StepRecord] = []
    findings: list[dict] = []
    codim = log_index = 0.0
    out: PSLOutcome | None = None
    K0 = None
    for j in range(budget if budget is not None else BUDGET_CAP):
        out = psl_step(group, cur, cfg, tau=tau if j == 0 else None, audit_chang=False)
        if K0 is None:
            K0 = out.K
            if budget is None:
                budget = default_budget(K0, cfg.C)
        I = potential(out.K, out.alpha, cfg.gamma)
        if I < 1:
            findings.append(_finding("potential-lower", "bound-miss", group, cur, {"I": I}))
        steps.append(StepRecord(j, str(group), group.order, out.K, out.alpha, I, codim, log_index,
                                out.variant, out.delta, out.reason))
        if out.variant != "Improvement":
            break
        # audits on the improvement just taken
        q = out.quotient_map
        Kp = out.K_prime
        ap = Fraction(len(out.A_prime), q.image.order)
        if not Kp < out.K:
            findings.append(_finding("improvement-strict", "bound-miss", group, cur,
                                     {"K": out.K, "K_prime": Kp}))
        if not potential_nonincreasing(Kp, ap, out.K, out.alpha, cfg.gamma):
            findings.append(_finding("potential-monotone", "bound-miss", group, cur,
                                     {"I": I, "I_next": potential(Kp, ap, cfg.gamma), "gamma": cfg.gamma}))
        if not out.decrement.floor_ok:
            findings.append(_finding("decrement-floor", "decrement-miss", group, cur,
                                     {"delta": out.delta, "floor": float(out.K) ** -cfg.C}))
        if not out.decrement.e2d_ok:
            findings.append(_finding("energy-to-doubling", "bound-miss", group, cur,
                                     {"energy_boost": out.decrement.energy_boost,
                                      "eta4": out.decrement.eta ** 4}))
        codim += out.artifacts["V_prime_dim"]
        log_index = math.log(G.order / q.image.order)
        group, cur = q.image, q.project_idx(cur)
        if j + 1 >= budget:
            break
    terminal = out.variant
    if out.variant == "Improvement":
        # the loop ran out while still improving: record the state reached
        terminal = "budget-exhausted"
        a = Fraction(len(cur), group.order)
        K = doubling_constant(group, cur)
        steps.append(StepRecord(len(steps), str(group), group.order, K, a, potential(K, a, cfg.gamma),
                                codim, log_index, "budget-exhausted", None))
        findings.append(_finding("iteration-budget", "bound-miss", G, idx, {"budget": budget}))
    C1 = 4 * cfg.C_RC
    codim_budget = float(K0) ** ((cfg.C + 1) * C1)
    if codim > codim_budget:
        findings.append(_finding("codimension-budget", "bound-miss", G, idx,
                                 {"total_codim": codim, "budget": codim_budget}))
    return IterationTrace(steps, terminal, budget, codim, codim_budget,
                          out.near_coset if out.variant == "NearCoset" else None, findings)


def _finding(lemma: str, severity: str, G: GroupSpec, idx, measured: dict, note: str = "") -> dict:
    return {"lemma": lemma, "severity": severity, "group": str(G),
            "set": [list(G.element(int(i))) if G.rank > 1 else int(i) for i in sorted(idx)],
            "measured": measured, "note": note}
