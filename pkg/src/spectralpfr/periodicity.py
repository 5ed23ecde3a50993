"""Balanced autocorrelation, random packets, shift extraction, and Bohr sets.

Normalisation: ``g = (1_A * 1_A~) / |G|`` so that ``ghat = |fhat|^2`` exactly,
and ``h = g / alpha - alpha`` has vanishing mean.  Norms ``||.||_2`` are sums
over ``G``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .fourier import DensityFunction, _idx, dft, doubling_constant, indicator, iterated_sumset, difference_set
from .groups import Element, GroupSpec, ShapeError
from .spectrum import extract_maximal_dissociated, large_spectrum, _spectrum_at_one

IDENTITY_TOL = 1e-8
THETA_STEPS = 16  # theta samples per side of the regularity window


class IdentityError(AssertionError):
    """An algebraic identity failed beyond floating-point tolerance."""


# -- autocorrelation --------------------------------------------------------------

def autocorrelation(G: GroupSpec, A) -> np.ndarray:
    """``g(x) = |A cap (A + x)| / |G|``, computed by direct counting."""
    idx = _idx(G, A)
    diffs = G.sub_idx(idx[:, None], idx[None, :]).ravel()
    return np.bincount(diffs, minlength=G.order) / G.order


@dataclass(frozen=True, eq=False)
class BalancedAutocorrelation:
    group: GroupSpec
    values: np.ndarray = field(repr=False)
    alpha: float
    g: np.ndarray = field(repr=False)
    spectral_residual: float   # max |h - h_spectral|
    mean: float


def balanced_autocorrelation(G: GroupSpec, A) -> BalancedAutocorrelation:
    idx = _idx(G, A)
    if len(idx) == 0:
        raise ValueError("balanced autocorrelation of the empty set")
    alpha = len(idx) / G.order
    g = autocorrelation(G, idx)
    h = g / alpha - alpha
    fhat = dft(indicator(G, idx)).coeffs
    hhat = np.abs(fhat) ** 2 / alpha
    hhat[0] -= alpha
    h_spec = np.fft.ifftn(hhat.reshape(G.factors)).ravel().real * G.order if G.rank else hhat.real
    mean = float(h.mean())
    if abs(mean) > 1e-10:
        raise IdentityError(f"balanced autocorrelation has mean {mean}")
    return BalancedAutocorrelation(G, h, alpha, g, float(np.max(np.abs(h - h_spec))), mean)


# -- packets ------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Packet:
    group: GroupSpec
    members: np.ndarray = field(repr=False)  # element indices, a multiset
    spectrum: tuple[Element, ...]
    eps: float
    eta: float
    seed: int
    achieved_bias: float
    attempts: int
    success: bool

    def __len__(self):
        return len(self.members)

    @property
    def elements(self) -> list[Element]:
        return [self.group.element(int(i)) for i in self.members]


def packet_size(n_freq: int, eps: float, eta: float, C_pkt: float = 2.0) -> int:
    return math.ceil(C_pkt * eps ** -2 * math.log(2 * max(n_freq, 1) / eta))


def packet_bias(G: GroupSpec, S, members) -> float:
    members = np.asarray(members, dtype=np.int64)
    if not len(S) or not len(members):
        return 0.0
    return max(float(abs(G.character(xi)[members].mean())) for xi in S)


def packet_from_members(G: GroupSpec, members, S=(), eps: float = 1.0, eta: float = 0.5,
                        seed: int = 0) -> Packet:
    """A packet with prescribed members (deterministic tests, degenerate cases)."""
    S = tuple(G.check(s) for s in S)
    members = np.asarray([G.index(m) if not isinstance(m, (int, np.integer)) else int(m) for m in members],
                         dtype=np.int64)
    bias = packet_bias(G, S, members)
    return Packet(G, members, S, eps, eta, seed, bias, 0, bias <= eps)


def sample_packet(G: GroupSpec, S, eps: float, eta: float, seed: int,
                  C_pkt: float = 2.0, retries: int = 16) -> Packet:
    """Uniform packet with small bias on ``S``; attempt ``k`` draws from stream ``(seed, k)``."""
    S = tuple(G.check(s) for s in S)
    if G.zero in S:
        raise ValueError("the zero character has bias 1 on every packet; remove it from S")
    if not eps > 0 or not 0 < eta < 1:
        raise ValueError("need eps > 0 and eta in (0, 1)")
    M = packet_size(len(S), eps, eta, C_pkt)
    chars = np.array([G.character(xi) for xi in S]) if S else np.zeros((0, G.order))
    best = None
    for attempt in range(retries):
        rng = np.random.default_rng([seed, attempt])
        members = rng.integers(0, G.order, size=M)
        bias = float(np.abs(chars[:, members].mean(axis=1)).max()) if S else 0.0
        if best is None or bias < best[1]:
            best = (members, bias, attempt + 1)
        if bias <= eps:
            break
    members, bias, used = best
    return Packet(G, members, S, eps, eta, seed, bias, used, bias <= eps)


def _shift_stack(G: GroupSpec, g: np.ndarray, members: np.ndarray) -> np.ndarray:
    """Rows ``tau_x g(y) = g(y - x)`` for each packet member ``x``."""
    y = np.arange(G.order)
    return g[G.sub_idx(y[None, :], members[:, None])]


@dataclass(frozen=True)
class PacketL2Report:
    E: float                 # || g - mean_x tau_x g ||^2
    E_spectral: float        # |G| sum |ghat|^2 |1 - b|^2
    printed_bound: float     # 2 eps^2 sum_S |ghat|^2 + 4 sum_{not S} |ghat|^2
    corrected_bound: float   # |G| ((1+eps)^2 sum_S |ghat|^2 + 4 sum_{not S, xi != 0} |ghat|^2)
    mass_S: float
    mass_off_S: float

    @property
    def printed_ok(self) -> bool:
        return self.E <= self.printed_bound * (1 + 1e-12) + 1e-15

    @property
    def corrected_ok(self) -> bool:
        return self.E <= self.corrected_bound * (1 + 1e-12) + 1e-15


def packet_l2_error(G: GroupSpec, A, T: Packet) -> PacketL2Report:
    idx = _idx(G, A)
    g = autocorrelation(G, idx)
    m = _shift_stack(G, g, T.members).mean(axis=0)
    E = float(np.sum((g - m) ** 2))
    ghat = np.abs(dft(indicator(G, idx)).coeffs) ** 2
    # b(xi) = mean_x e(-<xi, x>), so that (mean_x tau_x g)^ = b ghat
    weights = np.bincount(T.members, minlength=G.order) / max(len(T), 1)
    b = G.order * dft(DensityFunction(G, weights)).coeffs
    E_spec = G.order * float(np.sum(ghat ** 2 * np.abs(1 - b) ** 2))
    if abs(E - E_spec) > IDENTITY_TOL * max(1.0, float(np.sum(g ** 2))):
        raise IdentityError(f"Plancherel mismatch for the packet error: {E} vs {E_spec}")
    inS = np.zeros(G.order, dtype=bool)
    inS[[G.index(s) for s in T.spectrum]] = True
    mass_S = float(np.sum(ghat[inS] ** 2))
    off = ~inS
    off[0] = False
    mass_off = float(np.sum(ghat[~inS] ** 2))
    printed = 2 * T.eps ** 2 * mass_S + 4 * mass_off
    corrected = G.order * ((1 + T.eps) ** 2 * mass_S + 4 * float(np.sum(ghat[off] ** 2)))
    return PacketL2Report(E, E_spec, printed, corrected, mass_S, mass_off)


@dataclass(frozen=True, eq=False)
class ShiftReport:
    E: float
    mean_shift_distance: float     # |T|^-1 sum_x || g - tau_x g ||^2
    spread: float                  # ||g||^2 - ||m||^2, the term missing from the printed identity
    printed_residual: float        # |mean - E| / ||g||^2
    corrected_residual: float      # |mean - (E + spread)| / ||g||^2
    distances: np.ndarray = field(repr=False)
    X: np.ndarray = field(repr=False)            # members with distance <= 2E
    X_corrected: np.ndarray = field(repr=False)  # members with distance <= 2 (E + spread)
    T_size: int = 0

    @property
    def identity_ok(self) -> bool:
        return self.printed_residual <= IDENTITY_TOL

    @property
    def half_ok(self) -> bool:
        return 2 * len(self.X) >= self.T_size

    @property
    def half_ok_corrected(self) -> bool:
        return 2 * len(self.X_corrected) >= self.T_size


def good_shifts(G: GroupSpec, A, T: Packet) -> ShiftReport:
    """Shift distances and the two selection rules.

    The average shift distance equals ``E + ||g||^2 - ||m||^2`` where ``m`` is
    the shift average; that identity is enforced.  The residual against the
    shorter form ``mean = E`` is reported, not enforced.
    """
    idx = _idx(G, A)
    g = autocorrelation(G, idx)
    stack = _shift_stack(G, g, T.members)
    m = stack.mean(axis=0)
    E = float(np.sum((g - m) ** 2))
    dist = np.sum((g[None, :] - stack) ** 2, axis=1)
    mean = float(dist.mean()) if len(dist) else 0.0
    g2 = float(np.sum(g ** 2))
    spread = g2 - float(np.sum(m ** 2))
    scale = max(g2, 1e-300)
    corrected = abs(mean - (E + spread)) / scale
    if corrected > IDENTITY_TOL:
        raise IdentityError(f"shift-average identity failed: residual {corrected:.3e}")
    slack = 1e-12 * scale
    return ShiftReport(E, mean, spread, abs(mean - E) / scale, corrected, dist,
                       T.members[dist <= 2 * E + slack], T.members[dist <= 2 * (E + spread) + slack],
                       len(T.members))


def packet_in_difference_set(G: GroupSpec, A, T: Packet) -> float:
    """Fraction of packet members (with multiplicity) lying in ``A - A``."""
    if not len(T):
        return 1.0
    return float(G.mask(difference_set(G, _idx(G, A)))[T.members].mean())


# -- Bohr sets ----------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class BohrSet:
    group: GroupSpec
    frequencies: tuple[Element, ...]
    rho: float
    indices: np.ndarray = field(repr=False)
    regular: bool | None = None

    @property
    def rank(self) -> int:
        return len(self.frequencies)

    @property
    def elements(self) -> tuple[Element, ...]:
        return self.group.to_elements(self.indices)

    def __len__(self):
        return len(self.indices)


def bohr_distance(G: GroupSpec, Gamma) -> np.ndarray:
    """``max_gamma |1 - chi_gamma(x)|`` for every ``x`` (0 when Gamma is empty)."""
    out = np.zeros(G.order)
    L = G.exponent
    for gam in Gamma:
        k = G.pairing_numerators(gam)
        out = np.maximum(out, 2 * np.abs(np.sin(np.pi * k / L)))
    return out


def bohr_set(G: GroupSpec, Gamma, rho: float, dist: np.ndarray | None = None) -> BohrSet:
    if rho < 0:
        raise ValueError(f"radius must be nonnegative, got {rho}")
    Gamma = tuple(G.check(g) for g in Gamma)
    if dist is None:
        dist = bohr_distance(G, Gamma)
    idx = np.flatnonzero(dist <= rho + 1e-12)
    mask = G.mask(idx)
    if not mask[0] or not np.array_equal(mask, mask[G.neg_idx(np.arange(G.order))]):
        raise AssertionError("Bohr set must contain 0 and be symmetric")
    return BohrSet(G, Gamma, rho, idx)


@dataclass(frozen=True)
class RegularityReport:
    rho: float
    rho_prime: float
    constant: float      # smallest C with ||B_(1+t)| / |B| - 1| <= C d |t| on the window
    regular: bool
    c: float
    grid: int


def _sizes(sorted_dist: np.ndarray, radii) -> np.ndarray:
    return np.searchsorted(sorted_dist, np.asarray(radii) + 1e-12, side="right")


def regularity_constant(sorted_dist: np.ndarray, rank: int, rho: float, c: float = 0.01) -> float:
    d = max(rank, 1)
    steps = np.arange(1, THETA_STEPS + 1) * (c / d) / THETA_STEPS
    theta = np.concatenate([-steps[::-1], steps])
    base = _sizes(sorted_dist, [rho])[0]
    ratios = _sizes(sorted_dist, (1 + theta) * rho) / base
    return float(np.max(np.abs(ratios - 1) / (d * np.abs(theta))))


def regularize(G: GroupSpec, Gamma, rho: float, c: float = 0.01, grid: int = 64) -> RegularityReport:
    """Grid search of ``rho' in [rho/2, rho]`` minimising the regularity constant.

    Ties go to the largest ``rho'``.  ``regular`` means the constant is at most ``1/c``.
    """
    if not rho > 0:
        raise ValueError(f"radius must be positive, got {rho}")
    Gamma = tuple(G.check(g) for g in Gamma)
    sd = np.sort(bohr_distance(G, Gamma))
    best = None
    for r in np.geomspace(rho, rho / 2, grid):  # descending, so the first minimum is the largest
        const = regularity_constant(sd, len(Gamma), float(r), c)
        if best is None or const < best[1] - 1e-12:
            best = (float(r), const)
    return RegularityReport(rho, best[0], best[1], best[1] <= 1 / c, c, grid)


@dataclass(frozen=True, eq=False)
class PolyBogResult:
    Gamma: tuple[Element, ...]
    rho_prime: float                # 0.0 when no radius on the grid works
    bohr: BohrSet | None
    regularity: float | None
    target_size: int                # |4A - 4A|
    K: object
    rank_ok: bool                   # |Gamma| <= K^C
    radius_ok: bool                 # rho' >= K^-C
    regularized: RegularityReport | None = None


def polybog_search(G: GroupSpec, A, cfg, grid: int = 256) -> PolyBogResult:
    """Largest grid radius whose regular Bohr set sits inside ``4A - 4A``."""
    if not G.is_cyclic:
        raise ShapeError("PolyBog search is defined for cyclic groups")
    idx = _idx(G, A)
    if len(idx) == 0:
        raise ValueError("PolyBog search on the empty set")
    target = G.mask(iterated_sumset(G, idx, 4, minus=4))
    K = doubling_constant(G, idx)
    tau = cfg.tau_for(K)
    table = dft(indicator(G, idx))
    S = large_spectrum(G, idx, tau, table) if tau < 1 else _spectrum_at_one(G, idx, table)
    Gamma = extract_maximal_dissociated(S, table).members
    dist = bohr_distance(G, Gamma)
    sd = np.sort(dist)
    gap = float(sd[sd > 1e-12][0]) if np.any(sd > 1e-12) else 2.0
    radii = np.geomspace(2.0, gap / 4, grid)
    found = None
    for r in radii:
        inside = dist <= r + 1e-12
        if np.all(target[inside]):
            const = regularity_constant(sd, len(Gamma), float(r), cfg.reg_c)
            if const <= 1 / cfg.reg_c:
                found = (float(r), const)
                break
    budget = float(K) ** cfg.C
    if found is None:
        return PolyBogResult(Gamma, 0.0, None, None, int(target.sum()), K, len(Gamma) <= budget, False)
    r, const = found
    B = bohr_set(G, Gamma, r, dist)
    reg = regularize(G, Gamma, r, cfg.reg_c, cfg.grid)
    return PolyBogResult(Gamma, r, BohrSet(G, B.frequencies, r, B.indices, True), const,
                         int(target.sum()), K, len(Gamma) <= budget, r >= 1 / budget, reg)
