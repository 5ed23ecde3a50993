"""Exhaustive and sampled searches for instances that break a stated inequality.

Cheap identities are checked on every subset in vectorised batches.  The PSL
iteration and the L4 audit run once per orbit of the affine group
``x -> u x + t`` (both are invariant under it), on the smallest bitmask of the orbit.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .. import kernels
from ..dichotomy import LedgerConfig, bsg_extract, covering_upgrade_audit, e2d_batch, l4_compression_audit
from ..fourier import additive_energy, dft, indicator
from ..groups import GroupSpec
from ..structure import cyclic_lift_errors
from .iteration import iterate_psl

WORKERS_ENV = "SPECTRALPFR_WORKERS"
CHUNK = 1 << 18
ERRATUM, DECREMENT_MISS, BOUND_MISS = "erratum-class", "decrement-miss", "bound-miss"
SEVERITY_RANK = {ERRATUM: 0, DECREMENT_MISS: 1, BOUND_MISS: 2}

DEFAULT_EXHAUSTIVE = tuple((N, None) for N in range(2, 17)) + tuple((N, 8) for N in range(17, 25))
DEFAULT_SAMPLED = (("64", 10), ("97", 12), ("997", 24))


def resolve_workers(workers: int | None = None) -> int:
    if workers is None:
        workers = int(os.environ.get(WORKERS_ENV, "1") or 1)
    return max(1, workers)


@dataclass(frozen=True)
class ViolationRecord:
    lemma: str
    severity: str
    group: str
    set: tuple
    measured: dict
    config: dict = field(default_factory=dict)
    note: str = ""

    def sort_key(self):
        return (self.lemma, SEVERITY_RANK.get(self.severity, 9), len(self.group), self.group,
                len(self.set), self.set)

    def as_dict(self) -> dict:
        return {"lemma": self.lemma, "severity": self.severity, "group": self.group,
                "set": list(self.set), "measured": self.measured, "config": self.config, "note": self.note}


# -- subset enumeration -------------------------------------------------------------

def subset_masks(N: int, max_size: int | None = None) -> np.ndarray:
    """All nonempty subsets of ``Z/N`` (size ``<= max_size``) as uint64 bitmasks, ascending."""
    if N > kernels.MAX_BITMASK_ORDER or N > 40:
        raise ValueError(f"exhaustive enumeration of Z/{N} is out of range")
    out = []
    for lo in range(0, 1 << N, CHUNK):
        m = np.arange(max(lo, 1), min(lo + CHUNK, 1 << N), dtype=np.uint64)
        if max_size is not None:
            m = m[np.bitwise_count(m) <= max_size]
        out.append(m)
    return np.concatenate(out) if out else np.zeros(0, dtype=np.uint64)


def expected_count(N: int, max_size: int | None) -> int:
    top = N if max_size is None else min(N, max_size)
    return sum(math.comb(N, k) for k in range(1, top + 1))


def mask_bits(masks: np.ndarray, N: int) -> np.ndarray:
    return ((masks[:, None] >> np.arange(N, dtype=np.uint64)) & np.uint64(1)).astype(np.float64)


def mask_to_set(mask: int, N: int) -> tuple[int, ...]:
    return tuple(i for i in range(N) if (int(mask) >> i) & 1)


def divisors(N: int) -> list[int]:
    return [m for m in range(2, N) if N % m == 0]


# -- batched identity checks ----------------------------------------------------------

@dataclass
class BatchTally:
    instances: int = 0
    energy_lower_fail: int = 0
    energy_upper_fail: int = 0
    parseval_max: float = 0.0
    energy_identity_max: float = 0.0
    e2d_fail: int = 0
    e2d_min_margin: float = math.inf
    lift_checks: int = 0
    lift_avg_max: float = 0.0
    lift_indicator_discrepancies: int = 0
    failures: list = field(default_factory=list)      # (lemma, severity, mask, measured)
    discrepancy_masks: dict = field(default_factory=dict)  # subgroup order -> smallest masks

    def as_dict(self) -> dict:
        return {k: v for k, v in self.__dict__.items() if k not in ("failures", "discrepancy_masks")}


def check_batch(N: int, masks: np.ndarray, tally: BatchTally, keep_examples: int = 20) -> np.ndarray:
    """Run the cheap checks on one batch; returns the exact energies."""
    sums, sizes, energies = kernels.cyclic_stats(masks, N)
    a = np.bitwise_count(masks).astype(np.int64)
    tally.instances += len(masks)
    lower = energies * sizes >= a ** 4
    upper = energies <= a ** 3
    for lemma, ok in (("energy-lower", lower), ("energy-upper", upper)):
        for k in np.flatnonzero(~ok)[:keep_examples]:
            tally.failures.append((lemma, BOUND_MISS, int(masks[k]),
                                   {"E": int(energies[k]), "sumset": int(sizes[k]), "size": int(a[k])}))
    tally.energy_lower_fail += int((~lower).sum())
    tally.energy_upper_fail += int((~upper).sum())
    bits = mask_bits(masks, N)
    fhat = np.fft.fft(bits, axis=1) / N
    m2 = (np.abs(fhat) ** 2).sum(axis=1)
    tally.parseval_max = max(tally.parseval_max, float(np.max(np.abs(a - N * m2) / np.maximum(1, a))))
    spectral = N ** 3 * (np.abs(fhat) ** 4).sum(axis=1)
    rel = np.abs(energies - spectral) / energies
    tally.energy_identity_max = max(tally.energy_identity_max, float(rel.max()))
    for k in np.flatnonzero(rel > 1e-8)[:keep_examples]:
        tally.failures.append(("energy-identity", BOUND_MISS, int(masks[k]),
                               {"E": int(energies[k]), "spectral": float(spectral[k])}))
    margin = e2d_batch(fhat, a / N)
    bad = margin < 1 - 1e-12
    tally.e2d_fail += int(bad.sum())
    tally.e2d_min_margin = min(tally.e2d_min_margin, float(margin.min()))
    for k in np.flatnonzero(bad)[:keep_examples]:
        tally.failures.append(("energy-to-doubling", BOUND_MISS, int(masks[k]), {"margin": float(margin[k])}))
    for m in divisors(N):
        err_avg, err_ind = cyclic_lift_errors(bits, N, m)
        tally.lift_checks += len(masks)
        tally.lift_avg_max = max(tally.lift_avg_max, float(err_avg.max()))
        for k in np.flatnonzero(err_avg > 1e-10)[:keep_examples]:
            tally.failures.append(("quotient-lift-averaged", BOUND_MISS, int(masks[k]),
                                   {"subgroup_order": m, "error": float(err_avg[k])}))
        disc = err_ind > 1e-10
        tally.lift_indicator_discrepancies += int(disc.sum())
        ex = tally.discrepancy_masks.setdefault(m, [])
        ex.extend(int(x) for x in masks[disc][:keep_examples])
    return energies


# -- per-orbit checks ---------------------------------------------------------------

def _orbit_job(args):
    N, reps, cfg_dict = args
    cfg = LedgerConfig.from_dict(cfg_dict)
    G = GroupSpec.cyclic(N)
    out = []
    for mask in reps:
        A = np.array(mask_to_set(mask, N), dtype=np.int64)
        out.append((int(mask), _orbit_record(G, A, cfg)))
    return out


def _orbit_record(G: GroupSpec, A: np.ndarray, cfg: LedgerConfig) -> dict:
    trace = iterate_psl(G, A, cfg)
    l4 = l4_compression_audit(G, A, cfg)
    return {"terminal": trace.terminal, "improvements": trace.improvements, "steps": len(trace.steps),
            "budget": trace.budget, "findings": trace.findings,
            "I_min": min(s.I for s in trace.steps),
            "l4_compress_ok": l4.compress_ok, "l4_tail_ok": l4.tail_ok,
            "l4_tight_c": l4.tight_c_compress, "K": l4.K}


def run_orbits(N: int, reps, cfg: LedgerConfig, workers: int = 1) -> list[tuple[int, dict]]:
    reps = [int(r) for r in reps]
    if workers <= 1 or len(reps) < 64:
        return _orbit_job((N, reps, cfg.to_dict()))
    size = math.ceil(len(reps) / (4 * workers))
    jobs = [(N, reps[i:i + size], cfg.to_dict()) for i in range(0, len(reps), size)]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        parts = list(ex.map(_orbit_job, jobs))
    return sorted((r for part in parts for r in part), key=lambda t: t[0])


# -- drivers -------------------------------------------------------------------------

@dataclass
class ScanResult:
    findings: list[ViolationRecord]
    summary: dict


def _dedupe_sort(records: list[ViolationRecord]) -> list[ViolationRecord]:
    seen, out = set(), []
    for r in sorted(records, key=ViolationRecord.sort_key):
        key = (r.lemma, r.group, r.set, r.severity)
        if key not in seen:
            seen.add(key)
            out.append(r)
    return out


def scan_exhaustive(cfg: LedgerConfig, space=DEFAULT_EXHAUSTIVE, workers: int | None = None,
                    iterate: bool = True, keep_examples: int = 20) -> ScanResult:
    workers = resolve_workers(workers)
    cfg_echo = cfg.to_dict()
    records: list[ViolationRecord] = []
    per_group = {}
    for N, max_size in space:
        masks = subset_masks(N, max_size)
        expected = expected_count(N, max_size)
        if len(masks) != expected:
            raise AssertionError(f"Z/{N}: enumerated {len(masks)} subsets, expected {expected}")
        tally = BatchTally()
        for lo in range(0, len(masks), CHUNK):
            check_batch(N, masks[lo:lo + CHUNK], tally, keep_examples)
        for lemma, sev, mask, measured in tally.failures:
            records.append(ViolationRecord(lemma, sev, str(N), mask_to_set(mask, N), measured, cfg_echo))
        # erratum-class: the indicator reading of the quotient lift, one record per subgroup order
        for m, ex in sorted(tally.discrepancy_masks.items()):
            if ex:
                canon = sorted(set(int(c) for c in kernels.cyclic_canonical(np.array(ex, dtype=np.uint64), N)))
                for c in canon[:keep_examples]:
                    records.append(ViolationRecord(
                        "quotient-lift-indicator", ERRATUM, str(N), mask_to_set(c, N),
                        {"subgroup_order": m}, cfg_echo,
                        "image-set indicator transform differs from the coefficient on G"))
        info = {"declared": expected, **tally.as_dict()}
        if iterate:
            reps = np.unique(kernels.cyclic_canonical(masks, N))
            info["orbits"] = int(len(reps))
            orbit = run_orbits(N, reps, cfg, workers)
            info.update(_orbit_summary(N, orbit, records, cfg_echo))
        per_group[str(N)] = info
    return ScanResult(_dedupe_sort(records), {"mode": "exhaustive", "groups": per_group})


def _orbit_summary(N: int, orbit, records: list, cfg_echo: dict) -> dict:
    terminals: dict[str, int] = {}
    improvements = l4_pass = tail_pass = budget_over = 0
    I_min = math.inf
    for mask, rec in orbit:
        terminals[rec["terminal"]] = terminals.get(rec["terminal"], 0) + 1
        improvements += rec["improvements"]
        l4_pass += rec["l4_compress_ok"]
        tail_pass += rec["l4_tail_ok"]
        I_min = min(I_min, rec["I_min"])
        budget_over += rec["steps"] > rec["budget"] and rec["terminal"] != "budget-exhausted"
        for f in rec["findings"]:
            records.append(ViolationRecord(f["lemma"], f["severity"], f["group"], tuple(f["set"]),
                                           f["measured"], cfg_echo, f["note"]))
        if not rec["l4_compress_ok"]:
            records.append(ViolationRecord("l4-compression", BOUND_MISS, str(N), mask_to_set(mask, N),
                                           {"tight_c": rec["l4_tight_c"], "K": rec["K"]}, cfg_echo))
    n = max(len(orbit), 1)
    return {"terminals": dict(sorted(terminals.items())), "improvement_steps": improvements,
            "l4_pass_rate": l4_pass / n, "l4_tail_pass_rate": tail_pass / n,
            "min_potential": I_min, "budget_overruns_unflagged": budget_over}


def random_subset(rng: np.random.Generator, order: int, size: int) -> np.ndarray:
    return np.sort(rng.choice(order, size=size, replace=False)).astype(np.int64)


def scan_sampled(cfg: LedgerConfig, samples: int, seed: int, space=DEFAULT_SAMPLED) -> ScanResult:
    cfg_echo = cfg.to_dict()
    records: list[ViolationRecord] = []
    per_group = {}
    for gi, (gtext, size) in enumerate(space):
        G = GroupSpec.parse(gtext)
        count = samples // len(space) + (gi < samples % len(space))
        stats = {"samples": count, "size": size, "l4_pass": 0, "l4_tail_pass": 0, "energy_identity_max": 0.0,
                 "e2d_fail": 0, "terminals": {}, "improvement_steps": 0}
        for i in range(count):
            rng = np.random.default_rng([seed, gi, i])
            A = random_subset(rng, G.order, size)
            inst = tuple(int(x) for x in A)
            table = dft(indicator(G, A))
            try:
                e = additive_energy(G, A, table)
                stats["energy_identity_max"] = max(stats["energy_identity_max"], e.relative_error)
            except AssertionError as exc:
                records.append(ViolationRecord("energy-bounds", BOUND_MISS, gtext, inst, {"error": str(exc)}, cfg_echo))
            alpha = np.array([len(A) / G.order])
            if e2d_batch(table.coeffs[None, :], alpha)[0] < 1 - 1e-12:
                stats["e2d_fail"] += 1
                records.append(ViolationRecord("energy-to-doubling", BOUND_MISS, gtext, inst, {}, cfg_echo))
            rec = _orbit_record(G, A, cfg)
            stats["terminals"][rec["terminal"]] = stats["terminals"].get(rec["terminal"], 0) + 1
            stats["improvement_steps"] += rec["improvements"]
            stats["l4_pass"] += rec["l4_compress_ok"]
            stats["l4_tail_pass"] += rec["l4_tail_ok"]
            for f in rec["findings"]:
                records.append(ViolationRecord(f["lemma"], f["severity"], f["group"], tuple(f["set"]),
                                               f["measured"], cfg_echo, f["note"]))
            if not rec["l4_compress_ok"]:
                records.append(ViolationRecord("l4-compression", BOUND_MISS, gtext, inst,
                                               {"tight_c": rec["l4_tight_c"], "K": rec["K"]}, cfg_echo))
        stats["terminals"] = dict(sorted(stats["terminals"].items()))
        stats["l4_pass_rate"] = stats["l4_pass"] / max(count, 1)
        per_group[gtext] = stats
    return ScanResult(_dedupe_sort(records), {"mode": "sampled", "seed": seed, "groups": per_group})


def scan_for_violations(cfg: LedgerConfig, seed: int = 0, exhaustive: bool = False, samples: int = 200,
                        space=None, workers: int | None = None) -> ScanResult:
    if exhaustive:
        space = DEFAULT_EXHAUSTIVE if space is None else space
        bad = [(N, s) for N, s in space if N > 24 or (s is not None and s > N)]
        if bad:
            raise ValueError(f"exhaustive mode is limited to group order <= 24: {bad}")
        return scan_exhaustive(cfg, space, workers)
    return scan_sampled(cfg, samples, seed, DEFAULT_SAMPLED if space is None else space)


# -- BSG oracle sweep ----------------------------------------------------------------

def bsg_oracle_scan(N_max: int = 24, size_max: int = 10, boost: float = 0.25, N_min: int = 2) -> dict:
    """``bsg_extract`` against the exhaustive oracle on every affine orbit with enough energy."""
    out = {"orbits": 0, "passed": 0, "failures": [], "per_group": {}}
    for N in range(N_min, N_max + 1):
        masks = subset_masks(N, size_max)
        _, _, energies = kernels.cyclic_stats(masks, N)
        a = np.bitwise_count(masks).astype(np.float64)
        keep = energies * N >= (1 + boost) * a ** 4 * (1 - 1e-12)
        reps = np.unique(kernels.cyclic_canonical(masks[keep], N))
        G = GroupSpec.cyclic(N)
        passed = 0
        for mask in reps:
            A = np.array(mask_to_set(mask, N), dtype=np.int64)
            rep = bsg_extract(G, A, boost)
            covering_upgrade_audit(G, A, G.index_array(rep.A0), 1.0)
            if rep.oracle_ok:
                passed += 1
            else:
                out["failures"].append({"group": str(N), "set": list(mask_to_set(mask, N)),
                                        "doubling": rep.doubling, "oracle": rep.oracle_best_ratio})
        out["orbits"] += len(reps)
        out["passed"] += passed
        out["per_group"][str(N)] = {"orbits": int(len(reps)), "passed": passed}
    return out
