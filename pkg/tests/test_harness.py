import csv
import io
import json
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spectralpfr.dichotomy import LedgerConfig
from spectralpfr.groups import GroupSpec
from spectralpfr.harness import Report, analyze, iterate_report, polybog_report, to_csv, toy_example
from spectralpfr.harness.iteration import (default_budget, iterate_psl, potential, potential_nonincreasing)
from spectralpfr.harness.pipeline import parse_set, resolve_instance, toy_set
from spectralpfr.harness.scanner import (expected_count, mask_to_set, scan_exhaustive, scan_for_violations,
                                         subset_masks)
from spectralpfr.harness.serialize import parse_rational, rational, to_jsonable


# -- iteration ------------------------------------------------------------------------

def test_potential_values():
    assert potential(2, Fraction(1, 2), 2) == 8
    assert potential(1, 1, 12) == 1
    with pytest.raises(ValueError):
        potential(1, 0, 12)


def test_potential_comparison_is_exact_for_integer_gamma():
    assert potential_nonincreasing(Fraction(5, 3), Fraction(3, 10), 2, Fraction(1, 4), 12)
    assert potential_nonincreasing(2, Fraction(1, 5), 2, Fraction(1, 4), 12) is False
    # both sides are exactly 2^24
    assert potential_nonincreasing(2 ** 12, Fraction(1, 2), 1, Fraction(1, 4), 12)


def test_default_budget():
    assert default_budget(Fraction(47, 24), 1.0) == 4
    assert default_budget(10 ** 6, 1.0) == 10 ** 4


def test_subgroup_iteration():
    G = GroupSpec.cyclic(12)
    tr = iterate_psl(G, [0, 3, 6, 9], LedgerConfig())
    assert len(tr.steps) == 1 and tr.terminal == "NearCoset" and tr.total_codim == 0
    assert tr.steps[0].I == pytest.approx(3 ** 12)


def test_iteration_records_improvement_then_stops():
    G = GroupSpec.cyclic(20)
    tr = iterate_psl(G, [0, 1, 2, 10, 12], LedgerConfig(c=1.0))
    assert tr.steps[0].outcome == "Improvement"
    assert tr.steps[1].order == 10 and tr.steps[1].K == Fraction(5, 3)
    assert {f["lemma"] for f in tr.findings} >= {"decrement-floor"}
    # I drops: 2 * 4^12 vs (5/3) * (10/3)^12
    assert tr.steps[1].I < tr.steps[0].I


def test_budget_exhaustion_is_flagged():
    G = GroupSpec.cyclic(20)
    tr = iterate_psl(G, [0, 1, 2, 10, 12], LedgerConfig(c=1.0), budget=1)
    assert tr.terminal == "budget-exhausted"
    assert any(f["lemma"] == "iteration-budget" for f in tr.findings)


# -- serialisation -----------------------------------------------------------------

def test_rationals_roundtrip():
    assert rational(Fraction(47, 24)) == "47/24" and rational(3) == "3/1"
    assert parse_rational("-5/7") == Fraction(-5, 7)
    with pytest.raises(ValueError):
        parse_rational("0.5")
    assert to_jsonable([math.inf, -math.inf, 1 + 2j]) == ["inf", "-inf", [1.0, 2.0]]


def test_report_roundtrip_and_version_check():
    G = GroupSpec.cyclic(97)
    rep = analyze(G, list(range(10)), LedgerConfig())
    text = rep.dumps()
    back = Report.loads(text)
    assert back.kind == "analyze" and back.summary["K"] == "19/10"
    assert back.to_dict()["artifacts"] == json.loads(text)["artifacts"]
    data = json.loads(text)
    data["version"] = 99
    with pytest.raises(ValueError):
        Report.from_dict(data)


def test_csv_export_of_a_trace():
    rep = iterate_report(GroupSpec.cyclic(20), [0, 1, 2, 10, 12], LedgerConfig(c=1.0))
    rows = list(csv.DictReader(io.StringIO(to_csv(rep))))
    assert [r["K"] for r in rows][:2] == ["2/1", "5/3"]


# -- pipeline ------------------------------------------------------------------------

def test_parse_set():
    assert parse_set(GroupSpec.cyclic(10), "0..3, 12") == [(0,), (1,), (2,), (3,)]
    assert parse_set(GroupSpec.parse("2,3"), "1,0;0,2") == [(1, 0), (0, 2)]
    assert parse_set(None, "{5, 1..2}") == [1, 2, 5]


def test_integer_instance_is_modelled():
    G, A, mod = resolve_instance("Z", "0,1,2,3")
    assert mod is not None and G.order == mod.modulus and len(A) == 4


def test_toy_sets():
    assert toy_set() == list(range(24))
    five = toy_set(k=5)
    assert len(five) == 24
    from spectralpfr.fourier import doubling_constant
    assert doubling_constant(GroupSpec.cyclic(97), five) == Fraction(41, 12)
    with pytest.raises(ValueError):
        toy_set(alpha=0.5)


def test_toy_report():
    rep = toy_example(LedgerConfig())
    s = rep.summary
    assert s["K"] == Fraction(47, 24) and s["doubling_ok"] and s["spectrum_interval"]
    assert s["rho_prime"] == 2.0
    assert rep.artifacts["sumset_size"] == 47
    assert rep.artifacts["packet"]["corrected_identity_residual"] <= 1e-8


def test_polybog_report():
    rep = polybog_report(GroupSpec.cyclic(97), list(range(24)), LedgerConfig())
    assert rep.summary["rho_prime"] == 2.0 and rep.findings == []


# -- scanner -------------------------------------------------------------------------

def test_subset_enumeration_counts():
    assert len(subset_masks(10)) == expected_count(10, None) == 1023
    assert len(subset_masks(12, 3)) == expected_count(12, 3) == 12 + 66 + 220
    assert mask_to_set(0b1011, 5) == (0, 1, 3)


def test_small_exhaustive_scan():
    res = scan_exhaustive(LedgerConfig(), space=[(8, None), (12, None)])
    g = res.summary["groups"]
    assert g["8"]["energy_lower_fail"] == g["8"]["e2d_fail"] == 0
    assert g["12"]["lift_avg_max"] <= 1e-10
    assert any(r.set == (0, 1) and r.group == "12" for r in res.findings)
    keys = [r.sort_key() for r in res.findings]
    assert keys == sorted(keys)


def test_sampled_scan_is_deterministic():
    cfg = LedgerConfig(c=1.0)
    space = (("31", 6), ("24", 5))
    a = scan_for_violations(cfg, seed=3, samples=12, space=space)
    b = scan_for_violations(cfg, seed=3, samples=12, space=space)
    assert [r.as_dict() for r in a.findings] == [r.as_dict() for r in b.findings]


def test_exhaustive_mode_range_guard():
    with pytest.raises(ValueError):
        scan_for_violations(LedgerConfig(), exhaustive=True, space=[(30, 2)])


@settings(max_examples=30, deadline=None)
@given(st.integers(5, 31), st.data())
def test_iteration_potential_invariants(N, data):
    G = GroupSpec.cyclic(N)
    A = np.array(sorted(data.draw(st.sets(st.integers(0, N - 1), min_size=1, max_size=N // 2))))
    cfg = LedgerConfig(c=1.0)
    tr = iterate_psl(G, A, cfg)
    lemmas = {f["lemma"] for f in tr.findings}
    assert all(s.I >= 1 for s in tr.steps)
    for a, b in zip(tr.steps, tr.steps[1:]):
        assert b.order < a.order
        assert b.I <= a.I * (1 + 1e-12) or "potential-monotone" in lemmas
