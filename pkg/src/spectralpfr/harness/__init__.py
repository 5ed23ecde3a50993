"""Iteration driver, violation scanner, toy runs, and report plumbing."""
from .iteration import IterationTrace, StepRecord, default_budget, iterate_psl, potential
from .pipeline import analyze, iterate_report, parse_set, polybog_report, resolve_instance, toy_example
from .scanner import ScanResult, ViolationRecord, bsg_oracle_scan, scan_for_violations
from .serialize import Report, parse_rational, to_csv

__all__ = ["IterationTrace", "StepRecord", "default_budget", "iterate_psl", "potential", "analyze",
           "iterate_report", "parse_set", "polybog_report", "resolve_instance", "toy_example", "ScanResult",
           "ViolationRecord", "bsg_oracle_scan", "scan_for_violations", "Report", "parse_rational", "to_csv"]
