import pytest

from spectralpfr import kernels

_CRITERIA: dict[int, list] = {}


@pytest.fixture(scope="session")
def criterion():
    """Record one sub-check of an acceptance criterion; returns ``ok`` for asserting."""
    def record(n: int, label: str, ok: bool, detail: str = "") -> bool:
        _CRITERIA.setdefault(n, []).append((label, bool(ok), detail))
        return bool(ok)
    return record


@pytest.fixture(params=[m.BACKEND for m in kernels.backends()])
def backend(request):
    prev = kernels.BACKEND
    kernels.set_backend(request.param)
    yield request.param
    kernels.set_backend("auto" if prev is None else prev)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        checks = _CRITERIA[n]
        verdict = "PASS" if all(ok for _, ok, _ in checks) else "FAIL"
        tr.write_line(f"criterion {n:2d}: {verdict}")
        for label, ok, detail in checks:
            tr.write_line(f"    [{'ok' if ok else 'FAIL'}] {label}" + (f" ({detail})" if detail else ""))
