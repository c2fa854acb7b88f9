import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", deadline=None, suppress_health_check=[HealthCheck.too_slow], max_examples=60
)
settings.load_profile("default")

ACCEPTANCE_LINES = []


def naive_pair_count(x, eps, norm="max", theiler=0):
    """Brute-force reference: every unordered pair compared directly."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    n = x.shape[0]
    total = 0
    for i in range(n - 1):
        diff = np.abs(x[i + 1:] - x[i])
        d = diff.max(axis=1) if norm == "max" else np.sqrt((diff**2).sum(axis=1))
        ok = d < eps
        if theiler:
            ok &= np.arange(i + 1, n) - i > theiler
        total += int(ok.sum())
    return total


def record(criterion, passed, detail):
    line = f"criterion {criterion}: {'PASS' if passed else 'FAIL'} - {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


@pytest.fixture
def acceptance_record():
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
