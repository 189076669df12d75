"""One check per acceptance criterion; each prints a single PASS/FAIL line."""

import pytest

from talbot_lab import verification as vf

# wall-clock budget in seconds for each criterion
BUDGETS = {1: 5, 2: 60, 3: 60, 4: 10, 5: 60, 6: 120, 7: 600, 8: 600, 9: 600, 10: 300}


HEADLINE = ("worst", "max_", "mismatches", "failures")


def _summary(check: vf.Check) -> str:
    items = [(k, v) for k, v in check.payload.items() if k.startswith(HEADLINE)]
    items = items or list(check.payload.items())[:4]
    numbers = ", ".join(f"{k}={v:.4g}" if isinstance(v, float) else f"{k}={v}" for k, v in items)
    return f"{check.name} {check.status} in {check.seconds:.1f}s ({numbers})"


@pytest.mark.parametrize("number", sorted(vf.CRITERIA))
def test_criterion(number, capsys):
    checks = [fn() for fn in vf.CRITERIA[number]]
    seconds = sum(c.seconds for c in checks)
    ok = not any(c.failed for c in checks) and seconds <= BUDGETS[number]
    with capsys.disabled():
        print(f"\ncriterion {number:2d}: {'PASS' if ok else 'FAIL'} "
              f"[{seconds:.1f}s of {BUDGETS[number]}s] " + "; ".join(_summary(c) for c in checks))
    assert ok
