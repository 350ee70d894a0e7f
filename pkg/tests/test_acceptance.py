"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v`` or
``python tests/test_acceptance.py``; ``sqmean verify`` runs the same checks.
"""
import sys
import time

import pytest

from sqmean.verification import CRITERIA


@pytest.mark.parametrize("check", CRITERIA, ids=[c.__name__.removeprefix("check_") for c in CRITERIA])
def test_criterion(check, capsys):
    start = time.perf_counter()
    result = check()
    elapsed = time.perf_counter() - start
    with capsys.disabled():
        print(f"\n{result.line()} ({elapsed:.1f}s)")
    assert result.passed, result.detail
    assert elapsed < 60


if __name__ == "__main__":
    from sqmean.verification import run_all

    sys.exit(0 if all(r.passed for r in run_all()) else 1)
