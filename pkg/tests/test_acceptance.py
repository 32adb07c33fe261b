"""Acceptance criteria 1-13 at full size; each prints one PASS/FAIL line (run with -s)."""

import pytest

from interlace_lab import acceptance

pytestmark = pytest.mark.slow


@pytest.mark.parametrize("number", sorted(acceptance.CRITERIA))
def test_criterion(number):
    result = acceptance.run_all(only={number})[0]
    print("\n" + result.line())
    assert result.passed, result.detail
