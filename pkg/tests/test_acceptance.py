"""One test per exit criterion; each prints a PASS/FAIL line (run with -s to see them live)."""

import pytest

from maso.acceptance import CRITERIA, run_criterion


@pytest.mark.parametrize("number", [c[0] for c in CRITERIA], ids=[f"criterion-{c[0]}" for c in CRITERIA])
def test_criterion(number, capsys):
    result = run_criterion(number)
    with capsys.disabled():
        print("\n" + result.line())
    assert result.passed, result.detail
