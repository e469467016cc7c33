"""One test per acceptance criterion; each prints a PASS/FAIL line."""

import pytest

from spinmetro.acceptance import CRITERIA, run_criterion


@pytest.mark.parametrize("number", sorted(CRITERIA), ids=lambda n: f"criterion_{n:02d}")
def test_criterion(number, capsys):
    outcome = run_criterion(number)
    with capsys.disabled():
        print("\n" + outcome.line())
    assert outcome.passed, outcome.detail
