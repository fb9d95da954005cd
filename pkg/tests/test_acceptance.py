"""Acceptance gate: every criterion at its stated tolerance, one line per criterion."""

from __future__ import annotations

import pytest

from logimap import acceptance


@pytest.mark.parametrize("number", [c.number for c in acceptance.CRITERIA])
def test_criterion(number, capsys):
    result = acceptance.run_criterion(number)
    with capsys.disabled():
        print(f"\n{result.summary()} [{result.elapsed:.2f} s]")
    failed = [c for c in result.checks if not c.holds]
    assert not failed, "; ".join(f"{c.name}: lhs={c.lhs} rhs={c.rhs}" for c in failed)
