"""Runs every acceptance criterion at its stated tolerance.

Each criterion prints one PASS/FAIL line; the lines are repeated in the
terminal summary under "acceptance criteria".
"""

import pytest

from conftest import ACCEPTANCE_LINES
from newton_aero.acceptance import CRITERIA


@pytest.mark.slow
@pytest.mark.parametrize("criterion", CRITERIA, ids=lambda c: f"{c.number:02d}-{c.criterion}")
def test_criterion(criterion):
    res = criterion()
    line = res.line()
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert res.passed, line
