"""The ten acceptance criteria at their stated tolerances.

Each test prints one PASS/FAIL line (visible even under output capture) and
fails with the list of sub-checks when a criterion is not met.
"""

import pytest

from polyharm.acceptance import CRITERIA


@pytest.mark.parametrize("number", sorted(CRITERIA), ids=lambda n: f"criterion_{n}")
def test_criterion(number, capsys):
    res = CRITERIA[number]()
    with capsys.disabled():
        print("\n" + res.line())
    assert res.passed, "\n".join(res.details)
