"""Acceptance criteria A1-A13, one test and one printed PASS/FAIL line each.

The criteria themselves live in ``recloop.verify`` so that ``recloop verify``
and this suite measure exactly the same thing. Run with ``-s`` to see the
lines inline; ``conftest.py`` also echoes them in the terminal summary.
"""

import math

import pytest

from recloop import verify

CRITERIA = list(verify.CRITERIA)
_LINES = []


@pytest.fixture(scope="module")
def context():
    # one shared context: A6 reuses the A5 population run
    return verify._Context(seed=verify.DEFAULT_SEED, level="fast")


@pytest.mark.parametrize("cid", CRITERIA)
def test_criterion(cid, context):
    result = verify.run_criterion(cid, context)
    line = result.line()
    _LINES.append(line)
    print(line)
    assert result.passed, line


# --- the suite must catch broken implementations ------------------------------


def test_broken_closed_form_is_caught(monkeypatch):
    from recloop import transport

    monkeypatch.setattr(transport, "w2_gaussian", lambda g1, g2: math.hypot(g1.mean - g2.mean, g1.std + g2.std))
    assert not verify.run_criterion("A3", verify._Context(seed=1, level="fast")).passed


def test_broken_success_rule_is_caught(monkeypatch):
    # success interval of width r instead of 2r around the opinion
    monkeypatch.setattr(verify, "success_probability", lambda x, u, rho: abs(x - u) / 2)
    assert not verify.run_criterion("A1", verify._Context(seed=1, level="fast")).passed


@pytest.mark.slow
def test_full_paper_grid():
    (result,) = verify.run_all("full", only=["FULL_GRID"])
    print(result.line())
    assert result.passed, result.line()
