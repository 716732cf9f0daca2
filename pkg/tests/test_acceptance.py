"""Acceptance gate: every criterion at its stated scale and tolerance.

The full suite (including the 1e5-path Monte Carlo runs at dt = 1e-4) takes a
few minutes; all randomness is seeded, so the outcome is reproducible.
"""

import pytest

from infdiv.acceptance import AcceptanceSettings, run_all

CRITERIA = [
    (1, "roots and classical barrier"),
    (2, "boundary ODE solve"),
    (3, "critical infimum level"),
    (4, "variational inequality residuals"),
    (5, "smooth fit at the free boundary"),
    (6, "operator correctness"),
    (7, "immediate-payout exactness (nonpositive drift)"),
    (8, "Monte Carlo optimality and dominance"),
    (9, "q = 0 benchmark"),
    (10, "stability as q vanishes"),
    (11, "optimal-policy support"),
]


@pytest.fixture(scope="module")
def report():
    return run_all(AcceptanceSettings())


@pytest.mark.parametrize("index,name", CRITERIA, ids=[f"criterion_{i:02d}" for i, _ in CRITERIA])
def test_criterion(report, index, name):
    result = report.results[index - 1]
    assert result.index == index and result.name == name
    print(result.summary_line())
    for line in result.detail_lines():
        print(line)
    assert result.passed, "\n".join([result.summary_line(), *result.detail_lines()])


def test_all_criteria_pass(report):
    print()
    for result in report.results:
        print(result.summary_line())
    assert report.all_passed
