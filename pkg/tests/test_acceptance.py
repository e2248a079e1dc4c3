"""Acceptance criteria 1..14 at their stated tolerances (default configuration, k = 3).

The suite runs once per session; each criterion is then asserted separately and a
one-line PASS/FAIL summary is printed for every criterion (visible even without -s).
"""
import json

import pytest

from monodromy_lab import suite

NUMBERS = [number for number, _, _ in suite.CHECKS]


@pytest.fixture(scope="module")
def results(pytestconfig):
    capman = pytestconfig.pluginmanager.getplugin("capturemanager")
    lines = []

    def echo(line):
        lines.append(line)
        with capman.global_and_fixture_disabled():
            print("\n" + line, flush=True)

    out = {r.number: r for r in suite.run_suite(suite.Config(), echo=echo)}
    with capman.global_and_fixture_disabled():
        print("\nacceptance summary:\n" + "\n".join(lines), flush=True)
    return out


def test_all_criteria_present(results):
    assert sorted(results) == list(range(1, 15))


@pytest.mark.parametrize("number", NUMBERS)
def test_criterion(results, number):
    r = results[number]
    detail = json.dumps(r.to_dict()["detail"], sort_keys=True)
    assert r.status == suite.PASS, f"{r.line()}\n{detail}"
