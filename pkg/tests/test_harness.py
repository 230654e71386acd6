import json

import pytest

from ppgeo import TheoremReport, make_lab, run_suites
from ppgeo.harness import (
    COVERAGE,
    SUITES,
    check_completeness,
    check_epsilon_lemmas,
    check_monotone_continuity,
    check_pythagorean,
)


@pytest.fixture(scope="module")
def lab():
    return make_lab(cells=512, spatial_cells=1024, n_pairs=8)


def test_every_suite_passes(lab):
    reports = run_suites(list(SUITES), lab, p=2.0)
    for rep in reports:
        assert rep.verdict == "pass", rep.to_text()


def test_suite_registry_covers_descriptions():
    assert set(COVERAGE) == set(SUITES)


def test_report_serialization_roundtrip(lab):
    rep = check_pythagorean(lab, 2.0)
    payload = json.loads(rep.to_json())
    assert payload["verdict"] == "pass"
    assert payload["worst_slack"] == rep.worst_slack
    assert "[PASS]" in rep.to_text()


def test_verdict_flips_on_tolerance():
    rep = TheoremReport("x", "d", "c", slacks=[0.5], tolerance=0.1)
    assert rep.verdict == "fail"
    rep.tolerance = 1.0
    assert rep.verdict == "pass"


def test_pythagorean_epsilon_route(lab):
    rep = check_pythagorean(lab, 2.0, eps_route_pairs=2)
    assert rep.details["epsilon_route_pass"]


def test_completeness_budget_and_limits(lab):
    rep = check_completeness(lab, 2.0, kind="oscillating")
    assert rep.verdict == "pass"
    assert rep.details["budget_ok"]
    assert rep.details["rooftop_monotone_violation"] <= 1e-12
    assert rep.details["limit_decreasing"]


def test_monotone_continuity_details(lab):
    rep = check_monotone_continuity(lab, 2.0)
    assert rep.details["ip_decreasing"]
    gaps = rep.details["cap_gaps"]
    assert gaps[-1] <= gaps[0]


def test_epsilon_lemmas_monotone_density(lab):
    rep = check_epsilon_lemmas(lab, 2.0)
    assert min(rep.details["density_monotone_fractions"]) >= 0.99
    assert rep.details["ip_final_gap"] <= 0.02


def test_threaded_matches_serial(lab):
    serial = run_suites(["pythagorean", "geodesic_metric"], lab, 2.0)
    threaded = run_suites(["pythagorean", "geodesic_metric"], lab, 2.0, max_workers=2)
    for a, b in zip(serial, threaded):
        assert a.to_json() == b.to_json()


def test_unknown_suite_rejected(lab):
    with pytest.raises(KeyError):
        run_suites(["nope"], lab, 2.0)
