import numpy as np
import pytest

from widthlab.caseverify import (
    CONFIGURATIONS,
    FAIL,
    INCONCLUSIVE,
    PASS,
    bisector_case_check,
    collinearity_check,
    config_region,
    negative_control_region,
    parse_class,
    plane_projection_check,
    reflection_identity_check,
    region_for_generator,
    uniqueness_scan,
    verify_configuration,
)
from widthlab.frame import GeometryError


def test_parse_class():
    assert parse_class("A").kind == "vertex"
    assert parse_class("F_AE").kind == "apex_arc"
    assert parse_class("S_BA").labels == ("A", "B")
    assert parse_class("F_CD").kind == "patch"
    for bad in ("E", "S_AE", "F_AA", "X_AB", "AB"):
        with pytest.raises(GeometryError):
            parse_class(bad)


def test_region_examples(frame):
    assert not region_for_generator("F_AE").contains(frame["E"])[0]
    assert np.all(region_for_generator("A").contains(np.stack([frame[k] for k in "BCDE"]), 1e-12))
    assert not region_for_generator("F_AB").contains(frame["G"])[0]


def test_region_sides(frame):
    r = region_for_generator("S_AB")
    assert r.contains(np.zeros(4), 1e-12)[0]
    assert not r.contains(frame["A"])[0] and not r.contains(frame["B"])[0]
    for h in r.halfspaces:
        assert abs(h.signed(np.zeros((1, 4)))[0]) < 1e-12


def test_config_region_counts():
    # vertex class: four cone facets and the far facet; base arc: two planes
    assert len(config_region("A", "S_BC").halfspaces) == 7
    r = config_region("S_AB", "S_CD")
    assert len(r.halfspaces) == 4
    assert all(abs(h.offset) < 1e-12 for h in r.halfspaces)
    # the ABCD facet is shared by both patch classes
    assert len(config_region("F_AB", "F_CD").halfspaces) == 5
    with pytest.raises(GeometryError):
        config_region("A", "S_AB")


def test_unknown_configuration():
    with pytest.raises(GeometryError):
        verify_configuration("9z")


@pytest.mark.parametrize("cfg", ["3d", "4b"])
def test_lp_infeasible_configurations(cfg):
    rep = verify_configuration(cfg, budget=1000)
    assert not rep.lp_feasible and rep.verdict == PASS


def test_depth_certificate():
    rep = verify_configuration("3b", budget=1000)
    assert rep.method == "depth-certificate" and rep.depth_upper < 0 and rep.verdict == PASS


@pytest.mark.parametrize("cfg", ["1a", "2b", "4a"])
def test_thin_configurations_touch_M0(cfg):
    rep = verify_configuration(cfg, budget=1000)
    assert rep.method == "extreme-points"
    assert rep.verdict == PASS and rep.max_distance_to_M0 <= 1e-6


def test_zero_budget_is_inconclusive():
    assert verify_configuration("1a", budget=0).verdict == INCONCLUSIVE
    # an empty region needs no samples
    assert verify_configuration("4b", budget=0).verdict == PASS


def test_negative_control_fails():
    rep = verify_configuration("4b", budget=20_000, region=negative_control_region())
    assert rep.verdict == FAIL


def test_config_3a_region_meets_boundary_off_M0():
    # the half-space region alone admits boundary points away from M0; none of
    # them is at unit distance from both generator classes
    rep = verify_configuration("3a", budget=20_000, seed=0)
    assert rep.verdict == FAIL
    assert rep.max_distance_to_M0 > 0.1
    assert rep.refined_violations == 0


def test_reports_reproducible():
    a = verify_configuration("3a", budget=5000, seed=3).to_json()
    b = verify_configuration("3a", budget=5000, seed=3).to_json()
    assert a == b


def test_bisector_AE():
    r = bisector_case_check(("A", "E"), n=4000, refine=4)
    assert r["verdict"] == PASS and r["solutions"] > 0
    np.testing.assert_allclose(r["midpoint_ball_distances"], 1.0, atol=1e-12)


def test_bisector_rejects_other_pairs():
    with pytest.raises(GeometryError):
        bisector_case_check(("B", "C"))


def test_uniqueness_scan_small():
    r = uniqueness_scan(n=40, seed=2)
    assert r["verdict"] == PASS
    assert r["scanned"] + r["skipped"] == 40
    assert r["max_endpoint_error"] <= 1e-6


def test_identities():
    assert reflection_identity_check(2000, 1)["max_abs_error"] <= 1e-12
    assert plane_projection_check(500, 1)["max_abs_error"] <= 1e-12
    c = collinearity_check(100, 1)
    assert c["max_end_distance"] <= 1e-6 and c["max_dist_error"] <= 1e-9


def test_configuration_table():
    assert len(CONFIGURATIONS) == 10
