import json

import pytest

from widthlab import report
from widthlab.caseverify import FAIL, INCONCLUSIVE, PASS
from widthlab.config import Config


def test_worst():
    assert report._worst([PASS, PASS]) == PASS
    assert report._worst([PASS, INCONCLUSIVE]) == INCONCLUSIVE
    assert report._worst([INCONCLUSIVE, FAIL, PASS]) == FAIL


def test_exit_codes():
    assert [report.exit_code(v) for v in (PASS, FAIL, INCONCLUSIVE)] == [0, 1, 3]


def test_crashing_check_is_failure(monkeypatch):
    def boom(cfg):
        raise RuntimeError("kaboom")

    monkeypatch.setitem(report.CHECKS, "frame", boom)
    doc = report.run_report(Config(seed=1), ["frame"])
    assert doc["verdict"] == FAIL and doc["failed"] == ["frame"]
    assert "kaboom" in doc["checks"]["frame"]["error"]


def test_aggregation(monkeypatch):
    monkeypatch.setitem(report.CHECKS, "frame", lambda cfg: (PASS, {}))
    monkeypatch.setitem(report.CHECKS, "width", lambda cfg: (INCONCLUSIVE, {}))
    doc = report.run_report(Config(seed=1), ["frame", "width"], defaults=True)
    assert doc["verdict"] == INCONCLUSIVE and doc["inconclusive"] == ["width"]
    assert doc["config_source"] == "defaults"
    assert set(doc["timing"]["seconds"]) == {"frame", "width"}


def test_closed_form_arcs_match_shadow():
    import numpy as np

    from widthlab.shadow import all_arcs

    t = np.linspace(0, np.pi / 2, 11)
    for arc in all_arcs():
        np.testing.assert_allclose(arc.point(t), report.closed_form_arc(arc.label[-2:], t), atol=1e-14)


@pytest.mark.parametrize("name", ["frame", "reflection_identity", "spindle"])
def test_cheap_checks_pass(name):
    cfg = Config(seed=4, reflection_draws=500, spindle_instances=2, monotonicity_triples=300)
    entry, _ = report.run_check(name, cfg)
    assert entry["verdict"] == PASS, entry


def test_report_deterministic():
    cfg = Config(seed=4, reflection_draws=300, spindle_instances=2, monotonicity_triples=300)
    names = ["frame", "reflection_identity", "spindle"]
    a = report.dumps(report.strip_timing(report.run_report(cfg, names)))
    b = report.dumps(report.strip_timing(report.run_report(cfg, names)))
    assert a == b
    doc = json.loads(a)
    assert "timing" not in doc and doc["schema"] == report.SCHEMA
