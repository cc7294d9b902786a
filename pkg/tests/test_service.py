import math

import pytest
from fastapi.testclient import TestClient

from bell_lab.behavior import pr_box, uniform_behavior, CHSH_SCENARIO, chsh_expression
from bell_lab import serialization as ser
from bell_lab.service import app


@pytest.fixture(scope="module")
def client():
    return TestClient(app)


class TestHealth:
    def test_ok(self, client):
        r = client.get("/health")
        assert r.status_code == 200
        assert r.json()["status"] == "ok"


class TestChsh:
    def test_full_visibility_nonlocal(self, client):
        r = client.post("/chsh", json={"visibility": 1.0})
        assert r.status_code == 200
        body = r.json()
        assert abs(body["chsh"] - 2.0 * math.sqrt(2.0)) < 1e-9
        assert body["verdict"] == "nonlocal"
        assert abs(body["violationThreshold"] - math.sqrt(0.5)) < 1e-6

    def test_low_visibility_local(self, client):
        r = client.post("/chsh", json={"visibility": 0.3})
        assert r.json()["verdict"] == "local"

    def test_out_of_range_rejected(self, client):
        r = client.post("/chsh", json={"visibility": 1.5})
        assert r.status_code == 422


class TestMembership:
    def test_pr_box_nonlocal_with_witness(self, client):
        payload = {"behavior": ser.behavior_to_dict(pr_box())}
        r = client.post("/membership", json=payload)
        assert r.status_code == 200
        body = r.json()
        assert body["isLocal"] is False
        assert body["witnessValue"] > body["witness"]["localBound"] + 1e-9

    def test_uniform_local_with_weights(self, client):
        payload = {"behavior": ser.behavior_to_dict(uniform_behavior(CHSH_SCENARIO))}
        r = client.post("/membership", json=payload)
        body = r.json()
        assert body["isLocal"] is True
        total = sum(w["weight"] for w in body["weights"])
        assert abs(total - 1.0) < 1e-9

    def test_malformed_table_rejected(self, client):
        bad = ser.behavior_to_dict(uniform_behavior(CHSH_SCENARIO))
        bad["p"][0][0][0][0] = 0.9  # breaks normalization
        r = client.post("/membership", json={"behavior": bad})
        assert r.status_code == 400
        assert r.json()["error"] == "usage"


class TestLocalBound:
    def test_chsh_bounds(self, client):
        expr = ser.expression_to_dict(chsh_expression())
        r = client.post("/local-bound", json={"expression": expr})
        assert r.json() == {"localBound": 2.0, "algebraicBound": 4.0}

    def test_cap_exceeded_tag(self, client):
        expr = ser.expression_to_dict(chsh_expression())
        r = client.post("/local-bound", json={"expression": expr, "cap": 3})
        assert r.status_code == 400
        assert r.json()["error"] == "cap_exceeded"


class TestBilocal:
    def test_point_value(self, client):
        r = client.post("/bilocal/value", json={"v1": 1.0, "v2": 1.0})
        body = r.json()
        assert abs(body["sBiloc"] - math.sqrt(2.0)) < 1e-9
        assert body["violatesBilocal"] is True
        assert body["violatesCHSH"] is True

    def test_gap_region(self, client):
        r = client.post("/bilocal/value", json={"v1": 0.8, "v2": 0.8})
        body = r.json()
        assert body["violatesBilocal"] is True
        assert body["violatesCHSH"] is False

    def test_sweep_rows(self, client):
        r = client.post("/bilocal/sweep", json={"gridPoints": 5})
        rows = r.json()["rows"]
        assert len(rows) == 25
        for row in rows:
            assert abs(row["product"] - row["v1"] * row["v2"]) < 1e-12


class TestFreewill:
    def test_deficit(self, client):
        r = client.post("/freewill/deficit", json={"n": 4, "m": 2})
        assert r.json() == {"nChoices": 4, "mChoices": 2, "bits": 1.0}

    def test_deficit_usage_error(self, client):
        r = client.post("/freewill/deficit", json={"n": 2, "m": 4})
        assert r.status_code == 400
        assert r.json()["error"] == "usage"

    def test_detection_sim(self, client):
        r = client.post("/freewill/detection", json={"samples": 20000, "seed": 1})
        body = r.json()
        assert abs(body["stats"]["detectionRate"] - 0.5) < 0.02
        assert body["samplesPerPair"] == 20000

    def test_md_sim_reports_stats(self, client):
        r = client.post("/freewill/simulate", json={"samples": 20000, "seed": 1})
        body = r.json()
        assert body["stats"]["deficitBits"] >= 0.0
        assert abs(body["stats"]["chsh"] - 2.0 * math.sqrt(2.0)) < 0.1


class TestCovariance:
    def test_check_roundtrip(self, client):
        payload = {
            "model": {
                "scenario": {"nX": 2, "nY": 2, "nA": 2, "nB": 2},
                "prior": [1.0],
                "aliceFirst": [[0], [1]],
                "bobSecond": [[[1], [0]], [[1], [0]]],
                "bobFirst": [[1], [0]],
                "aliceSecond": [[[0], [0]], [[1], [1]]],
            }
        }
        r = client.post("/covariance/check", json=payload)
        body = r.json()
        assert body["covariant"] is True
        assert body["violations"] == []

    def test_check_flags_violations(self, client):
        payload = {
            "model": {
                "scenario": {"nX": 2, "nY": 2, "nA": 2, "nB": 2},
                "prior": [1.0],
                "aliceFirst": [[0], [0]],
                "bobSecond": [[[0], [0]], [[0], [0]]],
                "bobFirst": [[0], [0]],
                "aliceSecond": [[[0], [1]], [[0], [1]]],
            }
        }
        r = client.post("/covariance/check", json=payload)
        body = r.json()
        assert body["covariant"] is False
        assert len(body["violations"]) == 2

    def test_forces_locality(self, client):
        r = client.post(
            "/covariance/forces-locality",
            json={"lambdaCount": 1, "trials": 0, "seed": 0},
        )
        body = r.json()
        assert body["exhaustive"] is True
        assert body["modelsChecked"] == 16
        assert body["localityFailures"] == 0
        assert body["maxChsh"] == 2.0


class TestExpand:
    def test_ledger(self, client):
        stage = {
            "inputAlphabet": [2, 2],
            "outputAlphabet": [2, 2],
            "rounds": 1000,
            "chshValue": 2.0 * math.sqrt(2.0),
            "certifiedBitsProduced": 1000.0,
        }
        r = client.post("/expand/ledger", json={"stages": [stage], "seedBits": 2000.0})
        body = r.json()
        assert body["totalIn"] == 2000.0
        assert body["totalOut"] == 1000.0
        assert body["factor"] == 0.5

    def test_starvation_maps_to_usage(self, client):
        stage = {
            "inputAlphabet": [2, 2],
            "outputAlphabet": [2, 2],
            "rounds": 1000,
            "chshValue": 2.0,
            "certifiedBitsProduced": 0.0,
        }
        r = client.post("/expand/ledger", json={"stages": [stage], "seedBits": 10.0})
        assert r.status_code == 400
        assert r.json()["error"] == "usage"

    def test_qrng_simulation(self, client):
        r = client.post(
            "/expand/simulate",
            json={"rounds": 20000, "seed": 3, "includeBitstream": True},
        )
        body = r.json()
        assert abs(body["chsh"] - 2.0 * math.sqrt(2.0)) < 0.1
        assert len(body["bitstream"]) == 40000
        assert set(body["bitstream"]) <= {"0", "1"}

    def test_qrng_deterministic(self, client):
        r1 = client.post("/expand/simulate", json={"rounds": 5000, "seed": 3})
        r2 = client.post("/expand/simulate", json={"rounds": 5000, "seed": 3})
        assert r1.json() == r2.json()
