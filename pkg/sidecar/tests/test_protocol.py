"""Protocol conformance for the stub-mode sidecar.

The shared golden fixture file is the bit-exact contract with clients
that compute the stub scores locally.
"""

import json
from pathlib import Path

import pytest
from fastapi.testclient import TestClient

from qe_sidecar import create_app

GOLDEN = Path(__file__).resolve().parents[2] / "golden" / "qe_stub_cases.json"


@pytest.fixture(scope="module")
def client() -> TestClient:
    return TestClient(create_app(stub_mode=True))


def test_health_schema_exact(client):
    resp = client.get("/v1/health")
    assert resp.status_code == 200
    body = resp.json()
    assert set(body) == {"scorers", "stub_mode"}
    assert body["stub_mode"] is True
    assert body["scorers"] == ["stub-chrf3", "stub-chrf3-ref", "stub-lcs"]


def test_golden_cases_bit_identical(client):
    cases = json.loads(GOLDEN.read_text(encoding="utf-8"))
    assert cases, "golden fixture must not be empty"
    for case in cases:
        if case["kind"] == "sentence":
            resp = client.post(
                "/v1/score_sentence",
                json={"src": case["src"], "cand": case["cand"], "scorer": "stub-chrf3"},
            )
            assert resp.status_code == 200, resp.text
            assert resp.json()["value"] == case["value"], case
            assert resp.json()["convention"] == "higher_better"
        elif case["kind"] == "sentence_ref":
            resp = client.post(
                "/v1/score_sentence",
                json={
                    "src": case["src"],
                    "cand": case["cand"],
                    "ref": case["ref"],
                    "scorer": "stub-chrf3-ref",
                },
            )
            assert resp.status_code == 200, resp.text
            assert resp.json()["value"] == case["value"], case
        else:
            resp = client.post(
                "/v1/score_span",
                json={
                    "host": case["host"],
                    "counterpart": case["counterpart"],
                    "span": case["span"],
                    "direction": case["direction"],
                    "scorer": "stub-lcs",
                },
            )
            assert resp.status_code == 200, resp.text
            assert resp.json()["value"] == case["value"], case


def test_identical_requests_identical_values(client):
    body = {"src": "源句子", "cand": "候选译文", "scorer": "stub-chrf3"}
    first = client.post("/v1/score_sentence", json=body).json()
    second = client.post("/v1/score_sentence", json=body).json()
    assert first == second


def test_span_verbatim_in_counterpart_is_zero(client):
    resp = client.post(
        "/v1/score_span",
        json={
            "host": "irrelevant",
            "counterpart": "the abcd here",
            "span": "abcd",
            "direction": "source_span_vs_translation",
            "scorer": "stub-lcs",
        },
    )
    assert resp.json()["value"] == 0.0


def test_missing_field_is_400(client):
    resp = client.post("/v1/score_sentence", json={"src": "x", "scorer": "stub-chrf3"})
    assert resp.status_code == 400
    assert "error" in resp.json()


def test_non_json_body_is_400(client):
    resp = client.post(
        "/v1/score_sentence", content=b"not json", headers={"Content-Type": "application/json"}
    )
    assert resp.status_code == 400
    assert "error" in resp.json()


def test_unknown_scorer_is_400(client):
    resp = client.post(
        "/v1/score_sentence", json={"src": "x", "cand": "y", "scorer": "nope"}
    )
    assert resp.status_code == 400
    assert "unknown sentence scorer" in resp.json()["error"]


def test_unknown_direction_is_400(client):
    resp = client.post(
        "/v1/score_span",
        json={
            "host": "h",
            "counterpart": "c",
            "span": "s",
            "direction": "sideways",
            "scorer": "stub-lcs",
        },
    )
    assert resp.status_code == 400


def test_empty_span_is_400(client):
    resp = client.post(
        "/v1/score_span",
        json={
            "host": "h",
            "counterpart": "c",
            "span": "",
            "direction": "source_span_vs_translation",
            "scorer": "stub-lcs",
        },
    )
    assert resp.status_code == 400


def test_ref_discipline(client):
    missing = client.post(
        "/v1/score_sentence", json={"src": "x", "cand": "y", "scorer": "stub-chrf3-ref"}
    )
    assert missing.status_code == 400
    assert "reference-based" in missing.json()["error"]
    extra = client.post(
        "/v1/score_sentence",
        json={"src": "x", "cand": "y", "ref": "z", "scorer": "stub-chrf3"},
    )
    assert extra.status_code == 400
    assert "reference-free" in extra.json()["error"]


def test_live_mode_without_models_still_serves_stubs(monkeypatch):
    for var in ("QE_SIDECAR_SENTENCE_MODEL", "QE_SIDECAR_REFERENCE_MODEL", "QE_SIDECAR_TOKEN_MODEL"):
        monkeypatch.delenv(var, raising=False)
    live_client = TestClient(create_app(stub_mode=False))
    body = live_client.get("/v1/health").json()
    assert body["stub_mode"] is False
    # No checkpoints present: live ids refuse to register, stubs remain.
    assert body["scorers"] == ["stub-chrf3", "stub-chrf3-ref", "stub-lcs"]
