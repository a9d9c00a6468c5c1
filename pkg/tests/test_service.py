"""HTTP service endpoints."""

import pytest
from fastapi.testclient import TestClient

from voldist import __version__
from voldist.service import app

BALL = {"type": "ellipsoid", "center": [0.0, 0.0, 0.0],
        "linear": [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]}
PARABOLOID = {"type": "quartic_graph", "c": 0.0, "a": [0.0] * 5,
              "domain_radius": 0.8}


@pytest.fixture(scope="module")
def client():
    with TestClient(app) as c:
        yield c


def test_health(client):
    resp = client.get("/health")
    assert resp.status_code == 200
    assert resp.json() == {"status": "ok", "version": __version__}


def test_run_volume_distance(client):
    resp = client.post("/run", json={
        "task": "volume_distance", "body": BALL,
        "points": [[0.5, 0.0, 0.0]]})
    assert resp.status_code == 200
    data = resp.json()
    assert data["status"] == "ok"
    assert data["task"] == "volume_distance"
    assert all(c["passed"] for c in data["checks"])
    assert data["csv"].startswith("# x,y,z,v,b,")
    entry = data["report"]["points"][0]
    assert entry["volume_distance"] == pytest.approx(0.6544984694978736,
                                                     abs=1e-10)


def test_run_asymptotics(client):
    resp = client.post("/run", json={
        "task": "asymptotics", "body": PARABOLOID,
        "base_point": [0.0, 0.0, 0.0],
        "ladder": {"count": 4}})
    assert resp.status_code == 200
    data = resp.json()
    assert data["status"] == "ok"
    assert all(c["passed"] for c in data["checks"])
    assert data["csv"].startswith("# t,Q11,Q12,Q22,")


def test_validate_endpoint_forces_the_task(client):
    resp = client.post("/validate", json={
        "task": "volume_distance", "body": PARABOLOID,
        "points": [[0.0, 0.0, 0.1]],
        "quadrature": {"circle_nodes": 128, "depth_nodes": 32}})
    assert resp.status_code == 200
    data = resp.json()
    assert data["task"] == "validate"
    assert data["status"] == "ok"
    assert data["csv"] is None


def test_schema_violation_is_422(client):
    resp = client.post("/run", json={
        "task": "volume_distance", "body": BALL})
    assert resp.status_code == 422


def test_unknown_field_is_422(client):
    resp = client.post("/run", json={
        "task": "volume_distance", "body": BALL,
        "points": [[0.5, 0.0, 0.0]], "surprise": 1})
    assert resp.status_code == 422


def test_semantically_invalid_body_is_422(client):
    resp = client.post("/run", json={
        "task": "volume_distance",
        "body": {"type": "quartic_graph", "c": 10.0, "a": [0.0] * 5,
                 "domain_radius": 0.8},
        "points": [[0.0, 0.0, 0.1]]})
    assert resp.status_code == 422
    assert "rejected" in resp.json()["detail"]


def test_exterior_point_is_422(client):
    resp = client.post("/run", json={
        "task": "volume_distance", "body": BALL,
        "points": [[2.0, 0.0, 0.0]]})
    assert resp.status_code == 422


def test_numerical_failure_is_200_with_failed_status(client):
    resp = client.post("/run", json={
        "task": "volume_distance", "body": BALL,
        "points": [[0.0, 0.0, 0.0]]})
    assert resp.status_code == 200
    data = resp.json()
    assert data["status"] == "computation_failed"
    assert "NotPositiveDefinite" in data["error"]
    assert data["checks"] == []
