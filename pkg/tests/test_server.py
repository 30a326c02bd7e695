import base64
import io
import threading

import numpy as np
import pytest
from fastapi.testclient import TestClient
from PIL import Image

from actfloor import genlab, procgen
from actfloor.server import create_app, load_dataset_index

from conftest import boundary_png_bytes


@pytest.fixture(scope="module")
def index(dataset_dir):
    return load_dataset_index(dataset_dir)


@pytest.fixture()
def client(index):
    return TestClient(create_app(index=index))


@pytest.fixture()
def bare_client():
    return TestClient(create_app(index=genlab.DatasetIndex()))


def _new_session(client, seed=2):
    png = boundary_png_bytes(procgen.generate_floorplan(seed=seed))
    r = client.post("/v1/sessions",
                    json={"boundary_png": base64.b64encode(png).decode()})
    assert r.status_code == 201
    return r.json()["session_id"]


class TestSessions:
    def test_create_json_and_raw(self, client):
        png = boundary_png_bytes(procgen.generate_floorplan(seed=1))
        r1 = client.post("/v1/sessions",
                         json={"boundary_png": base64.b64encode(png).decode()})
        r2 = client.post("/v1/sessions", content=png,
                         headers={"content-type": "image/png"})
        assert r1.status_code == r2.status_code == 201
        assert r1.json()["session_id"] != r2.json()["session_id"]
        assert r1.json()["mode"] == "Manual"

    def test_bad_boundary(self, client):
        r = client.post("/v1/sessions", content=b"not a png",
                        headers={"content-type": "image/png"})
        assert r.status_code == 400
        assert r.json()["error"] == "BadBoundary"

    def test_open_ring_rejected(self, client):
        rgb = np.zeros((64, 64, 3), dtype=np.uint8)
        rgb[10, 10:50, 0] = 255  # a ring that encloses nothing
        rgb[10:40, 10:50, 1] = 255
        rgb[20, 10, 2] = 255
        buf = io.BytesIO()
        Image.fromarray(rgb).save(buf, format="PNG")
        r = client.post("/v1/sessions", content=buf.getvalue(),
                        headers={"content-type": "image/png"})
        assert r.status_code == 400

    def test_unknown_session_404(self, client):
        assert client.get("/v1/sessions/nope/recommendations").status_code == 404


class TestRecommendations:
    def test_self_match_first(self, client):
        sid = _new_session(client, seed=3)
        r = client.get(f"/v1/sessions/{sid}/recommendations", params={"top": 3})
        results = r.json()["results"]
        assert len(results) == 3
        assert results[0]["id"] == "p3"
        assert results[0]["distance"] == 0.0
        dists = [e["distance"] for e in results]
        assert dists == sorted(dists)
        assert all("furniture" in e for e in results)

    def test_index_not_loaded(self, bare_client):
        sid = _new_session(bare_client)
        r = bare_client.get(f"/v1/sessions/{sid}/recommendations")
        assert r.status_code == 503
        assert r.json()["error"] == "IndexNotLoaded"


class TestFurniture:
    def test_add_move_remove(self, client):
        sid = _new_session(client)
        r = client.post(f"/v1/sessions/{sid}/furniture",
                        json={"op": "add", "kind": "Bed", "rect": [60, 60, 30, 40]})
        assert r.status_code == 200
        inst = r.json()["instance"]
        assert inst["kind"] == "Bed" and "entrance" in inst
        iid = inst["room_id"]
        r = client.post(f"/v1/sessions/{sid}/furniture",
                        json={"op": "move", "room_id": iid, "rect": [70, 70, 30, 40]})
        assert r.status_code == 200
        assert r.json()["instance"]["rect"] == [70, 70, 30, 40]
        r = client.post(f"/v1/sessions/{sid}/furniture",
                        json={"op": "remove", "room_id": iid})
        assert r.status_code == 200 and r.json()["furniture"] == []
        r = client.post(f"/v1/sessions/{sid}/furniture",
                        json={"op": "remove", "room_id": iid})
        assert r.status_code == 404

    def test_out_of_boundary_atomic(self, client):
        sid = _new_session(client)
        client.post(f"/v1/sessions/{sid}/furniture",
                    json={"op": "add", "kind": "Bed", "rect": [60, 60, 30, 40]})
        r = client.post(f"/v1/sessions/{sid}/furniture",
                        json={"op": "move", "room_id": 1, "rect": [-10, 60, 30, 40]})
        assert r.status_code == 409
        assert r.json()["error"] == "OutOfBoundary"

    def test_apply_recommendation(self, client):
        sid = _new_session(client, seed=3)
        r = client.post(f"/v1/sessions/{sid}/furniture",
                        json={"op": "apply", "plan_id": "p3"})
        assert r.status_code == 200
        assert len(r.json()["furniture"]) >= 1

    def test_apply_unknown_plan(self, client):
        sid = _new_session(client)
        r = client.post(f"/v1/sessions/{sid}/furniture",
                        json={"op": "apply", "plan_id": "ghost"})
        assert r.status_code == 404


class TestActivity:
    def test_manual_requires_furniture(self, client):
        sid = _new_session(client)
        r = client.post(f"/v1/sessions/{sid}/activity", params={"mode": "Manual"})
        assert r.status_code == 422
        assert r.json()["error"] == "NoConnectivity"

    def test_manual_support_inside(self, client):
        sid = _new_session(client, seed=2)
        for rect in ([60, 60, 30, 40], [120, 100, 16, 8], [150, 150, 8, 12]):
            kind = {30: "Bed", 16: "Desk", 8: "Toilet"}[rect[2]]
            assert client.post(f"/v1/sessions/{sid}/furniture",
                               json={"op": "add", "kind": kind, "rect": rect}
                               ).status_code == 200
        r = client.post(f"/v1/sessions/{sid}/activity",
                        params={"mode": "Manual", "seed": 0})
        assert r.status_code == 200
        png = base64.b64decode(r.json()["activity_png"])
        density = np.asarray(Image.open(io.BytesIO(png)))
        fp = procgen.generate_floorplan(seed=2)
        assert not density[fp.inside == 0].any()

    def test_same_seed_byte_identical(self, client):
        sid = _new_session(client)
        client.post(f"/v1/sessions/{sid}/furniture",
                    json={"op": "add", "kind": "Bed", "rect": [60, 60, 30, 40]})
        r1 = client.post(f"/v1/sessions/{sid}/activity",
                         params={"mode": "Manual", "seed": 5})
        r2 = client.post(f"/v1/sessions/{sid}/activity",
                         params={"mode": "Manual", "seed": 5})
        assert r1.json()["activity_png"] == r2.json()["activity_png"]

    def test_auto_mode(self, client):
        sid = _new_session(client)
        r = client.post(f"/v1/sessions/{sid}/activity",
                        params={"mode": "Auto", "seed": 0})
        assert r.status_code == 200


class TestGenerate:
    def _ready_session(self, client, seed=2):
        sid = _new_session(client, seed=seed)
        client.post(f"/v1/sessions/{sid}/furniture",
                    json={"op": "add", "kind": "Bed", "rect": [60, 60, 30, 40]})
        client.post(f"/v1/sessions/{sid}/activity",
                    params={"mode": "Manual", "seed": 0})
        return sid

    def test_before_activity_422(self, client):
        sid = _new_session(client)
        r = client.post(f"/v1/sessions/{sid}/generate")
        assert r.status_code == 422
        assert r.json()["error"] == "MissingActivity"

    def test_artifacts_and_determinism(self, client):
        sid = self._ready_session(client)
        r1 = client.post(f"/v1/sessions/{sid}/generate", params={"seed": 0})
        assert r1.status_code == 200
        assert set(r1.json()) == {"category_png", "vector", "svg", "success"}
        r2 = client.post(f"/v1/sessions/{sid}/generate", params={"seed": 0})
        assert r1.json() == r2.json()

    def test_confinement_invariant(self, client):
        sid = self._ready_session(client, seed=2)
        r = client.post(f"/v1/sessions/{sid}/generate", params={"seed": 0})
        cat = np.asarray(Image.open(io.BytesIO(base64.b64decode(
            r.json()["category_png"]))))
        fp = procgen.generate_floorplan(seed=2)
        assert genlab.confinement_holds(cat, fp.inside)

    def test_invalidation_after_mutation(self, client):
        sid = self._ready_session(client)
        client.post(f"/v1/sessions/{sid}/furniture",
                    json={"op": "add", "kind": "Toilet", "rect": [150, 150, 8, 12]})
        r = client.post(f"/v1/sessions/{sid}/generate")
        assert r.status_code == 422


class TestIsolation:
    def test_sessions_do_not_leak(self, client):
        a = _new_session(client, seed=2)
        b = _new_session(client, seed=3)
        client.post(f"/v1/sessions/{a}/furniture",
                    json={"op": "add", "kind": "Bed", "rect": [60, 60, 30, 40]})
        r = client.post(f"/v1/sessions/{b}/activity", params={"mode": "Manual"})
        assert r.status_code == 422  # b is still empty

    def test_concurrent_mutations(self, client):
        sids = [_new_session(client, seed=2) for _ in range(4)]
        errors = []

        def hammer(sid, k):
            try:
                for i in range(10):
                    r = client.post(f"/v1/sessions/{sid}/furniture",
                                    json={"op": "add", "kind": "Bed",
                                          "rect": [60 + k, 60 + i, 10, 10]})
                    assert r.status_code in (200, 409)
            except Exception as e:  # pragma: no cover
                errors.append(e)

        threads = [threading.Thread(target=hammer, args=(sid, k))
                   for k, sid in enumerate(sids)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert not errors
        for sid in sids:
            r = client.post(f"/v1/sessions/{sid}/furniture",
                            json={"op": "add", "kind": "Toilet",
                                  "rect": [150, 150, 8, 12]})
            assert len(r.json()["furniture"]) >= 2
