"""HTTP analysis service: sessions, stage images, deltas, and errors."""

import numpy as np
import pytest
from fastapi.testclient import TestClient

from gelband import (
    GrayImage,
    SyntheticSpec,
    image_png_bytes,
    synth_gel,
)
from gelband.service import MAX_SESSIONS, Session, SessionStore, create_app


def gel_png_bytes(seed=77, lanes=1, bands=(2,), amp=150.0):
    spec = SyntheticSpec(seed=seed, width=96, height=128, lanes=lanes,
                         bands_per_lane=bands,
                         band_amplitudes=(amp,) * sum(bands),
                         band_sigmas=((4.0, 4.0),) * sum(bands))
    img, _ = synth_gel(spec)
    return image_png_bytes(img)


def pgm_bytes(pixels):
    img = GrayImage(pixels)
    body = img.quantized().astype(">u1").tobytes()
    return f"P5\n{img.width} {img.height}\n255\n".encode() + body


@pytest.fixture()
def client():
    return TestClient(create_app())


def make_session(client, data=None, name="gel.png"):
    payload = gel_png_bytes() if data is None else data
    resp = client.post(f"/api/sessions?name={name}", content=payload)
    assert resp.status_code == 200, resp.text
    return resp.json()


class TestSessionCreation:
    def test_png_upload(self, client):
        doc = make_session(client)
        assert doc["width"] == 96
        assert doc["height"] == 128
        assert doc["bit_depth"] == 8
        assert doc["config"]["axis"] == "columns"
        assert doc["config"]["se"] == "disk:10"

    def test_pgm_upload(self, client):
        rng = np.random.Generator(np.random.PCG64(3))
        data = pgm_bytes(np.floor(rng.random((40, 40)) * 200.0))
        doc = make_session(client, data=data, name="gel.pgm")
        assert doc["width"] == 40

    def test_empty_body_rejected(self, client):
        resp = client.post("/api/sessions", content=b"")
        assert resp.status_code == 400
        assert resp.json()["error"]["code"] == "bad_request"

    def test_unknown_container_rejected(self, client):
        resp = client.post("/api/sessions", content=b"definitely not an image")
        assert resp.status_code == 415
        assert resp.json()["error"]["code"] == "unsupported_format"

    def test_cross_origin_requests_allowed(self, client):
        doc = make_session(client)
        resp = client.get(
            f"/api/sessions/{doc['id']}/bands",
            headers={"Origin": "http://localhost:9000"},
        )
        assert resp.status_code == 200
        assert resp.headers["access-control-allow-origin"] == "*"
        preflight = client.options(
            f"/api/sessions/{doc['id']}/analyze",
            headers={
                "Origin": "http://localhost:9000",
                "Access-Control-Request-Method": "POST",
            },
        )
        assert preflight.status_code == 200
        assert "POST" in preflight.headers["access-control-allow-methods"]


class TestStageImages:
    def test_each_default_stage_served_as_png(self, client):
        sid = make_session(client)["id"]
        for stage in ("input", "thresholded", "shifted", "filtered"):
            resp = client.get(f"/api/sessions/{sid}/image?stage={stage}")
            assert resp.status_code == 200
            assert resp.headers["content-type"] == "image/png"
            assert resp.content.startswith(b"\x89PNG\r\n\x1a\n")

    def test_normalize_flag(self, client):
        sid = make_session(client)["id"]
        resp = client.get(f"/api/sessions/{sid}/image?stage=filtered&normalize=1")
        assert resp.status_code == 200
        assert resp.content.startswith(b"\x89PNG\r\n\x1a\n")

    def test_enhanced_stage_missing_until_enabled(self, client):
        sid = make_session(client)["id"]
        resp = client.get(f"/api/sessions/{sid}/image?stage=enhanced")
        assert resp.status_code == 404
        assert resp.json()["error"]["code"] == "unknown_stage"
        client.post(f"/api/sessions/{sid}/analyze", json={"enhance": True})
        resp = client.get(f"/api/sessions/{sid}/image?stage=enhanced")
        assert resp.status_code == 200

    def test_made_up_stage_name(self, client):
        sid = make_session(client)["id"]
        resp = client.get(f"/api/sessions/{sid}/image?stage=sharpened")
        assert resp.status_code == 404


class TestAnalyze:
    def test_empty_deltas_return_current_analysis(self, client):
        sid = make_session(client)["id"]
        doc = client.post(f"/api/sessions/{sid}/analyze", json={}).json()
        assert doc["decision"]["source"] == "automatic"
        assert len(doc["bands"]) == 2
        assert doc["config"]["enhance"] is False

    def test_deltas_change_the_config(self, client):
        sid = make_session(client)["id"]
        doc = client.post(f"/api/sessions/{sid}/analyze",
                          json={"min_band_area": 30, "se": "disk:6"}).json()
        assert doc["config"]["min_band_area"] == 30
        assert doc["config"]["se"] == "disk:6"

    def test_deltas_accumulate_across_calls(self, client):
        sid = make_session(client)["id"]
        client.post(f"/api/sessions/{sid}/analyze", json={"min_band_area": 30})
        doc = client.post(f"/api/sessions/{sid}/analyze", json={"enhance": True}).json()
        assert doc["config"]["min_band_area"] == 30
        assert doc["config"]["enhance"] is True

    def test_unknown_key_rejected(self, client):
        sid = make_session(client)["id"]
        resp = client.post(f"/api/sessions/{sid}/analyze", json={"sharpness": 3})
        assert resp.status_code == 400
        assert resp.json()["error"]["code"] == "bad_request"

    def test_non_object_body_rejected(self, client):
        sid = make_session(client)["id"]
        resp = client.post(f"/api/sessions/{sid}/analyze", content=b"not json")
        assert resp.status_code == 400

    def test_failed_delta_keeps_previous_config(self, client):
        sid = make_session(client)["id"]
        client.post(f"/api/sessions/{sid}/analyze", json={})
        resp = client.post(f"/api/sessions/{sid}/analyze",
                           json={"prominence_frac": 5.0})
        assert resp.status_code == 422
        doc = client.post(f"/api/sessions/{sid}/analyze", json={}).json()
        assert doc["config"]["prominence_frac"] == 0.05


class TestBandsAndRatio:
    def test_bands_listing(self, client):
        sid = make_session(client)["id"]
        doc = client.get(f"/api/sessions/{sid}/bands").json()
        assert len(doc["bands"]) == 2
        assert {b["label"] for b in doc["bands"]} == {1, 2}
        assert doc["decision"]["source"] == "automatic"

    def test_ratio_value(self, client):
        sid = make_session(client)["id"]
        bands = client.get(f"/api/sessions/{sid}/bands").json()["bands"]
        areas = {b["label"]: b["area"] for b in bands}
        doc = client.post(f"/api/sessions/{sid}/ratio",
                          json={"ref": 1, "n": 2}).json()
        assert doc["ratio"] == pytest.approx(areas[2] / (areas[1] + areas[2]))

    def test_ratio_unknown_band(self, client):
        sid = make_session(client)["id"]
        resp = client.post(f"/api/sessions/{sid}/ratio", json={"ref": 1, "n": 9})
        assert resp.status_code == 404
        assert resp.json()["error"]["code"] == "unknown_band"

    def test_ratio_missing_labels(self, client):
        sid = make_session(client)["id"]
        resp = client.post(f"/api/sessions/{sid}/ratio", json={"ref": 1})
        assert resp.status_code == 400


class TestReportEndpoint:
    def test_writes_files(self, client, tmp_path):
        sid = make_session(client)["id"]
        out = tmp_path / "run"
        doc = client.post(f"/api/sessions/{sid}/report",
                          json={"out": str(out), "reference": 1}).json()
        assert doc["dir"] == str(out)
        assert (out / "report.json").exists()
        assert (out / "bands.csv").exists()
        assert (out / "overlay.png").exists()

    def test_unknown_reference(self, client, tmp_path):
        sid = make_session(client)["id"]
        resp = client.post(f"/api/sessions/{sid}/report",
                           json={"out": str(tmp_path / "r"), "reference": 9})
        assert resp.status_code == 404


class TestErrors:
    def test_unknown_session_everywhere(self, client):
        for method, url in [
            ("get", "/api/sessions/nope/image"),
            ("get", "/api/sessions/nope/bands"),
            ("post", "/api/sessions/nope/analyze"),
            ("post", "/api/sessions/nope/ratio"),
            ("post", "/api/sessions/nope/report"),
        ]:
            resp = getattr(client, method)(url, **({"json": {}} if method == "post" else {}))
            assert resp.status_code == 404
            assert resp.json()["error"]["code"] == "unknown_session"

    def test_pipeline_error_shape(self, client):
        data = pgm_bytes(np.full((32, 32), 9.0))
        sid = make_session(client, data=data, name="flat.pgm")["id"]
        resp = client.get(f"/api/sessions/{sid}/bands")
        assert resp.status_code == 422
        err = resp.json()["error"]
        assert err["code"] == "constant_image"
        assert err["stage"] == "thresholded"
        assert err["message"]

    def test_no_peaks_carries_alpha_hint(self, client):
        sid = make_session(client)["id"]
        resp = client.post(f"/api/sessions/{sid}/analyze",
                           json={"prominence_frac": 5.0})
        assert resp.status_code == 422
        err = resp.json()["error"]
        assert err["code"] == "no_peaks"
        assert "alpha override" in err["message"]


class TestSessionStore:
    def tiny_session(self, tag):
        img = GrayImage(np.zeros((2, 2)))
        return Session(id=tag, image=img, source={"path": tag, "sha256": ""})

    def test_lru_eviction_order(self):
        store = SessionStore(capacity=2)
        store.add(self.tiny_session("a"))
        store.add(self.tiny_session("b"))
        store.get("a")
        store.add(self.tiny_session("c"))
        assert len(store) == 2
        store.get("a")
        store.get("c")
        from gelband.service import ServiceError
        with pytest.raises(ServiceError):
            store.get("b")

    def test_capacity_bound_through_the_api(self, client):
        first = make_session(client)["id"]
        for k in range(MAX_SESSIONS):
            make_session(client, data=gel_png_bytes(seed=100 + k))
        resp = client.get(f"/api/sessions/{first}/bands")
        assert resp.status_code == 404
        assert resp.json()["error"]["code"] == "unknown_session"
