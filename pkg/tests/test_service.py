import io
import json
import threading
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest
from fastapi.testclient import TestClient

from modsr.checkpoint import config_hash, save_checkpoint
from modsr.images import encode_png, synthetic_image
from modsr.nets import NetConfig, init_params
from modsr.service import ModelSnapshot, ServiceConfig, create_app, load_snapshot

TINY = NetConfig(udem_channels=4, udem_blocks=2, gen_channels=4, gen_blocks=2, cond_hidden=4)


@pytest.fixture(scope="module")
def ckpt_path(tmp_path_factory):
    path = tmp_path_factory.mktemp("svc") / "svc.ckpt"
    models = init_params(1, TINY, dtype=np.float32)
    save_checkpoint(str(path), models, None, 0, config_hash(TINY))
    return str(path)


@pytest.fixture(scope="module")
def client(ckpt_path):
    cfg = ServiceConfig(checkpoint=ckpt_path, max_edge=64)
    app = create_app(cfg)
    with TestClient(app) as c:
        yield c


def _png(seed=5, size=16) -> bytes:
    return encode_png(synthetic_image(seed, size))


def _upload(data: bytes):
    return {"image": ("img.png", io.BytesIO(data), "image/png")}


def test_health_reports_hashes(client):
    r = client.get("/health")
    assert r.status_code == 200
    body = r.json()
    assert body["status"] == "ok"
    assert len(body["checkpoint_hash"]) == 16
    assert len(body["config_hash"]) == 16


def test_score_returns_clamped_pair(client):
    r = client.post("/score", files=_upload(_png()))
    assert r.status_code == 200
    body = r.json()
    assert 0.0 <= body["s_n"] <= 1.0 and 0.0 <= body["s_b"] <= 1.0


def test_score_is_deterministic(client):
    a = client.post("/score", files=_upload(_png())).json()
    b = client.post("/score", files=_upload(_png())).json()
    assert a == b


def test_malformed_image_400(client):
    r = client.post("/score", files=_upload(b"not an image at all"))
    assert r.status_code == 400


def test_oversized_image_413(client):
    r = client.post("/score", files=_upload(_png(size=128)))  # max_edge=64
    assert r.status_code == 413


def test_model_not_loaded_503(ckpt_path):
    app = create_app(ServiceConfig(checkpoint=ckpt_path), load=False)
    with TestClient(app) as c:
        assert c.post("/score", files=_upload(_png())).status_code == 503
        assert c.post("/restore", files=_upload(_png())).status_code == 503
        # reload brings it up
        assert c.post("/admin/reload").status_code == 200
        assert c.post("/score", files=_upload(_png())).status_code == 200


def test_restore_roundtrip_and_headers(client):
    r = client.post("/restore", files=_upload(_png()),
                    data={"scores": json.dumps({"s_n": 0.5, "s_b": 0.5})})
    assert r.status_code == 200
    assert r.headers["content-type"] == "image/png"
    assert r.headers["X-Score-Noise"] == "0.500000"
    assert r.headers["X-Score-Blur"] == "0.500000"


def test_restore_determinism_byte_identical(client):
    body = {"scores": json.dumps({"s_n": 0.25, "s_b": 0.75})}
    a = client.post("/restore", files=_upload(_png()), data=body)
    b = client.post("/restore", files=_upload(_png()), data=body)
    assert a.content == b.content


def test_restore_without_scores_echoes_score_endpoint(client):
    est = client.post("/score", files=_upload(_png())).json()
    r = client.post("/restore", files=_upload(_png()))
    assert r.status_code == 200
    assert float(r.headers["X-Score-Noise"]) == pytest.approx(est["s_n"], abs=1e-6)
    assert float(r.headers["X-Score-Blur"]) == pytest.approx(est["s_b"], abs=1e-6)


def test_restore_rejects_nonfinite_scores_422(client):
    for bad in ('{"s_n": NaN, "s_b": 0.5}', '{"s_n": Infinity, "s_b": 0}',
                '{"s_n": 0.5}', "junk"):
        r = client.post("/restore", files=_upload(_png()), data={"scores": bad})
        assert r.status_code == 422, bad


def test_timeout_yields_504(ckpt_path):
    cfg = ServiceConfig(checkpoint=ckpt_path, timeout_s=1e-6)
    app = create_app(cfg)
    with TestClient(app) as c:
        r = c.post("/restore", files=_upload(_png()),
                   data={"scores": json.dumps({"s_n": 0.5, "s_b": 0.5})})
        assert r.status_code == 504


def test_concurrent_equals_serial(client):
    payloads = [(_png(seed=100 + i), json.dumps({"s_n": 0.1 * i, "s_b": 0.05 * i}))
                for i in range(16)]

    def call(arg):
        png, scores = arg
        r = client.post("/restore", files=_upload(png), data={"scores": scores})
        assert r.status_code == 200
        return r.content

    serial = [call(p) for p in payloads]
    with ThreadPoolExecutor(max_workers=16) as pool:
        concurrent = list(pool.map(call, payloads))
    assert serial == concurrent


def test_env_overrides():
    import os
    os.environ["MODSR_BIND"] = "0.0.0.0:9005"
    os.environ["MODSR_CHECKPOINT"] = "/tmp/some.ckpt"
    try:
        cfg = ServiceConfig.from_env()
        assert cfg.host == "0.0.0.0" and cfg.port == 9005
        assert cfg.checkpoint == "/tmp/some.ckpt"
    finally:
        del os.environ["MODSR_BIND"]
        del os.environ["MODSR_CHECKPOINT"]


def test_access_log_lines_are_json(client, caplog):
    import logging
    with caplog.at_level(logging.INFO, logger="modsr.access"):
        client.get("/health")
    records = [r for r in caplog.records if r.name == "modsr.access"]
    assert records
    entry = json.loads(records[-1].message)
    assert entry["method"] == "GET" and entry["path"] == "/health"
    assert entry["status"] == 200 and "ms" in entry
