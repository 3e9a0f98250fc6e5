"""Drive the HTTP inference service in-process.

Builds a throwaway checkpoint, mounts the FastAPI app on a test client,
and exercises the three endpoints the slider UI uses: /health, /score,
and /restore (automatic scores and manual ones).
"""

import io
import json

import numpy as np
from fastapi.testclient import TestClient

from modsr.checkpoint import config_hash, save_checkpoint
from modsr.images import encode_png, synthetic_image
from modsr.nets import NetConfig, init_params
from modsr.service import ServiceConfig, create_app

ckpt = "demo_out_service.ckpt"
net = NetConfig(udem_channels=8, udem_blocks=2, gen_channels=8, gen_blocks=2)
save_checkpoint(ckpt, init_params(0, net, dtype=np.float32), None, 0, config_hash(net))

app = create_app(ServiceConfig(checkpoint=ckpt, max_edge=256))
client = TestClient(app)

print("GET /health ->", client.get("/health").json())

png = encode_png(synthetic_image(33, 32))
upload = {"image": ("img.png", io.BytesIO(png), "image/png")}

est = client.post("/score", files=upload).json()
print("POST /score ->", est)

upload = {"image": ("img.png", io.BytesIO(png), "image/png")}
r = client.post("/restore", files=upload)
print(f"POST /restore (automatic) -> {len(r.content)} PNG bytes, "
      f"used s_n={r.headers['X-Score-Noise']} s_b={r.headers['X-Score-Blur']}")

upload = {"image": ("img.png", io.BytesIO(png), "image/png")}
r = client.post("/restore", files=upload,
                data={"scores": json.dumps({"s_n": 1.0, "s_b": 1.0})})
print(f"POST /restore (manual 1,1) -> {len(r.content)} PNG bytes, "
      f"echoed s_n={r.headers['X-Score-Noise']}")
print("\nrun the real server with: modsr serve --checkpoint", ckpt)
