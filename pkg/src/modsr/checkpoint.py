"""Versioned binary checkpoint container.

Layout: magic, u32 format version, u64 header length, UTF-8 JSON header,
then raw little-endian array data. The header carries names, shapes,
dtypes and offsets for every parameter and optimizer-state array, plus
the net config, iteration counter and config hash. Save -> load -> save
is byte-identical.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import asdict, dataclass

import numpy as np

from modsr.autodiff import Tensor
from modsr.nets import Models, NetConfig, init_params

MAGIC = b"MODSRCK\x00"
FORMAT_VERSION = 1

_DTYPE_TAGS = {"<f8": np.dtype("<f8"), "<f4": np.dtype("<f4")}


def config_hash(*objs) -> str:
    """Stable sha256 over canonically serialized config objects."""
    blob = json.dumps([_canon(o) for o in objs], sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _canon(obj):
    if hasattr(obj, "__dataclass_fields__"):
        obj = asdict(obj)
    if isinstance(obj, dict):
        return {k: _canon(v) for k, v in sorted(obj.items())}
    if isinstance(obj, (list, tuple)):
        return [_canon(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


@dataclass
class ModelCheckpoint:
    version: int
    cfg_hash: str
    iteration: int
    net_config: NetConfig
    params: dict          # name -> np.ndarray, insertion-ordered
    adam: dict | None     # {"step": int, "m": {name: arr}, "v": {name: arr}}


def _dtype_tag(arr: np.ndarray) -> str:
    if arr.dtype == np.float64:
        return "<f8"
    if arr.dtype == np.float32:
        return "<f4"
    raise ValueError(f"unsupported dtype {arr.dtype}")


def save_checkpoint(path: str, models: Models, adam_state: dict | None,
                    iteration: int, cfg_hash: str) -> None:
    entries = []
    blobs = []
    offset = 0

    def put(name, arr):
        nonlocal offset
        tag = _dtype_tag(arr)
        raw = np.ascontiguousarray(arr, dtype=np.dtype(tag)).tobytes()
        entries.append({"name": name, "shape": list(arr.shape),
                        "dtype": tag, "offset": offset, "nbytes": len(raw)})
        blobs.append(raw)
        offset += len(raw)

    named = models.named_params()
    for name, t in named:
        put(f"param/{name}", t.data)
    adam_meta = None
    if adam_state is not None:
        for (name, _), m in zip(named, adam_state["m"]):
            put(f"adam_m/{name}", m)
        for (name, _), v in zip(named, adam_state["v"]):
            put(f"adam_v/{name}", v)
        adam_meta = {"step": int(adam_state["step"])}

    header = json.dumps({
        "format": FORMAT_VERSION,
        "config_hash": cfg_hash,
        "iteration": int(iteration),
        "net_config": asdict(models.udem.cfg),
        "adam": adam_meta,
        "entries": entries,
    }, separators=(",", ":")).encode()

    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", FORMAT_VERSION))
        fh.write(struct.pack("<Q", len(header)))
        fh.write(header)
        for raw in blobs:
            fh.write(raw)


def load_checkpoint(path: str) -> ModelCheckpoint:
    with open(path, "rb") as fh:
        magic = fh.read(len(MAGIC))
        if magic != MAGIC:
            raise ValueError(f"{path}: not a checkpoint file")
        (version,) = struct.unpack("<I", fh.read(4))
        if version != FORMAT_VERSION:
            raise ValueError(f"{path}: unsupported checkpoint version {version}")
        (hlen,) = struct.unpack("<Q", fh.read(8))
        header = json.loads(fh.read(hlen).decode())
        body = fh.read()

    arrays = {}
    for e in header["entries"]:
        raw = body[e["offset"]:e["offset"] + e["nbytes"]]
        arrays[e["name"]] = np.frombuffer(raw, dtype=_DTYPE_TAGS[e["dtype"]]).reshape(
            e["shape"]).copy()

    params = {n[len("param/"):]: a for n, a in arrays.items() if n.startswith("param/")}
    adam = None
    if header["adam"] is not None:
        adam = {
            "step": header["adam"]["step"],
            "m": {n[len("adam_m/"):]: a for n, a in arrays.items() if n.startswith("adam_m/")},
            "v": {n[len("adam_v/"):]: a for n, a in arrays.items() if n.startswith("adam_v/")},
        }
    net_config = NetConfig(**header["net_config"])
    return ModelCheckpoint(version=version, cfg_hash=header["config_hash"],
                           iteration=header["iteration"], net_config=net_config,
                           params=params, adam=adam)


def models_from_checkpoint(ckpt: ModelCheckpoint) -> tuple[Models, dict | None]:
    """Rebuild models (and aligned Adam state, if stored)."""
    sample = next(iter(ckpt.params.values()))
    models = init_params(0, ckpt.net_config, dtype=sample.dtype)
    named = models.named_params()
    for name, t in named:
        arr = ckpt.params.get(name)
        if arr is None:
            raise ValueError(f"checkpoint missing parameter {name}")
        if arr.shape != t.data.shape:
            raise ValueError(f"{name}: shape {arr.shape} != expected {t.data.shape}")
        t.data = arr.copy()
    adam_state = None
    if ckpt.adam is not None:
        adam_state = {
            "step": ckpt.adam["step"],
            "m": [ckpt.adam["m"][name].copy() for name, _ in named],
            "v": [ckpt.adam["v"][name].copy() for name, _ in named],
        }
    return models, adam_state


def checkpoint_file_hash(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()[:16]


def tensors_requiring_grad(models: Models) -> list[Tensor]:
    return [t for _, t in models.named_params()]
