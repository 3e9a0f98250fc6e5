"""Deterministic synthetic image sources and image file I/O.

No photographic dataset ships with the library; training and evaluation
draw from a procedural corpus instead: 1/f-shaped random fields for the
base, soft-edged shapes for structure, and a high-frequency texture
band so that blur, noise and JPEG artifacts all have something to
destroy. Corpus generation is a pure function of the seed.
"""

from __future__ import annotations

import io

import numpy as np
from PIL import Image


def synthetic_image(seed: int, size: int = 128) -> np.ndarray:
    """One [3, size, size] image in [0, 1], deterministic per seed."""
    rng = np.random.default_rng(seed)
    fy = np.fft.fftfreq(size)[:, None]
    fx = np.fft.fftfreq(size)[None, :]
    radial = np.sqrt(fy * fy + fx * fx)
    shaping = 1.0 / (radial + 1.5 / size) ** 1.7

    # shared luminance field keeps channels naturally correlated
    def field():
        spec = (rng.standard_normal((size, size)) + 1j * rng.standard_normal((size, size)))
        f = np.real(np.fft.ifft2(spec * shaping))
        f -= f.min()
        return f / max(f.max(), 1e-9)

    luma = field()
    img = np.stack([0.7 * luma + 0.3 * field() for _ in range(3)])

    yy, xx = np.mgrid[0:size, 0:size] / size
    for _ in range(int(rng.integers(3, 7))):
        cx, cy = rng.uniform(0.1, 0.9, size=2)
        rx, ry = rng.uniform(0.05, 0.3, size=2)
        ang = rng.uniform(0, np.pi)
        ca, sa = np.cos(ang), np.sin(ang)
        u = (xx - cx) * ca + (yy - cy) * sa
        v = -(xx - cx) * sa + (yy - cy) * ca
        d = (u / rx) ** 2 + (v / ry) ** 2
        mask = np.clip((1.0 - d) * 12.0, 0.0, 1.0)  # soft edge
        color = rng.uniform(0.1, 0.9, size=3)
        img = img * (1 - mask) + color[:, None, None] * mask

    # oriented sinusoidal texture patch (fine detail)
    fx_, fy_ = rng.uniform(4, 14, size=2)
    phase = rng.uniform(0, 2 * np.pi)
    tex = 0.5 + 0.5 * np.sin(2 * np.pi * (fx_ * xx + fy_ * yy) + phase)
    x0, y0 = rng.integers(0, size // 2, size=2)
    half = size // 2
    window = np.zeros((size, size))
    window[y0:y0 + half, x0:x0 + half] = 1.0
    img = img * (1 - 0.35 * window) + 0.35 * window * tex[None]

    lo, hi = img.min(), img.max()
    return (0.03 + 0.94 * (img - lo) / max(hi - lo, 1e-9)).astype(np.float64)


def synthetic_corpus(n: int, size: int, seed: int) -> list[np.ndarray]:
    return [synthetic_image(seed * 1_000_003 + i, size) for i in range(n)]


def random_crop(img: np.ndarray, patch: int, rng: np.random.Generator) -> np.ndarray:
    _, h, w = img.shape
    if h < patch or w < patch:
        raise ValueError(f"image {(h, w)} smaller than patch {patch}")
    y = int(rng.integers(0, h - patch + 1))
    x = int(rng.integers(0, w - patch + 1))
    return img[:, y:y + patch, x:x + patch]


# ---------------------------------------------------------------------------
# file I/O (Pillow handles the container formats; arrays stay [C,H,W] in [0,1])


def to_uint8(img: np.ndarray) -> np.ndarray:
    return np.clip(np.round(img * 255.0), 0, 255).astype(np.uint8)


def from_uint8(arr: np.ndarray) -> np.ndarray:
    return arr.astype(np.float64) / 255.0


def decode_image(data: bytes) -> np.ndarray:
    """Decode PNG/PPM/JPEG bytes to a [3,H,W] float image in [0,1]."""
    with Image.open(io.BytesIO(data)) as im:
        rgb = im.convert("RGB")
        arr = np.asarray(rgb, dtype=np.uint8)
    return from_uint8(arr.transpose(2, 0, 1))


def encode_png(img: np.ndarray) -> bytes:
    arr = to_uint8(img).transpose(1, 2, 0)
    buf = io.BytesIO()
    Image.fromarray(arr, mode="RGB").save(buf, format="PNG")
    return buf.getvalue()


def load_image(path: str) -> np.ndarray:
    with open(path, "rb") as fh:
        return decode_image(fh.read())


def save_image(img: np.ndarray, path: str) -> None:
    with open(path, "wb") as fh:
        fh.write(encode_png(img))
