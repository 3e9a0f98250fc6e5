"""Baseline JPEG round-trip simulation.

Pixel artifacts in baseline JPEG come entirely from chroma conversion,
optional 4:2:0 subsampling, and quantization of 8x8 block DCT
coefficients; lossless entropy coding never changes a pixel, so it is
skipped here. Quantization uses the standard Annex-K tables scaled by
the IJG quality rule.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

# Annex K.1 luminance / K.2 chrominance quantization tables
QTABLE_LUMA = np.array([
    [16, 11, 10, 16, 24, 40, 51, 61],
    [12, 12, 14, 19, 26, 58, 60, 55],
    [14, 13, 16, 24, 40, 57, 69, 56],
    [14, 17, 22, 29, 51, 87, 80, 62],
    [18, 22, 37, 56, 68, 109, 103, 77],
    [24, 35, 55, 64, 81, 104, 113, 92],
    [49, 64, 78, 87, 103, 121, 120, 101],
    [72, 92, 95, 98, 112, 100, 103, 99],
], dtype=np.float64)

QTABLE_CHROMA = np.array([
    [17, 18, 24, 47, 99, 99, 99, 99],
    [18, 21, 26, 66, 99, 99, 99, 99],
    [24, 26, 56, 99, 99, 99, 99, 99],
    [47, 66, 99, 99, 99, 99, 99, 99],
    [99, 99, 99, 99, 99, 99, 99, 99],
    [99, 99, 99, 99, 99, 99, 99, 99],
    [99, 99, 99, 99, 99, 99, 99, 99],
    [99, 99, 99, 99, 99, 99, 99, 99],
], dtype=np.float64)

# orthonormal 8-point DCT-II matrix
_N = 8
_DCT = np.zeros((_N, _N))
for _u in range(_N):
    _c = np.sqrt(1.0 / _N) if _u == 0 else np.sqrt(2.0 / _N)
    _DCT[_u] = _c * np.cos((2 * np.arange(_N) + 1) * _u * np.pi / (2 * _N))


def scaled_qtable(table: np.ndarray, quality: float) -> np.ndarray:
    """IJG quality scaling: S = 5000/q below 50, else 200 - 2q."""
    if not 1.0 <= quality <= 100.0:
        raise ValueError(f"quality must lie in [1, 100], got {quality}")
    s = 5000.0 / quality if quality < 50 else 200.0 - 2.0 * quality
    return np.clip(np.floor((table * s + 50.0) / 100.0), 1.0, 255.0)


@lru_cache(maxsize=256)
def _qtables(quality: float) -> tuple[np.ndarray, np.ndarray]:
    return scaled_qtable(QTABLE_LUMA, quality), scaled_qtable(QTABLE_CHROMA, quality)


def _blockify(plane: np.ndarray) -> np.ndarray:
    h, w = plane.shape
    return plane.reshape(h // _N, _N, w // _N, _N).transpose(0, 2, 1, 3)


def _unblockify(blocks: np.ndarray, h: int, w: int) -> np.ndarray:
    return blocks.transpose(0, 2, 1, 3).reshape(h, w)


def _apply_lr(blocks: np.ndarray, left: np.ndarray, right: np.ndarray) -> np.ndarray:
    """left @ blocks @ right over a (...,8,8) block stack, as two GEMMs."""
    n = blocks.shape[0]
    t = (blocks.reshape(n * _N, _N) @ right).reshape(n, _N, _N)
    t = (t.transpose(0, 2, 1).reshape(n * _N, _N) @ left.T).reshape(n, _N, _N)
    return t.transpose(0, 2, 1)


def _quantize_plane(plane: np.ndarray, qtable: np.ndarray) -> np.ndarray:
    """Level shift, block DCT, quantize, dequantize, inverse DCT."""
    h, w = plane.shape
    blocks = _blockify(plane - 128.0).reshape(-1, _N, _N)
    coeffs = _apply_lr(blocks, _DCT, _DCT.T)
    coeffs = np.round(coeffs / qtable) * qtable
    rec = _apply_lr(coeffs, _DCT.T, _DCT)
    return _unblockify(rec.reshape(h // _N, w // _N, _N, _N), h, w) + 128.0


def _pad_to(plane: np.ndarray, mult: int) -> np.ndarray:
    h, w = plane.shape
    ph = (-h) % mult
    pw = (-w) % mult
    if ph or pw:
        plane = np.pad(plane, ((0, ph), (0, pw)), mode="edge")
    return plane


def rgb_to_ycbcr(rgb255: np.ndarray) -> np.ndarray:
    r, g, b = rgb255
    y = 0.299 * r + 0.587 * g + 0.114 * b
    cb = 128.0 - 0.168736 * r - 0.331264 * g + 0.5 * b
    cr = 128.0 + 0.5 * r - 0.418688 * g - 0.081312 * b
    return np.stack([y, cb, cr])


def ycbcr_to_rgb(ycc: np.ndarray) -> np.ndarray:
    y, cb, cr = ycc
    r = y + 1.402 * (cr - 128.0)
    g = y - 0.344136 * (cb - 128.0) - 0.714136 * (cr - 128.0)
    b = y + 1.772 * (cb - 128.0)
    return np.stack([r, g, b])


def jpeg_compress(img: np.ndarray, quality: float, subsample: bool = False) -> np.ndarray:
    """Simulated baseline JPEG round trip on a [C,H,W] image in [0,1].

    ``subsample`` enables 4:2:0 chroma subsampling (box down, nearest
    up). Grayscale (C=1) images go through the luma path only.
    """
    c, h, w = img.shape
    x255 = img * 255.0
    if not 1.0 <= quality <= 100.0:
        raise ValueError(f"quality must lie in [1, 100], got {quality}")
    qy, qc = _qtables(float(quality))

    if c == 1:
        plane = _pad_to(x255[0], _N)
        rec = _quantize_plane(plane, qy)
        return np.clip(rec[None, :h, :w] / 255.0, 0.0, 1.0)
    if c != 3:
        raise ValueError(f"expected 1 or 3 channels, got {c}")

    ycc = rgb_to_ycbcr(x255)

    y_rec = _quantize_plane(_pad_to(ycc[0], _N), qy)[:h, :w]
    chroma_rec = []
    for plane in ycc[1:]:
        if subsample:
            p = _pad_to(plane, 2 * _N)
            ph, pw = p.shape
            sub = p.reshape(ph // 2, 2, pw // 2, 2).mean(axis=(1, 3))
            rec = _quantize_plane(sub, qc)
            rec = np.repeat(np.repeat(rec, 2, axis=0), 2, axis=1)
        else:
            rec = _quantize_plane(_pad_to(plane, _N), qc)
        chroma_rec.append(rec[:h, :w])

    rgb = ycbcr_to_rgb(np.stack([y_rec, *chroma_rec]))
    return np.clip(rgb / 255.0, 0.0, 1.0)
