"""Pixel-level corruption primitives: filtering, resampling, noise.

Images are [C,H,W] float arrays on the [0,1] scale throughout. Noise
levels quoted on the 0-255 convention must be divided by 255 before
being passed here.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy import ndimage, signal

LUMA_WEIGHTS = np.array([0.299, 0.587, 0.114])

RESIZE_MODES = ("nearest", "bilinear", "bicubic", "area")


def convolve(img: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Per-channel 2D correlation, same-size output.

    Borders use whole-sample reflection (the edge pixel itself is not
    duplicated), which avoids dark halos from implicit zero padding.
    Rank-1 kernels run separably and large kernels via FFT; results
    agree with the direct path to ~1e-13 and stay deterministic.
    """
    kh, kw = kernel.shape
    c, h, w = img.shape
    if kh > h or kw > w:
        raise ValueError(f"kernel {kernel.shape} larger than image {(h, w)}")
    out = np.empty_like(img)

    u, s, vt = np.linalg.svd(kernel)
    if s[0] > 0 and (len(s) == 1 or s[1] <= 1e-12 * s[0]):
        col = u[:, 0] * np.sqrt(s[0])
        row = vt[0] * np.sqrt(s[0])
        for ch in range(c):
            tmp = ndimage.correlate1d(img[ch], col, axis=0, mode="mirror")
            out[ch] = ndimage.correlate1d(tmp, row, axis=1, mode="mirror")
        return out

    if kh * kw >= 81:
        ry, rx = kh // 2, kw // 2
        flipped = kernel[::-1, ::-1]
        for ch in range(c):
            padded = np.pad(img[ch], ((ry, ry), (rx, rx)), mode="reflect")
            out[ch] = signal.fftconvolve(padded, flipped, mode="valid")
        return out

    for ch in range(c):
        out[ch] = ndimage.correlate(img[ch], kernel, mode="mirror")
    return out


def _cubic_weight(t: np.ndarray, a: float = -0.5) -> np.ndarray:
    at = np.abs(t)
    w = np.where(at <= 1.0,
                 (a + 2.0) * at ** 3 - (a + 3.0) * at ** 2 + 1.0,
                 np.where(at < 2.0,
                          a * at ** 3 - 5.0 * a * at ** 2 + 8.0 * a * at - 4.0 * a,
                          0.0))
    return w


@lru_cache(maxsize=512)
def _axis_weights(n_in: int, n_out: int, mode: str) -> np.ndarray:
    """Row-stochastic (n_out, n_in) resampling matrix for one axis."""
    m = np.zeros((n_out, n_in))
    ratio = n_in / n_out
    if mode == "area":
        # overlap of each output pixel's source footprint with input cells
        for d in range(n_out):
            lo, hi = d * ratio, (d + 1) * ratio
            i0, i1 = int(np.floor(lo)), int(np.ceil(hi))
            for i in range(i0, min(i1, n_in)):
                m[d, i] = min(hi, i + 1) - max(lo, i)
        m /= m.sum(axis=1, keepdims=True)
        m.flags.writeable = False
        return m

    src = (np.arange(n_out) + 0.5) * ratio - 0.5
    rows = np.arange(n_out)
    if mode == "nearest":
        idx = np.clip(np.floor(src + 0.5).astype(int), 0, n_in - 1)
        m[rows, idx] = 1.0
    elif mode == "bilinear":
        i0 = np.floor(src).astype(int)
        t = src - i0
        np.add.at(m, (rows, np.clip(i0, 0, n_in - 1)), 1.0 - t)
        np.add.at(m, (rows, np.clip(i0 + 1, 0, n_in - 1)), t)
    elif mode == "bicubic":
        i0 = np.floor(src).astype(int)
        t = src - i0
        for o in range(-1, 3):
            np.add.at(m, (rows, np.clip(i0 + o, 0, n_in - 1)), _cubic_weight(t - o))
    else:
        raise ValueError(f"unknown resize mode {mode!r}")
    m.flags.writeable = False
    return m


def resize(img: np.ndarray, mode: str, scale: float) -> np.ndarray:
    """Separable resampling to round(H*scale) x round(W*scale)."""
    if scale <= 0:
        raise ValueError(f"scale must be positive, got {scale}")
    c, h, w = img.shape
    ho = int(np.floor(h * scale + 0.5))
    wo = int(np.floor(w * scale + 0.5))
    return resize_to(img, mode, ho, wo)


def resize_to(img: np.ndarray, mode: str, ho: int, wo: int) -> np.ndarray:
    if mode not in RESIZE_MODES:
        raise ValueError(f"unknown resize mode {mode!r}")
    if ho < 1 or wo < 1:
        raise ValueError(f"output extents must be >= 1, got {(ho, wo)}")
    c, h, w = img.shape
    wr = _axis_weights(h, ho, mode)
    wc = _axis_weights(w, wo, mode)
    return np.einsum("oh,chw,pw->cop", wr, img, wc, optimize=True)


def add_gaussian_noise(img: np.ndarray, sigma: float, gray: bool,
                       rng: np.random.Generator) -> np.ndarray:
    """i.i.d. N(0, sigma^2) per pixel; gray shares one field across channels."""
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    c, h, w = img.shape
    if gray:
        noise = np.broadcast_to(rng.normal(0.0, sigma, size=(1, h, w)), img.shape)
    else:
        noise = rng.normal(0.0, sigma, size=img.shape)
    return np.clip(img + noise, 0.0, 1.0)


def add_poisson_noise(img: np.ndarray, scale: float, gray: bool,
                      rng: np.random.Generator) -> np.ndarray:
    """Shot noise: out = Poisson(img * lam) / lam with lam = 255 * scale."""
    if scale <= 0:
        raise ValueError("scale must be positive")
    lam = 255.0 * scale
    if gray:
        c = img.shape[0]
        weights = LUMA_WEIGHTS if c == 3 else np.full(c, 1.0 / c)
        g = np.tensordot(weights, img, axes=1)
        noisy = rng.poisson(np.clip(g, 0.0, None) * lam) / lam
        out = img + (noisy - g)[None]
    else:
        out = rng.poisson(np.clip(img, 0.0, None) * lam) / lam
    return np.clip(out, 0.0, 1.0)


def psnr(a: np.ndarray, b: np.ndarray, peak: float = 1.0) -> float:
    mse = float(np.mean((a - b) ** 2))
    if mse == 0:
        return float("inf")
    return 10.0 * np.log10(peak * peak / mse)


_LAPLACIAN = np.array([[0.0, 1.0, 0.0], [1.0, -4.0, 1.0], [0.0, 1.0, 0.0]])


def laplacian_energy(img: np.ndarray) -> float:
    """Sum of squared Laplacian responses; a high-frequency energy proxy."""
    resp = convolve(img, _LAPLACIAN)
    return float(np.sum(resp * resp))
