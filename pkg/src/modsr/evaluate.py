"""Scorer and modulation evaluation: monotonicity sweeps, the
anchor-loss dynamic-range comparison, and modulation-response grids.

A sweep corrupts held-out images with exactly one degradation at each
of 20 uniformly spaced levels (plus the fixed bicubic x1/4 downsample
that produces LR-sized scorer input), averages the predicted scores per
level, and reports the Spearman rank correlation of mean score against
level. All operations are read-only with respect to the models.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np

from modsr.autodiff import Tensor
from modsr.degrade import add_gaussian_noise, convolve, gaussian_kernel_iso, jpeg_compress, resize
from modsr.nets import Models, ScorePair, UdemModel, restore_image, udem_forward

SWEEP_KINDS = ("gaussian-noise", "gaussian-blur", "jpeg")

SWEEP_RANGES = {
    "gaussian-noise": (1.0 / 255.0, 30.0 / 255.0),  # noise level 1..30 on 0-255
    "gaussian-blur": (0.2, 3.0),                    # blur sigma
    "jpeg": (30.0, 95.0),                           # quality factor
}

N_LEVELS = 20


@dataclass
class SweepResult:
    kind: str
    levels: np.ndarray        # the 20 level values, endpoints inclusive
    mean_scores: np.ndarray   # mean predicted score per level
    std_scores: np.ndarray
    rho: float                # Spearman rank correlation of score vs level

    @property
    def dynamic_range(self) -> float:
        return float(self.mean_scores.max() - self.mean_scores.min())

    def to_json(self) -> str:
        return json.dumps({"kind": self.kind, "rho": self.rho,
                           "range": self.dynamic_range})

    def write_csv(self, path: str) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["level", "mean_score", "std"])
            for lv, m, s in zip(self.levels, self.mean_scores, self.std_scores):
                w.writerow([f"{lv:.6g}", f"{m:.6g}", f"{s:.6g}"])


def _rank(xs: np.ndarray) -> np.ndarray:
    """Average ranks (ties share the mean of their positions)."""
    order = np.argsort(xs, kind="stable")
    ranks = np.empty(len(xs))
    sorted_vals = xs[order]
    i = 0
    while i < len(xs):
        j = i
        while j + 1 < len(xs) and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def spearman(xs, ys) -> float:
    """Pearson correlation of the rank vectors, ties by average rank."""
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if xs.shape != ys.shape or xs.ndim != 1:
        raise ValueError("spearman expects two equal-length vectors")
    if len(xs) < 3:
        raise ValueError("need at least 3 points")
    rx, ry = _rank(xs), _rank(ys)
    rx = rx - rx.mean()
    ry = ry - ry.mean()
    denom = np.sqrt((rx * rx).sum() * (ry * ry).sum())
    if denom == 0:
        return 0.0
    return float((rx * ry).sum() / denom)


def sweep_levels(kind: str) -> np.ndarray:
    lo, hi = SWEEP_RANGES[kind]
    return np.linspace(lo, hi, N_LEVELS)


def corrupt_at_level(img: np.ndarray, kind: str, level: float,
                     seed: int = 0) -> np.ndarray:
    """Bicubic x1/4 downsample plus exactly one degradation at ``level``.

    Downsampling comes first so the scored LR image carries the nominal
    degradation strength rather than a resampling-attenuated version.
    """
    lr = np.clip(resize(img, "bicubic", 0.25), 0.0, 1.0)
    if kind == "gaussian-noise":
        return add_gaussian_noise(lr, level, False, np.random.default_rng(seed))
    if kind == "gaussian-blur":
        ksize = min(21, (min(lr.shape[1], lr.shape[2]) - 1) // 2 * 2 + 1)
        return np.clip(convolve(lr, gaussian_kernel_iso(level, ksize)), 0.0, 1.0)
    if kind == "jpeg":
        return jpeg_compress(lr, level)
    raise ValueError(f"unknown sweep kind {kind!r}")


def degradation_sweep(model: UdemModel, images, kind: str,
                      seed: int = 0) -> SweepResult:
    """Mean branch score over ``images`` at each of the 20 levels.

    Noise and JPEG sweeps read the noise branch (JPEG artifacts count as
    general noise); the blur sweep reads the blur branch.
    """
    if len(images) < 5:
        raise ValueError("need at least 5 evaluation images")
    levels = sweep_levels(kind)
    branch = 1 if kind == "gaussian-blur" else 0
    means = np.zeros(N_LEVELS)
    stds = np.zeros(N_LEVELS)
    for i, level in enumerate(levels):
        batch = np.stack([corrupt_at_level(img, kind, level, seed=seed + 97 * i + j)
                          for j, img in enumerate(images)])
        dtype = model.stem[0].w.dtype
        s_n, s_b = udem_forward(model, Tensor(batch.astype(dtype)))
        scores = (s_n, s_b)[branch].data.reshape(-1)
        means[i] = scores.mean()
        stds[i] = scores.std()
    rho = spearman(levels, means)
    return SweepResult(kind=kind, levels=levels, mean_scores=means,
                       std_scores=stds, rho=rho)


@dataclass
class AblationReport:
    """Per-kind dynamic ranges for the with/without-anchor model pair."""
    ranges_with: dict
    ranges_without: dict
    rhos_with: dict
    rhos_without: dict

    def anchor_widens_all(self) -> bool:
        return all(self.ranges_with[k] > self.ranges_without[k] for k in SWEEP_KINDS)

    def to_json(self) -> str:
        return json.dumps({
            "with_anchor": {k: {"range": self.ranges_with[k], "rho": self.rhos_with[k]}
                            for k in SWEEP_KINDS},
            "without_anchor": {k: {"range": self.ranges_without[k],
                                   "rho": self.rhos_without[k]}
                               for k in SWEEP_KINDS},
        }, indent=2)


def anchor_ablation(model_with: UdemModel, model_without: UdemModel,
                    images, seed: int = 0) -> AblationReport:
    rw, rn, hw, hn = {}, {}, {}, {}
    for kind in SWEEP_KINDS:
        a = degradation_sweep(model_with, images, kind, seed=seed)
        b = degradation_sweep(model_without, images, kind, seed=seed)
        rw[kind], rn[kind] = a.dynamic_range, b.dynamic_range
        hw[kind], hn[kind] = a.rho, b.rho
    return AblationReport(ranges_with=rw, ranges_without=rn,
                          rhos_with=hw, rhos_without=hn)


def modulation_grid(models: Models, lr_img: np.ndarray,
                    grid: list[ScorePair]) -> tuple[list[np.ndarray], np.ndarray]:
    """One restored output per score pair plus the pairwise mean-L1 matrix."""
    outputs = [restore_image(models, lr_img, sp) for sp in grid]
    n = len(outputs)
    dist = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            d = float(np.mean(np.abs(outputs[i] - outputs[j])))
            dist[i, j] = dist[j, i] = d
    return outputs, dist
