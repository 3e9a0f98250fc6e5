"""Contrast/anchor group synthesis for metric-space training.

Each group shares one HR source. The contrast triplet {c1, c2, c3} uses
one sampled recipe for c2, a blur-scaled variant for c1, and a
noise-scaled variant for c3; all three share the same noise seed, so a
pair differs only in the scaled factor. The anchors are a1 (every stage
at its maximal configured parameters) and a2 (the clean bicubic
downsample alone).
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from modsr.degrade.recipe import (
    BlurIso,
    DegradationRecipe,
    DegradeConfig,
    GaussianNoise,
    apply_recipe,
    clean_recipe,
    max_recipe,
    sample_recipe,
    scale_gblur,
    scale_gnoise,
)


@dataclass
class TrainGroup:
    hr: np.ndarray
    c1: np.ndarray
    c2: np.ndarray
    c3: np.ndarray
    a1: np.ndarray
    a2: np.ndarray
    recipes: dict

    def members(self) -> tuple:
        return (self.c1, self.c2, self.c3, self.a1, self.a2)


def make_train_group(hr: np.ndarray, cfg: DegradeConfig,
                     rng: np.random.Generator) -> TrainGroup:
    """Synthesize one {c1,c2,c3} + {a1,a2} group from an HR image."""
    h, w = hr.shape[1], hr.shape[2]
    if h % 4 or w % 4:
        raise ValueError(f"HR extents must be divisible by 4, got {(h, w)}")

    c2_recipe = sample_recipe(cfg, rng)
    rho_b = float(rng.uniform(*cfg.rho_range))
    rho_n = float(rng.uniform(*cfg.rho_range))
    # insertion params drawn up front so the rng stream stays fixed
    ins_blur = BlurIso(float(rng.uniform(*cfg.blur_sigma)) * rho_b,
                       int(max(cfg.second_blur_ksizes)))
    ins_noise = GaussianNoise(float(rng.uniform(*cfg.noise_sigma)) * rho_n, False)
    a1_seed = int(rng.integers(0, 2 ** 63))
    u = rng.random()
    if u < cfg.rho_noise_only_prob:
        which = "noise"
    elif u < cfg.rho_noise_only_prob + cfg.rho_jpeg_only_prob:
        which = "jpeg"
    else:
        which = "all"

    c1_recipe = scale_gblur(c2_recipe, rho_b, ins_blur)
    c3_recipe = scale_gnoise(c2_recipe, rho_n, ins_noise, which=which)
    a1_recipe = max_recipe(cfg, a1_seed)
    a2_recipe = clean_recipe(cfg)

    recipes = {"c1": c1_recipe, "c2": c2_recipe, "c3": c3_recipe,
               "a1": a1_recipe, "a2": a2_recipe}
    imgs = {name: apply_recipe(hr, r) for name, r in recipes.items()}
    shapes = {im.shape for im in imgs.values()}
    if len(shapes) != 1:
        raise AssertionError(f"group members disagree on extent: {shapes}")
    return TrainGroup(hr=hr, recipes=recipes, **imgs)


def group_rng(master_seed: int, index: int) -> np.random.Generator:
    """Stream for sample ``index``: identical whether built serially or
    on any worker, which keeps parallel synthesis equal to serial."""
    return np.random.default_rng(np.random.SeedSequence((master_seed, index)))


def synthesize_groups(hr_patches, cfg: DegradeConfig, master_seed: int,
                      workers: int = 0) -> list:
    """One group per HR patch, rng derived from (master_seed, index)."""
    def one(i):
        return make_train_group(hr_patches[i], cfg, group_rng(master_seed, i))

    idx = range(len(hr_patches))
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(one, idx))
    return [one(i) for i in idx]
