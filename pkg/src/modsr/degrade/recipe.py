"""High-order degradation recipes.

A recipe is an ordered stage list sampled as two rounds of
{blur -> resize -> noise -> jpeg} (each stage present with a configured
probability), terminated by a resize to the final scale, a final JPEG,
and optionally a final sinc filter. Paired with its seed, a recipe fully
determines a corruption: applying it twice is bit-identical.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, asdict
from typing import Union

import numpy as np

from modsr.degrade import ops
from modsr.degrade.jpeg import jpeg_compress
from modsr.degrade.kernels import gaussian_kernel_aniso, gaussian_kernel_iso, sinc_kernel


@dataclass(frozen=True)
class BlurIso:
    sigma: float
    ksize: int


@dataclass(frozen=True)
class BlurAniso:
    sigma_x: float
    sigma_y: float
    theta: float
    ksize: int


@dataclass(frozen=True)
class Sinc:
    cutoff: float
    ksize: int


@dataclass(frozen=True)
class Resize:
    mode: str
    scale: float


@dataclass(frozen=True)
class FinalResize:
    """Resize to round(original_extent * final_scale); keeps the net
    resolution change pinned to the recipe's final_scale regardless of
    the random mid-pipeline resizes."""
    mode: str


@dataclass(frozen=True)
class GaussianNoise:
    sigma: float
    gray: bool


@dataclass(frozen=True)
class PoissonNoise:
    scale: float
    gray: bool


@dataclass(frozen=True)
class Jpeg:
    quality: float


DegradationStage = Union[BlurIso, BlurAniso, Sinc, Resize, FinalResize,
                         GaussianNoise, PoissonNoise, Jpeg]

_STAGE_TYPES = {cls.__name__: cls for cls in
                (BlurIso, BlurAniso, Sinc, Resize, FinalResize,
                 GaussianNoise, PoissonNoise, Jpeg)}

GBLUR_STAGES = (BlurIso, BlurAniso, Sinc)
GNOISE_STAGES = (GaussianNoise, PoissonNoise, Jpeg)


def _validate_stage(st: DegradationStage) -> None:
    if isinstance(st, (BlurIso, BlurAniso, Sinc)) and (st.ksize % 2 == 0 or st.ksize < 3):
        raise ValueError(f"ksize must be odd and >= 3, got {st.ksize}")
    if isinstance(st, BlurIso) and st.sigma <= 0:
        raise ValueError("sigma must be positive")
    if isinstance(st, BlurAniso) and (st.sigma_x <= 0 or st.sigma_y <= 0):
        raise ValueError("sigmas must be positive")
    if isinstance(st, Sinc) and not 0.0 < st.cutoff <= np.pi:
        raise ValueError("cutoff must lie in (0, pi]")
    if isinstance(st, Resize) and st.scale <= 0:
        raise ValueError("scale must be positive")
    if isinstance(st, Jpeg) and not 1 <= st.quality <= 100:
        raise ValueError("quality must lie in [1, 100]")


@dataclass(frozen=True)
class DegradationRecipe:
    stages: tuple
    final_scale: float = 0.25
    seed: int = 0

    def __post_init__(self):
        for st in self.stages:
            _validate_stage(st)

    def to_json(self) -> str:
        return json.dumps({
            "final_scale": self.final_scale,
            "seed": self.seed,
            "stages": [{"kind": type(s).__name__, **asdict(s)} for s in self.stages],
        }, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "DegradationRecipe":
        raw = json.loads(text)
        stages = []
        for entry in raw["stages"]:
            kind = entry.pop("kind")
            stages.append(_STAGE_TYPES[kind](**entry))
        return cls(tuple(stages), raw["final_scale"], raw["seed"])


@dataclass
class DegradeConfig:
    """Stage probabilities and parameter ranges for recipe sampling.

    Desk-scale defaults are tuned for 64px HR patches; ranges follow the
    usual second-order pipeline with the second round shrunk to
    ``second_round_shrink`` of the first-round ranges.
    """
    final_scale: float = 0.25
    final_resize_mode: str = "bicubic"

    blur_prob: float = 0.85
    aniso_prob: float = 0.25       # among applied blur stages
    sinc_prob: float = 0.1         # among applied blur stages
    blur_sigma: tuple = (0.2, 3.0)
    blur_ksizes: tuple = (7, 9, 11, 13, 15, 17, 19, 21)
    sinc_cutoff: tuple = (np.pi / 3, np.pi)

    resize_prob: float = 0.8
    resize_range: tuple = (0.6, 1.4)
    # round 2 may shrink close to LR scale so late noise stays crisp in
    # the final image, mirroring the cited pipeline's absolute targets
    second_resize_range: tuple = (0.35, 1.1)
    resize_modes: tuple = ("area", "bilinear", "bicubic")

    noise_prob: float = 0.9
    poisson_prob: float = 0.35     # among applied noise stages
    noise_sigma: tuple = (1.0 / 255.0, 30.0 / 255.0)
    poisson_scale: tuple = (0.5, 3.0)
    gray_noise_prob: float = 0.4

    jpeg_prob: float = 0.8
    jpeg_quality: tuple = (30, 95)

    second_round_shrink: float = 0.8
    second_blur_ksizes: tuple = (7, 9, 11, 13)

    final_jpeg_quality: tuple = (30, 95)
    final_sinc_prob: float = 0.5
    final_sinc_cutoff: tuple = (np.pi / 3, np.pi)
    final_sinc_ksize: int = 11

    rho_range: tuple = (1.5, 3.0)  # contrast-group separation factors
    # which Gnoise members the c3 contrast scales: restricting some
    # groups to one member removes the constant-confound shortcut where
    # the ranking can be satisfied by JPEG blocking alone
    rho_noise_only_prob: float = 0.45
    rho_jpeg_only_prob: float = 0.25

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, default=list)

    @classmethod
    def from_json(cls, text: str) -> "DegradeConfig":
        raw = json.loads(text)
        cfg = cls(**{k: tuple(v) if isinstance(v, list) else v for k, v in raw.items()})
        return cfg


def _round_params(cfg: DegradeConfig, second: bool) -> dict:
    """Per-round sampling ranges; round 2 shrinks toward the weak end."""
    if not second:
        return {
            "blur_sigma": cfg.blur_sigma, "blur_ksizes": cfg.blur_ksizes,
            "sinc_cutoff": cfg.sinc_cutoff, "resize_range": cfg.resize_range,
            "noise_sigma": cfg.noise_sigma, "poisson_scale": cfg.poisson_scale,
            "jpeg_quality": cfg.jpeg_quality,
        }
    f = cfg.second_round_shrink
    blo, bhi = cfg.blur_sigma
    clo, chi = cfg.sinc_cutoff
    nlo, nhi = cfg.noise_sigma
    plo, phi = cfg.poisson_scale
    qlo, qhi = cfg.jpeg_quality
    return {
        "blur_sigma": (blo, blo + f * (bhi - blo)),
        "blur_ksizes": cfg.second_blur_ksizes,
        "sinc_cutoff": (chi - f * (chi - clo), chi),
        "resize_range": cfg.second_resize_range,
        "noise_sigma": (nlo, nlo + f * (nhi - nlo)),
        "poisson_scale": (phi - f * (phi - plo), phi),
        "jpeg_quality": (qhi - f * (qhi - qlo), qhi),
    }


def sample_recipe(cfg: DegradeConfig, rng: np.random.Generator) -> DegradationRecipe:
    """Draw one randomized high-order recipe; the recorded seed replays it."""
    stages = []
    for second in (False, True):
        p = _round_params(cfg, second)
        if rng.random() < cfg.blur_prob:
            kind = rng.random()
            ksize = int(p["blur_ksizes"][int(rng.integers(len(p["blur_ksizes"])))])
            if kind < cfg.sinc_prob:
                stages.append(Sinc(float(rng.uniform(*p["sinc_cutoff"])), ksize))
            elif kind < cfg.sinc_prob + cfg.aniso_prob:
                lo, hi = p["blur_sigma"]
                stages.append(BlurAniso(float(rng.uniform(lo, hi)),
                                        float(rng.uniform(lo, hi)),
                                        float(rng.uniform(0.0, np.pi)),
                                        ksize))
            else:
                stages.append(BlurIso(float(rng.uniform(*p["blur_sigma"])), ksize))
        if rng.random() < cfg.resize_prob:
            mode = cfg.resize_modes[int(rng.integers(len(cfg.resize_modes)))]
            stages.append(Resize(mode, float(rng.uniform(*p["resize_range"]))))
        if rng.random() < cfg.noise_prob:
            gray = bool(rng.random() < cfg.gray_noise_prob)
            if rng.random() < cfg.poisson_prob:
                stages.append(PoissonNoise(float(rng.uniform(*p["poisson_scale"])), gray))
            else:
                stages.append(GaussianNoise(float(rng.uniform(*p["noise_sigma"])), gray))
        if rng.random() < cfg.jpeg_prob:
            qlo, qhi = p["jpeg_quality"]
            stages.append(Jpeg(int(rng.integers(int(qlo), int(qhi) + 1))))
    stages.append(FinalResize(cfg.final_resize_mode))
    qlo, qhi = cfg.final_jpeg_quality
    stages.append(Jpeg(int(rng.integers(int(qlo), int(qhi) + 1))))
    if rng.random() < cfg.final_sinc_prob:
        stages.append(Sinc(float(rng.uniform(*cfg.final_sinc_cutoff)), cfg.final_sinc_ksize))
    seed = int(rng.integers(0, 2 ** 63))
    return DegradationRecipe(tuple(stages), cfg.final_scale, seed)


def max_recipe(cfg: DegradeConfig, seed: int) -> DegradationRecipe:
    """Recipe at the maximal configured Gnoise and Gblur parameters."""
    stages = []
    for second in (False, True):
        p = _round_params(cfg, second)
        if cfg.blur_prob > 0:
            stages.append(BlurIso(p["blur_sigma"][1], int(max(p["blur_ksizes"]))))
        if cfg.resize_prob > 0:
            stages.append(Resize("area", p["resize_range"][0]))
        if cfg.noise_prob > 0:
            stages.append(GaussianNoise(p["noise_sigma"][1], False))
        if cfg.jpeg_prob > 0:
            stages.append(Jpeg(int(p["jpeg_quality"][0])))
    stages.append(FinalResize(cfg.final_resize_mode))
    stages.append(Jpeg(int(cfg.final_jpeg_quality[0])))
    if cfg.final_sinc_prob > 0:
        stages.append(Sinc(cfg.final_sinc_cutoff[0], cfg.final_sinc_ksize))
    return DegradationRecipe(tuple(stages), cfg.final_scale, seed)


def clean_recipe(cfg: DegradeConfig, seed: int = 0) -> DegradationRecipe:
    """The degradation-free path: only the fixed bicubic final downsample."""
    return DegradationRecipe((FinalResize("bicubic"),), cfg.final_scale, seed)


def _clamp_ksize(ksize: int, h: int, w: int) -> int:
    limit = min(h, w)
    if ksize <= limit:
        return ksize
    k = limit if limit % 2 else limit - 1
    return max(k, 3)


def apply_recipe(img: np.ndarray, recipe: DegradationRecipe) -> np.ndarray:
    """Run every stage in order; deterministic given (recipe, seed)."""
    rng = np.random.default_rng(recipe.seed)
    h0, w0 = img.shape[1], img.shape[2]
    out = img
    for st in recipe.stages:
        h, w = out.shape[1], out.shape[2]
        if isinstance(st, BlurIso):
            out = ops.convolve(out, gaussian_kernel_iso(st.sigma, _clamp_ksize(st.ksize, h, w)))
        elif isinstance(st, BlurAniso):
            out = ops.convolve(out, gaussian_kernel_aniso(
                st.sigma_x, st.sigma_y, st.theta, _clamp_ksize(st.ksize, h, w)))
        elif isinstance(st, Sinc):
            # sinc lobes overshoot; clip like every other stage output
            out = np.clip(ops.convolve(out, sinc_kernel(st.cutoff, _clamp_ksize(st.ksize, h, w))),
                          0.0, 1.0)
        elif isinstance(st, Resize):
            out = np.clip(ops.resize(out, st.mode, st.scale), 0.0, 1.0)
        elif isinstance(st, FinalResize):
            ho = int(np.floor(h0 * recipe.final_scale + 0.5))
            wo = int(np.floor(w0 * recipe.final_scale + 0.5))
            out = np.clip(ops.resize_to(out, st.mode, ho, wo), 0.0, 1.0)
        elif isinstance(st, GaussianNoise):
            out = ops.add_gaussian_noise(out, st.sigma, st.gray, rng)
        elif isinstance(st, PoissonNoise):
            out = ops.add_poisson_noise(out, st.scale, st.gray, rng)
        elif isinstance(st, Jpeg):
            out = jpeg_compress(out, st.quality)
        else:
            raise TypeError(f"unknown stage {st!r}")
    return out


def gblur_intensity(recipe: DegradationRecipe) -> float:
    """Scalar blur-strength summary, comparable between recipe variants."""
    acc = 0.0
    for st in recipe.stages:
        if isinstance(st, BlurIso):
            acc += st.sigma
        elif isinstance(st, BlurAniso):
            acc += 0.5 * (st.sigma_x + st.sigma_y)
        elif isinstance(st, Sinc):
            acc += float(np.pi) - st.cutoff
    return acc


def gnoise_intensity(recipe: DegradationRecipe) -> float:
    """Scalar noise/artifact-strength summary (mixed units, order only)."""
    acc = 0.0
    for st in recipe.stages:
        if isinstance(st, GaussianNoise):
            acc += st.sigma * 255.0
        elif isinstance(st, PoissonNoise):
            acc += 1.0 / st.scale
        elif isinstance(st, Jpeg):
            acc += (100.0 - st.quality) / 10.0
    return acc


def scale_gblur(recipe: DegradationRecipe, rho: float,
                insert: BlurIso | None = None) -> DegradationRecipe:
    """Multiply every Gblur stage's intensity by rho (> 1 blurs more).

    rho == 1 returns the recipe unchanged. If no Gblur stage exists,
    ``insert`` (or a mild default) is prepended so the ordering between
    the scaled and unscaled variants stays strict.
    """
    if rho == 1.0:
        return recipe
    if rho < 1.0:
        raise ValueError("rho must be >= 1")
    stages = []
    found = False
    for st in recipe.stages:
        if isinstance(st, BlurIso):
            st = BlurIso(st.sigma * rho, st.ksize)
            found = True
        elif isinstance(st, BlurAniso):
            st = BlurAniso(st.sigma_x * rho, st.sigma_y * rho, st.theta, st.ksize)
            found = True
        elif isinstance(st, Sinc):
            st = Sinc(st.cutoff / rho, st.ksize)
            found = True
        stages.append(st)
    if not found:
        stages.insert(0, insert or BlurIso(0.5 * rho, 11))
    return DegradationRecipe(tuple(stages), recipe.final_scale, recipe.seed)


def scale_gnoise(recipe: DegradationRecipe, rho: float,
                 insert: GaussianNoise | None = None,
                 which: str = "all") -> DegradationRecipe:
    """Multiply Gnoise-stage intensities by rho (> 1 corrupts more).

    ``which`` selects the scaled family members: "all", "noise"
    (Gaussian/Poisson only) or "jpeg" (JPEG stages only). The strict
    intensity ordering against the unscaled recipe holds in every mode.
    """
    if which not in ("all", "noise", "jpeg"):
        raise ValueError(f"unknown scaling mode {which!r}")
    if rho == 1.0:
        return recipe
    if rho < 1.0:
        raise ValueError("rho must be >= 1")
    stages = []
    found = False
    for st in recipe.stages:
        if isinstance(st, GaussianNoise) and which in ("all", "noise"):
            st = GaussianNoise(st.sigma * rho, st.gray)
            found = True
        elif isinstance(st, PoissonNoise) and which in ("all", "noise"):
            st = PoissonNoise(st.scale / rho, st.gray)
            found = True
        elif isinstance(st, Jpeg) and which in ("all", "jpeg"):
            st = Jpeg(max(1.0, 100.0 - (100.0 - st.quality) * rho))
            found = True
        stages.append(st)
    if not found:
        stages.insert(0, insert or GaussianNoise(5.0 / 255.0 * rho, False))
    return DegradationRecipe(tuple(stages), recipe.final_scale, recipe.seed)
