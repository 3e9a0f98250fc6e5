"""High-order degradation synthesis and training-group construction."""

from modsr.degrade.groups import TrainGroup, group_rng, make_train_group, synthesize_groups
from modsr.degrade.jpeg import jpeg_compress
from modsr.degrade.kernels import (
    bessel_j1,
    gaussian_kernel_aniso,
    gaussian_kernel_iso,
    sinc_kernel,
)
from modsr.degrade.ops import (
    add_gaussian_noise,
    add_poisson_noise,
    convolve,
    laplacian_energy,
    psnr,
    resize,
    resize_to,
)
from modsr.degrade.recipe import (
    BlurAniso,
    BlurIso,
    DegradationRecipe,
    DegradeConfig,
    FinalResize,
    GaussianNoise,
    Jpeg,
    PoissonNoise,
    Resize,
    Sinc,
    apply_recipe,
    clean_recipe,
    gblur_intensity,
    gnoise_intensity,
    max_recipe,
    sample_recipe,
    scale_gblur,
    scale_gnoise,
)

__all__ = [
    "TrainGroup", "group_rng", "make_train_group", "synthesize_groups",
    "jpeg_compress", "bessel_j1", "gaussian_kernel_aniso", "gaussian_kernel_iso",
    "sinc_kernel", "add_gaussian_noise", "add_poisson_noise", "convolve",
    "laplacian_energy", "psnr", "resize", "resize_to", "BlurAniso", "BlurIso",
    "DegradationRecipe", "DegradeConfig", "FinalResize", "GaussianNoise", "Jpeg",
    "PoissonNoise", "Resize", "Sinc", "apply_recipe", "clean_recipe",
    "gblur_intensity", "gnoise_intensity", "max_recipe", "sample_recipe",
    "scale_gblur", "scale_gnoise",
]
