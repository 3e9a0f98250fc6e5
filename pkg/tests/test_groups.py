import numpy as np
import pytest

from modsr import images
from modsr.degrade import (
    DegradeConfig,
    FinalResize,
    apply_recipe,
    gblur_intensity,
    gnoise_intensity,
    group_rng,
    make_train_group,
    max_recipe,
    resize,
    sample_recipe,
    scale_gblur,
    scale_gnoise,
    synthesize_groups,
)
from modsr.degrade.recipe import GBLUR_STAGES, GNOISE_STAGES, Sinc


CFG = DegradeConfig()


def test_group_recipe_invariants_bulk():
    # recipe-level invariants over many sampled groups (no pixel work)
    rng = np.random.default_rng(0)
    max_blur = gblur_intensity(max_recipe(CFG, 0))
    max_noise = gnoise_intensity(max_recipe(CFG, 0))
    for _ in range(1000):
        c2 = sample_recipe(CFG, rng)
        rho_b = float(rng.uniform(*CFG.rho_range))
        rho_n = float(rng.uniform(*CFG.rho_range))
        c1 = scale_gblur(c2, rho_b)
        c3 = scale_gnoise(c2, rho_n)
        assert gblur_intensity(c1) > gblur_intensity(c2)
        assert gnoise_intensity(c3) > gnoise_intensity(c2)
        assert gnoise_intensity(c1) == gnoise_intensity(c2)
        assert gblur_intensity(c3) == gblur_intensity(c2)
        # c2 cannot out-blur or out-noise the maximal anchor recipe
        assert gblur_intensity(c2) <= max_blur + 1e-9
        assert gnoise_intensity(c2) <= max_noise + 1e-9


def test_group_members_share_extent_and_range():
    rng = np.random.default_rng(1)
    for i in range(8):
        hr = images.random_crop(images.synthetic_image(100 + i, 96), 64, rng)
        g = make_train_group(hr, CFG, rng)
        for m in g.members():
            assert m.shape == (3, 16, 16)
            assert m.min() >= 0.0 and m.max() <= 1.0


def test_anchor_a2_is_pure_bicubic_downsample():
    rng = np.random.default_rng(2)
    hr = images.synthetic_image(7, 64)
    g = make_train_group(hr, CFG, rng)
    expected = np.clip(resize(hr, "bicubic", 0.25), 0.0, 1.0)
    np.testing.assert_array_equal(g.a2, expected)
    assert all(isinstance(s, FinalResize) for s in g.recipes["a2"].stages)


def test_anchor_a1_uses_maximal_parameters():
    rng = np.random.default_rng(3)
    hr = images.synthetic_image(9, 64)
    g = make_train_group(hr, CFG, rng)
    a1 = g.recipes["a1"]
    assert gblur_intensity(a1) >= gblur_intensity(g.recipes["c2"])
    assert gnoise_intensity(a1) >= gnoise_intensity(g.recipes["c2"])
    # structurally: blur at the top sigma, jpeg at the bottom quality
    sigmas = [s.sigma for s in a1.stages if hasattr(s, "sigma") and type(s).__name__ == "BlurIso"]
    assert max(sigmas) == CFG.blur_sigma[1]
    qualities = [s.quality for s in a1.stages if type(s).__name__ == "Jpeg"]
    assert min(qualities) == CFG.jpeg_quality[0]


def test_degenerate_rho_one_collapses_contrast_group():
    cfg = DegradeConfig(rho_range=(1.0, 1.0))
    rng = np.random.default_rng(4)
    hr = images.synthetic_image(11, 64)
    g = make_train_group(hr, cfg, rng)
    np.testing.assert_array_equal(g.c1, g.c2)
    np.testing.assert_array_equal(g.c2, g.c3)


def test_shared_seed_isolates_scaled_factor():
    # c1 vs c2 share the noise realization; only the blur differs
    rng = np.random.default_rng(5)
    hr = images.synthetic_image(13, 64)
    g = make_train_group(hr, cfg=CFG, rng=rng)
    assert g.recipes["c1"].seed == g.recipes["c2"].seed == g.recipes["c3"].seed


def test_group_rejects_bad_extents():
    with pytest.raises(ValueError):
        make_train_group(np.zeros((3, 62, 64)), CFG, np.random.default_rng(0))


def test_parallel_synthesis_matches_serial():
    patches = [images.synthetic_image(200 + i, 64) for i in range(6)]
    serial = synthesize_groups(patches, CFG, master_seed=77, workers=0)
    for workers in (2, 4):
        par = synthesize_groups(patches, CFG, master_seed=77, workers=workers)
        for gs, gp in zip(serial, par):
            for ms, mp in zip(gs.members(), gp.members()):
                np.testing.assert_array_equal(ms, mp)


def test_group_rng_is_stable():
    a = group_rng(123, 4).random(5)
    b = group_rng(123, 4).random(5)
    np.testing.assert_array_equal(a, b)
    c = group_rng(123, 5).random(5)
    assert not np.array_equal(a, c)


def test_scaled_recipes_still_terminate_with_lr_extent():
    rng = np.random.default_rng(6)
    hr = images.synthetic_image(15, 64)
    c2 = sample_recipe(CFG, rng)
    for r in (scale_gblur(c2, 2.0), scale_gnoise(c2, 2.0)):
        assert apply_recipe(hr, r).shape == (3, 16, 16)


def test_scaling_touches_every_family_member():
    rng = np.random.default_rng(8)
    for _ in range(50):
        c2 = sample_recipe(CFG, rng)
        c1 = scale_gblur(c2, 2.0)
        for before, after in zip(c2.stages, c1.stages[-len(c2.stages):]):
            if isinstance(before, GBLUR_STAGES):
                if isinstance(before, Sinc):
                    assert after.cutoff < before.cutoff
                else:
                    assert gblur_intensity_of(after) > gblur_intensity_of(before)
        c3 = scale_gnoise(c2, 2.0)
        for before, after in zip(c2.stages, c3.stages[-len(c2.stages):]):
            if isinstance(before, GNOISE_STAGES):
                assert noise_rank(after) > noise_rank(before)


def gblur_intensity_of(st):
    return st.sigma if hasattr(st, "sigma") else 0.5 * (st.sigma_x + st.sigma_y)


def noise_rank(st):
    if type(st).__name__ == "GaussianNoise":
        return st.sigma
    if type(st).__name__ == "PoissonNoise":
        return 1.0 / st.scale
    return 100.0 - st.quality
