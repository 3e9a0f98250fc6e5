import os

import numpy as np

from helpers import central_diff, max_rel_err
from modsr import autodiff as ad
from modsr import nets
from modsr.autodiff import Tape, Tensor
from modsr.checkpoint import (
    config_hash,
    load_checkpoint,
    models_from_checkpoint,
    save_checkpoint,
)
from modsr.nets import (
    Models,
    NetConfig,
    ScorePair,
    condition_forward,
    count_params,
    generator_forward,
    identity_conditions,
    init_params,
    restore_image,
    score_image,
    udem_forward,
)

TINY = NetConfig(udem_channels=4, udem_blocks=2, gen_channels=4, gen_blocks=2, cond_hidden=4)


def test_udem_forward_deterministic():
    models = init_params(0)
    img = np.random.default_rng(1).random((3, 16, 16))
    a = score_image(models.udem, img)
    b = score_image(models.udem, img)
    assert a == b


def test_udem_branches_share_only_stem():
    # parameter objects of the two branches are disjoint
    models = init_params(0)
    noise = [id(c.w) for pair in models.udem.noise_blocks for c in pair]
    blur = [id(c.w) for pair in models.udem.blur_blocks for c in pair]
    assert not set(noise) & set(blur)


def test_condition_forward_shapes_and_determinism():
    models = init_params(3, TINY)
    s = Tensor(np.array([0.3, 0.7]))
    pairs = condition_forward(models.cond, s)
    assert len(pairs) == TINY.gen_blocks
    for alpha, beta in pairs:
        assert alpha.shape == (TINY.gen_channels,)
        assert beta.shape == (TINY.gen_channels,)
    pairs2 = condition_forward(models.cond, s)
    for (a1, b1), (a2, b2) in zip(pairs, pairs2):
        np.testing.assert_array_equal(a1.data, a2.data)
        np.testing.assert_array_equal(b1.data, b2.data)


def test_generator_output_is_4x():
    models = init_params(5, TINY)
    lr = Tensor(np.random.default_rng(2).random((3, 12, 10)))
    out = generator_forward(models.gen, lr, identity_conditions(TINY))
    assert out.shape == (3, 48, 40)


def test_identity_conditions_match_unconditioned_network():
    models = init_params(7, TINY)
    lr = Tensor(np.random.default_rng(3).random((3, 8, 8)))
    modulated = generator_forward(models.gen, lr, identity_conditions(TINY))

    # hand-rolled unconditioned forward: same layers, no affine stage
    slope = TINY.lrelu_slope
    f = ad.leaky_relu(ad.conv2d(lr, models.gen.head.w, models.gen.head.b, padding=1), slope)
    for a, b in models.gen.blocks:
        t = ad.conv2d(f, a.w, a.b, padding=1)
        t = ad.leaky_relu(t, slope)
        t = ad.conv2d(t, b.w, b.b, padding=1)
        f = ad.add(f, t)
    for up in models.gen.up:
        f = ad.leaky_relu(ad.pixel_shuffle(ad.conv2d(f, up.w, up.b, padding=1), 2), slope)
    f = ad.leaky_relu(ad.conv2d(f, models.gen.tail[0].w, models.gen.tail[0].b, padding=1), slope)
    plain = ad.conv2d(f, models.gen.tail[1].w, models.gen.tail[1].b, padding=1)

    np.testing.assert_array_equal(modulated.data, plain.data)


def test_generator_l1_gradient_matches_finite_differences():
    models = init_params(11, TINY)
    rng = np.random.default_rng(4)
    lr = rng.random((3, 6, 6))
    target = rng.random((3, 24, 24))
    sampled = models.gen.blocks[0][0].w  # one conv weight tensor

    def forward():
        s = Tensor(np.array([0.4, 0.6]))
        conds = condition_forward(models.cond, s)
        out = generator_forward(models.gen, Tensor(lr), conds)
        return ad.mean(ad.absolute(ad.sub(out, Tensor(target))))

    with Tape() as tape:
        loss = forward()
    (analytic,) = tape.backward(loss, params=[sampled])

    flat = sampled.data.reshape(-1)
    idx = rng.choice(flat.size, size=8, replace=False)
    eps = 1e-4
    for i in idx:
        orig = flat[i]
        flat[i] = orig + eps
        hi = float(forward().data)
        flat[i] = orig - eps
        lo = float(forward().data)
        flat[i] = orig
        num = (hi - lo) / (2 * eps)
        assert max_rel_err(analytic.reshape(-1)[i], np.array(num)) <= 1e-4


def test_init_deterministic_per_seed():
    a = init_params(42, TINY)
    b = init_params(42, TINY)
    for (na, ta), (nb, tb) in zip(a.named_params(), b.named_params()):
        assert na == nb
        np.testing.assert_array_equal(ta.data, tb.data)
    c = init_params(43, TINY)
    assert any(not np.array_equal(ta.data, tc.data)
               for (_, ta), (_, tc) in zip(a.named_params(), c.named_params()))


def test_initial_modulation_is_identity():
    models = init_params(9, TINY)
    lr = Tensor(np.random.default_rng(5).random((3, 8, 8)))
    with_scores = generator_forward(
        models.gen, lr, condition_forward(models.cond, Tensor(np.array([0.9, 0.1]))))
    with_identity = generator_forward(models.gen, lr, identity_conditions(TINY))
    assert np.max(np.abs(with_scores.data - with_identity.data)) < 1e-3


def test_param_count_matches_formula():
    cfg = NetConfig()
    models = init_params(0, cfg)
    cu, bu = cfg.udem_channels, cfg.udem_blocks
    cg, bg, h = cfg.gen_channels, cfg.gen_blocks, cfg.cond_hidden
    udem = (cu * 3 * 9 + cu) + (cu * cu * 9 + cu) + 2 * bu * 2 * (cu * cu * 9 + cu) + 2 * (cu + 1)
    cond = bg * ((h * 2 + h) + (2 * cg * h + 2 * cg))
    gen = ((cg * 3 * 9 + cg) + bg * 2 * (cg * cg * 9 + cg) + 2 * (4 * cg * cg * 9 + 4 * cg)
           + (cg * cg * 9 + cg) + (3 * cg * 9 + 3))
    assert count_params(models) == udem + cond + gen


def test_scorepair_clamp():
    assert ScorePair(-0.3, 1.4).clamped() == ScorePair(0.0, 1.0)
    assert ScorePair(0.2, 0.8).clamped() == ScorePair(0.2, 0.8)


def test_checkpoint_roundtrip_bytes_and_outputs(tmp_path):
    models = init_params(21, TINY)
    h = config_hash(TINY)
    p1 = tmp_path / "a.ckpt"
    p2 = tmp_path / "b.ckpt"
    state = {"step": 3,
             "m": [np.random.default_rng(6).random(t.data.shape) for t in models.params()],
             "v": [np.random.default_rng(7).random(t.data.shape) for t in models.params()]}
    save_checkpoint(str(p1), models, state, iteration=123, cfg_hash=h)

    ckpt = load_checkpoint(str(p1))
    assert ckpt.iteration == 123 and ckpt.cfg_hash == h
    rebuilt, state2 = models_from_checkpoint(ckpt)
    save_checkpoint(str(p2), rebuilt, state2, iteration=123, cfg_hash=h)
    assert p1.read_bytes() == p2.read_bytes()

    img = np.random.default_rng(8).random((3, 8, 8))
    np.testing.assert_array_equal(restore_image(models, img, ScorePair(0.5, 0.5)),
                                  restore_image(rebuilt, img, ScorePair(0.5, 0.5)))
    sa = score_image(models.udem, img)
    sb = score_image(rebuilt.udem, img)
    assert sa == sb


def test_restore_image_without_scores_uses_estimates():
    models = init_params(31, TINY)
    img = np.random.default_rng(9).random((3, 8, 8))
    auto = restore_image(models, img)
    manual = restore_image(models, img, score_image(models.udem, img).clamped())
    np.testing.assert_array_equal(auto, manual)
