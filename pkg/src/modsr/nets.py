"""The three learnable networks, built from the autodiff op vocabulary.

* ``UdemModel`` - shared conv stem, then two disjoint branches (noise,
  blur) of residual blocks ending in global average pooling and a linear
  scalar head. Heads are deliberately unsquashed; the anchor losses
  alone shape the score range.
* ``ConditionNet`` - per-modulation-site MLPs mapping the score pair to
  a 2C condition vector, split channel-wise into (alpha, beta).
* ``Generator`` - head conv, B modulated residual blocks (conv ->
  leaky_relu -> conv, residual add, then channel affine), two x2
  pixel-shuffle stages, and two tail convs: output is exactly 4x input.

Parameter counts at desk defaults (C_u=16, B_u=4, C_g=32, B_g=4, H=32):
  UDEM   = (16*3*9+16) + (16*16*9+16) + 2*4*2*(16*16*9+16) + 2*(16+1)
  CondNet= B_g * ((H*2+H) + (2*C_g*H + 2*C_g))
  Gen    = (C_g*3*9+C_g) + B_g*2*(C_g*C_g*9+C_g) + 2*(4*C_g*C_g*9+4*C_g)
           + (C_g*C_g*9+C_g) + (3*C_g*9+3)
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from modsr import autodiff as ad
from modsr.autodiff import Tensor


@dataclass
class NetConfig:
    udem_channels: int = 16
    udem_blocks: int = 4
    gen_channels: int = 32
    gen_blocks: int = 4
    cond_hidden: int = 32
    lrelu_slope: float = 0.2
    scale: int = 4  # two x2 pixel-shuffle stages


@dataclass(frozen=True)
class ScorePair:
    """General-noise and general-blur degradation scores.

    Raw network outputs are unbounded; clamp only at the service/UI
    boundary, never inside training.
    """
    s_n: float
    s_b: float

    def clamped(self) -> "ScorePair":
        return ScorePair(float(np.clip(self.s_n, 0.0, 1.0)),
                         float(np.clip(self.s_b, 0.0, 1.0)))


@dataclass
class ConvP:
    w: Tensor
    b: Tensor


@dataclass
class DenseP:
    w: Tensor
    b: Tensor


@dataclass
class UdemModel:
    cfg: NetConfig
    stem: list = field(default_factory=list)          # [ConvP, ConvP]
    noise_blocks: list = field(default_factory=list)  # [(ConvP, ConvP)] * B
    blur_blocks: list = field(default_factory=list)
    noise_head: DenseP = None
    blur_head: DenseP = None

    def named_params(self):
        out = []
        for i, c in enumerate(self.stem):
            out += [(f"udem.stem{i}.w", c.w), (f"udem.stem{i}.b", c.b)]
        for branch, blocks in (("noise", self.noise_blocks), ("blur", self.blur_blocks)):
            for i, (a, b) in enumerate(blocks):
                out += [(f"udem.{branch}{i}.a.w", a.w), (f"udem.{branch}{i}.a.b", a.b),
                        (f"udem.{branch}{i}.b.w", b.w), (f"udem.{branch}{i}.b.b", b.b)]
        out += [("udem.noise_head.w", self.noise_head.w), ("udem.noise_head.b", self.noise_head.b),
                ("udem.blur_head.w", self.blur_head.w), ("udem.blur_head.b", self.blur_head.b)]
        return out


@dataclass
class ConditionNet:
    cfg: NetConfig
    sites: list = field(default_factory=list)  # [(DenseP hidden, DenseP out)] * gen_blocks

    def named_params(self):
        out = []
        for i, (h, o) in enumerate(self.sites):
            out += [(f"cond.site{i}.h.w", h.w), (f"cond.site{i}.h.b", h.b),
                    (f"cond.site{i}.o.w", o.w), (f"cond.site{i}.o.b", o.b)]
        return out


@dataclass
class Generator:
    cfg: NetConfig
    head: ConvP = None
    blocks: list = field(default_factory=list)  # [(ConvP, ConvP)] * gen_blocks
    up: list = field(default_factory=list)      # [ConvP, ConvP]
    tail: list = field(default_factory=list)    # [ConvP, ConvP]

    def named_params(self):
        out = [("gen.head.w", self.head.w), ("gen.head.b", self.head.b)]
        for i, (a, b) in enumerate(self.blocks):
            out += [(f"gen.block{i}.a.w", a.w), (f"gen.block{i}.a.b", a.b),
                    (f"gen.block{i}.b.w", b.w), (f"gen.block{i}.b.b", b.b)]
        for i, c in enumerate(self.up):
            out += [(f"gen.up{i}.w", c.w), (f"gen.up{i}.b", c.b)]
        for i, c in enumerate(self.tail):
            out += [(f"gen.tail{i}.w", c.w), (f"gen.tail{i}.b", c.b)]
        return out


@dataclass
class Models:
    udem: UdemModel
    cond: ConditionNet
    gen: Generator

    def named_params(self):
        return self.udem.named_params() + self.cond.named_params() + self.gen.named_params()

    def params(self):
        return [t for _, t in self.named_params()]


def _kaiming_conv(rng, c_out, c_in, k, dtype):
    fan_in = c_in * k * k
    w = rng.standard_normal((c_out, c_in, k, k)) * np.sqrt(2.0 / fan_in)
    return ConvP(Tensor(w.astype(dtype), requires_grad=True),
                 Tensor(np.zeros(c_out, dtype=dtype), requires_grad=True))


def _small_dense(rng, m, n, dtype, scale=0.01):
    w = rng.uniform(-scale, scale, size=(m, n))
    return DenseP(Tensor(w.astype(dtype), requires_grad=True),
                  Tensor(np.zeros(m, dtype=dtype), requires_grad=True))


def init_params(seed: int, cfg: NetConfig | None = None, dtype=np.float64) -> Models:
    """Deterministic initialization.

    Convolutions use Kaiming fan-in scaling, dense heads small uniform.
    The condition net's output layers start at exactly zero weight with
    bias (1...,0...), so modulation begins as the identity and the whole
    system starts as an unconditioned restorer.
    """
    cfg = cfg or NetConfig()
    rng = np.random.default_rng(seed)
    cu, cg, hid = cfg.udem_channels, cfg.gen_channels, cfg.cond_hidden

    udem = UdemModel(cfg=cfg)
    udem.stem = [_kaiming_conv(rng, cu, 3, 3, dtype), _kaiming_conv(rng, cu, cu, 3, dtype)]
    for blocks in (udem.noise_blocks, udem.blur_blocks):
        for _ in range(cfg.udem_blocks):
            blocks.append((_kaiming_conv(rng, cu, cu, 3, dtype),
                           _kaiming_conv(rng, cu, cu, 3, dtype)))
    udem.noise_head = _small_dense(rng, 1, cu, dtype)
    udem.blur_head = _small_dense(rng, 1, cu, dtype)

    cond = ConditionNet(cfg=cfg)
    for _ in range(cfg.gen_blocks):
        hidden = _small_dense(rng, hid, 2, dtype, scale=0.5)
        out = DenseP(Tensor(np.zeros((2 * cg, hid), dtype=dtype), requires_grad=True),
                     Tensor(np.concatenate([np.ones(cg), np.zeros(cg)]).astype(dtype),
                            requires_grad=True))
        cond.sites.append((hidden, out))

    gen = Generator(cfg=cfg)
    gen.head = _kaiming_conv(rng, cg, 3, 3, dtype)
    for _ in range(cfg.gen_blocks):
        gen.blocks.append((_kaiming_conv(rng, cg, cg, 3, dtype),
                           _kaiming_conv(rng, cg, cg, 3, dtype)))
    gen.up = [_kaiming_conv(rng, 4 * cg, cg, 3, dtype), _kaiming_conv(rng, 4 * cg, cg, 3, dtype)]
    gen.tail = [_kaiming_conv(rng, cg, cg, 3, dtype), _kaiming_conv(rng, 3, cg, 3, dtype)]
    return Models(udem=udem, cond=cond, gen=gen)


# ---------------------------------------------------------------------------
# forward passes (pure functions of params and inputs)


def _residual_stack(x: Tensor, blocks, slope: float) -> Tensor:
    h = x
    for a, b in blocks:
        t = ad.conv2d(h, a.w, a.b, padding=1)
        t = ad.leaky_relu(t, slope)
        t = ad.conv2d(t, b.w, b.b, padding=1)
        h = ad.add(h, t)
    return h


def udem_forward(model: UdemModel, x: Tensor) -> tuple[Tensor, Tensor]:
    """Score a batch: returns (s_n, s_b) tensors of shape [B,1] (or [1])."""
    slope = model.cfg.lrelu_slope
    f = ad.leaky_relu(ad.conv2d(x, model.stem[0].w, model.stem[0].b, padding=1), slope)
    f = ad.leaky_relu(ad.conv2d(f, model.stem[1].w, model.stem[1].b, padding=1), slope)
    outs = []
    for blocks, head in ((model.noise_blocks, model.noise_head),
                         (model.blur_blocks, model.blur_head)):
        h = _residual_stack(f, blocks, slope)
        pooled = ad.global_avg_pool(h)
        outs.append(ad.dense(pooled, head.w, head.b))
    return outs[0], outs[1]


def score_image(model: UdemModel, img: np.ndarray) -> ScorePair:
    """Raw (unclamped) score pair for one [3,H,W] image."""
    s_n, s_b = udem_forward(model, Tensor(img))
    return ScorePair(float(s_n.data.reshape(-1)[0]), float(s_b.data.reshape(-1)[0]))


def condition_forward(net: ConditionNet, scores: Tensor) -> list[tuple[Tensor, Tensor]]:
    """Map [B,2] (or [2]) scores to one (alpha, beta) pair per block."""
    if not np.all(np.isfinite(scores.data)):
        raise ValueError("scores must be finite")
    c = net.cfg.gen_channels
    pairs = []
    for hidden, out in net.sites:
        z = ad.dense(ad.leaky_relu(ad.dense(scores, hidden.w, hidden.b),
                                   net.cfg.lrelu_slope), out.w, out.b)
        axis = z.data.ndim - 1
        pairs.append((ad.narrow(z, axis, 0, c), ad.narrow(z, axis, c, c)))
    return pairs


def identity_conditions(cfg: NetConfig, batch: int | None = None,
                        dtype=np.float64) -> list[tuple[Tensor, Tensor]]:
    """The (alpha=1, beta=0) condition list: modulation as a no-op."""
    c = cfg.gen_channels
    shape = (c,) if batch is None else (batch, c)
    return [(Tensor(np.ones(shape, dtype=dtype)), Tensor(np.zeros(shape, dtype=dtype)))
            for _ in range(cfg.gen_blocks)]


def generator_forward(gen: Generator, lr: Tensor, conditions) -> Tensor:
    """x4 restoration; output stays in pre-clip real range."""
    if len(conditions) != len(gen.blocks):
        raise ValueError(f"need {len(gen.blocks)} condition pairs, got {len(conditions)}")
    slope = gen.cfg.lrelu_slope
    f = ad.leaky_relu(ad.conv2d(lr, gen.head.w, gen.head.b, padding=1), slope)
    for (a, b), (alpha, beta) in zip(gen.blocks, conditions):
        t = ad.conv2d(f, a.w, a.b, padding=1)
        t = ad.leaky_relu(t, slope)
        t = ad.conv2d(t, b.w, b.b, padding=1)
        f = ad.add(f, t)
        f = ad.broadcast_affine(f, alpha, beta)
    for up in gen.up:
        f = ad.leaky_relu(ad.pixel_shuffle(ad.conv2d(f, up.w, up.b, padding=1), 2), slope)
    f = ad.leaky_relu(ad.conv2d(f, gen.tail[0].w, gen.tail[0].b, padding=1), slope)
    return ad.conv2d(f, gen.tail[1].w, gen.tail[1].b, padding=1)


def restore_image(models: Models, img: np.ndarray, scores: ScorePair | None = None) -> np.ndarray:
    """Clip-to-[0,1] x4 restoration of one [3,H,W] image.

    When ``scores`` is omitted they are estimated by the scorer (the
    automatic mode); given scores are used as-is.
    """
    if scores is None:
        scores = score_image(models.udem, img).clamped()
    dtype = models.gen.head.w.dtype
    svec = Tensor(np.array([scores.s_n, scores.s_b], dtype=dtype))
    conditions = condition_forward(models.cond, svec)
    out = generator_forward(models.gen, Tensor(img.astype(dtype)), conditions)
    return np.clip(out.data, 0.0, 1.0)


def count_params(models: Models) -> int:
    return sum(t.data.size for _, t in models.named_params())
