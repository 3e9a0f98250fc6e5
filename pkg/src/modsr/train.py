"""Losses, the group-based training step, and the two-stage schedule.

Per step: the scorer sees all five group members; ranking hinges order
the blur scores of (c1, c2) and the noise scores of (c3, c2); anchor
regression pins a1 toward 1 and a2 toward 0 on both branches. The
restorer then upscales c2 conditioned on c2's *detached* scores, so the
scorer is shaped only by the metric losses while the condition network
and generator learn from the L1 term.

Desk scale drops the adversarial and perceptual terms of the full-scale
objective (their weights are pinned to zero); everything that concerns
score learning and modulation is unchanged. See README for the rationale.
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from modsr import autodiff as ad
from modsr.autodiff import Tape, Tensor
from modsr.checkpoint import config_hash, load_checkpoint, models_from_checkpoint, save_checkpoint
from modsr.degrade import DegradeConfig, synthesize_groups
from modsr.images import random_crop, synthetic_corpus
from modsr.nets import Models, NetConfig, condition_forward, generator_forward, init_params, udem_forward


class TrainingDiverged(RuntimeError):
    pass


@dataclass
class LossWeights:
    """Objective weights. Full-scale paper defaults are {0.1, 1, 1, 0.05}
    for (gan, perceptual, l1, metric); desk scale pins gan=per=0."""
    lambda_gan: float = 0.0
    lambda_per: float = 0.0
    lambda_l1: float = 1.0
    lambda_metric: float = 0.05
    gamma: float = 0.05          # ranking margin
    anchor_weight: float = 1.0   # 0 reproduces the no-anchor ablation

    def __post_init__(self):
        for name in ("lambda_gan", "lambda_per", "lambda_l1", "lambda_metric",
                     "anchor_weight"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")
        if self.lambda_gan or self.lambda_per:
            raise ValueError("adversarial/perceptual terms are out of scope "
                             "at desk scale; keep their weights at 0")


@dataclass
class TrainConfig:
    # schedule: stage 1 at 2e-4, stage 2 continues at 1e-4
    # (full scale trains 1000K + 400K iterations at batch 48; desk scale
    #  shrinks to minutes on a CPU)
    stage1_iters: int = 3000
    stage2_iters: int = 1000
    lr_stage1: float = 2e-4
    lr_stage2: float = 1e-4
    batch_size: int = 8
    patch_size: int = 64         # HR patch; LR is patch/4
    seed: int = 0
    checkpoint_every: int = 1000
    data_workers: int = 0
    corpus_size: int = 32
    corpus_image_size: int = 128
    corpus_seed: int = 424242
    # single precision: measured ~2x wall-clock over double on 2-core CPU;
    # gradient-check tests pin double independently of this default
    dtype: str = "float32"
    adam_beta1: float = 0.9
    adam_beta2: float = 0.99
    adam_eps: float = 1e-8
    weights: LossWeights = field(default_factory=LossWeights)
    net: NetConfig = field(default_factory=NetConfig)
    degrade: DegradeConfig = field(default_factory=DegradeConfig)

    def __post_init__(self):
        if self.patch_size % 4:
            raise ValueError("patch_size must be divisible by 4")
        if self.patch_size <= 0 or self.batch_size <= 0:
            raise ValueError("extents must be positive")

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, default=list)

    @classmethod
    def from_json(cls, text: str) -> "TrainConfig":
        raw = json.loads(text)
        raw["weights"] = LossWeights(**raw.get("weights", {}))
        raw["net"] = NetConfig(**raw.get("net", {}))
        deg = {k: tuple(v) if isinstance(v, list) else v
               for k, v in raw.get("degrade", {}).items()}
        raw["degrade"] = DegradeConfig(**deg)
        return cls(**raw)

    def np_dtype(self):
        return np.float32 if self.dtype == "float32" else np.float64


def margin_ranking_loss(s_hi, s_lo, gamma: float):
    """mean(max(0, gamma - (s_hi - s_lo))): zero iff separation >= gamma."""
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    s_hi = ad.as_tensor(s_hi)
    s_lo = ad.as_tensor(s_lo)
    return ad.mean(ad.relu(ad.sub(gamma, ad.sub(s_hi, s_lo))))


def anchor_loss(s_max_n, s_max_b, s_min_n, s_min_b):
    """Squared pulls of the maximal anchor toward 1 and the clean anchor
    toward 0, on both branches, batch-averaged."""
    up_n = ad.mean(ad.square(ad.sub(ad.as_tensor(s_max_n), 1.0)))
    up_b = ad.mean(ad.square(ad.sub(ad.as_tensor(s_max_b), 1.0)))
    lo_n = ad.mean(ad.square(ad.as_tensor(s_min_n)))
    lo_b = ad.mean(ad.square(ad.as_tensor(s_min_b)))
    return ad.add(ad.add(up_n, up_b), ad.add(lo_n, lo_b))


@dataclass
class LossReport:
    iteration: int
    l1: float
    ml_n: float
    ml_b: float
    ac: float
    lr: float
    total: float

    def to_json(self) -> str:
        return json.dumps({"iter": self.iteration, "l1": self.l1, "ml_n": self.ml_n,
                           "ml_b": self.ml_b, "ac": self.ac, "lr": self.lr})


@dataclass
class TrainState:
    cfg: TrainConfig
    models: Models
    adam: dict | None = None
    iteration: int = 0

    def params(self):
        return self.models.params()


def train_step(state: TrainState, groups, lr: float) -> LossReport:
    """One optimization step over a batch of contrast/anchor groups."""
    cfg = state.cfg
    w = cfg.weights
    dt = cfg.np_dtype()
    b = len(groups)

    members = np.concatenate([
        np.stack([g.c1 for g in groups]),
        np.stack([g.c2 for g in groups]),
        np.stack([g.c3 for g in groups]),
        np.stack([g.a1 for g in groups]),
        np.stack([g.a2 for g in groups]),
    ]).astype(dt)
    hr = np.stack([g.hr for g in groups]).astype(dt)

    params = state.params()
    with Tape() as tape:
        s_n, s_b = udem_forward(state.models.udem, Tensor(members))
        sl = {name: i * b for i, name in enumerate(("c1", "c2", "c3", "a1", "a2"))}

        def pick(scores, name):
            return ad.narrow(scores, 0, sl[name], b)

        ml_b = margin_ranking_loss(pick(s_b, "c1"), pick(s_b, "c2"), w.gamma)
        ml_n = margin_ranking_loss(pick(s_n, "c3"), pick(s_n, "c2"), w.gamma)
        ac = anchor_loss(pick(s_n, "a1"), pick(s_b, "a1"), pick(s_n, "a2"), pick(s_b, "a2"))

        # scorer estimates condition the restorer but receive no gradient
        # from it: the metric space is shaped by ranking/anchor terms only
        c2_scores = ad.detach(ad.concat([pick(s_n, "c2"), pick(s_b, "c2")], axis=1))
        conds = condition_forward(state.models.cond, c2_scores)
        sr = generator_forward(state.models.gen, Tensor(members[sl["c2"]:sl["c2"] + b]), conds)
        l1 = ad.mean(ad.absolute(ad.sub(sr, Tensor(hr))))

        metric = ad.add(ad.add(ml_n, ml_b), ad.mul(ac, w.anchor_weight))
        loss = ad.add(ad.mul(l1, w.lambda_l1), ad.mul(metric, w.lambda_metric))

    report = LossReport(iteration=state.iteration + 1, l1=float(l1.data),
                        ml_n=float(ml_n.data), ml_b=float(ml_b.data),
                        ac=float(ac.data), lr=lr, total=float(loss.data))
    if not np.isfinite(report.total):
        raise TrainingDiverged(f"non-finite loss at iteration {report.iteration}: "
                               f"{report.to_json()}")

    grads = tape.backward(loss, params=params)
    state.adam = ad.adam_step(params, grads, state.adam, lr=lr,
                              beta1=cfg.adam_beta1, beta2=cfg.adam_beta2,
                              eps=cfg.adam_eps)
    state.iteration += 1
    return report


def _make_batch(cfg: TrainConfig, corpus, iteration: int):
    """HR patches + groups for one iteration, a pure function of
    (seed, iteration); worker count cannot change the stream."""
    crop_rng = np.random.default_rng(np.random.SeedSequence((cfg.seed, iteration, 1)))
    patches = []
    for _ in range(cfg.batch_size):
        img = corpus[int(crop_rng.integers(len(corpus)))]
        patches.append(random_crop(img, cfg.patch_size, crop_rng))
    master = int(np.random.default_rng(
        np.random.SeedSequence((cfg.seed, iteration, 2))).integers(0, 2 ** 62))
    return synthesize_groups(patches, cfg.degrade, master, workers=cfg.data_workers)


def training_corpus(cfg: TrainConfig):
    return synthetic_corpus(cfg.corpus_size, cfg.corpus_image_size, cfg.corpus_seed)


def run_training(cfg: TrainConfig, out_dir: str | None = None,
                 resume: str | None = None, log_fn=None,
                 iterations: int | None = None) -> TrainState:
    """Full two-stage run; returns the final state.

    Writes ckpt_XXXXXX.ckpt at the configured cadence plus ckpt_final,
    and a progress log of line-delimited JSON records when ``out_dir``
    is given. ``resume`` continues bit-exactly from a saved checkpoint.
    """
    total = iterations if iterations is not None else cfg.stage1_iters + cfg.stage2_iters
    cfg_hash = config_hash(cfg)

    if resume:
        ckpt = load_checkpoint(resume)
        if ckpt.cfg_hash != cfg_hash:
            raise ValueError(f"checkpoint config hash {ckpt.cfg_hash} does not match "
                             f"the supplied config {cfg_hash}")
        models, adam = models_from_checkpoint(ckpt)
        state = TrainState(cfg=cfg, models=models, adam=adam, iteration=ckpt.iteration)
    else:
        state = TrainState(cfg=cfg, models=init_params(cfg.seed, cfg.net, cfg.np_dtype()))

    corpus = training_corpus(cfg)
    log_fh = None
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        log_fh = open(os.path.join(out_dir, "train_log.jsonl"), "a")
    # one-deep prefetch: batch content depends only on (seed, iteration),
    # so overlapping synthesis with the optimizer step changes nothing
    pool = ThreadPoolExecutor(max_workers=1)
    try:
        pending = None
        if state.iteration < total:
            pending = pool.submit(_make_batch, cfg, corpus, state.iteration + 1)
        while state.iteration < total:
            it = state.iteration + 1
            lr = cfg.lr_stage1 if it <= cfg.stage1_iters else cfg.lr_stage2
            groups = pending.result()
            if it < total:
                pending = pool.submit(_make_batch, cfg, corpus, it + 1)
            report = train_step(state, groups, lr)
            if log_fh:
                log_fh.write(report.to_json() + "\n")
            if log_fn:
                log_fn(report)
            if out_dir and (it % cfg.checkpoint_every == 0 or it == total):
                save_checkpoint(os.path.join(out_dir, f"ckpt_{it:06d}.ckpt"),
                                state.models, state.adam, it, cfg_hash)
        if out_dir:
            save_checkpoint(os.path.join(out_dir, "ckpt_final.ckpt"),
                            state.models, state.adam, state.iteration, cfg_hash)
    finally:
        pool.shutdown(wait=False, cancel_futures=True)
        if log_fh:
            log_fh.close()
    return state
