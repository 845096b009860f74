"""Teacher-student training loop.

Each optimizer step takes one joint update on
``total = mean cosine loss + mlm_weight * mean MLM loss``: the cosine
part from a parallel batch against frozen teacher embeddings, the MLM
part from a monolingual batch. With mlm_weight = 0 the MLM branch is
skipped entirely (no RNG draws, no forward), so a run with weight 0 is
bit-identical to pure distillation. Data order, masking, and parameter
init draw from separate seeded generators, keeping ablations aligned.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
import torch

from ..errors import DimMismatch, EmptyCorpus, NonFiniteLoss
from .curriculum import CurriculumSchedule, apply_increment
from .encoder import EncoderConfig, StudentEncoder, build_student, pad_batch
from .losses import cosine_loss, mask_tokens, masked_cross_entropy
from .teacher import Teacher
from .vocab import SubwordVocab

_INIT_TAG, _DATA_TAG, _MONO_TAG, _MASK_TAG = 0, 1, 2, 3


def _seed_for(seed: int, tag: int) -> int:
    return (seed * 1_000_003 + tag) % (2 ** 63)


LR_SCHEDULES = ("constant", "linear")


@dataclass(frozen=True)
class DistillConfig:
    lr: float = 5e-4
    batch_size: int = 32
    mlm_weight: float = 1.0
    mask_prob: float = 0.15
    curriculum: CurriculumSchedule | None = None
    steps: int = 1000
    seed: int = 0
    lr_schedule: str = "constant"  # "linear" decays to 0 over `steps`

    def __post_init__(self):
        if self.lr <= 0:
            raise ValueError("lr must be positive")
        if not 0.0 <= self.mask_prob < 1.0:
            raise ValueError("mask_prob must be in [0, 1)")
        if self.mlm_weight < 0:
            raise ValueError("mlm_weight must be non-negative")
        if self.batch_size < 1:
            raise ValueError("batch_size must be positive")
        if self.steps < 0:
            raise ValueError("steps must be non-negative")
        if self.lr_schedule not in LR_SCHEDULES:
            raise ValueError(f"unknown lr_schedule {self.lr_schedule!r}")

    def lr_at(self, step: int) -> float:
        """Learning rate for the given 0-based step."""
        if self.lr_schedule == "linear" and self.steps > 0:
            return self.lr * max(0.0, 1.0 - step / self.steps)
        return self.lr


@dataclass
class TrainBatch:
    parallel_ids: torch.Tensor
    parallel_mask: torch.Tensor
    teacher_emb: torch.Tensor
    mono_ids: torch.Tensor | None = None
    mono_mask: torch.Tensor | None = None

    def __post_init__(self):
        if self.teacher_emb.shape[0] != self.parallel_ids.shape[0]:
            raise DimMismatch("teacher rows must match parallel batch size")


@dataclass
class TrainState:
    model: StudentEncoder
    optimizer: torch.optim.Optimizer
    mask_gen: torch.Generator
    step: int = 0
    metrics: list = field(default_factory=list)


def train_step(batch: TrainBatch, cfg: DistillConfig, state: TrainState) -> dict:
    """One joint optimizer update; returns the step's loss components."""
    model = state.model
    student = model.pool(batch.parallel_ids, batch.parallel_mask)
    cos = cosine_loss(student, batch.teacher_emb.to(student.dtype))
    use_mlm = cfg.mlm_weight > 0 and batch.mono_ids is not None
    if use_mlm:
        corrupted, positions, labels = mask_tokens(
            batch.mono_ids, batch.mono_mask, model.cfg.vocab_size,
            cfg.mask_prob, state.mask_gen)
        logits = model.mlm_logits(corrupted, batch.mono_mask)
        mlm = masked_cross_entropy(logits, labels, positions)
        total = cos + cfg.mlm_weight * mlm
    else:
        mlm = None
        total = cos
    if not torch.isfinite(total):
        raise NonFiniteLoss(f"loss became non-finite at step {state.step}")
    for group in state.optimizer.param_groups:
        group["lr"] = cfg.lr_at(state.step)
    state.optimizer.zero_grad()
    total.backward()
    state.optimizer.step()
    state.step += 1
    metrics = {
        "step": state.step,
        "cosine_loss": float(cos.detach()),
        "mlm_loss": float(mlm.detach()) if mlm is not None else 0.0,
        "total": float(total.detach()),
    }
    state.metrics.append(metrics)
    return metrics


def train(
    parallel,
    mono,
    teacher: Teacher,
    cfg: DistillConfig,
    *,
    encoder_cfg: EncoderConfig,
    vocab: SubwordVocab,
    metrics_path=None,
) -> tuple[StudentEncoder, list]:
    """Train a student against a frozen teacher.

    parallel: iterable of (student sentence, teacher sentence) pairs.
    mono: iterable of student-language lines for MLM, may be empty/None.
    Returns (model, per-step metric dicts). Reproducible given cfg.seed.
    """
    if encoder_cfg.width != teacher.dim:
        raise DimMismatch(
            f"student width {encoder_cfg.width} != teacher dim {teacher.dim}")
    pairs = [(tuple(vocab.tokenize(s)[:encoder_cfg.max_len]), t)
             for s, t in parallel]
    if not pairs:
        raise EmptyCorpus("no parallel pairs")
    mono_tok = [vocab.tokenize(line)[:encoder_cfg.max_len]
                for line in (mono or [])]

    model = build_student(encoder_cfg, seed=_seed_for(cfg.seed, _INIT_TAG))
    optimizer = torch.optim.Adam(model.parameters(), lr=cfg.lr)
    mask_gen = torch.Generator().manual_seed(_seed_for(cfg.seed, _MASK_TAG))
    data_gen = torch.Generator().manual_seed(_seed_for(cfg.seed, _DATA_TAG))
    mono_gen = torch.Generator().manual_seed(_seed_for(cfg.seed, _MONO_TAG))
    state = TrainState(model=model, optimizer=optimizer, mask_gen=mask_gen)

    emb_cache: dict[str, np.ndarray] = {}

    def teacher_rows(sentences) -> torch.Tensor:
        missing = [s for s in dict.fromkeys(sentences) if s not in emb_cache]
        if missing:
            rows = teacher.embed_sentences(missing)
            for s, r in zip(missing, rows):
                emb_cache[s] = np.asarray(r, dtype=np.float32)
        return torch.from_numpy(np.stack([emb_cache[s] for s in sentences]))

    mono_order: list[int] = []
    mono_ptr = 0

    def next_mono() -> list:
        nonlocal mono_order, mono_ptr
        out = []
        for _ in range(min(cfg.batch_size, len(mono_tok))):
            if mono_ptr >= len(mono_order):
                mono_order = torch.randperm(len(mono_tok), generator=mono_gen).tolist()
                mono_ptr = 0
            out.append(list(mono_tok[mono_order[mono_ptr]]))
            mono_ptr += 1
        return out

    increments = cfg.curriculum.increments if cfg.curriculum else (1.0,)
    sink = open(metrics_path, "w", encoding="utf-8") if metrics_path else None
    try:
        epoch = 0
        while state.step < cfg.steps:
            fraction = increments[min(epoch, len(increments) - 1)]
            perm = torch.randperm(len(pairs), generator=data_gen).tolist()
            for lo in range(0, len(perm), cfg.batch_size):
                if state.step >= cfg.steps:
                    break
                chosen = perm[lo:lo + cfg.batch_size]
                views = [apply_increment(pairs[i][0], pairs[i][1], fraction)
                         for i in chosen]
                ids, mask = pad_batch([list(v[0]) for v in views],
                                      encoder_cfg.max_len, encoder_cfg.vocab_size)
                temb = teacher_rows([v[1] for v in views])
                mono_ids = mono_mask = None
                if cfg.mlm_weight > 0 and mono_tok:
                    mono_ids, mono_mask = pad_batch(
                        next_mono(), encoder_cfg.max_len, encoder_cfg.vocab_size)
                batch = TrainBatch(parallel_ids=ids, parallel_mask=mask,
                                   teacher_emb=temb, mono_ids=mono_ids,
                                   mono_mask=mono_mask)
                metrics = train_step(batch, cfg, state)
                if sink is not None:
                    record = dict(metrics)
                    record["increment"] = fraction
                    sink.write(json.dumps(record) + "\n")
            epoch += 1
    finally:
        if sink is not None:
            sink.close()
    return model, state.metrics
