"""Training losses: batch cosine distance and masked-token cross-entropy.

The joint objective is mean(1 - cos(student, teacher)) over the
parallel batch plus a weighted mean cross-entropy of recovering the
original ids at masked positions of the monolingual batch.
"""

from __future__ import annotations

import torch
import torch.nn.functional as F

from ..errors import NoMaskedPositions, ZeroNorm
from .vocab import MASK, NUM_SPECIALS


def cosine_loss(student: torch.Tensor, teacher: torch.Tensor) -> torch.Tensor:
    """Mean over rows of 1 - cosine(student, teacher); range [0, 2]."""
    if student.shape != teacher.shape:
        raise ValueError(f"shape mismatch {tuple(student.shape)} vs {tuple(teacher.shape)}")
    if student.dim() == 1:
        student = student[None, :]
        teacher = teacher[None, :]
    s_norm = torch.linalg.vector_norm(student, dim=1)
    t_norm = torch.linalg.vector_norm(teacher, dim=1)
    if (s_norm == 0).any() or (t_norm == 0).any():
        raise ZeroNorm("cosine loss undefined for zero-norm rows")
    cos = (student * teacher).sum(dim=1) / (s_norm * t_norm)
    return (1.0 - cos).mean()


def masked_cross_entropy(logits: torch.Tensor, labels: torch.Tensor,
                         positions: torch.Tensor) -> torch.Tensor:
    """Mean CE over positions marked True; labels give the original ids."""
    if not positions.any():
        raise NoMaskedPositions("no masked positions in batch")
    return F.cross_entropy(logits[positions], labels[positions])


def mlm_loss(tokens: torch.Tensor, masked_positions: torch.Tensor, model,
             mask: torch.Tensor | None = None) -> torch.Tensor:
    """Cross-entropy of recovering `tokens` at `masked_positions`.

    `tokens` are the original ids; masked positions are replaced by the
    MASK id for the forward pass (the stochastic 80/10/10 corruption
    used in training lives in mask_tokens, which feeds
    masked_cross_entropy directly).
    """
    if tokens.dim() == 1:
        tokens = tokens[None, :]
        masked_positions = masked_positions[None, :]
        if mask is not None:
            mask = mask[None, :]
    if mask is None:
        mask = torch.ones_like(tokens, dtype=torch.bool)
    if not masked_positions.any():
        raise NoMaskedPositions("no masked positions in batch")
    if (masked_positions & ~mask).any():
        raise NoMaskedPositions("masked positions must be real tokens")
    corrupted = tokens.masked_fill(masked_positions, MASK)
    logits = model.mlm_logits(corrupted, mask)
    return masked_cross_entropy(logits, tokens, masked_positions)


def mask_tokens(ids: torch.Tensor, mask: torch.Tensor, vocab_size: int,
                mask_prob: float, gen: torch.Generator):
    """BERT-style corruption for training.

    Each real token is selected with probability mask_prob; selected
    tokens become MASK 80% of the time, a random non-special id 10%,
    and stay unchanged 10%. If nothing was selected, the first real
    position is forced so the loss is always defined.

    Returns (corrupted ids, selected-position mask, original ids).
    """
    u = torch.rand(ids.shape, generator=gen)
    selected = (u < mask_prob) & mask
    if not selected.any():
        flat = mask.reshape(-1)
        first_real = int(flat.nonzero()[0])
        selected = selected.reshape(-1)
        selected[first_real] = True
        selected = selected.reshape(ids.shape)
    action = torch.rand(ids.shape, generator=gen)
    corrupted = ids.clone()
    corrupted[selected & (action < 0.8)] = MASK
    random_slot = selected & (action >= 0.8) & (action < 0.9)
    if random_slot.any():
        rand_ids = torch.randint(NUM_SPECIALS, vocab_size, ids.shape, generator=gen)
        corrupted[random_slot] = rand_ids[random_slot]
    return corrupted, selected, ids
