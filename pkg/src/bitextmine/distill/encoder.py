"""Student sentence encoder: small pre-LN transformer with max-pooling.

The sentence embedding is the elementwise max over final-layer token
states, padding excluded, so the output width is the embedding width —
it must equal the teacher dimension for distillation. Padding is
position-transparent: real tokens are numbered by their rank among real
tokens, so inserting PAD anywhere never changes the encoding. No
dropout anywhere; forward passes are deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import torch
from torch import nn

from ..errors import TokenOutOfRange, TooLong
from .vocab import NUM_SPECIALS, PAD


@dataclass(frozen=True)
class EncoderConfig:
    vocab_size: int
    layers: int = 2
    width: int = 64
    heads: int = 2
    ffn_mult: int = 4
    max_len: int = 64

    def __post_init__(self):
        if min(self.vocab_size, self.layers, self.width, self.heads,
               self.ffn_mult, self.max_len) < 1:
            raise ValueError("all encoder dimensions must be positive")
        if self.width % self.heads:
            raise ValueError("width must be divisible by heads")
        if self.vocab_size < NUM_SPECIALS:
            raise ValueError(f"vocab_size must be >= {NUM_SPECIALS}")

    def to_dict(self) -> dict:
        return {"vocab_size": self.vocab_size, "layers": self.layers,
                "width": self.width, "heads": self.heads,
                "ffn_mult": self.ffn_mult, "max_len": self.max_len}


class _Attention(nn.Module):
    def __init__(self, width: int, heads: int):
        super().__init__()
        self.heads = heads
        self.head_dim = width // heads
        self.q = nn.Linear(width, width)
        self.k = nn.Linear(width, width)
        self.v = nn.Linear(width, width)
        self.out = nn.Linear(width, width)

    def forward(self, x, key_mask):
        b, t, w = x.shape
        def split(proj):
            return proj(x).view(b, t, self.heads, self.head_dim).transpose(1, 2)
        q, k, v = split(self.q), split(self.k), split(self.v)
        scores = q @ k.transpose(-2, -1) / math.sqrt(self.head_dim)
        # hide PAD keys from every query; each row keeps >= 1 real key
        scores = scores.masked_fill(~key_mask[:, None, None, :], float("-inf"))
        ctx = torch.softmax(scores, dim=-1) @ v
        return self.out(ctx.transpose(1, 2).reshape(b, t, w))


class _Layer(nn.Module):
    def __init__(self, width: int, heads: int, ffn_mult: int):
        super().__init__()
        self.ln1 = nn.LayerNorm(width)
        self.attn = _Attention(width, heads)
        self.ln2 = nn.LayerNorm(width)
        self.ffn = nn.Sequential(
            nn.Linear(width, width * ffn_mult),
            nn.GELU(),
            nn.Linear(width * ffn_mult, width),
        )

    def forward(self, x, key_mask):
        x = x + self.attn(self.ln1(x), key_mask)
        return x + self.ffn(self.ln2(x))


class _MLMHead(nn.Module):
    """Transform + decode; keeps token-prediction geometry off the trunk."""

    def __init__(self, width: int, vocab_size: int):
        super().__init__()
        self.transform = nn.Linear(width, width)
        self.act = nn.GELU()
        self.ln = nn.LayerNorm(width)
        self.decoder = nn.Linear(width, vocab_size)

    def forward(self, x):
        return self.decoder(self.ln(self.act(self.transform(x))))


class StudentEncoder(nn.Module):
    def __init__(self, cfg: EncoderConfig):
        super().__init__()
        self.cfg = cfg
        self.tok_emb = nn.Embedding(cfg.vocab_size, cfg.width)
        self.pos_emb = nn.Embedding(cfg.max_len, cfg.width)
        self.blocks = nn.ModuleList(
            _Layer(cfg.width, cfg.heads, cfg.ffn_mult) for _ in range(cfg.layers))
        self.final_ln = nn.LayerNorm(cfg.width)
        self.mlm_head = _MLMHead(cfg.width, cfg.vocab_size)

    def hidden_states(self, ids: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
        """(B, T) ids + real-token mask -> (B, T, W) final-layer states."""
        # rank-among-real positions make padding placement irrelevant
        pos = (torch.cumsum(mask.long(), dim=1) - 1).clamp(min=0)
        x = self.tok_emb(ids) + self.pos_emb(pos)
        for block in self.blocks:
            x = block(x, mask)
        return self.final_ln(x)

    def pool(self, ids: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
        """Masked max-pool of final-layer states: (B, W) sentence embeddings."""
        h = self.hidden_states(ids, mask)
        h = h.masked_fill(~mask[:, :, None], float("-inf"))
        return h.max(dim=1).values

    def mlm_logits(self, ids: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
        return self.mlm_head(self.hidden_states(ids, mask))


def init_parameters(model: StudentEncoder, seed: int) -> StudentEncoder:
    """Deterministic re-initialization from a dedicated generator."""
    gen = torch.Generator().manual_seed(seed)
    with torch.no_grad():
        for name, p in sorted(model.named_parameters()):
            if name.endswith("bias") or ".ln" in name or "final_ln" in name:
                if p.dim() == 1 and "weight" in name:  # LayerNorm weight
                    p.fill_(1.0)
                else:
                    p.zero_()
            else:
                p.normal_(mean=0.0, std=0.02, generator=gen)
    return model


def build_student(cfg: EncoderConfig, seed: int = 0) -> StudentEncoder:
    model = StudentEncoder(cfg)
    init_parameters(model, seed)
    model.eval()  # no dropout/batchnorm anywhere; eval marks inference intent
    return model


def pad_batch(sequences, max_len: int, vocab_size: int):
    """Pad id sequences to a (B, T) LongTensor plus real-token mask.

    PAD ids count as padding wherever they appear (tokenize never emits
    PAD), so a sequence given with explicit padding encodes identically
    to the same sequence without it.
    """
    if not sequences:
        raise ValueError("empty batch")
    for seq in sequences:
        if len(seq) > max_len:
            raise TooLong(f"sequence of {len(seq)} tokens exceeds max_len={max_len}")
        if not any(t != PAD for t in seq):
            raise ValueError("sequence has no real tokens")
        for t in seq:
            if not 0 <= t < vocab_size:
                raise TokenOutOfRange(f"token id {t} outside vocab of {vocab_size}")
    width = max(len(s) for s in sequences)
    ids = torch.full((len(sequences), width), PAD, dtype=torch.long)
    for r, seq in enumerate(sequences):
        ids[r, :len(seq)] = torch.as_tensor(seq, dtype=torch.long)
    return ids, ids != PAD


def encode(tokens, model: StudentEncoder) -> np.ndarray:
    """One id sequence -> float32 sentence embedding (no gradients)."""
    ids, mask = pad_batch([list(tokens)], model.cfg.max_len, model.cfg.vocab_size)
    with torch.no_grad():
        emb = model.pool(ids, mask)
    return emb[0].to(torch.float32).numpy()


def encode_batch(sequences, model: StudentEncoder, batch_size: int = 256) -> np.ndarray:
    """Many id sequences -> (n, width) float32 embeddings (no gradients)."""
    sequences = list(sequences)
    out = np.empty((len(sequences), model.cfg.width), dtype=np.float32)
    with torch.no_grad():
        for lo in range(0, len(sequences), batch_size):
            chunk = sequences[lo:lo + batch_size]
            ids, mask = pad_batch(chunk, model.cfg.max_len, model.cfg.vocab_size)
            out[lo:lo + len(chunk)] = model.pool(ids, mask).to(torch.float32).numpy()
    return out
