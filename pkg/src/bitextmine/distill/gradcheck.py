"""Finite-difference verification of analytic gradients.

Backprop through every encoder component (embeddings, attention, FFN,
layer norms, pooling, MLM head) is compared against central differences
in double precision at randomly sampled parameter coordinates.
"""

from __future__ import annotations

import numpy as np
import torch

#: coordinates whose analytic and numeric gradients are both below this
#: are compared absolutely; relative error is meaningless at FD noise level.
TINY_GRAD = 1e-6
TINY_ABS_TOL = 1e-8


def max_relative_error(loss_fn, model, *, samples_per_param: int = 3,
                       h: float = 1e-5, seed: int = 0) -> float:
    """Worst rel. error between backprop and central differences.

    loss_fn: zero-argument closure over `model` returning a scalar loss;
    must be deterministic (fix any masks/inputs before calling). The
    model must already be in double precision.
    """
    for p in model.parameters():
        if p.dtype != torch.float64:
            raise ValueError("gradcheck requires a double-precision model")
    model.zero_grad()
    loss_fn().backward()
    rng = np.random.default_rng(seed)
    worst = 0.0
    with torch.no_grad():
        for _, p in sorted(model.named_parameters()):
            flat = p.data.reshape(-1)
            # parameters unused by this loss (e.g. the MLM head under a
            # cosine-only objective) legitimately have no grad
            grad = p.grad.reshape(-1) if p.grad is not None else torch.zeros_like(flat)
            for _ in range(min(samples_per_param, flat.numel())):
                i = int(rng.integers(flat.numel()))
                orig = flat[i].item()
                flat[i] = orig + h
                up = loss_fn().item()
                flat[i] = orig - h
                down = loss_fn().item()
                flat[i] = orig
                numeric = (up - down) / (2.0 * h)
                analytic = grad[i].item()
                scale = max(abs(analytic), abs(numeric))
                if scale < TINY_GRAD:
                    err = 0.0 if abs(analytic - numeric) < TINY_ABS_TOL else 1.0
                else:
                    err = abs(analytic - numeric) / scale
                worst = max(worst, err)
    return worst
