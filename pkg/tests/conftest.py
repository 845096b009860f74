"""Shared fixtures: kernel-path parametrization and matrix helpers."""

import numpy as np
import pytest

from bitextmine import _kernels
from bitextmine.embstore import EmbeddingMatrix

_IMPLS = _kernels.available_impls()


@pytest.fixture(params=sorted(_IMPLS))
def kernel(request, monkeypatch):
    """Run the test once per scan-kernel implementation."""
    impl = _IMPLS[request.param]
    monkeypatch.setattr(_kernels, "scan_block", impl.scan_block)
    return request.param


def norm_rows(arr: np.ndarray) -> np.ndarray:
    """Unit rows under the storage contract: float64 math, float32 storage."""
    x = np.asarray(arr, dtype=np.float64)
    x = x / np.linalg.norm(x, axis=1, keepdims=True)
    return x.astype(np.float32)


def random_unit_matrix(rng, n: int, d: int) -> EmbeddingMatrix:
    return EmbeddingMatrix.from_array(
        norm_rows(rng.standard_normal((n, d))), normalized=True
    )
