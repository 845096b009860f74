"""Distillation losses and the masked-token corruption scheme."""

import math

import pytest
import torch

from bitextmine.distill.encoder import EncoderConfig, build_student, pad_batch
from bitextmine.distill.losses import (
    cosine_loss,
    mask_tokens,
    masked_cross_entropy,
    mlm_loss,
)
from bitextmine.distill.vocab import MASK, NUM_SPECIALS, PAD
from bitextmine.errors import NoMaskedPositions, ZeroNorm


class TestCosineLoss:
    def test_identical_rows_zero(self):
        x = torch.tensor([[1.0, 2.0], [3.0, -4.0]])
        assert cosine_loss(x, x.clone()).item() == pytest.approx(0.0, abs=1e-7)

    def test_antipodal_rows_two(self):
        x = torch.tensor([[1.0, 0.0], [0.0, 2.0]])
        assert cosine_loss(x, -x).item() == pytest.approx(2.0, abs=1e-7)

    def test_orthogonal_rows_one(self):
        s = torch.tensor([[1.0, 0.0]])
        t = torch.tensor([[0.0, 5.0]])
        assert cosine_loss(s, t).item() == pytest.approx(1.0, abs=1e-7)

    def test_scale_invariance(self):
        s = torch.tensor([[1.0, 2.0, 3.0]])
        t = torch.tensor([[2.0, 0.5, -1.0]])
        assert cosine_loss(s, t).item() == pytest.approx(
            cosine_loss(3.0 * s, 0.25 * t).item(), abs=1e-6
        )

    def test_mean_over_rows(self):
        s = torch.tensor([[1.0, 0.0], [1.0, 0.0]])
        t = torch.tensor([[1.0, 0.0], [-1.0, 0.0]])  # losses 0 and 2
        assert cosine_loss(s, t).item() == pytest.approx(1.0, abs=1e-7)

    def test_single_vector_promoted(self):
        s = torch.tensor([1.0, 0.0])
        t = torch.tensor([0.0, 1.0])
        assert cosine_loss(s, t).item() == pytest.approx(1.0, abs=1e-7)

    def test_zero_norm_rejected(self):
        with pytest.raises(ZeroNorm):
            cosine_loss(torch.zeros(1, 2), torch.ones(1, 2))

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            cosine_loss(torch.ones(1, 2), torch.ones(1, 3))

    def test_gradient_flows(self):
        s = torch.tensor([[0.5, 0.5]], requires_grad=True)
        t = torch.tensor([[1.0, 0.0]])
        cosine_loss(s, t).backward()
        assert s.grad is not None and torch.isfinite(s.grad).all()


class TestMaskedCrossEntropy:
    def test_uniform_logits_give_log_vocab(self):
        vocab = 8
        logits = torch.zeros(1, 4, vocab)
        labels = torch.tensor([[1, 2, 3, 4]])
        positions = torch.ones(1, 4, dtype=torch.bool)
        got = masked_cross_entropy(logits, labels, positions).item()
        assert got == pytest.approx(math.log(vocab), abs=1e-6)

    def test_confident_correct_logits_near_zero(self):
        logits = torch.full((1, 2, 5), -50.0)
        labels = torch.tensor([[3, 1]])
        logits[0, 0, 3] = 50.0
        logits[0, 1, 1] = 50.0
        positions = torch.ones(1, 2, dtype=torch.bool)
        assert masked_cross_entropy(logits, labels, positions).item() == pytest.approx(0.0, abs=1e-6)

    def test_only_selected_positions_count(self):
        vocab = 6
        logits = torch.zeros(1, 3, vocab)
        logits[0, 1, 2] = 100.0  # perfect at the one selected position
        labels = torch.tensor([[0, 2, 0]])
        positions = torch.tensor([[False, True, False]])
        assert masked_cross_entropy(logits, labels, positions).item() == pytest.approx(0.0, abs=1e-6)

    def test_no_positions_rejected(self):
        with pytest.raises(NoMaskedPositions):
            masked_cross_entropy(
                torch.zeros(1, 2, 4),
                torch.zeros(1, 2, dtype=torch.long),
                torch.zeros(1, 2, dtype=torch.bool),
            )


@pytest.fixture(scope="module")
def model():
    return build_student(EncoderConfig(vocab_size=16, layers=1, width=8, heads=2, max_len=8), seed=0)


class TestMLMLoss:

    def test_finite_positive(self, model):
        ids, mask = pad_batch([[5, 6, 7], [8, 9]], 8, 16)
        positions = torch.tensor([[True, False, False], [False, True, False]])
        loss = mlm_loss(ids, positions, model, mask)
        assert torch.isfinite(loss)
        assert loss.item() > 0.0

    def test_rejects_masking_padding(self, model):
        ids, mask = pad_batch([[5], [6, 7]], 8, 16)
        positions = torch.tensor([[False, True], [True, False]])  # (0,1) is PAD
        with pytest.raises(NoMaskedPositions):
            mlm_loss(ids, positions, model, mask)

    def test_rejects_empty_selection(self, model):
        ids, mask = pad_batch([[5, 6]], 8, 16)
        with pytest.raises(NoMaskedPositions):
            mlm_loss(ids, torch.zeros_like(ids, dtype=torch.bool), model, mask)


class TestMaskTokens:
    def _batch(self):
        ids = torch.tensor([[5, 6, 7, 8, PAD], [9, 10, PAD, PAD, PAD]])
        mask = ids != PAD
        return ids, mask

    def test_padding_never_selected(self):
        ids, mask = self._batch()
        for seed in range(50):
            gen = torch.Generator().manual_seed(seed)
            _, selected, _ = mask_tokens(ids, mask, 16, 0.5, gen)
            assert not (selected & ~mask).any()

    def test_unselected_positions_untouched(self):
        ids, mask = self._batch()
        for seed in range(50):
            gen = torch.Generator().manual_seed(seed)
            corrupted, selected, original = mask_tokens(ids, mask, 16, 0.3, gen)
            assert torch.equal(corrupted[~selected], ids[~selected])
            assert torch.equal(original, ids)

    def test_forced_selection_with_zero_probability(self):
        ids, mask = self._batch()
        gen = torch.Generator().manual_seed(0)
        _, selected, _ = mask_tokens(ids, mask, 16, 0.0, gen)
        assert int(selected.sum()) == 1
        assert selected[0, 0]  # first real position

    def test_corruption_split_near_80_10_10(self):
        # long-run frequencies of the three corruption actions
        torch.manual_seed(0)
        ids = torch.randint(NUM_SPECIALS, 64, (200, 20))
        mask = torch.ones_like(ids, dtype=torch.bool)
        gen = torch.Generator().manual_seed(1)
        corrupted, selected, original = mask_tokens(ids, mask, 64, 0.15, gen)
        sel = int(selected.sum())
        became_mask = int((corrupted[selected] == MASK).sum())
        unchanged = int((corrupted[selected] == original[selected]).sum())
        n_total = ids.numel()
        # selection rate ~ 0.15
        assert abs(sel / n_total - 0.15) < 0.02
        # masked ~ 80%, kept ~ 10% (randint may collide with the original
        # id, so "unchanged" can run slightly above 10%)
        assert abs(became_mask / sel - 0.8) < 0.05
        assert abs(unchanged / sel - 0.1) < 0.05
        # random replacements never produce specials
        replaced = selected & (corrupted != MASK) & (corrupted != original)
        assert (corrupted[replaced] >= NUM_SPECIALS).all()

    def test_deterministic_given_generator(self):
        ids, mask = self._batch()
        a = mask_tokens(ids, mask, 16, 0.5, torch.Generator().manual_seed(7))
        b = mask_tokens(ids, mask, 16, 0.5, torch.Generator().manual_seed(7))
        for x, y in zip(a, b):
            assert torch.equal(x, y)
