"""Margin scoring, penalties, and the alignment error rate vs brute force."""

import numpy as np
import pytest
from conftest import norm_rows, random_unit_matrix
from oracles import brute_argmax, brute_margin_scores

from bitextmine.embstore import EmbeddingMatrix
from bitextmine.errors import (
    ArityMismatch,
    CountMismatch,
    KTooLarge,
    RatioZeroDenominator,
)
from bitextmine.margin import (
    MARGIN_FUNCTIONS,
    MarginConfig,
    apply_margin,
    margin_argmax,
    neighbor_penalty,
    neighbor_stats,
    score_matrix,
    scored_candidates,
    xsim_error_rate,
)


def _matrix(rows) -> EmbeddingMatrix:
    arr = np.asarray(rows, dtype=np.float32)
    return EmbeddingMatrix.from_array(arr, normalized=True)


class TestApplyMargin:
    # All inputs are dyadic rationals, so the expected values are exact
    # in double precision.
    def test_absolute_ignores_penalty(self):
        assert apply_margin(0.75, 0.40625, "absolute") == 0.75

    def test_distance(self):
        assert apply_margin(0.5, 0.40625, "distance") == 0.09375

    def test_ratio(self):
        assert apply_margin(0.5, 0.40625, "ratio") == 0.5 / 0.40625

    def test_ratio_zero_denominator(self):
        with pytest.raises(RatioZeroDenominator):
            apply_margin(0.5, 0.0, "ratio")

    def test_unknown_function(self):
        with pytest.raises(ValueError):
            apply_margin(0.5, 0.25, "nope")


class TestNeighborPenalty:
    def test_k1(self):
        # 0.75/2 + 0.25/2
        assert neighbor_penalty([0.75], [0.25], 1) == 0.5

    def test_k2(self):
        # (0.75 + 0.5)/4 + (0.25 + 0.125)/4
        assert neighbor_penalty([0.75, 0.5], [0.25, 0.125], 2) == 0.40625

    def test_arity_mismatch(self):
        with pytest.raises(ArityMismatch):
            neighbor_penalty([0.75], [0.25, 0.5], 1)


class TestHandComputedMatrices:
    """Signed-basis embeddings give exact cosines, so every expected score
    below is exact double arithmetic."""

    def test_k1_distance_and_ratio(self, kernel):
        src = _matrix([[1, 0], [0, 1]])
        tgt = _matrix([[1, 0], [0, 1], [-1, 0]])
        # cos = [[1, 0, -1], [0, 1, 0]]
        # r_src = [0.5, 0.5]; r_tgt = [0.5, 0.5, 0.0]
        want_distance = np.array([[0.0, -1.0, -1.5], [-1.0, 0.0, -0.5]])
        got = score_matrix(src, tgt, MarginConfig(k=1, fn="distance"))
        assert np.array_equal(got, want_distance)
        # pen = [[1, 1, 0.5], [1, 1, 0.5]]
        want_ratio = np.array([[1.0, 0.0, -2.0], [0.0, 1.0, 0.0]])
        got = score_matrix(src, tgt, MarginConfig(k=1, fn="ratio"))
        assert np.array_equal(got, want_ratio)

    def test_k2_distance(self, kernel):
        basis = _matrix([[1, 0], [0, 1], [-1, 0]])
        # cos = [[1,0,-1],[0,1,0],[-1,0,1]]; top-2 sums are 1.0 for every
        # row and column, so the penalty is 0.25 + 0.25 = 0.5 everywhere.
        cos = np.array([[1.0, 0.0, -1.0], [0.0, 1.0, 0.0], [-1.0, 0.0, 1.0]])
        got = score_matrix(basis, basis, MarginConfig(k=2, fn="distance"))
        assert np.array_equal(got, cos - 0.5)

    def test_penalty_components(self, kernel):
        src = _matrix([[1, 0], [0, 1]])
        tgt = _matrix([[1, 0], [0, 1], [-1, 0]])
        stats = neighbor_stats(src, tgt, MarginConfig(k=1, fn="distance"))
        assert stats.r_src.tolist() == [0.5, 0.5]
        assert stats.r_tgt.tolist() == [0.5, 0.5, 0.0]


class TestScoreMatrix:
    @pytest.mark.parametrize("fn", MARGIN_FUNCTIONS)
    def test_matches_brute_force(self, kernel, fn):
        rng = np.random.default_rng(10)
        a = rng.standard_normal((9, 5))
        b = rng.standard_normal((13, 5))
        got = score_matrix(
            EmbeddingMatrix.from_array(norm_rows(a), normalized=True),
            EmbeddingMatrix.from_array(norm_rows(b), normalized=True),
            MarginConfig(k=3, fn=fn),
        )
        want = brute_margin_scores(a, b, 3, fn, True)
        assert np.allclose(got, want, atol=1e-10)

    @pytest.mark.parametrize("fn", ("distance", "ratio"))
    def test_self_exclusion_matches_brute_force(self, kernel, fn):
        rng = np.random.default_rng(11)
        a = rng.standard_normal((8, 4))
        b = rng.standard_normal((8, 4))
        got = score_matrix(
            EmbeddingMatrix.from_array(norm_rows(a), normalized=True),
            EmbeddingMatrix.from_array(norm_rows(b), normalized=True),
            MarginConfig(k=2, fn=fn, include_self=False),
        )
        want = brute_margin_scores(a, b, 2, fn, False)
        assert np.allclose(got, want, atol=1e-10)

    def test_k_too_large(self):
        rng = np.random.default_rng(12)
        m = random_unit_matrix(rng, 3, 2)
        with pytest.raises(KTooLarge):
            score_matrix(m, m, MarginConfig(k=4))
        # self-exclusion needs k+1 rows
        with pytest.raises(KTooLarge):
            score_matrix(m, m, MarginConfig(k=3, include_self=False))

    def test_ratio_zero_denominator(self, kernel):
        src = _matrix([[1, 0]])
        tgt = _matrix([[0, 1], [0, -1]])
        with pytest.raises(RatioZeroDenominator):
            score_matrix(src, tgt, MarginConfig(k=1, fn="ratio"))


class TestMarginArgmax:
    @pytest.mark.parametrize("fn", MARGIN_FUNCTIONS)
    def test_matches_brute_force(self, kernel, fn):
        rng = np.random.default_rng(20)
        for _ in range(10):
            n, m, d = rng.integers(4, 30, size=3)
            k = int(rng.integers(1, 4))
            a = rng.standard_normal((n, d))
            b = rng.standard_normal((m, d))
            src = EmbeddingMatrix.from_array(norm_rows(a), normalized=True)
            tgt = EmbeddingMatrix.from_array(norm_rows(b), normalized=True)
            idx, scores = margin_argmax(src, tgt, MarginConfig(k=k, fn=fn))
            want_i, want_s = brute_argmax(brute_margin_scores(a, b, k, fn, True))
            assert np.array_equal(idx[:, 0], want_i)
            assert np.allclose(scores[:, 0], want_s, atol=1e-10)

    def test_self_exclusion_matches_brute_force(self, kernel):
        rng = np.random.default_rng(21)
        a = rng.standard_normal((10, 4))
        b = rng.standard_normal((10, 4))
        src = EmbeddingMatrix.from_array(norm_rows(a), normalized=True)
        tgt = EmbeddingMatrix.from_array(norm_rows(b), normalized=True)
        cfg = MarginConfig(k=2, fn="distance", include_self=False)
        idx, scores = margin_argmax(src, tgt, cfg)
        want_i, want_s = brute_argmax(brute_margin_scores(a, b, 2, "distance", False))
        assert np.array_equal(idx[:, 0], want_i)
        assert np.allclose(scores[:, 0], want_s, atol=1e-10)

    def test_column_candidates_match_transpose(self, kernel):
        rng = np.random.default_rng(22)
        a = rng.standard_normal((7, 3))
        b = rng.standard_normal((11, 3))
        src = EmbeddingMatrix.from_array(norm_rows(a), normalized=True)
        tgt = EmbeddingMatrix.from_array(norm_rows(b), normalized=True)
        cfg = MarginConfig(k=2, fn="distance")
        _, _, col_i, col_s = scored_candidates(
            src, tgt, cfg, candidates_rows=0, candidates_cols=1
        )
        want_i, want_s = brute_argmax(brute_margin_scores(a, b, 2, "distance", True).T)
        assert np.array_equal(col_i[:, 0], want_i)
        assert np.allclose(col_s[:, 0], want_s, atol=1e-10)

    def test_block_size_invariance(self, kernel):
        rng = np.random.default_rng(23)
        src = random_unit_matrix(rng, 23, 6)
        tgt = random_unit_matrix(rng, 35, 6)
        cfg = MarginConfig(k=3, fn="ratio")
        base_i, base_s = margin_argmax(src, tgt, cfg)
        for qb, tb in ((1, 1), (5, 7), (23, 35), (40, 3)):
            idx, scores = margin_argmax(src, tgt, cfg, query_block=qb, target_block=tb)
            assert np.array_equal(idx, base_i)
            assert np.array_equal(scores, base_s)

    def test_candidate_ordering(self, kernel):
        rng = np.random.default_rng(24)
        a = rng.standard_normal((6, 4))
        b = rng.standard_normal((9, 4))
        src = EmbeddingMatrix.from_array(norm_rows(a), normalized=True)
        tgt = EmbeddingMatrix.from_array(norm_rows(b), normalized=True)
        idx, scores = margin_argmax(src, tgt, MarginConfig(k=1, fn="distance"), candidates=4)
        dense = brute_margin_scores(a, b, 1, "distance", True)
        for i in range(6):
            want = sorted(range(9), key=lambda j: (-dense[i, j], j))[:4]
            assert idx[i].tolist() == want


class TestXsim:
    @pytest.mark.parametrize("fn", MARGIN_FUNCTIONS)
    def test_self_alignment_is_zero(self, kernel, fn):
        rng = np.random.default_rng(30)
        m = random_unit_matrix(rng, 40, 8)
        report = xsim_error_rate(m, m, MarginConfig(k=4, fn=fn))
        assert report.error_rate == 0.0
        assert report.errors == ()
        assert report.n == 40

    def test_directional_asymmetry_frozen(self, kernel):
        # Frozen instance: noisy copies misalign differently per direction.
        rng = np.random.default_rng(0)
        a = rng.standard_normal((12, 4))
        b = a + 1.2 * rng.standard_normal((12, 4))
        src = EmbeddingMatrix.from_array(norm_rows(a), normalized=True)
        tgt = EmbeddingMatrix.from_array(norm_rows(b), normalized=True)
        cfg = MarginConfig(k=2, fn="distance")
        fwd = xsim_error_rate(src, tgt, cfg)
        bwd = xsim_error_rate(tgt, src, cfg)
        assert fwd.error_rate == pytest.approx(75.0, abs=1e-9)
        assert bwd.error_rate == pytest.approx(200.0 / 3.0, abs=1e-9)

    def test_error_entries_point_at_wrong_targets(self, kernel):
        rng = np.random.default_rng(31)
        a = rng.standard_normal((15, 3))
        b = a + 2.0 * rng.standard_normal((15, 3))
        src = EmbeddingMatrix.from_array(norm_rows(a), normalized=True)
        tgt = EmbeddingMatrix.from_array(norm_rows(b), normalized=True)
        report = xsim_error_rate(src, tgt, MarginConfig(k=2, fn="distance"))
        assert len(report.errors) == round(report.error_rate * report.n / 100.0)
        for source, target, _score in report.errors:
            assert target != source

    def test_count_mismatch(self):
        rng = np.random.default_rng(32)
        with pytest.raises(CountMismatch):
            xsim_error_rate(
                random_unit_matrix(rng, 5, 3), random_unit_matrix(rng, 6, 3)
            )

    def test_report_dict_shape(self, kernel):
        rng = np.random.default_rng(33)
        m = random_unit_matrix(rng, 6, 4)
        d = xsim_error_rate(m, m, MarginConfig(k=2, fn="ratio")).to_dict()
        assert d == {
            "error_rate": 0.0,
            "n": 6,
            "k": 2,
            "margin": "ratio",
            "errors": [],
        }


class TestConfigValidation:
    def test_bad_k(self):
        with pytest.raises(KTooLarge):
            MarginConfig(k=0)

    def test_bad_fn(self):
        with pytest.raises(ValueError):
            MarginConfig(fn="euclidean")
