"""Pair-distance statistics, separation ratio, and concentration diagnostics."""

import io
import json
import math

import numpy as np
import pytest

from styletopics.errors import ConfigurationError, ParseError
from styletopics.styleeval import (
    BOTTOM_RECS,
    TOP_RECS,
    DistanceStats,
    MissingItemsError,
    PairSet,
    UndefinedRatioError,
    build_report,
    concentration_stats,
    cosine_distance,
    euclidean_distance,
    hellinger_distance,
    load_pairs,
    pair_distances,
    separation_ratio,
    summarize_concentration,
    write_distances_csv,
)


def random_simplex_rows(rng, n, k):
    rows = rng.gamma(shape=1.0, scale=1.0, size=(n, k))
    return rows / rows.sum(axis=1, keepdims=True)


class TestMetrics:
    def test_identical_rows_have_distance_zero(self):
        p = np.array([0.2, 0.3, 0.5])
        assert euclidean_distance(p, p) == 0.0
        assert cosine_distance(p, p) == pytest.approx(0.0, abs=1e-15)
        assert hellinger_distance(p, p) == 0.0

    def test_orthogonal_one_hots(self):
        p, q = np.array([1.0, 0.0]), np.array([0.0, 1.0])
        assert euclidean_distance(p, q) == pytest.approx(math.sqrt(2))
        assert cosine_distance(p, q) == pytest.approx(1.0)
        assert hellinger_distance(p, q) == pytest.approx(1.0)

    def test_hellinger_one_hot_vs_uniform(self):
        p, q = np.array([1.0, 0.0]), np.array([0.5, 0.5])
        assert hellinger_distance(p, q) == pytest.approx(
            math.sqrt(1.0 - 1.0 / math.sqrt(2))
        )

    def test_metric_axioms_on_random_simplex_rows(self):
        rng = np.random.default_rng(42)
        for _ in range(100):
            k = int(rng.integers(2, 8))
            p, q = random_simplex_rows(rng, 2, k)
            for fn in (euclidean_distance, cosine_distance, hellinger_distance):
                assert fn(p, q) >= -1e-15
                assert fn(p, q) == pytest.approx(fn(q, p), abs=1e-12)
                assert fn(p, p) == pytest.approx(0.0, abs=1e-12)
            # identity of indiscernibles for the true metrics
            if not np.allclose(p, q):
                assert euclidean_distance(p, q) > 0
                assert hellinger_distance(p, q) > 0
            assert hellinger_distance(p, q) <= 1.0 + 1e-12


class TestPairDistances:
    def theta(self):
        return {
            "a": np.array([0.0]), "b": np.array([1.0]),
            "c": np.array([3.0]), "d": np.array([6.0]),
        }

    def test_distances_follow_pair_order(self):
        pairs = PairSet((("c", "d", 1.0), ("a", "b", 1.0)), TOP_RECS)
        stats = pair_distances(self.theta(), pairs, "euclidean")
        np.testing.assert_allclose(stats.distances, [3.0, 1.0])

    def test_summary_statistics(self):
        pairs = PairSet((("a", "b", 1.0), ("b", "c", 0.9), ("c", "d", 0.8)), TOP_RECS)
        stats = pair_distances(self.theta(), pairs, "euclidean")
        assert stats.n == 3
        assert stats.mean == pytest.approx(2.0)
        assert stats.stddev == pytest.approx(math.sqrt(2 / 3))
        assert stats.skewness == pytest.approx(0.0)

    def test_skewness_of_asymmetric_sample(self):
        # distances [1, 1, 4]: m2 = 2, m3 = 2, g1 = 2 / 2^1.5
        theta = {"a": np.array([0.0]), "b": np.array([1.0]),
                 "c": np.array([2.0]), "d": np.array([6.0])}
        pairs = PairSet((("a", "b", 1.0), ("b", "c", 1.0), ("c", "d", 1.0)),
                        BOTTOM_RECS)
        stats = pair_distances(theta, pairs, "euclidean")
        assert stats.skewness == pytest.approx(2 / 2**1.5)
        assert stats.skewness > 0   # right-skewed

    def test_equal_distances_have_zero_skew_and_stddev(self):
        theta = {"a": np.array([0.0]), "b": np.array([1.0]), "c": np.array([2.0])}
        pairs = PairSet((("a", "b", 1.0), ("b", "c", 1.0)), TOP_RECS)
        stats = pair_distances(theta, pairs, "euclidean")
        assert stats.stddev == 0.0
        assert stats.skewness == 0.0

    def test_empty_pair_set(self):
        stats = pair_distances(self.theta(), PairSet((), TOP_RECS), "euclidean")
        assert stats.n == 0
        assert stats.mean == stats.stddev == stats.skewness == 0.0

    def test_missing_items_all_reported(self):
        pairs = PairSet((("a", "x", 1.0), ("y", "b", 1.0), ("x", "b", 1.0)), TOP_RECS)
        with pytest.raises(MissingItemsError) as exc:
            pair_distances(self.theta(), pairs, "euclidean")
        assert exc.value.missing == ["x", "y"]

    def test_unknown_metric(self):
        with pytest.raises(ConfigurationError, match="metric"):
            pair_distances(self.theta(), PairSet((), TOP_RECS), "manhattan")

    def test_identical_vector_pair_is_fine(self):
        theta = {"a": np.array([0.5, 0.5]), "b": np.array([0.5, 0.5])}
        stats = pair_distances(theta, PairSet((("a", "b", 1.0),), TOP_RECS), "hellinger")
        assert stats.distances[0] == 0.0


class TestSeparationRatio:
    def make_stats(self, distances):
        distances = np.asarray(distances, dtype=float)
        mean = float(distances.mean()) if distances.size else 0.0
        return DistanceStats(n=distances.size, mean=mean, stddev=0.0,
                             skewness=0.0, distances=distances)

    def test_equal_means_give_one(self):
        assert separation_ratio(self.make_stats([2.0]), self.make_stats([2.0])) == 1.0

    def test_ratio_value(self):
        top = self.make_stats([1.0, 1.0])
        bottom = self.make_stats([2.0, 4.0])
        assert separation_ratio(top, bottom) == pytest.approx(3.0)

    def test_scale_invariance(self):
        rng = np.random.default_rng(21)
        for _ in range(20):
            points = rng.standard_normal((6, 3))
            theta = {f"i{j}": points[j] for j in range(6)}
            top = PairSet((("i0", "i1", 1.0), ("i2", "i3", 1.0)), TOP_RECS)
            bottom = PairSet((("i0", "i4", 1.0), ("i1", "i5", 1.0)), BOTTOM_RECS)
            base = separation_ratio(pair_distances(theta, top, "euclidean"),
                                    pair_distances(theta, bottom, "euclidean"))
            scale = float(rng.uniform(0.1, 50.0))
            scaled = {k: v * scale for k, v in theta.items()}
            rescaled = separation_ratio(pair_distances(scaled, top, "euclidean"),
                                        pair_distances(scaled, bottom, "euclidean"))
            assert rescaled == pytest.approx(base, rel=1e-9)

    def test_zero_top_mean_is_undefined(self):
        with pytest.raises(UndefinedRatioError):
            separation_ratio(self.make_stats([0.0]), self.make_stats([1.0]))

    def test_empty_sets_rejected(self):
        with pytest.raises(ConfigurationError):
            separation_ratio(self.make_stats([]), self.make_stats([1.0]))


class TestLoadPairs:
    def test_empty_file(self):
        assert len(load_pairs(io.StringIO(""), TOP_RECS)) == 0

    def test_three_rows(self):
        raw = "a,b,0.9\nb,c,0.8\na,c,0.7\n"
        pairs = load_pairs(io.StringIO(raw), TOP_RECS)
        assert pairs.pairs == (("a", "b", 0.9), ("b", "c", 0.8), ("a", "c", 0.7))
        assert pairs.label == TOP_RECS

    def test_header_skipped(self):
        raw = "item_a,item_b,score\na,b,0.9\n"
        assert len(load_pairs(io.StringIO(raw), BOTTOM_RECS)) == 1

    def test_self_pair_rejected_with_line(self):
        with pytest.raises(ParseError, match="line 2"):
            load_pairs(io.StringIO("a,b,1.0\nc,c,1.0\n"), TOP_RECS)

    def test_bad_score_rejected(self):
        with pytest.raises(ParseError, match="score"):
            load_pairs(io.StringIO("a,b,high\n"), TOP_RECS)

    def test_wrong_column_count_rejected(self):
        with pytest.raises(ParseError, match="line 1"):
            load_pairs(io.StringIO("a,b\n"), TOP_RECS)

    def test_bad_label_rejected(self):
        with pytest.raises(ConfigurationError, match="label"):
            load_pairs(io.StringIO(""), "middle_recs")


class TestConcentration:
    def test_uniform_row(self):
        norms, entropies = concentration_stats(np.full((1, 4), 0.25))
        assert norms[0] == pytest.approx(0.5)
        assert entropies[0] == pytest.approx(math.log(4))

    def test_one_hot_row(self):
        norms, entropies = concentration_stats(np.array([[0.0, 1.0, 0.0]]))
        assert norms[0] == pytest.approx(1.0)
        assert entropies[0] == 0.0

    def test_half_support_row(self):
        norms, entropies = concentration_stats(np.array([[0.5, 0.5, 0.0, 0.0]]))
        assert norms[0] == pytest.approx(math.sqrt(0.5))
        assert entropies[0] == pytest.approx(math.log(2))

    def test_bounds_on_random_rows(self):
        rng = np.random.default_rng(33)
        for _ in range(50):
            k = int(rng.integers(2, 12))
            rows = random_simplex_rows(rng, 5, k)
            norms, entropies = concentration_stats(rows)
            assert (norms >= 1 / math.sqrt(k) - 1e-12).all()
            assert (norms <= 1.0 + 1e-12).all()
            assert (entropies >= -1e-12).all()
            assert (entropies <= math.log(k) + 1e-12).all()

    def test_unnormalized_row_rejected_with_index(self):
        rows = np.array([[0.5, 0.5], [0.9, 0.3]])
        with pytest.raises(ConfigurationError, match=r"\[1\]"):
            concentration_stats(rows)

    def test_negative_entry_rejected(self):
        with pytest.raises(ConfigurationError):
            concentration_stats(np.array([[1.5, -0.5]]))

    def test_summary_shape(self):
        summary = summarize_concentration(np.array([[0.25] * 4, [1.0, 0, 0, 0]]))
        assert summary["n"] == 2
        assert summary["l2_norm"]["min"] == pytest.approx(0.5)
        assert summary["l2_norm"]["max"] == pytest.approx(1.0)
        assert summary["entropy"]["max"] == pytest.approx(math.log(4))
        assert summary["entropy"]["min"] == 0.0


class TestReport:
    def test_report_structure_and_serializability(self):
        theta = {"a": np.array([1.0, 0.0]), "b": np.array([0.9, 0.1]),
                 "c": np.array([0.0, 1.0])}
        top = pair_distances(theta, PairSet((("a", "b", 1.0),), TOP_RECS))
        bottom = pair_distances(theta, PairSet((("a", "c", 0.1),), BOTTOM_RECS))
        rows = np.stack(list(theta.values()))
        report = build_report("euclidean", top, bottom, rows)
        assert report["metric"] == "euclidean"
        assert report["ratio"] == pytest.approx(math.sqrt(2) / top.mean)
        assert set(report["top"]) == {"n", "mean", "stddev", "skewness"}
        json.dumps(report)   # must be plain JSON types

    def test_distances_csv(self):
        theta = {"a": np.array([0.0]), "b": np.array([1.0]), "c": np.array([3.0])}
        top = PairSet((("a", "b", 1.0),), TOP_RECS)
        bottom = PairSet((("a", "c", 0.5),), BOTTOM_RECS)
        out = io.StringIO()
        write_distances_csv(
            out,
            pair_distances(theta, top), pair_distances(theta, bottom),
            top, bottom,
        )
        assert out.getvalue() == (
            "label,item_a,item_b,distance\n"
            "top_recs,a,b,1.0\n"
            "bottom_recs,a,c,3.0\n"
        )


class TestPairSetValidation:
    def test_self_pair_rejected(self):
        with pytest.raises(ConfigurationError, match="self-pair"):
            PairSet((("a", "a", 1.0),), TOP_RECS)

    def test_labels_restricted(self):
        with pytest.raises(ConfigurationError):
            PairSet((), "anything")
