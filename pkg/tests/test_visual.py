"""Thresholding rules, layer density, and visual document assembly."""

import io
import math

import numpy as np
import pytest

from styletopics.docfile import write_documents
from styletopics.errors import ConfigurationError
from styletopics.interchange import ActivationRecord
from styletopics.visual import (
    LayerSpec,
    VisualDocument,
    active_channels,
    build_item_documents,
    calibrate_threshold,
    classify_dense,
    compute_layer_density,
)


def make_record(grid, item="item", image="img", layer=8):
    grid = np.asarray(grid, dtype=np.float32)
    c, h, w = grid.shape
    return ActivationRecord(
        item_id=item, image_id=image, layer_id=layer,
        channels=c, height=h, width=w, values=grid.reshape(-1),
    )


TWO_CHANNEL = [
    [[1.5, 0.0], [0.0, 0.0]],    # channel 0: one cell over 1.0
    [[0.5, -0.9], [0.0, 0.0]],   # channel 1: nothing over 1.0 in magnitude
]


class TestActiveChannels:
    def test_all_zero_grid_is_inactive(self):
        record = make_record(np.zeros((3, 4, 4)))
        assert active_channels(record, LayerSpec(8, t1=0.5)) == set()

    def test_primary_rule_single_cell(self):
        record = make_record(TWO_CHANNEL)
        assert active_channels(record, LayerSpec(8, t1=1.0)) == {0}

    def test_threshold_is_strict(self):
        record = make_record([[[1.0]]])
        assert active_channels(record, LayerSpec(8, t1=1.0)) == set()
        assert active_channels(record, LayerSpec(8, t1=0.999)) == {0}

    def test_magnitude_uses_absolute_value(self):
        record = make_record([[[-2.0]]])
        assert active_channels(record, LayerSpec(8, t1=1.0)) == {0}

    def test_secondary_rule_ceil_of_tiny_grid(self):
        # 2x2 grid at 1/20 fraction: ceil(4/20) = 1 cell still required
        record = make_record(TWO_CHANNEL)
        spec = LayerSpec(8, t1=1.0, dense=True, grid_fraction=1 / 20)
        assert active_channels(record, spec) == {0}

    def test_secondary_rule_requires_enough_cells(self):
        # 4x5 grid: ceil(20 * 0.25) = 5 cells needed
        grid = np.zeros((2, 4, 5))
        grid[0].flat[:5] = 2.0   # exactly 5 cells
        grid[1].flat[:4] = 2.0   # one short
        spec = LayerSpec(8, t1=1.0, dense=True, grid_fraction=0.25)
        assert active_channels(make_record(grid), spec) == {0}

    def test_dense_result_is_subset_of_primary(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            c, h, w = rng.integers(1, 6, size=3)
            record = make_record(rng.standard_normal((c, h, w)) * 2)
            t1 = float(rng.uniform(0.1, 3.0))
            fraction = float(rng.uniform(0.01, 1.0))
            primary = active_channels(record, LayerSpec(8, t1=t1))
            dense = active_channels(record, LayerSpec(8, t1=t1, dense=True,
                                                      grid_fraction=fraction))
            assert dense <= primary

    def test_raising_t1_never_activates_more(self):
        rng = np.random.default_rng(11)
        for _ in range(50):
            record = make_record(rng.standard_normal((4, 3, 3)) * 2)
            low = float(rng.uniform(0.1, 1.0))
            high = low + float(rng.uniform(0.0, 2.0))
            for dense in (False, True):
                a_low = active_channels(record, LayerSpec(8, t1=low, dense=dense))
                a_high = active_channels(record, LayerSpec(8, t1=high, dense=dense))
                assert a_high <= a_low

    def test_sign_invariance(self):
        rng = np.random.default_rng(13)
        for _ in range(25):
            grid = rng.standard_normal((3, 4, 4)) * 2
            spec = LayerSpec(8, t1=float(rng.uniform(0.2, 2.0)),
                             dense=bool(rng.integers(0, 2)))
            assert (active_channels(make_record(grid), spec)
                    == active_channels(make_record(-grid), spec))

    def test_layer_mismatch_is_a_configuration_error(self):
        record = make_record(TWO_CHANNEL, layer=8)
        with pytest.raises(ConfigurationError, match="does not match"):
            active_channels(record, LayerSpec(18, t1=1.0))

    def test_t1_must_be_positive(self):
        with pytest.raises(ConfigurationError, match="t1"):
            LayerSpec(8, t1=0.0)


class TestLayerDensity:
    def test_all_zero_image_has_density_zero(self):
        sample = [make_record(np.zeros((4, 2, 2)))]
        assert compute_layer_density(sample, t1=1.0) == {8: 0.0}

    def test_saturated_image_has_density_one(self):
        sample = [make_record(np.full((4, 2, 2), 9.0))]
        assert compute_layer_density(sample, t1=1.0) == {8: 1.0}

    def test_mean_over_images(self):
        # image 1: 2 of 4 channels active (0.5); image 2: 1 of 4 (0.25)
        g1 = np.zeros((4, 2, 2)); g1[0, 0, 0] = 2.0; g1[1, 0, 0] = 2.0
        g2 = np.zeros((4, 2, 2)); g2[3, 1, 1] = 2.0
        sample = [make_record(g1, image="a"), make_record(g2, image="b")]
        assert compute_layer_density(sample, t1=1.0) == {8: 0.375}

    def test_densities_grouped_by_layer(self):
        sample = [
            make_record(np.full((2, 2, 2), 9.0), layer=8),
            make_record(np.zeros((2, 2, 2)), layer=18),
        ]
        assert compute_layer_density(sample, t1=1.0) == {8: 1.0, 18: 0.0}

    def test_empty_sample_is_an_error(self):
        with pytest.raises(ConfigurationError, match="empty"):
            compute_layer_density([], t1=1.0)


class TestClassifyDense:
    @pytest.mark.parametrize("density,expected", [
        (0.2, False),
        (1 / 3, False),   # boundary is strict
        (0.4, True),
        (0.0, False),
        (1.0, True),
    ])
    def test_cutoff(self, density, expected):
        assert classify_dense(density) is expected

    def test_rejects_out_of_range(self):
        with pytest.raises(ConfigurationError):
            classify_dense(1.5)


class TestBuildItemDocuments:
    def test_single_image_single_layer(self):
        grid = np.zeros((8, 2, 2))
        grid[3, 0, 0] = 2.0
        grid[7, 1, 1] = 2.0
        docs = build_item_documents([make_record(grid)], [LayerSpec(8, t1=1.0)])
        assert docs == [VisualDocument("item", ("8:3", "8:7"))]

    def test_union_across_images_dedups(self):
        g1 = np.zeros((8, 2, 2)); g1[3, 0, 0] = 2.0
        g2 = np.zeros((8, 2, 2)); g2[3, 0, 0] = 2.0; g2[7, 0, 0] = 2.0
        docs = build_item_documents(
            [make_record(g1, image="a"), make_record(g2, image="b")],
            [LayerSpec(8, t1=1.0)],
        )
        assert docs == [VisualDocument("item", ("8:3", "8:7"))]

    def test_tokens_namespaced_by_layer(self):
        grid = np.zeros((4, 2, 2)); grid[3, 0, 0] = 2.0
        docs = build_item_documents(
            [make_record(grid, layer=8), make_record(grid, layer=18, image="i2")],
            [LayerSpec(8, t1=1.0), LayerSpec(18, t1=1.0)],
        )
        assert docs == [VisualDocument("item", ("18:3", "8:3"))]

    def test_items_ordered_by_first_appearance(self):
        grid = np.zeros((2, 1, 1)); grid[0] = 2.0
        records = [
            make_record(grid, item="b"),
            make_record(grid, item="a"),
            make_record(grid, item="b", image="i2"),
        ]
        docs = build_item_documents(records, [LayerSpec(8, t1=1.0)])
        assert [d.item_id for d in docs] == ["b", "a"]

    def test_processing_same_image_twice_is_idempotent(self):
        grid = np.zeros((4, 2, 2)); grid[1, 0, 0] = 2.0
        record = make_record(grid)
        once = build_item_documents([record], [LayerSpec(8, t1=1.0)])
        twice = build_item_documents([record, record], [LayerSpec(8, t1=1.0)])
        assert once == twice

    def test_unknown_layer_names_the_layer(self):
        record = make_record(np.zeros((2, 1, 1)), layer=31)
        with pytest.raises(ConfigurationError, match="31"):
            build_item_documents([record], [LayerSpec(8, t1=1.0)])

    def test_item_with_no_active_channels_yields_empty_document(self):
        docs = build_item_documents(
            [make_record(np.zeros((2, 2, 2)))], [LayerSpec(8, t1=1.0)]
        )
        assert docs == [VisualDocument("item", ())]

    def test_document_file_rendering(self):
        grid = np.zeros((8, 2, 2)); grid[3, 0, 0] = 2.0; grid[7, 0, 0] = 2.0
        docs = build_item_documents([make_record(grid)], [LayerSpec(8, t1=1.0)])
        out = io.StringIO()
        write_documents(((d.item_id, d.tokens) for d in docs), out)
        assert out.getvalue() == "item\t8:3 8:7\n"


class TestCalibrateThreshold:
    def test_constant_distribution(self):
        sample = [make_record(np.full((1, 2, 2), 2.0))]
        for percentile in (1, 50, 99, 100):
            assert calibrate_threshold(sample, percentile) == 2.0

    def test_nearest_rank_median(self):
        sample = [make_record(np.array([[[1.0, 2.0], [3.0, 4.0]]]))]
        assert calibrate_threshold(sample, 50) == 2.0

    def test_percentile_100_is_max(self):
        sample = [make_record(np.array([[[1.0, -5.0], [3.0, 4.0]]]))]
        assert calibrate_threshold(sample, 100) == 5.0

    def test_pools_magnitudes_across_records(self):
        sample = [
            make_record(np.array([[[1.0]]]), image="a"),
            make_record(np.array([[[-2.0]]]), image="b"),
        ]
        assert calibrate_threshold(sample, 50) == 1.0
        assert calibrate_threshold(sample, 100) == 2.0

    def test_empty_sample_is_an_error(self):
        with pytest.raises(ConfigurationError, match="empty"):
            calibrate_threshold([], 90)

    def test_percentile_out_of_range(self):
        sample = [make_record(np.ones((1, 1, 1)))]
        for bad in (0, -1, 101):
            with pytest.raises(ConfigurationError, match="percentile"):
                calibrate_threshold(sample, bad)


def test_secondary_ceil_boundary_exact():
    """ceil(grid_fraction * H * W) at an exact integer boundary."""
    # 5x4 grid, fraction 1/20: ceil(1.0) = 1 -> one cell suffices
    grid = np.zeros((1, 5, 4)); grid[0, 0, 0] = 2.0
    spec = LayerSpec(8, t1=1.0, dense=True, grid_fraction=1 / 20)
    assert active_channels(make_record(grid), spec) == {0}
    # 40 cells, fraction 1/20: ceil(2.0) = 2 -> one cell is no longer enough
    grid = np.zeros((1, 5, 8)); grid[0, 0, 0] = 2.0
    assert active_channels(make_record(grid), spec) == set()
    grid[0, 0, 1] = 2.0
    assert active_channels(make_record(grid), spec) == {0}
