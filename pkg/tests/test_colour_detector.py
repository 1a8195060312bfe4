import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from groundcast.colour_detector import (
    COLOUR_TERMS,
    N_COLOURS,
    PosteriorMap,
    PosteriorTable,
    apply_lookup,
    boxes_from_components,
    detect_colours,
    label_mask_bfs,
    label_mask_unionfind,
    load_posterior_map,
    load_posterior_table,
    read_ppm,
    save_posterior_map,
    save_posterior_table,
    threshold_and_label,
    write_ppm,
)
from groundcast.geometry import BoundingBox

BLUE = COLOUR_TERMS.index("blue")
RED = COLOUR_TERMS.index("red")


def uniform_table(bins=2):
    cells = np.full((bins, bins, bins, N_COLOURS), 1.0 / N_COLOURS)
    return PosteriorTable(bins, cells)


def one_colour_table(colour_index, bins=2):
    """Every cell puts all mass on one colour."""
    cells = np.zeros((bins, bins, bins, N_COLOURS))
    cells[..., colour_index] = 1.0
    return PosteriorTable(bins, cells)


def pmap_from_plane(plane, colour_index):
    h, w = plane.shape
    values = np.zeros((h, w, N_COLOURS))
    values[..., colour_index] = plane
    rest = (1.0 - plane) / (N_COLOURS - 1)
    for c in range(N_COLOURS):
        if c != colour_index:
            values[..., c] = rest
    return PosteriorMap(w, h, values)


def canonical(components):
    return {frozenset(zip(xs.tolist(), ys.tolist())) for xs, ys in components}


class TestApplyLookup:
    def test_single_pixel(self):
        bins = 2
        cells = np.full((bins, bins, bins, N_COLOURS), 1.0 / N_COLOURS)
        cells[0, 0, 1] = np.eye(N_COLOURS)[BLUE]
        table = PosteriorTable(bins, cells)
        img = np.array([[[10, 10, 200]]], dtype=np.uint8)  # bins to (0,0,1)
        pmap = apply_lookup(img, table)
        assert pmap.values[0, 0, BLUE] == 1.0

    def test_uniform_image_uniform_map(self):
        img = np.full((4, 5, 3), 77, dtype=np.uint8)
        pmap = apply_lookup(img, uniform_table())
        assert np.all(pmap.values == pmap.values[0, 0])

    def test_two_colours_two_rows(self):
        bins = 2
        cells = np.zeros((bins, bins, bins, N_COLOURS))
        cells[..., RED] = 1.0
        cells[1, 1, 1] = np.eye(N_COLOURS)[BLUE]
        table = PosteriorTable(bins, cells)
        img = np.zeros((2, 2, 3), dtype=np.uint8)
        img[0, 1] = [200, 200, 200]
        pmap = apply_lookup(img, table)
        assert pmap.values[0, 1, BLUE] == 1.0
        assert pmap.values[0, 0, RED] == 1.0


class TestLabelling:
    def mask_from_pixels(self, shape, pixels):
        mask = np.zeros(shape, dtype=bool)
        for x, y in pixels:
            mask[y, x] = True
        return mask

    def test_diagonal_is_connected(self):
        mask = self.mask_from_pixels((3, 3), [(0, 0), (1, 1)])
        assert len(label_mask_unionfind(mask)) == 1

    def test_gap_splits(self):
        mask = self.mask_from_pixels((3, 3), [(0, 0), (2, 0)])
        assert len(label_mask_unionfind(mask)) == 2

    def test_empty_mask(self):
        assert label_mask_unionfind(np.zeros((4, 4), dtype=bool)) == []

    def test_u_shape_merges_late(self):
        # two arms joined at the bottom: single component
        mask = np.array(
            [
                [1, 0, 1],
                [1, 0, 1],
                [1, 1, 1],
            ],
            dtype=bool,
        )
        assert len(label_mask_unionfind(mask)) == 1

    def test_agrees_with_bfs_on_fixed_patterns(self):
        patterns = [
            np.eye(8, dtype=bool),
            np.array([[1, 0, 1], [0, 1, 0], [1, 0, 1]], dtype=bool),
            np.ones((5, 7), dtype=bool),
        ]
        for mask in patterns:
            assert canonical(label_mask_unionfind(mask)) == canonical(label_mask_bfs(mask))

    @settings(max_examples=60, deadline=None)
    @given(
        arrays(
            bool,
            st.tuples(st.integers(1, 24), st.integers(1, 24)),
        )
    )
    def test_agrees_with_bfs_on_random_masks(self, mask):
        assert canonical(label_mask_unionfind(mask)) == canonical(label_mask_bfs(mask))

    @settings(max_examples=40, deadline=None)
    @given(
        arrays(bool, st.tuples(st.integers(1, 16), st.integers(1, 16)))
    )
    def test_components_partition_true_pixels(self, mask):
        components = label_mask_unionfind(mask)
        seen = set()
        for xs, ys in components:
            pix = set(zip(xs.tolist(), ys.tolist()))
            assert not (pix & seen)
            seen |= pix
        expect = {(x, y) for y, x in zip(*np.nonzero(mask))}
        assert seen == expect


class TestThresholdAndLabel:
    def test_components_and_boxes(self):
        plane = np.zeros((4, 6))
        plane[0:2, 0:2] = 0.9
        plane[3, 5] = 0.4
        comps = threshold_and_label(pmap_from_plane(plane, BLUE), BLUE, 0.3)
        assert len(comps) == 2
        boxes = {c.box for c in comps}
        assert BoundingBox(0, 0, 2, 2) in boxes
        assert BoundingBox(5, 3, 6, 4) in boxes

    def test_inclusive_threshold(self):
        plane = np.array([[0.3]])
        comps = threshold_and_label(pmap_from_plane(plane, BLUE), BLUE, 0.3)
        assert len(comps) == 1

    def test_mean_posterior_confidence(self):
        plane = np.zeros((1, 2))
        plane[0, 0], plane[0, 1] = 0.4, 0.8
        (comp,) = threshold_and_label(pmap_from_plane(plane, BLUE), BLUE, 0.3)
        assert comp.mean_posterior == pytest.approx(0.6)

    def test_raising_threshold_shrinks_mask(self):
        rng = np.random.default_rng(7)
        plane = rng.random((12, 12))
        pmap = pmap_from_plane(plane, BLUE)
        low = sum(c.pixel_count for c in threshold_and_label(pmap, BLUE, 0.3))
        high = sum(c.pixel_count for c in threshold_and_label(pmap, BLUE, 0.6))
        assert high <= low


class TestBoxFilter:
    def comp(self, w, h):
        plane = np.zeros((h + 1, w + 1))
        plane[0:h, 0:w] = 0.9
        (c,) = threshold_and_label(pmap_from_plane(plane, BLUE), BLUE, 0.3)
        return c

    def test_25_by_25_kept(self):
        dets = boxes_from_components([self.comp(25, 25)], 625)
        assert len(dets) == 1
        assert dets[0].label == "blue"
        assert dets[0].detector_id == "colour"

    def test_10_by_10_dropped(self):
        assert boxes_from_components([self.comp(10, 10)], 625) == []

    def test_624_dropped(self):
        assert boxes_from_components([self.comp(24, 26)], 625) == []

    def test_empty(self):
        assert boxes_from_components([], 625) == []

    def test_filter_is_box_area_not_pixel_count(self):
        # an L-shape with few pixels but a large bounding box passes
        plane = np.zeros((40, 40))
        plane[0, 0:30] = 0.9
        plane[0:30, 0] = 0.9
        (c,) = threshold_and_label(pmap_from_plane(plane, BLUE), BLUE, 0.3)
        assert c.pixel_count == 59
        assert boxes_from_components([c], 625)[0].box == BoundingBox(0, 0, 30, 30)


class TestFileFormats:
    def test_ptab_roundtrip(self, tmp_path):
        table = one_colour_table(RED, bins=2)
        p = tmp_path / "table.ptab"
        save_posterior_table(table, p)
        loaded = load_posterior_table(p)
        assert loaded.bins_per_channel == 2
        assert np.array_equal(loaded.table, table.table)

    def test_ptab_bad_header(self, tmp_path):
        p = tmp_path / "table.ptab"
        p.write_text("PTAB 2 9\n")
        with pytest.raises(ValueError, match="PTAB"):
            load_posterior_table(p)

    def test_pfmap_roundtrip(self, tmp_path):
        rng = np.random.default_rng(3)
        values = rng.random((4, 5, N_COLOURS))
        pmap = PosteriorMap(5, 4, values)
        p = tmp_path / "map.pfmap"
        save_posterior_map(pmap, p)
        loaded = load_posterior_map(p)
        assert loaded.width == 5 and loaded.height == 4
        assert np.allclose(loaded.values, values, atol=1e-6)

    def test_ppm_roundtrip(self, tmp_path):
        rng = np.random.default_rng(5)
        img = rng.integers(0, 256, size=(6, 4, 3), dtype=np.uint8)
        p = tmp_path / "img.ppm"
        write_ppm(img, p)
        assert np.array_equal(read_ppm(p), img)

    def test_ppm_with_comment(self, tmp_path):
        p = tmp_path / "img.ppm"
        body = bytes([255, 0, 0] * 2)
        p.write_bytes(b"P6\n# made by hand\n2 1\n255\n" + body)
        img = read_ppm(p)
        assert img.shape == (1, 2, 3)
        assert np.array_equal(img[0, 0], [255, 0, 0])

    def test_ppm_rejects_p3(self, tmp_path):
        p = tmp_path / "img.ppm"
        p.write_bytes(b"P3\n1 1\n255\n255 0 0\n")
        with pytest.raises(ValueError, match="P6"):
            read_ppm(p)


def test_detect_colours_end_to_end():
    img = np.zeros((30, 30, 3), dtype=np.uint8)
    img[:, :] = [10, 10, 220]
    bins = 2
    cells = np.full((bins, bins, bins, N_COLOURS), 1.0 / N_COLOURS)
    cells[0, 0, 1] = np.eye(N_COLOURS)[BLUE]
    table = PosteriorTable(bins, cells)
    dets = detect_colours(img, table)
    assert len(dets) == 1
    assert dets[0].label == "blue"
    assert dets[0].box == BoundingBox(0, 0, 30, 30)
    assert dets[0].confidence == pytest.approx(1.0)
