import struct

import numpy as np
import pytest

from physdepth.exceptions import InvalidInput, ParseError, UnknownLabelWarning
from physdepth.scene import (
    Category,
    DepthMap,
    FlowField,
    LabelSchema,
    Provenance,
    categorize,
    cityscapes_schema,
    new_depth_map,
    read_image,
    read_label_png,
    read_pfd,
    write_depth_preview,
    write_image,
    write_label_png,
    write_pfd,
)


def _sample_map():
    vals = np.array([[1.5, 0.0, 3.25], [80.0, 0.0, 7.0]], np.float32)
    prov = np.array([[1, 0, 2], [5, 0, 4]], np.uint8)
    return DepthMap(vals, prov)


class TestDepthMap:
    def test_new_is_all_invalid(self):
        d = new_depth_map(4, 3)
        assert d.shape == (3, 4) and d.valid_count() == 0

    def test_zero_size_rejected(self):
        with pytest.raises(InvalidInput):
            new_depth_map(0, 3)

    def test_indexing(self):
        d = _sample_map()
        assert d[0, 0] == 1.5
        assert d[0, 1] is None

    def test_invariants(self):
        with pytest.raises(InvalidInput):
            DepthMap(np.ones((2, 2)), np.zeros((2, 2)))  # invalid pixel with nonzero depth
        with pytest.raises(InvalidInput):
            DepthMap(np.zeros((2, 2)), np.ones((2, 2)))  # valid pixel with zero depth
        with pytest.raises(InvalidInput):
            DepthMap(np.ones((2, 2)), np.full((2, 2), 9))
        with pytest.raises(InvalidInput):
            DepthMap(np.ones((2, 3)), np.ones((2, 2)))

    def test_set(self):
        d = new_depth_map(2, 2)
        d.set(1, 0, 4.0, Provenance.ROAD)
        assert d[1, 0] == 4.0 and d.provenance[1, 0] == Provenance.ROAD
        d.set(1, 0, 123.0, Provenance.NONE)
        assert d[1, 0] is None and d.values[1, 0] == 0
        with pytest.raises(InvalidInput):
            d.set(0, 0, -1.0)

    def test_from_array(self):
        d = DepthMap.from_array([[1.0, np.nan], [-2.0, 5.0]])
        assert d.valid.tolist() == [[True, False], [False, True]]
        assert d.provenance[1, 1] == Provenance.EXTERNAL

    def test_copy_is_independent(self):
        d = _sample_map()
        c = d.copy()
        c.values[0, 0] = 9
        assert d[0, 0] == 1.5


class TestPFD:
    def test_layout(self):
        raw = _sample_map().to_bytes()
        assert raw[:4] == b"PFD1"
        assert struct.unpack("<II", raw[4:12]) == (3, 2)
        assert len(raw) == 12 + 4 * 6 + 6
        assert np.frombuffer(raw[12:36], "<f4")[2] == np.float32(3.25)
        assert raw[36:] == bytes([1, 0, 2, 5, 0, 4])

    def test_round_trip_bit_exact(self, tmp_path, rng):
        vals = rng.uniform(0.1, 100, (7, 9)).astype(np.float32)
        prov = rng.integers(0, 7, (7, 9)).astype(np.uint8)
        d = DepthMap(np.where(prov > 0, vals, 0), prov)
        p = tmp_path / "x.pfd"
        write_pfd(p, d)
        back = read_pfd(p)
        assert back.equals(d)
        assert back.to_bytes() == p.read_bytes()

    @pytest.mark.parametrize("mutate", [
        lambda b: b[:8],
        lambda b: b"PFD2" + b[4:],
        lambda b: b[:-1],
        lambda b: b + b"\x00",
        lambda b: b[:4] + struct.pack("<II", 0, 2) + b[12:],
        lambda b: b[:-1] + b"\x09",  # unknown provenance code
        lambda b: b[:-1] + b"\x00",  # invalid pixel with nonzero depth
    ])
    def test_malformed(self, mutate):
        with pytest.raises(ParseError):
            DepthMap.from_bytes(mutate(_sample_map().to_bytes()))

    def test_parse_error_is_input_error(self):
        with pytest.raises(InvalidInput):
            DepthMap.from_bytes(b"nope")


class TestFlowField:
    def test_validation(self):
        FlowField(np.zeros((2, 3, 2)), np.ones((2, 3), bool))
        with pytest.raises(InvalidInput):
            FlowField(np.zeros((2, 3)), np.ones((2, 3), bool))
        v = np.zeros((2, 3, 2))
        v[0, 0, 0] = np.nan
        with pytest.raises(InvalidInput):
            FlowField(v, np.ones((2, 3), bool))
        # NaN is fine where the vector is invalid
        FlowField(v, np.array([[False, True, True], [True, True, True]]))


class TestSchema:
    def test_cityscapes_train_ids(self):
        s = cityscapes_schema("train")
        assert s.category_of(0) == Category.ROAD
        assert s.category_of(1) == Category.FLAT
        assert s.category_of(10) == Category.SKY
        assert s.category_of(13) == Category.VERTICAL

    def test_label_ids_include_parking(self):
        s = cityscapes_schema("label")
        assert s.category_of(7) == Category.ROAD
        assert s.category_of(9) == Category.FLAT
        assert s.category_of(10) == Category.FLAT
        assert s.category_of(23) == Category.SKY

    def test_json_round_trip(self):
        s = cityscapes_schema("train")
        assert LabelSchema.from_json(s.to_json()).classes == s.classes

    @pytest.mark.parametrize("doc,loc", [
        ('{"classes": 3}', "classes"),
        ('{"classes": [{"id": 1}]}', "classes[0]"),
        ('{"classes": [{"id": -1, "name": "a", "category": "road"}]}', "classes[0].id"),
        ('{"classes": [{"id": 1, "name": "a", "category": "lava"}]}', "classes[0].category"),
        ('{"classes": [{"id": 1, "name": "a", "category": "road"},'
         ' {"id": 1, "name": "b", "category": "sky"}]}', "classes[1].id"),
        ('{"classes": [', "line 1"),
    ])
    def test_malformed(self, doc, loc):
        with pytest.raises(ParseError) as ei:
            LabelSchema.from_json(doc)
        assert ei.value.location == loc

    def test_categorize(self):
        labels = np.array([[0, 1], [10, 13]])
        cats = categorize(labels, cityscapes_schema())
        assert cats.tolist() == [[Category.ROAD, Category.FLAT], [Category.SKY, Category.VERTICAL]]

    def test_unknown_label_warns_and_ignores(self):
        with pytest.warns(UnknownLabelWarning, match="2 pixel"):
            cats = categorize(np.array([[0, 200, 200]]), cityscapes_schema())
        assert cats.tolist() == [[Category.ROAD, Category.IGNORE, Category.IGNORE]]

    def test_categorize_rejects_negative(self):
        with pytest.raises(InvalidInput):
            categorize(np.array([[-1]]), cityscapes_schema())


class TestRasterIO:
    def test_label_png_round_trip(self, tmp_path):
        labels = np.array([[0, 1, 255], [13, 10, 7]])
        write_label_png(tmp_path / "m.png", labels)
        assert np.array_equal(read_label_png(tmp_path / "m.png"), labels)

    def test_label_png_rgb_rejected(self, tmp_path):
        write_image(tmp_path / "rgb.png", np.zeros((2, 2, 3)))
        with pytest.raises(ParseError):
            read_label_png(tmp_path / "rgb.png")

    def test_missing_file(self, tmp_path):
        with pytest.raises(ParseError):
            read_label_png(tmp_path / "absent.png")
        with pytest.raises(ParseError):
            read_image(tmp_path / "absent.png")

    def test_image_round_trip(self, tmp_path, rng):
        img = rng.integers(0, 256, (5, 6, 3)) / 255.0
        write_image(tmp_path / "i.png", img)
        np.testing.assert_allclose(read_image(tmp_path / "i.png"), img, atol=1e-12)

    def test_preview(self, tmp_path):
        write_depth_preview(tmp_path / "p.png", _sample_map())
        assert read_image(tmp_path / "p.png").shape[:2] == (2, 3)
