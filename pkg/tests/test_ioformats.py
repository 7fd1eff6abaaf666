import json
import logging

import numpy as np
import pytest
from PIL import Image

from irpseudo.core import BinaryMask, GrayImage, InvalidAnnotationError, PointLabel
from irpseudo.ioformats import (
    REPORT_SCHEMA,
    DatasetManifest,
    FormatError,
    ManifestEntry,
    load_image,
    load_manifest,
    load_mask,
    load_points,
    read_report,
    save_image,
    save_manifest,
    save_mask,
    write_points,
    write_report,
)
from irpseudo.metrics import CATEGORIES, evaluate_dataset


class TestImages:
    def test_constant_8bit(self, tmp_path):
        Image.fromarray(np.full((5, 6), 128, np.uint8)).save(tmp_path / "a.png")
        img = load_image(tmp_path / "a.png")
        assert img.bit_depth == 8 and img.shape == (5, 6) and np.all(img.data == 128)

    def test_16bit_round_trip(self, tmp_path):
        arr = np.random.default_rng(0).integers(0, 65536, (7, 9)).astype(np.uint16)
        save_image(GrayImage(arr, 16), tmp_path / "b.png")
        first = load_image(tmp_path / "b.png")
        save_image(first, tmp_path / "c.png")
        second = load_image(tmp_path / "c.png")
        assert first.bit_depth == 16
        assert np.array_equal(first.data, arr) and np.array_equal(second.data, arr)

    def test_rgb_luma(self, tmp_path):
        rgb = np.zeros((1, 2, 3), np.uint8)
        rgb[0, 0] = (255, 0, 0)
        rgb[0, 1] = (10, 20, 30)
        Image.fromarray(rgb).save(tmp_path / "c.png")
        # (299*255 + 500)//1000 = 76; (2990 + 11740 + 3420 + 500)//1000 = 18
        assert load_image(tmp_path / "c.png").data.tolist() == [[76, 18]]

    def test_missing_file_names_path(self, tmp_path):
        with pytest.raises(FileNotFoundError, match="nope.png"):
            load_image(tmp_path / "nope.png")

    def test_garbage_file(self, tmp_path):
        (tmp_path / "x.png").write_bytes(b"not a png")
        with pytest.raises(FormatError):
            load_image(tmp_path / "x.png")


class TestMasks:
    def test_round_trip(self, tmp_path):
        m = BinaryMask(np.random.default_rng(1).random((12, 10)) < 0.3)
        save_mask(m, tmp_path / "m.png")
        assert load_mask(tmp_path / "m.png") == m
        assert np.array(Image.open(tmp_path / "m.png")).max() == 255

    def test_all_zero(self, tmp_path):
        save_mask(BinaryMask.zeros(4, 4), tmp_path / "z.png")
        assert load_mask(tmp_path / "z.png").area == 0

    def test_soft_prediction_binarized(self, tmp_path, caplog):
        Image.fromarray(np.array([[0, round(0.3 * 255), round(0.9 * 255)]], np.uint8)).save(tmp_path / "s.png")
        with caplog.at_level(logging.INFO):
            m = load_mask(tmp_path / "s.png", 0.5)
        assert m.data.tolist() == [[False, False, True]]
        assert "not binary" in caplog.text

    def test_soft_npy(self, tmp_path):
        np.save(tmp_path / "p.npy", np.array([[0.0, 0.3, 0.9, 0.5]]))
        assert load_mask(tmp_path / "p.npy").data.tolist() == [[False, False, True, False]]

    def test_16bit_mask(self, tmp_path):
        Image.fromarray(np.array([[0, 65535, 30000]], np.uint16)).save(tmp_path / "w.png")
        assert load_mask(tmp_path / "w.png").data.tolist() == [[False, True, False]]


class TestPoints:
    def test_empty_file(self, tmp_path):
        (tmp_path / "p.csv").write_text("")
        assert load_points(tmp_path / "p.csv") == {}

    def test_grouping_comments_header(self, tmp_path):
        (tmp_path / "p.csv").write_text("image,x,y\n# note\nimg1, 3, 4\n\nimg2,1,1\nimg1,5,6\n")
        pts = load_points(tmp_path / "p.csv")
        assert pts == {"img1": [PointLabel(3, 4), PointLabel(5, 6)], "img2": [PointLabel(1, 1)]}
        assert list(pts) == ["img1", "img2"]

    def test_out_of_bounds(self, tmp_path):
        (tmp_path / "p.csv").write_text("img1,1,1\nimg1, 700, 10\n")
        with pytest.raises(InvalidAnnotationError, match=r"p\.csv:2.*img1"):
            load_points(tmp_path / "p.csv", {"img1": (512, 512)})

    @pytest.mark.parametrize("line", ["img1,3\n", "img1,a,4\n", ",3,4\n", "img1,3,4,5\n"])
    def test_malformed_line_number(self, tmp_path, line):
        (tmp_path / "p.csv").write_text("img0,1,1\n" + line)
        with pytest.raises(FormatError, match=r":2:"):
            load_points(tmp_path / "p.csv")

    def test_write_read_round_trip(self, tmp_path):
        pts = {"a": [PointLabel(1, 2)], "b b": [PointLabel(3, 4), PointLabel(0, 0)]}
        write_points(pts, tmp_path / "p.csv")
        assert load_points(tmp_path / "p.csv") == pts


class TestManifest:
    def test_round_trip_and_resolution(self, tmp_path):
        Image.fromarray(np.zeros((8, 8), np.uint8)).save(tmp_path / "i.png")
        man = DatasetManifest([ManifestEntry("i", "i.png", [PointLabel(1, 2)], gt_mask="g.png")])
        save_manifest(man, tmp_path / "m.json")
        back = load_manifest(tmp_path / "m.json")
        assert back.entries == man.entries
        assert back.resolve("i.png") == tmp_path / "i.png"

    def test_points_file_and_bounds(self, tmp_path):
        Image.fromarray(np.zeros((8, 8), np.uint8)).save(tmp_path / "i.png")
        (tmp_path / "pts.csv").write_text("i,9,0\n")
        doc = {"schema": "irpseudo.manifest/1", "points_file": "pts.csv", "entries": [{"name": "i", "image": "i.png"}]}
        (tmp_path / "m.json").write_text(json.dumps(doc))
        with pytest.raises(InvalidAnnotationError):
            load_manifest(tmp_path / "m.json")
        assert load_manifest(tmp_path / "m.json", check_bounds=False).entries[0].points == [PointLabel(9, 0)]

    def test_bad_schema(self, tmp_path):
        (tmp_path / "m.json").write_text('{"entries": []}')
        with pytest.raises(FormatError):
            load_manifest(tmp_path / "m.json")


class TestReport:
    def report(self):
        gt = np.zeros((16, 16), bool)
        gt[3:5, 3:5] = True
        pred = gt.copy()
        pred[10, 10] = True
        return evaluate_dataset([(BinaryMask(pred), BinaryMask(gt))])

    def test_round_trip(self, tmp_path):
        r = self.report()
        write_report(r, tmp_path / "r.json", {"l_ep": 25, "alpha": 0.15})
        back = read_report(tmp_path / "r.json")
        assert (back.iou, back.pd, back.fa, back.n_images, back.n_targets) == (r.iou, r.pd, r.fa, 1, 1)
        assert back.per_category == r.per_category
        assert back.config["l_ep"] == 25 and back.config["d_match"] == 3.0

    def test_schema_and_categories(self, tmp_path):
        write_report(self.report(), tmp_path / "r.json")
        doc = json.loads((tmp_path / "r.json").read_text())
        assert doc["schema"] == REPORT_SCHEMA
        assert set(doc["per_category"]) == set(CATEGORIES)
        assert doc["per_category"]["Extended"]["count"] == 0
