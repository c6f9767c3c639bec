"""Pool loading, resampling, and manifest persistence."""

import json

import numpy as np
import pytest

from helpers import (
    const_alpha,
    const_image,
    random_entry,
    save_gray8,
    save_gray16,
    save_rgb8,
)

from matteforge.core import FgEntry, ImageBuffer, TrimapParams
from matteforge.errors import IntegrityError, PoolError, ShapeError
from matteforge.io import (
    BgEntry,
    PoolLayout,
    harmonize,
    load_alpha,
    load_image,
    load_pools,
    load_unknown_mask,
    read_manifest,
    resize_bilinear,
    write_outputs,
)
from matteforge.io import _quantize8
from matteforge.schedulers import Ordering, execute_plan, plan_quadruplet


def make_layout(tmp_path, fg_stems, alpha_stems, bg_stems, size=8):
    rng = np.random.default_rng(0)
    fg_dir, alpha_dir, bg_dir = tmp_path / "fg", tmp_path / "alpha", tmp_path / "bg"
    for d in (fg_dir, alpha_dir, bg_dir):
        d.mkdir(exist_ok=True)
    for stem in fg_stems:
        save_rgb8(fg_dir / f"{stem}.png", rng.random((size, size, 3)))
    for stem in alpha_stems:
        alpha = rng.random((size, size))
        alpha[0, 0] = 1.0
        save_gray8(alpha_dir / f"{stem}.png", alpha)
    for stem in bg_stems:
        save_rgb8(bg_dir / f"{stem}.png", rng.random((size, size, 3)))
    return PoolLayout(fg_dir, alpha_dir, bg_dir)


class TestLoadPools:
    def test_pairs_by_stem_in_lexicographic_order(self, tmp_path):
        layout = make_layout(tmp_path, ["b", "a"], ["a", "b"], ["z"])
        fgs, bgs, report = load_pools(layout)
        assert [e.id for e in fgs] == ["a", "b"]
        assert [b.id for b in bgs] == ["z"]
        assert report.skipped == []

    def test_unpaired_foreground_skipped_with_warning(self, tmp_path):
        layout = make_layout(tmp_path, ["a", "b"], ["a"], ["z"])
        fgs, _, report = load_pools(layout)
        assert [e.id for e in fgs] == ["a"]
        assert len(report.skipped) == 1
        assert "matching" in report.skipped[0][1]

    def test_unpaired_alpha_reported(self, tmp_path):
        layout = make_layout(tmp_path, ["a"], ["a", "stray"], ["z"])
        _, _, report = load_pools(layout)
        assert any("stray" in path for path, _ in report.skipped)

    def test_sixteen_bit_alpha_max_is_exactly_one(self, tmp_path):
        layout = make_layout(tmp_path, ["a"], [], ["z"])
        alpha = np.zeros((8, 8))
        alpha[0, 0] = 1.0
        save_gray16(layout.alpha_dir / "a.png", alpha)
        fgs, _, _ = load_pools(layout)
        assert fgs[0].alpha.data[0, 0] == 1.0

    def test_fully_transparent_alpha_skipped(self, tmp_path):
        layout = make_layout(tmp_path, ["a", "b"], ["b"], ["z"])
        save_gray8(layout.alpha_dir / "a.png", np.zeros((8, 8)))
        fgs, _, report = load_pools(layout)
        assert [e.id for e in fgs] == ["b"]
        assert any("transparent" in reason for _, reason in report.skipped)

    def test_mismatched_sizes_skipped(self, tmp_path):
        layout = make_layout(tmp_path, ["a", "b"], ["b"], ["z"])
        alpha = np.ones((4, 4))
        save_gray8(layout.alpha_dir / "a.png", alpha)
        fgs, _, report = load_pools(layout)
        assert [e.id for e in fgs] == ["b"]
        assert any("differ in size" in reason for _, reason in report.skipped)

    def test_undecodable_file_skipped(self, tmp_path):
        layout = make_layout(tmp_path, ["a", "b"], ["a", "b"], ["z"])
        (layout.fg_dir / "a.png").write_bytes(b"not a png at all")
        fgs, _, report = load_pools(layout)
        assert [e.id for e in fgs] == ["b"]
        assert any("decode failed" in reason for _, reason in report.skipped)

    def test_empty_foreground_pool_is_fatal(self, tmp_path):
        layout = make_layout(tmp_path, ["a"], [], ["z"])
        with pytest.raises(PoolError, match="foreground pool is empty"):
            load_pools(layout)

    def test_empty_background_pool_is_fatal(self, tmp_path):
        layout = make_layout(tmp_path, ["a"], ["a"], [])
        with pytest.raises(PoolError, match="background pool is empty"):
            load_pools(layout)

    def test_missing_directory_is_fatal(self, tmp_path):
        layout = PoolLayout(tmp_path / "nope", tmp_path / "nope", tmp_path / "nope")
        with pytest.raises(PoolError, match="does not exist"):
            load_pools(layout)

    def test_jpeg_backgrounds_load(self, tmp_path):
        layout = make_layout(tmp_path, ["a"], ["a"], [])
        from PIL import Image

        arr = (np.random.default_rng(1).random((8, 8, 3)) * 255).astype(np.uint8)
        Image.fromarray(arr, "RGB").save(layout.bg_dir / "j.jpg", quality=95)
        _, bgs, _ = load_pools(layout)
        assert [b.id for b in bgs] == ["j"]
        assert bgs[0].image.shape == (8, 8)


class TestLoadSingleFiles:
    def test_grayscale_image_replicated_to_rgb(self, tmp_path):
        save_gray8(tmp_path / "g.png", np.full((4, 4), 0.5))
        buf = load_image(tmp_path / "g.png")
        assert buf.data.shape == (4, 4, 3)
        assert np.array_equal(buf.data[:, :, 0], buf.data[:, :, 2])

    def test_rgb_alpha_uses_first_channel(self, tmp_path):
        arr = np.zeros((4, 4, 3))
        arr[:, :, 0] = 1.0
        save_rgb8(tmp_path / "c.png", arr)
        alpha = load_alpha(tmp_path / "c.png")
        assert (alpha.data == 1.0).all()


class TestResizeBilinear:
    def test_identity_returns_same_object(self):
        data = np.random.default_rng(0).random((4, 5, 3)).astype(np.float32)
        assert resize_bilinear(data, 4, 5) is data

    def test_constant_raster_stays_constant(self):
        data = np.full((4, 4), 0.37, np.float32)
        out = resize_bilinear(data, 2, 2)
        np.testing.assert_allclose(out, 0.37, atol=1e-7)

    def test_two_to_four_hand_weights(self):
        # half-pixel centers: source samples land at -0.25, 0.25, 0.75, 1.25
        data = np.array([[0.0, 1.0]], np.float32)
        out = resize_bilinear(data, 1, 4)
        np.testing.assert_allclose(out, [[0.0, 0.25, 0.75, 1.0]], atol=1e-7)

    def test_channel_axis_preserved(self):
        data = np.random.default_rng(1).random((6, 6, 3)).astype(np.float32)
        out = resize_bilinear(data, 3, 9)
        assert out.shape == (3, 9, 3)

    def test_zero_target_rejected(self):
        with pytest.raises(ShapeError):
            resize_bilinear(np.zeros((2, 2), np.float32), 0, 2)


class TestHarmonize:
    def test_background_already_at_target_is_same_object(self):
        buf = const_image(4, 4, 0.5)
        assert harmonize(buf, (4, 4)) is buf

    def test_entry_already_at_target_is_same_object(self):
        entry = FgEntry("e", const_image(4, 4, 0.5), const_alpha(4, 4, 0.5))
        assert harmonize(entry, (4, 4)) is entry

    def test_background_cover_fit_center_crops(self):
        # 2x4 source onto 2x2 target: no scaling needed, crop the middle columns
        data = np.zeros((2, 4, 3), np.float32)
        data[:, 1, :] = 0.25
        data[:, 2, :] = 0.75
        out = harmonize(ImageBuffer(data), (2, 2))
        assert out.shape == (2, 2)
        np.testing.assert_allclose(out.data[:, 0, :], 0.25, atol=1e-7)
        np.testing.assert_allclose(out.data[:, 1, :], 0.75, atol=1e-7)

    def test_background_cover_fit_preserves_aspect(self):
        rng = np.random.default_rng(2)
        buf = ImageBuffer(rng.random((40, 20, 3)).astype(np.float32))
        out = harmonize(buf, (10, 10))
        assert out.shape == (10, 10)

    def test_constant_background_stays_constant(self):
        out = harmonize(const_image(4, 4, 0.6), (2, 2))
        np.testing.assert_allclose(out.data, 0.6, atol=1e-7)

    def test_entry_resize_is_plain_bilinear_and_clamped(self):
        rng = np.random.default_rng(3)
        entry = random_entry(rng, 8, 6, "r")
        out = harmonize(entry, (4, 12))
        assert out.id == "r"
        assert out.image.shape == (4, 12)
        assert out.alpha.shape == (4, 12)
        assert out.alpha.data.min() >= 0.0 and out.alpha.data.max() <= 1.0

    def test_zero_area_target_rejected(self):
        with pytest.raises(ShapeError):
            harmonize(const_image(2, 2, 0.1), (0, 3))


def run_records(n_fg=4, n_bg=2, count=8, seed=0, size=8):
    rng = np.random.default_rng(seed)
    fgs = [random_entry(rng, size, size, f"fg{i}") for i in range(n_fg)]
    bgs = [BgEntry(f"bg{i}", ImageBuffer(rng.random((size, size, 3)).astype(np.float32))) for i in range(n_bg)]
    plan = plan_quadruplet(n_fg, n_bg, count, seed=seed, ordering=Ordering.SHUFFLED)
    return list(execute_plan(plan, fgs, bgs))


HEADER = {"tool": "matteforge", "version": "test", "style": "quadruplet", "seed": 0, "fg_count": 4, "bg_count": 2}


class TestWriteOutputs:
    def test_zero_records_writes_header_only(self, tmp_path):
        manifest = write_outputs([], tmp_path / "out", HEADER)
        header, rows = read_manifest(manifest)
        assert header["style"] == "quadruplet"
        assert rows == []
        assert list((tmp_path / "out" / "images").iterdir()) == []
        assert list((tmp_path / "out" / "alphas").iterdir()) == []

    def test_opaque_alpha_saves_as_full_white(self, tmp_path):
        records = run_records()
        rec = records[0]
        opaque = FgEntry("o", rec.composite, const_alpha(8, 8, 1.0))
        from dataclasses import replace

        record = replace(rec, alpha=opaque.alpha)
        write_outputs([record], tmp_path / "out", HEADER)
        from PIL import Image

        with Image.open(tmp_path / "out" / "alphas" / f"{record.sample_id}.png") as im:
            assert (np.asarray(im) == 255).all()

    def test_round_trip_error_within_quantization_bound(self, tmp_path):
        records = run_records(count=4)
        write_outputs(records, tmp_path / "out", HEADER)
        bound = 1.0 / (2 * 255) + 1e-6
        for rec in records:
            back_img = load_image(tmp_path / "out" / "images" / f"{rec.sample_id}.png")
            back_alpha = load_alpha(tmp_path / "out" / "alphas" / f"{rec.sample_id}.png")
            assert np.abs(back_img.data - rec.composite.data).max() <= bound
            assert np.abs(back_alpha.data - rec.alpha.data).max() <= bound

    def test_png16_round_trip_is_tighter(self, tmp_path):
        records = run_records(count=4)
        write_outputs(records, tmp_path / "out", HEADER, png16=True)
        bound = 1.0 / (2 * 65535) + 1e-7
        for rec in records:
            back_alpha = load_alpha(tmp_path / "out" / "alphas" / f"{rec.sample_id}.png")
            assert np.abs(back_alpha.data - rec.alpha.data).max() <= bound

    def test_manifest_references_every_file_exactly_once(self, tmp_path):
        records = run_records(count=8)
        manifest = write_outputs(records, tmp_path / "out", HEADER)
        _, rows = read_manifest(manifest)
        images_on_disk = {p.name for p in (tmp_path / "out" / "images").iterdir()}
        alphas_on_disk = {p.name for p in (tmp_path / "out" / "alphas").iterdir()}
        image_refs = [row["image"].split("/")[-1] for row in rows]
        alpha_refs = [row["alpha"].split("/")[-1] for row in rows]
        assert sorted(image_refs) == sorted(images_on_disk)
        assert sorted(alpha_refs) == sorted(alphas_on_disk)
        assert len(set(image_refs)) == len(image_refs)

    def test_rows_in_plan_order_with_metadata(self, tmp_path):
        records = run_records(count=8)
        manifest = write_outputs(records, tmp_path / "out", HEADER)
        _, rows = read_manifest(manifest)
        assert [row["order_index"] for row in rows] == list(range(8))
        for row, rec in zip(rows, records):
            assert row["fg_indices"] == list(rec.item.fg_ids)
            assert row["fg_ids"] == list(rec.fg_names)
            assert row["bg_id"] == rec.bg_name
            assert row["kind"] == rec.item.kind.value

    def test_trimaps_written_when_requested(self, tmp_path):
        records = run_records(count=4)
        manifest = write_outputs(
            records, tmp_path / "out", HEADER, trimap=TrimapParams(0.95, 0.05, 1)
        )
        _, rows = read_manifest(manifest)
        for row in rows:
            assert "trimap" in row
            mask = load_unknown_mask(tmp_path / "out" / row["trimap"])
            assert mask.shape == (row["height"], row["width"])

    def test_quantizer_matches_numpy_rounding(self):
        rng = np.random.default_rng(4)
        arr = rng.random((16, 16, 3)).astype(np.float32)
        expected = np.round(arr.astype(np.float64) * 255.0).astype(np.uint8)
        assert np.array_equal(_quantize8(arr), expected)
        assert _quantize8(np.zeros((1, 1), np.float32))[0, 0] == 0
        assert _quantize8(np.ones((1, 1), np.float32))[0, 0] == 255


class TestReadManifest:
    def test_corrupt_json_line_raises_integrity_error(self, tmp_path):
        path = tmp_path / "manifest.jsonl"
        path.write_text('{"record": "header"}\nnot json\n')
        with pytest.raises(IntegrityError, match="line 2"):
            read_manifest(path)

    def test_missing_header_raises(self, tmp_path):
        path = tmp_path / "manifest.jsonl"
        path.write_text('{"record": "sample"}\n')
        with pytest.raises(IntegrityError, match="header"):
            read_manifest(path)

    def test_unknown_record_kind_raises(self, tmp_path):
        path = tmp_path / "manifest.jsonl"
        path.write_text('{"record": "header"}\n{"record": "mystery"}\n')
        with pytest.raises(IntegrityError, match="mystery"):
            read_manifest(path)

    def test_header_must_come_first(self, tmp_path):
        path = tmp_path / "manifest.jsonl"
        path.write_text('{"record": "sample"}\n{"record": "header"}\n')
        with pytest.raises(IntegrityError):
            read_manifest(path)

    def test_round_trip_preserves_header_fields(self, tmp_path):
        manifest = write_outputs([], tmp_path / "out", dict(HEADER, seed=99))
        header, _ = read_manifest(manifest)
        assert header["seed"] == 99
        assert header["record"] == "header"
