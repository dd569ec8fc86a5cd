import json

import numpy as np
import pytest

from segrecall import ClassSpec, LabelMap
from segrecall.errors import EmptyInputError, FormatError, ShapeMismatchError
from segrecall.fileio import (
    load_class_spec,
    load_label_maps,
    load_manifest,
    load_pairs,
    read_label_map,
    read_pgm,
    read_sft,
    save_class_spec,
    write_label_map,
    write_pgm,
    write_sft,
)


class TestPgm:
    def test_round_trip_is_bit_identical(self, tmp_path, spec3):
        rng = np.random.default_rng(7)
        data = rng.integers(0, 3, size=(5, 9)).astype(np.uint8)
        data[0, 0] = 255
        path = tmp_path / "a.pgm"
        write_label_map(path, LabelMap(data.astype(np.int64)))
        first = path.read_bytes()
        again = read_label_map(path, spec3)
        assert np.array_equal(again.data, data)
        write_label_map(path, again)
        assert path.read_bytes() == first

    def test_header_comments_and_whitespace(self, tmp_path):
        raw = b"P5 # magic\n# a comment line\n  3\t2\n255\n" + bytes(range(6))
        path = tmp_path / "c.pgm"
        path.write_bytes(raw)
        data = read_pgm(path)
        assert data.shape == (2, 3)
        assert data.ravel().tolist() == list(range(6))

    def test_wrong_magic(self, tmp_path):
        path = tmp_path / "bad.pgm"
        path.write_bytes(b"P2\n1 1\n255\n0")
        with pytest.raises(FormatError):
            read_pgm(path)

    def test_wrong_maxval(self, tmp_path):
        path = tmp_path / "bad.pgm"
        path.write_bytes(b"P5\n1 1\n65535\n\x00\x00")
        with pytest.raises(FormatError):
            read_pgm(path)

    def test_truncated_payload(self, tmp_path):
        path = tmp_path / "bad.pgm"
        path.write_bytes(b"P5\n2 2\n255\n\x00\x00")
        with pytest.raises(FormatError):
            read_pgm(path)

    def test_trailing_bytes(self, tmp_path):
        path = tmp_path / "bad.pgm"
        path.write_bytes(b"P5\n1 1\n255\n\x00\x00")
        with pytest.raises(FormatError):
            read_pgm(path)

    def test_values_must_fit_a_byte(self, tmp_path):
        with pytest.raises(FormatError):
            write_pgm(tmp_path / "x.pgm", np.array([[300]]))


class TestSft:
    @pytest.mark.parametrize("dtype", [np.float32, np.float64])
    def test_round_trip_bit_exact(self, tmp_path, dtype):
        rng = np.random.default_rng(11)
        arr = rng.normal(size=(3, 4, 5)).astype(dtype)
        path = tmp_path / "t.sft"
        write_sft(path, arr)
        back = read_sft(path)
        assert back.dtype == arr.dtype
        assert np.array_equal(back, arr)
        assert back.tobytes() == arr.tobytes()

    def test_file_bytes_are_stable(self, tmp_path):
        arr = np.arange(6, dtype=np.float64).reshape(2, 3)
        a, b = tmp_path / "a.sft", tmp_path / "b.sft"
        write_sft(a, arr)
        write_sft(b, arr)
        assert a.read_bytes() == b.read_bytes()
        assert a.read_bytes()[:6] == b"SFT1" + bytes([1, 2])

    def test_rejects_wrong_magic(self, tmp_path):
        path = tmp_path / "bad.sft"
        path.write_bytes(b"NOPE" + bytes(10))
        with pytest.raises(FormatError):
            read_sft(path)

    def test_rejects_unknown_dtype_code(self, tmp_path):
        path = tmp_path / "bad.sft"
        path.write_bytes(b"SFT1" + bytes([9, 1]) + (1).to_bytes(4, "little") + bytes(8))
        with pytest.raises(FormatError):
            read_sft(path)

    def test_rejects_payload_length_mismatch(self, tmp_path):
        path = tmp_path / "bad.sft"
        path.write_bytes(b"SFT1" + bytes([1, 1]) + (2).to_bytes(4, "little") + bytes(8))
        with pytest.raises(FormatError):
            read_sft(path)

    def test_rejects_non_float_arrays(self, tmp_path):
        with pytest.raises(FormatError):
            write_sft(tmp_path / "x.sft", np.zeros((2, 2), dtype=np.int32))


class TestClassSpecJson:
    def test_round_trip(self, tmp_path):
        spec = ClassSpec(names=("sky", "road"), ignore_id=9)
        path = tmp_path / "classes.json"
        save_class_spec(path, spec)
        assert load_class_spec(path) == spec

    def test_missing_names(self, tmp_path):
        path = tmp_path / "classes.json"
        path.write_text(json.dumps({"ignore_id": 255}))
        with pytest.raises(FormatError):
            load_class_spec(path)


def _write_manifest(tmp_path, entries):
    manifest = tmp_path / "manifest.json"
    manifest.write_text(
        json.dumps({"classes": {"names": ["a", "b"], "ignore_id": 255}, "entries": entries})
    )
    return manifest


class TestManifest:
    def test_paths_resolve_relative_to_manifest(self, tmp_path):
        spec = ClassSpec(names=("a", "b"))
        (tmp_path / "maps").mkdir()
        write_label_map(tmp_path / "maps" / "x.pgm", LabelMap(np.zeros((2, 2), dtype=np.int64)))
        manifest = _write_manifest(tmp_path, [{"labels": "maps/x.pgm"}])
        loaded = load_manifest(manifest)
        assert loaded.class_spec == spec
        maps = load_label_maps(loaded)
        assert len(maps) == 1

    def test_empty_manifest(self, tmp_path):
        manifest = _write_manifest(tmp_path, [])
        with pytest.raises(EmptyInputError):
            load_label_maps(load_manifest(manifest))

    def test_entry_without_any_path(self, tmp_path):
        manifest = _write_manifest(tmp_path, [{}])
        with pytest.raises(FormatError):
            load_manifest(manifest)

    def test_mixed_resolutions_fail(self, tmp_path):
        write_label_map(tmp_path / "a.pgm", LabelMap(np.zeros((2, 2), dtype=np.int64)))
        write_label_map(tmp_path / "b.pgm", LabelMap(np.zeros((3, 3), dtype=np.int64)))
        manifest = _write_manifest(tmp_path, [{"labels": "a.pgm"}, {"labels": "b.pgm"}])
        with pytest.raises(ShapeMismatchError):
            load_label_maps(load_manifest(manifest))

    def test_pair_resolution_mismatch_fails(self, tmp_path):
        probs = np.full((2, 2, 2), 0.5)
        write_sft(tmp_path / "p.sft", probs)
        write_label_map(tmp_path / "g.pgm", LabelMap(np.zeros((3, 3), dtype=np.int64)))
        manifest = _write_manifest(tmp_path, [{"probs": "p.sft", "labels": "g.pgm"}])
        with pytest.raises(ShapeMismatchError):
            load_pairs(load_manifest(manifest))
