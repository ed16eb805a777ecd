import json
import os

import pytest

from app.errors import DataError
from app.runs.store import MANIFEST_NAME, RunStore, read_manifest, write_manifest


class TestManifest:
    def test_overwrite_leaves_no_temp_file(self, tmp_path):
        d = str(tmp_path / "world")
        write_manifest(d, {"b": 1, "a": 2})
        path = write_manifest(d, {"b": 3, "a": 4})
        assert path == os.path.join(d, MANIFEST_NAME)
        assert os.listdir(d) == [MANIFEST_NAME]
        assert read_manifest(d) == {"a": 4, "b": 3}

    def test_identical_payloads_give_identical_bytes(self, tmp_path):
        a = write_manifest(str(tmp_path / "a"), {"z": [1, 2], "y": {"q": 1, "p": 2}})
        b = write_manifest(str(tmp_path / "b"), {"y": {"p": 2, "q": 1}, "z": [1, 2]})
        with open(a, "rb") as fa, open(b, "rb") as fb:
            raw = fa.read()
            assert raw == fb.read()
        assert raw.endswith(b"\n")
        assert list(json.loads(raw)) == ["y", "z"]

    def test_stamp(self, tmp_path):
        write_manifest(str(tmp_path), {"kind": "eval"}, stamp=True)
        meta = read_manifest(str(tmp_path))["_meta"]
        assert isinstance(meta["saved_at"], int) and meta["saved_at"] > 0

    def test_missing(self, tmp_path):
        with pytest.raises(DataError, match="no manifest.json"):
            read_manifest(str(tmp_path))

    def test_invalid(self, tmp_path):
        (tmp_path / MANIFEST_NAME).write_text("{not json", encoding="utf-8")
        with pytest.raises(DataError, match="invalid manifest"):
            read_manifest(str(tmp_path))


class TestRunStore:
    def test_run_ids_are_prefixed_and_unique(self, tmp_path):
        store = RunStore(str(tmp_path / "runs"))
        a, b = store.new_run_id("table"), store.new_run_id("table")
        assert a.startswith("table-") and b.startswith("table-")
        assert a != b

    def test_save_manifest_under_run_dir(self, tmp_path):
        store = RunStore(str(tmp_path / "runs"))
        run_id = store.new_run_id("bias")
        path = store.save_manifest(run_id, {"suite": "bias"})
        paths = store.paths(run_id)
        assert path == os.path.join(paths.run_dir, MANIFEST_NAME)
        assert paths.report_json_path == os.path.join(paths.run_dir, "report.json")
        loaded = read_manifest(paths.run_dir)
        assert loaded["suite"] == "bias"
        assert "saved_at" in loaded["_meta"]
