from pathlib import Path

import pytest

from sonoforge.adapters.manifest import manifest_splits, parse_manifest, parse_manifest_text
from sonoforge.domain.exceptions import DuplicateError, ManifestError, NotFoundError

HEADER = "pattern_id,wav_path,label,fold\n"


class TestParseManifest:
    """CSV manifests with contiguous folds."""

    def test_rows_and_paths(self, tmp_path):
        text = HEADER + f"a,clips/a.wav,cat,1\nb,{tmp_path}/b.wav,dog,2\n"
        manifest = parse_manifest_text(text, base_dir=tmp_path)
        assert len(manifest) == 2
        assert manifest.rows[0].wav_path == tmp_path / "clips" / "a.wav"
        assert manifest.rows[1].wav_path == tmp_path / "b.wav"
        assert manifest.folds == (1, 2)
        assert manifest.labels == {"a": "cat", "b": "dog"}

    def test_whitespace_is_trimmed(self):
        manifest = parse_manifest_text(HEADER + " a , x.wav , cat , 1 \n")
        row = manifest.rows[0]
        assert (row.pattern_id, row.label, row.fold) == ("a", "cat", 1)
        assert row.wav_path == Path("x.wav")

    def test_duplicate_pattern_names_its_row(self):
        text = HEADER + "a,a.wav,cat,1\nb,b.wav,cat,1\na,c.wav,dog,1\n"
        with pytest.raises(DuplicateError, match="row 4: duplicate pattern_id a"):
            parse_manifest_text(text)

    def test_bad_fold_names_its_row(self):
        with pytest.raises(ManifestError) as exc_info:
            parse_manifest_text(HEADER + "a,a.wav,cat,1\nb,b.wav,cat,two\n")
        assert exc_info.value.row == 3

    def test_folds_must_be_contiguous(self):
        with pytest.raises(ManifestError):
            parse_manifest_text(HEADER + "a,a.wav,cat,1\nb,b.wav,cat,3\n")

    def test_missing_column(self):
        with pytest.raises(ManifestError, match="fold"):
            parse_manifest_text("pattern_id,wav_path,label\na,a.wav,cat\n")

    def test_no_rows(self):
        with pytest.raises(ManifestError):
            parse_manifest_text(HEADER)

    def test_empty_pattern_id(self):
        with pytest.raises(ManifestError):
            parse_manifest_text(HEADER + ",a.wav,cat,1\n")

    def test_file(self, tmp_path):
        path = tmp_path / "manifest.csv"
        path.write_text(HEADER + "a,a.wav,cat,1\n", encoding="utf-8")
        manifest = parse_manifest(path)
        assert manifest.source == path
        assert manifest.rows[0].wav_path == tmp_path / "a.wav"

    def test_missing_file(self, tmp_path):
        with pytest.raises(NotFoundError):
            parse_manifest(tmp_path / "none.csv")


class TestSplits:
    def test_each_fold_tests_on_its_own_rows(self):
        text = HEADER + "a,a.wav,cat,1\nb,b.wav,dog,2\nc,c.wav,cat,2\nd,d.wav,dog,1\n"
        splits = manifest_splits(parse_manifest_text(text))
        assert [s.fold_id for s in splits] == [1, 2]
        assert splits[0].test_ids == ("a", "d")
        assert splits[0].train_ids == ("b", "c")
        assert splits[1].test_ids == ("b", "c")
        assert splits[1].train_ids == ("a", "d")
