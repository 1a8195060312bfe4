import pytest

from detector_export.embed_slice import export_embedding_slice

FULL_TABLE = """\
4 3
the 0.1 0.2 0.3
dog 1 0 0
Scotch 0 1 0
beach 0 0 1
"""


def test_slice_keeps_requested_tokens(tmp_path):
    src = tmp_path / "full.txt"
    src.write_text(FULL_TABLE)
    out = tmp_path / "slice.txt"
    report = export_embedding_slice(["dog", "beach"], src, out)
    assert report.kept == 2 and report.missing == []
    lines = out.read_text().splitlines()
    assert [l.split()[0] for l in lines] == ["dog", "beach"]


def test_header_dropped_from_slice(tmp_path):
    src = tmp_path / "full.txt"
    src.write_text(FULL_TABLE)
    out = tmp_path / "slice.txt"
    export_embedding_slice(["the"], src, out)
    assert out.read_text() == "the 0.1 0.2 0.3\n"


def test_case_variant_matches(tmp_path):
    src = tmp_path / "full.txt"
    src.write_text(FULL_TABLE)
    out = tmp_path / "slice.txt"
    report = export_embedding_slice(["scotch"], src, out)
    assert report.kept == 1 and report.missing == []
    assert out.read_text().startswith("Scotch ")


def test_missing_tokens_reported(tmp_path):
    src = tmp_path / "full.txt"
    src.write_text(FULL_TABLE)
    out = tmp_path / "slice.txt"
    report = export_embedding_slice(["dog", "qzxv"], src, out)
    assert report.kept == 1
    assert report.missing == ["qzxv"]


def test_empty_vocab_errors(tmp_path):
    src = tmp_path / "full.txt"
    src.write_text(FULL_TABLE)
    with pytest.raises(ValueError, match="empty"):
        export_embedding_slice(["", "  "], src, tmp_path / "slice.txt")


def test_duplicate_source_lines_keep_first(tmp_path):
    src = tmp_path / "full.txt"
    src.write_text("dog 1 0\ndog 0 1\n")
    out = tmp_path / "slice.txt"
    report = export_embedding_slice(["dog"], src, out)
    assert report.kept == 1
    assert out.read_text() == "dog 1 0\n"
