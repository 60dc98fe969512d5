import json

import pytest

from genomelens.gssio import GssError, load_dataset, read_manifest, write_dataset
from genomelens.model import STORED_LEVELS, DataLevel
from genomelens.synth import GenParams, generate

LEVEL_FILES = ("chromosome.gss", "locus.gss", "fiber.gss", "nucleosome.gss")


def test_write_load_round_trip_byte_identical(dataset, tmp_path):
    first = tmp_path / "first"
    second = tmp_path / "second"
    write_dataset(dataset, first)
    loaded = load_dataset(first / "manifest.json")
    write_dataset(loaded, second)
    for name in LEVEL_FILES + ("manifest.json",):
        assert (first / name).read_bytes() == (second / name).read_bytes(), name


def test_manifest_content(dataset, tmp_path):
    manifest = write_dataset(dataset, tmp_path / "d")
    raw = json.loads((tmp_path / "d" / "manifest.json").read_text())
    assert raw["format_version"] == 1
    assert raw["unit"] == "nm"
    assert raw["levels"]["nucleosome"]["count"] == 120
    assert manifest.counts[DataLevel.NUCLEOSOME] == 120


def test_level_file_header_and_footprint(dataset, tmp_path):
    write_dataset(dataset, tmp_path / "d")
    lines = (tmp_path / "d" / "fiber.gss").read_text().splitlines()
    assert lines[0] == "# GSS-lite level=fiber count=24 unit=nm"
    body = [l for l in lines if not l.startswith("#")]
    assert len(body) == 24
    index, parent, x, y, z = body[0].split()
    assert index == "0" and parent == "0"
    float(x), float(y), float(z)


def test_reload_preserves_geometry(dataset, tmp_path):
    import numpy as np

    write_dataset(dataset, tmp_path / "d")
    loaded = load_dataset(tmp_path / "d" / "manifest.json")
    for level in STORED_LEVELS:
        a = dataset.tables[level].positions
        b = loaded.tables[level].positions
        assert np.abs(a - b).max() < 1e-6
        assert (dataset.tables[level].parent_index == loaded.tables[level].parent_index).all()


def test_missing_manifest(tmp_path):
    with pytest.raises(GssError, match="manifest"):
        load_dataset(tmp_path / "nothing" / "manifest.json")


def test_count_mismatch(dataset, tmp_path):
    write_dataset(dataset, tmp_path / "d")
    path = tmp_path / "d" / "locus.gss"
    lines = path.read_text().splitlines()
    path.write_text("\n".join(lines[:-1]) + "\n")
    with pytest.raises(GssError, match="expected 6 records, found 5"):
        load_dataset(tmp_path / "d" / "manifest.json")


def test_malformed_record_names_line(dataset, tmp_path):
    write_dataset(dataset, tmp_path / "d")
    path = tmp_path / "d" / "nucleosome.gss"
    lines = path.read_text().splitlines()
    lines[5] = "4 0 not-a-number 0 0"
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(GssError) as err:
        load_dataset(tmp_path / "d" / "manifest.json")
    assert "nucleosome.gss" in str(err.value)
    assert ":6:" in str(err.value) or "line 6" in str(err.value)


def test_parent_must_not_decrease(tmp_path):
    dataset = generate(GenParams(2, 2, 2, 3, seed=1))
    write_dataset(dataset, tmp_path / "d")
    path = tmp_path / "d" / "fiber.gss"
    lines = path.read_text().splitlines()
    body = [l for l in lines if not l.startswith("#")]
    parts = body[-1].split()
    parts[1] = "0"
    body[-1] = " ".join(parts)
    path.write_text(lines[0] + "\n" + "\n".join(body) + "\n")
    with pytest.raises(GssError, match="parent_index"):
        load_dataset(tmp_path / "d" / "manifest.json")
