"""GSS-lite on-disk format: a JSON manifest plus one text file per level.

Level files hold one record per line, `index parent_index x y z`, coordinates
in nm with six decimals; `#` starts a comment. The writer is canonical (fixed
field order and precision), so write -> load -> write is byte-identical.
Chromosome records carry parent_index -1, having no coarser level.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from genomelens.model import (
    DataLevel,
    GenomeDataset,
    LEVEL_NAMES,
    LevelTable,
    STORED_LEVELS,
    build_dataset,
    validate,
)
from genomelens.synth import (
    build_atom_template,
    build_nucleotide_template,
    frames_for_chain,
    read_atom_template_text,
)

FORMAT_VERSION = 1
MANIFEST_NAME = "manifest.json"


class GssError(Exception):
    """Raised for any structural problem in a GSS-lite dataset."""

    def __init__(self, message: str, path: str | Path | None = None, line: int | None = None):
        self.path = str(path) if path is not None else None
        self.line = line
        prefix = ""
        if self.path is not None:
            prefix = self.path if line is None else f"{self.path}:{line}"
            prefix += ": "
        super().__init__(prefix + message)


@dataclass(frozen=True)
class DatasetManifest:
    """Parsed manifest: file map, counts, provenance."""

    format_version: int
    unit: str
    level_files: dict[DataLevel, str]
    counts: dict[DataLevel, int]
    provenance: str
    atom_template: str | None
    path: Path


def _parse_level_file(path: Path, expected_count: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Parse one level file into (positions, parent_index, source line numbers)."""
    try:
        raw_lines = path.read_text().splitlines()
    except OSError as exc:
        raise GssError(f"cannot read level file: {exc}", path) from exc
    records = [
        (lineno, line)
        for lineno, line in enumerate(raw_lines, start=1)
        if line.strip() and not line.lstrip().startswith("#")
    ]
    if len(records) != expected_count:
        raise GssError(f"expected {expected_count} records, found {len(records)}", path)

    joined = "\n".join(line for _, line in records)
    if records:
        with warnings.catch_warnings():
            # Partial parses warn (and will raise) before the explicit
            # size check below localizes the offending line.
            warnings.simplefilter("ignore", DeprecationWarning)
            try:
                values = np.fromstring(joined, sep=" ")
            except ValueError:
                values = np.empty(0)
    else:
        values = np.empty(0)
    if values.size != 5 * len(records):
        _locate_bad_record(path, records)
        raise GssError("malformed records", path)
    values = values.reshape(-1, 5)

    indices = values[:, 0]
    if not np.array_equal(indices, np.arange(len(records), dtype=np.float64)):
        row = int(np.argmin(indices == np.arange(len(records))))
        raise GssError(f"index column must count 0..{len(records) - 1}", path, records[row][0])
    parent = values[:, 1]
    if not np.array_equal(parent, np.floor(parent)):
        row = int(np.argwhere(parent != np.floor(parent))[0][0])
        raise GssError("parent_index must be an integer", path, records[row][0])
    positions = values[:, 2:5]
    bad = ~np.isfinite(positions)
    if bad.any():
        row = int(np.argwhere(bad.any(axis=1))[0][0])
        raise GssError("non-finite coordinate", path, records[row][0])
    line_numbers = np.array([lineno for lineno, _ in records], dtype=np.int64)
    return positions, parent.astype(np.int64), line_numbers


def _locate_bad_record(path: Path, records: list[tuple[int, str]]) -> None:
    """Slow path: find the exact offending line and raise with its number."""
    for lineno, line in records:
        parts = line.split()
        if len(parts) != 5:
            raise GssError(f"expected 5 fields, found {len(parts)}", path, lineno)
        try:
            [float(p) for p in parts]
        except ValueError:
            raise GssError(f"unparseable field in record: {line.strip()!r}", path, lineno) from None


def read_manifest(manifest_path: str | Path) -> DatasetManifest:
    path = Path(manifest_path)
    try:
        data = json.loads(path.read_text())
    except OSError as exc:
        raise GssError(f"cannot read manifest: {exc}", path) from exc
    except json.JSONDecodeError as exc:
        raise GssError(f"manifest is not valid JSON: {exc}", path) from exc
    version = data.get("format_version")
    if version != FORMAT_VERSION:
        raise GssError(f"unsupported format_version {version!r}", path)
    if data.get("unit") != "nm":
        raise GssError(f"unsupported unit {data.get('unit')!r}", path)
    levels = data.get("levels")
    if not isinstance(levels, dict):
        raise GssError("manifest missing `levels` object", path)
    level_files: dict[DataLevel, str] = {}
    counts: dict[DataLevel, int] = {}
    for level in STORED_LEVELS:
        entry = levels.get(LEVEL_NAMES[level])
        if not isinstance(entry, dict) or "file" not in entry or "count" not in entry:
            raise GssError(f"manifest missing level `{LEVEL_NAMES[level]}`", path)
        level_files[level] = str(entry["file"])
        counts[level] = int(entry["count"])
    return DatasetManifest(
        format_version=version,
        unit="nm",
        level_files=level_files,
        counts=counts,
        provenance=str(data.get("provenance", "")),
        atom_template=data.get("atom_template"),
        path=path,
    )


def load_dataset(manifest_path: str | Path) -> GenomeDataset:
    """Load and fully validate a GSS-lite dataset."""
    manifest = read_manifest(manifest_path)
    base = manifest.path.parent
    tables: dict[DataLevel, LevelTable] = {}
    for level in STORED_LEVELS:
        file_path = base / manifest.level_files[level]
        positions, parent, lines = _parse_level_file(file_path, manifest.counts[level])
        if level != DataLevel.CHROMOSOME and len(parent):
            steps = np.diff(parent)
            if (steps < 0).any():
                row = int(np.argwhere(steps < 0)[0][0]) + 1
                raise GssError("parent_index decreases along the sequence", file_path, int(lines[row]))
        tables[level] = LevelTable(positions, parent)

    atom_template = build_atom_template()
    if manifest.atom_template:
        atom_template = read_atom_template_text(base / manifest.atom_template)

    dataset = build_dataset(
        tables=tables,
        frames=frames_for_chain(tables[DataLevel.NUCLEOSOME].positions),
        nucleotide_template=build_nucleotide_template(),
        atom_template=atom_template,
        provenance=manifest.provenance,
    )
    report = validate(dataset)
    if not report.ok:
        first = report.violations[0]
        raise GssError(
            f"dataset fails validation ({len(report.violations)} violations; "
            f"first: [{first.code}] {first.message} at {first.location})",
            manifest.path,
        )
    return dataset


def write_dataset(dataset: GenomeDataset, out_dir: str | Path) -> DatasetManifest:
    """Serialize a dataset canonically; returns the written manifest."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    level_files: dict[DataLevel, str] = {}
    counts: dict[DataLevel, int] = {}
    for level in STORED_LEVELS:
        name = f"{LEVEL_NAMES[level]}.gss"
        level_files[level] = name
        table = dataset.tables[level]
        counts[level] = len(table)
        lines = [f"# GSS-lite level={LEVEL_NAMES[level]} count={len(table)} unit=nm"]
        parent = table.parent_index
        pos = table.positions
        lines.extend(
            "%d %d %.6f %.6f %.6f" % (i, parent[i], pos[i, 0], pos[i, 1], pos[i, 2])
            for i in range(len(table))
        )
        (out / name).write_text("\n".join(lines) + "\n")

    manifest_data = {
        "format_version": FORMAT_VERSION,
        "unit": "nm",
        "provenance": dataset.provenance,
        "levels": {
            LEVEL_NAMES[level]: {"file": level_files[level], "count": counts[level]}
            for level in STORED_LEVELS
        },
    }
    manifest_path = out / MANIFEST_NAME
    manifest_path.write_text(json.dumps(manifest_data, indent=2, sort_keys=True) + "\n")
    return DatasetManifest(
        format_version=FORMAT_VERSION,
        unit="nm",
        level_files=level_files,
        counts=counts,
        provenance=dataset.provenance,
        atom_template=None,
        path=manifest_path,
    )
