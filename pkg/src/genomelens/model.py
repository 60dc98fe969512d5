"""Immutable multi-level genome data model: identity, ancestry, validation.

The genome is one long sequence at every level, so children of any parent
occupy one contiguous index range. That makes ancestry a pure array walk and
child lookup a binary search; nothing here ever mutates a dataset.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum
from typing import TYPE_CHECKING

import numpy as np

if TYPE_CHECKING:
    from genomelens.synth import AtomTemplate, NucleotideTemplate


class DataLevel(IntEnum):
    """Stored and virtual data levels, ordered coarse to fine."""

    CHROMOSOME = 0
    LOCUS = 1
    FIBER = 2
    NUCLEOSOME = 3
    NUCLEOTIDE = 4
    ATOM = 5

    @property
    def is_virtual(self) -> bool:
        """Nucleotides and atoms are materialized from templates, never stored."""
        return self >= DataLevel.NUCLEOTIDE

    @property
    def coarser(self) -> "DataLevel | None":
        return DataLevel(self - 1) if self > DataLevel.CHROMOSOME else None

    @property
    def finer(self) -> "DataLevel | None":
        return DataLevel(self + 1) if self < DataLevel.ATOM else None


STORED_LEVELS: tuple[DataLevel, ...] = (
    DataLevel.CHROMOSOME,
    DataLevel.LOCUS,
    DataLevel.FIBER,
    DataLevel.NUCLEOSOME,
)

LEVEL_NAMES = {level: level.name.lower() for level in DataLevel}


@dataclass(frozen=True)
class ElementId:
    """Identity of one element: (level, position in that level's sequence)."""

    level: DataLevel
    index: int


@dataclass(frozen=True)
class AncestorPath:
    """Ancestor indices of an element; levels at or below the element are None."""

    chromosome: int | None = None
    locus: int | None = None
    fiber: int | None = None
    nucleosome: int | None = None

    def get(self, level: DataLevel) -> int | None:
        return {
            DataLevel.CHROMOSOME: self.chromosome,
            DataLevel.LOCUS: self.locus,
            DataLevel.FIBER: self.fiber,
            DataLevel.NUCLEOSOME: self.nucleosome,
        }.get(level)


class LevelTable:
    """Positions (nm) plus parent linkage for one stored level. Immutable."""

    __slots__ = ("positions", "parent_index")

    def __init__(self, positions: np.ndarray, parent_index: np.ndarray):
        positions = np.ascontiguousarray(positions, dtype=np.float64)
        parent_index = np.ascontiguousarray(parent_index, dtype=np.int64)
        if positions.ndim != 2 or positions.shape[1] != 3:
            raise ValueError("positions must be (n, 3)")
        if parent_index.shape != (positions.shape[0],):
            raise ValueError("parent_index must match positions length")
        positions.setflags(write=False)
        parent_index.setflags(write=False)
        self.positions = positions
        self.parent_index = parent_index

    def __len__(self) -> int:
        return self.positions.shape[0]


@dataclass(frozen=True)
class Violation:
    code: str
    message: str
    location: str


@dataclass(frozen=True)
class ValidationReport:
    """Findings from validate(); a dataset is acceptable iff violations is empty."""

    violations: tuple[Violation, ...]
    counts: dict[DataLevel, int]
    children_per_parent: dict[DataLevel, tuple[int, float, int]]

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_text(self) -> str:
        lines = []
        for level in STORED_LEVELS:
            line = f"{LEVEL_NAMES[level]:<12} count={self.counts.get(level, 0)}"
            if level in self.children_per_parent:
                lo, med, hi = self.children_per_parent[level]
                line += f"  children/parent min={lo} median={med:g} max={hi}"
            lines.append(line)
        if self.ok:
            lines.append("0 violations")
        else:
            lines.append(f"{len(self.violations)} violations:")
            for v in self.violations:
                lines.append(f"  [{v.code}] {v.message} ({v.location})")
        return "\n".join(lines)


@dataclass(frozen=True)
class GenomeDataset:
    """The loaded world: stored level tables, nucleosome frames, templates, stats.

    `frames[i]` holds the orthonormal axes of nucleosome i as rows, so a
    template point transforms as `origin + local @ frames[i]`.
    """

    tables: dict[DataLevel, LevelTable]
    frames: np.ndarray
    nucleotide_template: "NucleotideTemplate"
    atom_template: "AtomTemplate"
    stats: dict[DataLevel, float]
    provenance: str = ""
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def count(self, level: DataLevel) -> int:
        if level == DataLevel.NUCLEOTIDE:
            return self.count(DataLevel.NUCLEOSOME) * len(self.nucleotide_template)
        if level == DataLevel.ATOM:
            return self.count(DataLevel.NUCLEOTIDE) * len(self.atom_template)
        return len(self.tables[level])

    def positions(self, level: DataLevel) -> np.ndarray:
        return self.tables[level].positions


def build_dataset(
    tables: dict[DataLevel, LevelTable],
    frames: np.ndarray,
    nucleotide_template: "NucleotideTemplate",
    atom_template: "AtomTemplate",
    provenance: str = "",
) -> GenomeDataset:
    """Assemble a dataset, deriving per-level spacing stats."""
    stats: dict[DataLevel, float] = {}
    for level in STORED_LEVELS:
        pos = tables[level].positions
        spacing = 0.0
        if len(pos) >= 2:
            spacing = float(np.median(np.linalg.norm(np.diff(pos, axis=0), axis=1)))
        if spacing <= 0.0:
            extent = float(np.max(np.linalg.norm(pos - pos.mean(axis=0), axis=1))) if len(pos) else 0.0
            spacing = max(extent, 1.0)
        stats[level] = spacing
    return GenomeDataset(
        tables=tables,
        frames=frames,
        nucleotide_template=nucleotide_template,
        atom_template=atom_template,
        stats=stats,
        provenance=provenance,
    )


def _check_id(dataset: GenomeDataset, elem: ElementId) -> None:
    n = dataset.count(elem.level)
    if not (0 <= elem.index < n):
        raise IndexError(f"{elem.level.name} index {elem.index} out of range [0, {n})")


def _stored_ancestor(dataset: GenomeDataset, elem: ElementId) -> tuple[DataLevel, int]:
    """Map a possibly-virtual id down to (stored level, index)."""
    level, index = elem.level, elem.index
    if level == DataLevel.ATOM:
        index //= len(dataset.atom_template)
        level = DataLevel.NUCLEOTIDE
    if level == DataLevel.NUCLEOTIDE:
        index //= len(dataset.nucleotide_template)
        level = DataLevel.NUCLEOSOME
    return level, index


def ancestors(dataset: GenomeDataset, elem: ElementId) -> AncestorPath:
    """Chain of parent indices above `elem`, by walking parent_index arrays."""
    _check_id(dataset, elem)
    level, index = _stored_ancestor(dataset, elem)
    out: dict[str, int] = {}
    if elem.level.is_virtual:
        # The stored nucleosome is itself an ancestor of a virtual element.
        out[LEVEL_NAMES[level]] = index
    while level != DataLevel.CHROMOSOME:
        index = int(dataset.tables[level].parent_index[index])
        level = level.coarser
        out[LEVEL_NAMES[level]] = index
    return AncestorPath(**out)


def child_range(dataset: GenomeDataset, elem: ElementId) -> tuple[int, int]:
    """Half-open [a, b) of `elem`'s children at the next-finer stored level."""
    _check_id(dataset, elem)
    if elem.level == DataLevel.NUCLEOSOME or elem.level.is_virtual:
        raise ValueError(f"{elem.level.name} has no stored children")
    child = elem.level.finer
    parent_index = dataset.tables[child].parent_index
    a = int(np.searchsorted(parent_index, elem.index, side="left"))
    b = int(np.searchsorted(parent_index, elem.index, side="right"))
    return a, b


def validate(dataset: GenomeDataset) -> ValidationReport:
    """Structural audit: counts, contiguity, finiteness, children-per-parent."""
    violations: list[Violation] = []
    counts = {level: len(dataset.tables[level]) for level in STORED_LEVELS}
    children: dict[DataLevel, tuple[int, float, int]] = {}

    if counts[DataLevel.CHROMOSOME] < 1:
        violations.append(Violation("empty-level", "chromosome count >= 1 required", "chromosome"))

    for level in STORED_LEVELS:
        table = dataset.tables[level]
        name = LEVEL_NAMES[level]
        bad = ~np.isfinite(table.positions)
        if bad.any():
            row = int(np.argwhere(bad)[0][0])
            violations.append(Violation("non-finite", "non-finite coordinate", f"{name}[{row}]"))
        parent = table.parent_index
        if level == DataLevel.CHROMOSOME:
            if len(parent) and not (parent == -1).all():
                row = int(np.argwhere(parent != -1)[0][0])
                violations.append(Violation("root-parent", "chromosome parent_index must be -1", f"{name}[{row}]"))
            continue
        n_parents = counts[level.coarser]
        if len(parent):
            if parent.min(initial=0) < 0 or parent.max(initial=0) >= n_parents:
                row = int(np.argwhere((parent < 0) | (parent >= n_parents))[0][0])
                violations.append(Violation("parent-range", "parent index out of range", f"{name}[{row}]"))
                continue
            steps = np.diff(parent)
            if (steps < 0).any():
                row = int(np.argwhere(steps < 0)[0][0]) + 1
                violations.append(
                    Violation("parent-order", "parent_index decreases along the sequence", f"{name}[{row}]")
                )
            per_parent = np.bincount(parent, minlength=n_parents)
        else:
            per_parent = np.zeros(n_parents, dtype=np.int64)
        if n_parents:
            if (per_parent == 0).any():
                idx = int(np.argwhere(per_parent == 0)[0][0])
                violations.append(
                    Violation("childless-parent", "parent has no children", f"{LEVEL_NAMES[level.coarser]}[{idx}]")
                )
            children[level.coarser] = (
                int(per_parent.min()),
                float(np.median(per_parent)),
                int(per_parent.max()),
            )

    return ValidationReport(tuple(violations), counts, children)
