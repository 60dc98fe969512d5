"""Procedural synthesis: fractal genome layouts, frames, linkers, templates.

Datasets are laid out by recursive space-filling packing: each parent owns a
spherical territory, its children sit on a jittered Hilbert traversal of a
cubic lattice inscribed in that territory, and the child territory radius is
derived from the lattice pitch. All randomness flows from per-chromosome
seed substreams, so generation is a pure function of GenParams.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from genomelens.config import DEFAULT_CONFIG, EngineConfig
from genomelens.model import (
    DataLevel,
    GenomeDataset,
    LevelTable,
    build_dataset,
)

SQRT3 = math.sqrt(3.0)
JITTER_FRACTION = 0.2
TERRITORY_FRACTION = 0.45
DEFAULT_LINKER_SPACING_NM = 2.0
NUCLEOTIDES_PER_NUCLEOSOME = 292
STRAND_LENGTH = NUCLEOTIDES_PER_NUCLEOSOME // 2

ATOM_ELEMENTS = ("H", "C", "N", "O", "P")


class CapacityError(Exception):
    """Requested dataset exceeds the configured point budget."""


class DegenerateFrameError(ValueError):
    """Two coincident points cannot define an orientation frame."""


@dataclass(frozen=True)
class GenParams:
    """Shape of a synthetic genome."""

    chromosomes: int
    loci_per_chromosome: int
    fibers_per_locus: int
    nucleosomes_per_fiber: int
    nucleus_radius: float = 3000.0
    seed: int = 0

    def __post_init__(self) -> None:
        counts = (
            self.chromosomes,
            self.loci_per_chromosome,
            self.fibers_per_locus,
            self.nucleosomes_per_fiber,
        )
        if any(c < 1 for c in counts):
            raise ValueError("all counts must be >= 1")
        if self.nucleus_radius <= 0:
            raise ValueError("nucleus_radius must be positive")

    @property
    def total_points(self) -> int:
        c = self.chromosomes
        l = c * self.loci_per_chromosome
        f = l * self.fibers_per_locus
        n = f * self.nucleosomes_per_fiber
        return c + l + f + n


@dataclass(frozen=True)
class Frame:
    """Orthonormal right-handed frame; axes stored as rows."""

    origin: np.ndarray
    axes: np.ndarray


@dataclass(frozen=True)
class NucleotideTemplate:
    """292 nucleotide slots in the nucleosome-local frame.

    Slots 0..145 are one strand along the superhelix wrap, slots 146..291 the
    complementary strand at the same wrap parameter; slot 146+j pairs slot j.
    """

    local_positions: np.ndarray
    linker_spacing: float = DEFAULT_LINKER_SPACING_NM
    turns: float = 1.75

    def __len__(self) -> int:
        return self.local_positions.shape[0]

    @property
    def entry_local(self) -> np.ndarray:
        return self.local_positions[0]

    @property
    def exit_local(self) -> np.ndarray:
        return self.local_positions[STRAND_LENGTH - 1]


@dataclass(frozen=True)
class AtomTemplate:
    """Pseudo-atom cluster instanced per nucleotide: local offsets + elements."""

    offsets: np.ndarray
    elements: tuple[str, ...]

    def __len__(self) -> int:
        return self.offsets.shape[0]


# ---------------------------------------------------------------------------
# Hilbert traversal


def hilbert_axes(distances: np.ndarray, order: int) -> np.ndarray:
    """Map curve distances to (x, y, z) cells of a 2^order lattice.

    Vectorized transpose-to-axes (Skilling 2004) over all distances at once.
    """
    d = np.asarray(distances, dtype=np.uint64)
    if order == 0:
        return np.zeros((d.shape[0], 3), dtype=np.int64)
    x = np.zeros((3, d.shape[0]), dtype=np.uint64)
    for b in range(order):
        for i in range(3):
            x[i] |= ((d >> np.uint64(3 * b + (2 - i))) & np.uint64(1)) << np.uint64(b)

    # Gray decode.
    t = x[2] >> np.uint64(1)
    x[2] ^= x[1]
    x[1] ^= x[0]
    x[0] ^= t

    # Undo excess work.
    q = np.uint64(2)
    top = np.uint64(1 << order)
    while q != top:
        p = q - np.uint64(1)
        for i in (2, 1, 0):
            flip = (x[i] & q).astype(bool)
            swap = (x[0] ^ x[i]) & p
            x[0] = np.where(flip, x[0] ^ p, x[0] ^ swap)
            if i != 0:
                x[i] = np.where(flip, x[i], x[i] ^ swap)
        q <<= np.uint64(1)

    return x.T.astype(np.int64)


def _lattice_order(n: int) -> int:
    order = 0
    while (1 << (3 * order)) < n:
        order += 1
    return order


def _lattice_offsets(n: int) -> tuple[np.ndarray, float]:
    """First n Hilbert cells as unit-cube offsets centered on origin, plus pitch
    as a fraction of the territory radius."""
    order = _lattice_order(n)
    m = 1 << order
    cells = hilbert_axes(np.arange(n, dtype=np.uint64), order)
    side = 2.0 / SQRT3  # cube inscribed in the unit sphere
    pitch = side / m
    offsets = (cells + 0.5) * pitch - side / 2.0
    return offsets, pitch


# ---------------------------------------------------------------------------
# Frames


def nucleosome_frame(p_i: np.ndarray, p_next: np.ndarray) -> Frame:
    """Frame at p_i oriented along the step to the next nucleosome."""
    p_i = np.asarray(p_i, dtype=np.float64)
    step = np.asarray(p_next, dtype=np.float64) - p_i
    norm = float(np.linalg.norm(step))
    if norm < 1e-12:
        raise DegenerateFrameError("coincident nucleosome positions")
    axes = _complete_axes(step[None, :] / norm)
    return Frame(origin=p_i, axes=axes[0])


def _complete_axes(axis0: np.ndarray) -> np.ndarray:
    """Complete unit direction rows to right-handed orthonormal (n, 3, 3)."""
    guide = np.where(
        (np.abs(axis0[:, 2]) > 0.99)[:, None],
        np.array([1.0, 0.0, 0.0]),
        np.array([0.0, 0.0, 1.0]),
    )
    axis1 = np.cross(axis0, guide)
    axis1 /= np.linalg.norm(axis1, axis=1, keepdims=True)
    axis2 = np.cross(axis0, axis1)
    return np.stack([axis0, axis1, axis2], axis=1)


def frames_for_chain(positions: np.ndarray) -> np.ndarray:
    """Orientation frames for a whole nucleosome sequence, shape (n, 3, 3).

    Each nucleosome points at its successor; the last reuses its predecessor
    pair's direction, and zero-length steps fall back to the previous frame.
    """
    pos = np.asarray(positions, dtype=np.float64)
    n = pos.shape[0]
    if n == 0:
        return np.zeros((0, 3, 3))
    if n == 1:
        return _complete_axes(np.array([[1.0, 0.0, 0.0]]))
    steps = np.vstack([pos[1:] - pos[:-1], pos[-1] - pos[-2]])
    norms = np.linalg.norm(steps, axis=1)
    ok = norms > 1e-12
    if not ok.all():
        if not ok.any():
            steps = np.tile([1.0, 0.0, 0.0], (n, 1))
            norms = np.ones(n)
        else:
            # Forward-fill the previous valid direction (first rows fall back
            # to the first valid one).
            idx = np.where(ok, np.arange(n), -1)
            idx = np.maximum.accumulate(idx)
            idx[idx < 0] = int(np.argmax(ok))
            steps = steps[idx]
            norms = norms[idx]
    return _complete_axes(steps / norms[:, None])


def instantiate_template(template, frame: Frame) -> np.ndarray:
    """Rigidly place template-local points into world space."""
    local = np.asarray(getattr(template, "local_positions", template), dtype=np.float64)
    return frame.origin + local @ frame.axes


# ---------------------------------------------------------------------------
# Linkers


def _hermite(p0, m0, p1, m1, u: np.ndarray) -> np.ndarray:
    u = u[:, None]
    h00 = 2 * u**3 - 3 * u**2 + 1
    h10 = u**3 - 2 * u**2 + u
    h01 = -2 * u**3 + 3 * u**2
    h11 = u**3 - u**2
    return h00 * p0 + h10 * m0 + h01 * p1 + h11 * m1


def linker_points(
    a: np.ndarray,
    tangent_a: np.ndarray,
    b: np.ndarray,
    tangent_b: np.ndarray,
    spacing: float,
) -> np.ndarray:
    """Interior points of a cubic Hermite linker from a to b, arc-spaced.

    Tangent magnitudes scale with the endpoint gap; endpoints are excluded.
    Returns an (n, 3) array, possibly empty.
    """
    if spacing <= 0:
        raise ValueError("spacing must be positive")
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    gap = float(np.linalg.norm(b - a))
    if gap < 1e-12:
        return np.zeros((0, 3))
    m0 = np.asarray(tangent_a, dtype=np.float64) * gap
    m1 = np.asarray(tangent_b, dtype=np.float64) * gap
    u_dense = np.linspace(0.0, 1.0, 257)
    dense = _hermite(a, m0, b, m1, u_dense)
    seg = np.linalg.norm(np.diff(dense, axis=0), axis=1)
    arc = np.concatenate([[0.0], np.cumsum(seg)])
    total = float(arc[-1])
    n_seg = int(math.ceil(total / spacing))
    if n_seg <= 1:
        return np.zeros((0, 3))
    targets = np.arange(1, n_seg) * (total / n_seg)
    u_pts = np.interp(targets, arc, u_dense)
    return _hermite(a, m0, b, m1, u_pts)


# ---------------------------------------------------------------------------
# Templates


def build_nucleotide_template(
    turns: float = 1.75,
    radius: float = 4.2,
    rise: float = 2.4,
    linker_spacing: float = DEFAULT_LINKER_SPACING_NM,
) -> NucleotideTemplate:
    """Idealized nucleosome superhelix: two strands of 146 slots each.

    The wrap is left-handed (winding angle decreases viewed toward +z); the
    complementary strand follows the same wrap displaced along the axis.
    """
    t = np.linspace(0.0, 1.0, STRAND_LENGTH)
    theta = -2.0 * math.pi * turns * t
    z = rise * (t - 0.5)
    strand_a = np.stack([radius * np.cos(theta), radius * np.sin(theta), z], axis=1)
    lead = 0.08
    strand_b = np.stack(
        [radius * np.cos(theta + lead), radius * np.sin(theta + lead), z + 0.9],
        axis=1,
    )
    return NucleotideTemplate(
        local_positions=np.vstack([strand_a, strand_b]),
        linker_spacing=linker_spacing,
        turns=turns,
    )


def build_atom_template() -> AtomTemplate:
    """Idealized 35-pseudo-atom nucleotide: phosphate + sugar + base cluster."""
    tau = 2.0 * math.pi
    entries: list[tuple[str, float, float, float]] = []
    # Phosphate: P with four oxygens in a flattened tetrahedron.
    entries.append(("P", 0.44, 0.00, 0.10))
    for k in range(4):
        ang = tau * k / 4
        dz = 0.10 if k % 2 else -0.08
        entries.append(("O", 0.44 + 0.14 * math.cos(ang), 0.14 * math.sin(ang), 0.10 + dz))
    # Sugar: five-membered ring (one ring oxygen), exocyclic carbon, hydrogens.
    for k in range(5):
        ang = tau * (k + 0.5) / 5
        element = "O" if k == 0 else "C"
        entries.append((element, 0.10 + 0.16 * math.cos(ang), 0.16 * math.sin(ang), -0.06))
    entries.append(("C", 0.26, 0.18, -0.14))
    for k in range(7):
        ang = tau * k / 7
        entries.append(("H", 0.10 + 0.24 * math.cos(ang), 0.24 * math.sin(ang), -0.16))
    # Base: alternating six-ring, amine, two carbonyl oxygens, ring hydrogens.
    for k in range(6):
        ang = tau * k / 6
        element = "N" if k % 2 == 0 else "C"
        entries.append((element, -0.22 + 0.14 * math.cos(ang), 0.14 * math.sin(ang), 0.05))
    entries.append(("C", -0.40, 0.10, 0.05))
    entries.append(("C", -0.40, -0.10, 0.05))
    entries.append(("N", -0.52, 0.00, 0.05))
    entries.append(("O", -0.22, 0.26, 0.12))
    entries.append(("O", -0.22, -0.26, 0.12))
    for k in range(6):
        ang = tau * (k + 0.5) / 6
        entries.append(("H", -0.30 + 0.30 * math.cos(ang), 0.30 * math.sin(ang), 0.02))
    offsets = np.array([[x, y, z] for _, x, y, z in entries])
    elements = tuple(element for element, *_ in entries)
    return AtomTemplate(offsets=offsets, elements=elements)


def _validate_atom_template(offsets: np.ndarray, elements: tuple[str, ...], source: str) -> AtomTemplate:
    if not (20 <= len(elements) <= 70):
        raise ValueError(f"{source}: atom template needs 20..70 atoms, got {len(elements)}")
    bad = sorted(set(elements) - set(ATOM_ELEMENTS))
    if bad:
        raise ValueError(f"{source}: unsupported elements {', '.join(bad)}")
    if np.linalg.norm(offsets, axis=1).max() > 1.2:
        raise ValueError(f"{source}: atom offsets must stay within 1.2 nm")
    return AtomTemplate(offsets=offsets, elements=elements)


def read_atom_template_text(path: str | Path) -> AtomTemplate:
    """Read `nt_index dx dy dz element` rows into an AtomTemplate."""
    offsets: list[list[float]] = []
    elements: list[str] = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 5:
            raise ValueError(f"{path}:{lineno}: expected `nt_index dx dy dz element`")
        idx = int(parts[0])
        if idx != len(offsets):
            raise ValueError(f"{path}:{lineno}: atom indices must be consecutive from 0")
        offsets.append([float(parts[1]), float(parts[2]), float(parts[3])])
        elements.append(parts[4])
    return _validate_atom_template(np.array(offsets), tuple(elements), str(path))


def read_atom_template_pdb(path: str | Path) -> AtomTemplate:
    """Extract the first residue's ATOM records from a PDB-style file.

    Only name, element, and coordinates are read; coordinates convert from
    angstroms to nm and recenter on the residue centroid.
    """
    offsets: list[list[float]] = []
    elements: list[str] = []
    residue_key: tuple[str, str] | None = None
    for raw in Path(path).read_text().splitlines():
        if not raw.startswith("ATOM"):
            continue
        key = (raw[21:22], raw[22:26].strip())
        if residue_key is None:
            residue_key = key
        elif key != residue_key:
            break
        element = raw[76:78].strip()
        if not element:
            name = raw[12:16].strip()
            element = next((ch for ch in name if ch.isalpha()), "")
        x, y, z = float(raw[30:38]), float(raw[38:46]), float(raw[46:54])
        offsets.append([0.1 * x, 0.1 * y, 0.1 * z])
        elements.append(element.upper())
    if not offsets:
        raise ValueError(f"{path}: no ATOM records found")
    centered = np.array(offsets) - np.mean(offsets, axis=0)
    return _validate_atom_template(centered, tuple(elements), str(path))


# ---------------------------------------------------------------------------
# Generation


def generate(params: GenParams, config: EngineConfig = DEFAULT_CONFIG) -> GenomeDataset:
    """Deterministically synthesize a multi-level dataset from GenParams."""
    if params.total_points > config.max_points:
        raise CapacityError(
            f"{params.total_points} points exceed the configured budget of {config.max_points}"
        )

    root = np.random.SeedSequence(params.seed)
    chromosome_seeds = root.spawn(params.chromosomes + 1)
    root_rng = np.random.default_rng(chromosome_seeds[-1])

    # Chromosome territories tile the nucleus.
    chr_offsets, chr_pitch = _lattice_offsets(params.chromosomes)
    chr_pos = params.nucleus_radius * (
        chr_offsets + JITTER_FRACTION * chr_pitch * root_rng.uniform(-1.0, 1.0, (params.chromosomes, 3))
    )
    radius_chr = TERRITORY_FRACTION * chr_pitch * params.nucleus_radius

    per_level_offsets = {
        DataLevel.LOCUS: _lattice_offsets(params.loci_per_chromosome),
        DataLevel.FIBER: _lattice_offsets(params.fibers_per_locus),
        DataLevel.NUCLEOSOME: _lattice_offsets(params.nucleosomes_per_fiber),
    }
    radius_locus = radius_chr * TERRITORY_FRACTION * per_level_offsets[DataLevel.LOCUS][1]
    radius_fiber = radius_locus * TERRITORY_FRACTION * per_level_offsets[DataLevel.FIBER][1]

    loci_parts, fiber_parts, nuc_parts = [], [], []
    for c in range(params.chromosomes):
        rng = np.random.default_rng(chromosome_seeds[c])
        loci = _place_children(
            chr_pos[c][None, :], radius_chr, params.loci_per_chromosome,
            per_level_offsets[DataLevel.LOCUS], rng,
        )
        fibers = _place_children(
            loci, radius_locus, params.fibers_per_locus,
            per_level_offsets[DataLevel.FIBER], rng,
        )
        nucs = _place_children(
            fibers, radius_fiber, params.nucleosomes_per_fiber,
            per_level_offsets[DataLevel.NUCLEOSOME], rng,
        )
        loci_parts.append(loci)
        fiber_parts.append(fibers)
        nuc_parts.append(nucs)

    chr_pos = np.round(chr_pos, 6)
    loci_pos = np.round(np.vstack(loci_parts), 6)
    fiber_pos = np.round(np.vstack(fiber_parts), 6)
    nuc_pos = np.round(np.vstack(nuc_parts), 6)

    n_chr = params.chromosomes
    n_loci = n_chr * params.loci_per_chromosome
    n_fiber = n_loci * params.fibers_per_locus
    tables = {
        DataLevel.CHROMOSOME: LevelTable(chr_pos, np.full(n_chr, -1, dtype=np.int64)),
        DataLevel.LOCUS: LevelTable(loci_pos, np.repeat(np.arange(n_chr), params.loci_per_chromosome)),
        DataLevel.FIBER: LevelTable(fiber_pos, np.repeat(np.arange(n_loci), params.fibers_per_locus)),
        DataLevel.NUCLEOSOME: LevelTable(nuc_pos, np.repeat(np.arange(n_fiber), params.nucleosomes_per_fiber)),
    }
    provenance = (
        f"synthetic seed={params.seed} shape={params.chromosomes}x{params.loci_per_chromosome}"
        f"x{params.fibers_per_locus}x{params.nucleosomes_per_fiber} nucleus={params.nucleus_radius:g}nm"
    )
    return build_dataset(
        tables=tables,
        frames=frames_for_chain(nuc_pos),
        nucleotide_template=build_nucleotide_template(),
        atom_template=build_atom_template(),
        provenance=provenance,
    )


def _place_children(
    parents: np.ndarray,
    territory_radius: float,
    per_parent: int,
    lattice: tuple[np.ndarray, float],
    rng: np.random.Generator,
) -> np.ndarray:
    """Lay `per_parent` children inside every parent's territory sphere."""
    offsets, pitch = lattice
    n_parents = parents.shape[0]
    jitter = JITTER_FRACTION * pitch * rng.uniform(-1.0, 1.0, (n_parents * per_parent, 3))
    base = parents[:, None, :] + territory_radius * offsets[None, :, :]
    return base.reshape(-1, 3) + territory_radius * jitter
