import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from genomelens.model import STORED_LEVELS, DataLevel
from genomelens.synth import (
    CapacityError,
    GenParams,
    build_atom_template,
    build_nucleotide_template,
    frames_for_chain,
    generate,
    hilbert_axes,
    linker_points,
)

shapes = st.tuples(
    st.integers(1, 3), st.integers(1, 3), st.integers(1, 4), st.integers(1, 6)
)


@settings(max_examples=20, deadline=None)
@given(shape=shapes, seed=st.integers(0, 2**31 - 1))
def test_generate_counts_and_containment(shape, seed):
    params = GenParams(*shape, seed=seed)
    dataset = generate(params)
    c, l, f, n = shape
    expected = (c, c * l, c * l * f, c * l * f * n)
    for level, count in zip(STORED_LEVELS, expected):
        table = dataset.tables[level]
        assert len(table) == count
        radii = np.linalg.norm(table.positions, axis=1)
        assert radii.max() <= params.nucleus_radius


@settings(max_examples=20, deadline=None)
@given(shape=shapes, seed=st.integers(0, 2**31 - 1))
def test_generate_parenting_is_contiguous(shape, seed):
    dataset = generate(GenParams(*shape, seed=seed))
    c, l, f, n = shape
    for level, per_parent in zip(STORED_LEVELS[1:], (l, f, n)):
        parent = dataset.tables[level].parent_index
        assert (parent == np.arange(len(parent)) // per_parent).all()


def test_generate_deterministic():
    a = generate(GenParams(2, 2, 3, 4, seed=9))
    b = generate(GenParams(2, 2, 3, 4, seed=9))
    other = generate(GenParams(2, 2, 3, 4, seed=10))
    for level in STORED_LEVELS:
        assert np.array_equal(a.tables[level].positions, b.tables[level].positions)
    assert not np.array_equal(
        a.tables[DataLevel.NUCLEOSOME].positions,
        other.tables[DataLevel.NUCLEOSOME].positions,
    )


def test_stats_are_positive_spacings(dataset):
    for level in STORED_LEVELS:
        assert dataset.stats[level] > 0.0


def test_capacity_guard():
    with pytest.raises(CapacityError):
        generate(GenParams(100, 100, 100, 100, seed=0))


def test_hilbert_axes_fills_unit_cube_uniformly():
    distances = np.linspace(0.0, 1.0, 512, endpoint=False)
    points = hilbert_axes(distances, order=3)
    assert points.shape == (512, 3)
    steps = np.linalg.norm(np.diff(points, axis=0), axis=1)
    # A Hilbert traversal moves one cell edge at a time.
    assert np.allclose(steps, steps[0])
    assert points.min() >= 0.0 and points.max() <= 1.0


def test_frames_orthonormal_right_handed(dataset):
    positions = dataset.tables[DataLevel.NUCLEOSOME].positions
    frames = frames_for_chain(positions)
    assert frames.shape == (len(positions), 3, 3)
    gram = np.einsum("nij,nkj->nik", frames, frames)
    assert np.abs(gram - np.eye(3)).max() < 1e-12
    assert np.allclose(np.linalg.det(frames), 1.0)


@settings(max_examples=50, deadline=None)
@given(
    bx=st.floats(6.0, 60.0),
    by=st.floats(-20.0, 20.0),
    bz=st.floats(-20.0, 20.0),
    spacing=st.floats(1.0, 4.0),
)
def test_linker_spacing_bounded(bx, by, bz, spacing):
    a = np.zeros(3)
    b = np.array([bx, by, bz])
    tan_a = np.array([1.0, 0.0, 0.0])
    tan_b = np.array([0.0, 1.0, 0.0])
    interior = linker_points(a, tan_a, b, tan_b, spacing)
    chain = np.vstack([a, interior, b])
    gaps = np.linalg.norm(np.diff(chain, axis=0), axis=1)
    # Chord lengths never exceed the arc step; the final remainder may be short.
    assert gaps.max() <= spacing * 1.05
    assert len(interior) >= 1


def test_nucleotide_template_shape():
    template = build_nucleotide_template()
    assert template.local_positions.shape == (292, 3)
    assert len(template) == 292
    assert template.linker_spacing == 2.0
    assert np.isfinite(template.entry_local).all()
    assert np.isfinite(template.exit_local).all()


def test_atom_template_shape():
    template = build_atom_template()
    assert template.offsets.shape == (35, 3)
    assert len(template) == 35
    assert set(template.elements) == {"C", "H", "N", "O", "P"}
    assert template.elements.count("P") >= 1


def test_dataset_carries_templates(dataset):
    assert len(dataset.nucleotide_template) == 292
    assert len(dataset.atom_template) == 35
