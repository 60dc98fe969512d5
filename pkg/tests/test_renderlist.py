import colorsys
import dataclasses

import numpy as np
import pytest

from genomelens.config import DEFAULT_CONFIG
from genomelens.model import DataLevel, ElementId
from genomelens.renderlist import (
    CPK_COLORS,
    INSTANCE_DTYPE,
    NT_BASES,
    NT_COLORS,
    ROLE_CODES,
    InstanceCapError,
    assemble,
    chromosome_palette,
    element_color,
    element_radius,
    nucleotide_class,
)
from genomelens.scale import ScaleParam
from genomelens.scope import default_focus, set_focus_fiber


def _splitmix64_reference(x: int) -> int:
    mask = (1 << 64) - 1
    z = (x + 0x9E3779B97F4A7C15) & mask
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & mask
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & mask
    return z ^ (z >> 31)


def test_nucleotide_class_matches_reference_hash():
    for idx in (0, 1, 145, 292, 1000, 2**40):
        assert nucleotide_class(idx) == _splitmix64_reference(idx) & 3


def test_paired_strand_is_complement():
    idx = np.arange(0, 292 * 4)
    cls = nucleotide_class(idx)
    slot = idx % 292
    own = idx - 146
    paired = slot >= 146
    assert (cls[paired] == 3 - cls[own[paired]]).all()
    # A<->T, G<->C under complement = 3 - class
    assert NT_BASES == ("A", "G", "C", "T")


def test_chromosome_palette_is_golden_angle_hls():
    palette = chromosome_palette(5)
    assert palette.shape == (5, 3) and palette.dtype == np.uint8
    for i in range(5):
        hue = (i * 137.508) % 360.0
        rgb = colorsys.hls_to_rgb(hue / 360.0, 0.55, 0.55)
        expected = tuple(int(round(c * 255.0)) for c in rgb)
        assert tuple(int(v) for v in palette[i]) == expected


def test_element_radius_rules(dataset):
    assert element_radius(DataLevel.NUCLEOTIDE, dataset) == 1.0
    for level in (DataLevel.CHROMOSOME, DataLevel.LOCUS, DataLevel.FIBER, DataLevel.NUCLEOSOME):
        assert element_radius(level, dataset) == pytest.approx(0.4 * dataset.stats[level])
    assert element_radius(DataLevel.ATOM, dataset, "P") == pytest.approx(0.180)
    assert element_radius(DataLevel.ATOM, dataset, "H") == pytest.approx(0.120)


def test_row0_uses_nucleus_color_with_focus_tint(dataset):
    rlist = assemble(dataset, ScaleParam(0.0), default_focus(dataset), DEFAULT_CONFIG)
    assert len(rlist.batches) == 1
    batch = rlist.batches[0]
    assert batch.role == "coarse_shaded" and batch.ssao_weight == 1.0
    assert len(batch) == 2
    base = np.array(DEFAULT_CONFIG.nucleus_color, dtype=np.float64)
    tinted = tuple(int(v) for v in np.rint(np.clip(base * 1.15, 0, 255)))
    assert tuple(int(v) for v in batch.colors[0, :3]) == tinted
    assert tuple(int(v) for v in batch.colors[1, :3]) == DEFAULT_CONFIG.nucleus_color
    assert (batch.colors[:, 3] == 255).all()


def test_embedding_midphase_batches(dataset):
    rlist = assemble(dataset, ScaleParam(0.5), default_focus(dataset), DEFAULT_CONFIG)
    roles = [b.role for b in rlist.batches]
    assert roles == ["coarse_flat", "overlay_detail"]
    coarse, overlay = rlist.batches
    assert len(coarse) == 2 and len(overlay) == 6
    assert coarse.ssao_weight == 0.0 and overlay.ssao_weight == 1.0
    assert coarse.draw_order < overlay.draw_order
    # overlay alpha tracks the embedding ramp: (0.5-0.35)/0.35 of full
    assert overlay.colors[0, 3] == int(round(0.42857142857142866 * 255.0))
    assert rlist.stats["overlay"] == 6


def test_row4_has_links(dataset):
    focus = default_focus(dataset)
    rlist = assemble(dataset, ScaleParam(4.0), focus, DEFAULT_CONFIG)
    by_role = {b.role: b for b in rlist.batches}
    assert set(by_role) == {"coarse_shaded", "links"}
    nts = by_role["coarse_shaded"]
    links = by_role["links"]
    assert len(nts) == 23 * 292  # 25-nucleosome window minus two faded ends
    assert len(links) == 712
    assert links.draw_order == 1
    assert links.ref_level == DataLevel.NUCLEOSOME
    assert links.ref_index[0] == 16
    assert (links.radii == 1.0).all()
    # first link pair joins faded nucleosomes 16-17: alpha min(0.4, 0.8)
    assert links.colors[0, 3] == int(round(0.4 * 255.0))
    orders = [b.draw_order for b in rlist.batches]
    assert orders == sorted(orders)


def test_no_links_off_row4(dataset):
    focus = default_focus(dataset)
    for s in (3.5, 5.0, 6.0, 7.0):
        rlist = assemble(dataset, ScaleParam(s), focus, DEFAULT_CONFIG)
        assert all(b.role != "links" for b in rlist.batches), s


def test_row7_atoms_pure_cpk(dataset, nofade_config):
    focus = default_focus(dataset)
    rlist = assemble(dataset, ScaleParam(7.0), focus, nofade_config)
    assert len(rlist.batches) == 1
    batch = rlist.batches[0]
    assert len(batch) == 25 * 292 * 35
    assert batch.ref_level == DataLevel.ATOM
    colors = {tuple(int(v) for v in c) for c in batch.colors[:, :3][:35 * 2]}
    assert colors <= {v for v in CPK_COLORS.values()}
    # template leads with the phosphate
    assert tuple(int(v) for v in batch.colors[0, :3]) == CPK_COLORS["P"]
    assert batch.radii[0] == pytest.approx(0.180)


def test_fade_zero_keeps_full_window(dataset, nofade_config):
    focus = default_focus(dataset)
    rlist = assemble(dataset, ScaleParam(5.0), focus, nofade_config)
    batch = rlist.batches[0]
    assert len(batch) == 25 * 292
    assert (batch.colors[:, 3] == 255).all()


def test_vectorized_colors_match_scalar_reference(dataset):
    """assemble()'s LUT gathers agree with the per-element reference rule."""
    focus = default_focus(dataset)
    cases = [
        # (s, batch index, scope row, color mix, tint possible)
        (1.0, 0, 1, 0.0, True),
        (4.5, 0, 4, 0.5, False),
        (5.0, 0, 5, 1.0, False),
        (6.5, 0, 6, 0.5, False),
        (7.0, 0, 7, 1.0, False),
    ]
    for s, bi, scope_row, mix, may_tint in cases:
        rlist = assemble(dataset, ScaleParam(s), focus, DEFAULT_CONFIG)
        batch = rlist.batches[bi]
        step = max(1, len(batch) // 23)
        for i in range(0, len(batch), step):
            elem = ElementId(batch.ref_level, int(batch.ref_index[i]))
            got = tuple(int(v) for v in batch.colors[i, :3])
            want = element_color(dataset, scope_row, elem, mix, DEFAULT_CONFIG)[:3]
            if got != want and may_tint:
                gain = DEFAULT_CONFIG.highlight_gain
                want = tuple(
                    int(v) for v in np.rint(np.clip(np.array(want, float) * gain, 0, 255))
                )
            assert got == want, (s, batch.role, i, elem)


def test_pack_layout_and_determinism(dataset):
    focus = default_focus(dataset)
    rlist = assemble(dataset, ScaleParam(4.0), focus, DEFAULT_CONFIG)
    header, payload = rlist.pack()
    assert header["total"] == rlist.total_instances()
    assert len(payload) == 24 * header["total"]
    assert np.dtype(INSTANCE_DTYPE).itemsize == 24
    decoded = np.frombuffer(payload, dtype=INSTANCE_DTYPE)
    offset = 0
    for meta, batch in zip(header["batches"], rlist.batches):
        assert meta["role"] == batch.role
        assert meta["count"] == len(batch)
        part = decoded[offset : offset + len(batch)]
        assert (part["role"] == ROLE_CODES[batch.role]).all()
        assert np.array_equal(part["pos"], batch.positions)
        assert np.array_equal(part["rgba"], batch.colors)
        offset += len(batch)
    header2, payload2 = assemble(dataset, ScaleParam(4.0), focus, DEFAULT_CONFIG).pack()
    assert header == header2 and payload == payload2


def test_instance_cap_names_offending_row(dataset):
    tight = dataclasses.replace(DEFAULT_CONFIG, instance_cap=1000)
    with pytest.raises(InstanceCapError) as err:
        assemble(dataset, ScaleParam(6.5), default_focus(dataset), tight)
    assert "row 7" in str(err.value) or "row 6" in str(err.value)
    assert "1000" in str(err.value)


def test_overlay_always_follows_coarse(dataset):
    focus = set_focus_fiber(dataset, 13)
    for s in (0.3, 1.7, 2.5, 3.9, 5.2, 6.5):
        rlist = assemble(dataset, ScaleParam(s), focus, DEFAULT_CONFIG)
        orders = [b.draw_order for b in rlist.batches]
        assert orders == sorted(orders)
        roles = [b.role for b in rlist.batches]
        if "overlay_detail" in roles:
            first_overlay = roles.index("overlay_detail")
            assert all(r == "overlay_detail" for r in roles[first_overlay:])


def test_nt_colors_are_pinned():
    assert NT_COLORS["A"] == (44, 160, 44)
    assert NT_COLORS["G"] == (255, 127, 14)
    assert NT_COLORS["C"] == (31, 119, 180)
    assert NT_COLORS["T"] == (214, 39, 40)
    assert CPK_COLORS["C"] == (144, 144, 144)
    assert CPK_COLORS["N"] == (48, 80, 248)
    assert CPK_COLORS["O"] == (255, 13, 13)
    assert CPK_COLORS["P"] == (255, 128, 0)
    assert CPK_COLORS["H"] == (255, 255, 255)
