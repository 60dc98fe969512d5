import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from genomelens.config import DEFAULT_CONFIG
from genomelens.model import DataLevel
from genomelens.scale import (
    COLOR_BY_CHROMOSOME,
    COLOR_BY_ELEMENT,
    COLOR_BY_NUCLEOTIDE,
    COLOR_CHANGE,
    COLOR_SINGLE,
    EMBEDDING,
    NO_TRANSITION,
    SCHEDULE,
    SCOPE_ALL,
    SCOPE_FOCUS_CHROMOSOME,
    SCOPE_FOCUS_WINDOW,
    CameraScaleConfig,
    ScaleParam,
    blend_vector,
    camera_speed,
    distance_from_scale,
    draw_state,
    level_color_mix,
    scale_from_distance,
    transition_weights,
    zoom_distance,
)


def test_schedule_is_the_published_table():
    rows = [
        (0, DataLevel.CHROMOSOME, COLOR_SINGLE, SCOPE_ALL, "nucleus", EMBEDDING),
        (1, DataLevel.LOCUS, COLOR_BY_CHROMOSOME, SCOPE_ALL, "chromosome", EMBEDDING),
        (2, DataLevel.FIBER, COLOR_BY_CHROMOSOME, SCOPE_ALL, "chromosome with detail", EMBEDDING),
        (3, DataLevel.NUCLEOSOME, COLOR_BY_CHROMOSOME, SCOPE_FOCUS_CHROMOSOME, "fibers", EMBEDDING),
        (4, DataLevel.NUCLEOTIDE, COLOR_BY_CHROMOSOME, SCOPE_FOCUS_WINDOW, "nucleosomes", COLOR_CHANGE),
        (5, DataLevel.NUCLEOTIDE, COLOR_BY_NUCLEOTIDE, SCOPE_FOCUS_WINDOW, "nucleotides", EMBEDDING),
        (6, DataLevel.ATOM, COLOR_BY_NUCLEOTIDE, SCOPE_FOCUS_WINDOW, "nucleotides with detail", COLOR_CHANGE),
        (7, DataLevel.ATOM, COLOR_BY_ELEMENT, SCOPE_FOCUS_WINDOW, "individual atoms", NO_TRANSITION),
    ]
    assert len(SCHEDULE) == 8
    for row, expected in zip(SCHEDULE, rows):
        got = (row.index, row.data_level, row.color_mode, row.scope_mode,
               row.semantic_name, row.transition_to_next)
        assert got == expected


def test_scale_law_endpoints_and_ratio():
    cfg = CameraScaleConfig.from_engine(DEFAULT_CONFIG)
    assert distance_from_scale(0.0, cfg) == pytest.approx(12000.0, abs=1e-9)
    assert distance_from_scale(7.0, cfg) == pytest.approx(5.0, abs=1e-12)
    ratios = [
        distance_from_scale(k + 1, cfg) / distance_from_scale(k, cfg) for k in range(7)
    ]
    for r in ratios:
        assert r == pytest.approx(0.32893696405509343, abs=1e-12)
    # about half an order of magnitude per conceptual level
    assert -math.log10(ratios[0]) == pytest.approx(0.4829, abs=1e-3)


@settings(max_examples=200, deadline=None)
@given(s=st.floats(0.0, 7.0))
def test_scale_round_trip(s):
    cfg = CameraScaleConfig.from_engine(DEFAULT_CONFIG)
    assert abs(scale_from_distance(distance_from_scale(s, cfg), cfg) - s) < 1e-9


def test_scale_from_distance_clamps_and_validates():
    cfg = CameraScaleConfig.from_engine(DEFAULT_CONFIG)
    assert scale_from_distance(1e9, cfg) == 0.0
    assert scale_from_distance(1e-9, cfg) == 7.0
    with pytest.raises(ValueError):
        scale_from_distance(0.0, cfg)
    with pytest.raises(ValueError):
        distance_from_scale(7.2, cfg)
    with pytest.raises(ValueError):
        distance_from_scale(-0.1, cfg)


def test_camera_speed_and_zoom():
    assert camera_speed(1000.0) == pytest.approx(100.0)
    assert zoom_distance(1000.0, 1) == pytest.approx(900.0)
    assert zoom_distance(1000.0, 2) == pytest.approx(810.0)
    assert zoom_distance(1000.0, -1) == pytest.approx(1000.0 / 0.9)
    with pytest.raises(ValueError):
        camera_speed(0.0)


def test_scale_param_effective_offset_clamps():
    assert ScaleParam(3.4).effective() == (3, pytest.approx(0.4))
    assert ScaleParam(3.4, 0.5).effective() == (3, pytest.approx(0.9))
    assert ScaleParam(3.4, 2.0).effective() == (4, pytest.approx(0.3))  # clamped to +0.9
    assert ScaleParam(0.1, -2.0).effective() == (0, 0.0)  # clamped to -0.9, floor 0
    assert ScaleParam(7.0).effective() == (7, 0.0)
    assert ScaleParam(7.0, 0.9).effective() == (7, pytest.approx(0.9))


def test_transition_weights_embedding_row():
    w = transition_weights(ScaleParam(0.0))
    assert (w.ssao_weight, w.coarse_alpha, w.overlay_alpha, w.color_mix) == (1.0, 1.0, 0.0, 0.0)
    w = transition_weights(ScaleParam(0.5))
    assert w.ssao_weight == 0.0
    assert w.overlay_alpha == pytest.approx(0.42857142857142866, abs=1e-15)
    assert w.coarse_alpha == 1.0
    assert w.color_mix == w.overlay_alpha
    w = transition_weights(ScaleParam(0.85))
    assert w.overlay_alpha == 1.0
    assert w.coarse_alpha == pytest.approx(0.5)


def test_transition_weights_color_change_row():
    w = transition_weights(ScaleParam(4.5))
    assert w.ssao_weight == 1.0
    assert w.overlay_alpha == pytest.approx(0.5)
    assert w.coarse_alpha == pytest.approx(0.5)
    assert w.color_mix == pytest.approx(0.5)
    w = transition_weights(ScaleParam(4.1))
    assert w.color_mix == 0.0
    w = transition_weights(ScaleParam(4.9))
    assert w.color_mix == 1.0


def test_transition_weights_last_row_is_pure():
    w = transition_weights(ScaleParam(7.0))
    assert (w.ssao_weight, w.coarse_alpha, w.overlay_alpha) == (1.0, 1.0, 0.0)


def test_level_color_mix_ramps_once():
    assert level_color_mix(DataLevel.NUCLEOTIDE, 3, 0.9) == 0.0
    assert level_color_mix(DataLevel.NUCLEOTIDE, 4, 0.5) == pytest.approx(0.5)
    assert level_color_mix(DataLevel.NUCLEOTIDE, 5, 0.0) == 1.0
    assert level_color_mix(DataLevel.ATOM, 5, 0.9) == 0.0
    assert level_color_mix(DataLevel.ATOM, 6, 0.5) == pytest.approx(0.5)
    assert level_color_mix(DataLevel.ATOM, 7, 0.0) == 1.0


def test_draw_state_pure_rows_have_single_entry():
    for k in range(8):
        entries = draw_state(ScaleParam(float(k)))
        assert len(entries) == 1
        entry = entries[0]
        assert entry.level == SCHEDULE[k].data_level
        assert entry.alpha == 1.0 and entry.ssao == 1.0
        assert entry.scope_row == k


def test_draw_state_embedding_midphase():
    entries = draw_state(ScaleParam(2.5))
    assert [e.role for e in entries] == ["coarse", "overlay"]
    coarse, overlay = entries
    assert coarse.level == DataLevel.FIBER and overlay.level == DataLevel.NUCLEOSOME
    assert coarse.scope_row == 2 and overlay.scope_row == 3
    assert overlay.ssao == 1.0 and coarse.ssao == 0.0


def test_draw_state_color_change_is_single_entry():
    entries = draw_state(ScaleParam(4.5))
    assert len(entries) == 1
    assert entries[0].level == DataLevel.NUCLEOTIDE
    assert entries[0].alpha == 1.0 and entries[0].ssao == 1.0
    assert entries[0].color_mix == pytest.approx(0.5)


def test_blend_vector_continuous_at_row_boundaries():
    eps = 1e-9
    for k in range(1, 8):
        left = blend_vector(ScaleParam(k - eps))
        right = blend_vector(ScaleParam(float(k)))
        for a, b in zip(left, right):
            assert abs(a - b) < 1e-7


@settings(max_examples=300, deadline=None)
@given(s=st.floats(0.0, 7.0), ds=st.floats(1e-7, 1e-5))
def test_blend_vector_locally_lipschitz(s, ds):
    hi = min(7.0, s + ds)
    a = blend_vector(ScaleParam(s))
    b = blend_vector(ScaleParam(hi))
    step = hi - s
    for x, y in zip(a, b):
        assert abs(x - y) <= 4.0 * step + 1e-12
