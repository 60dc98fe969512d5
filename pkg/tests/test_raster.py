import math

import numpy as np
import pytest

from genomelens.config import DEFAULT_CONFIG
from genomelens.model import DataLevel
from genomelens.raster import (
    CameraPose,
    camera_for,
    pick,
    read_image,
    render,
    write_image,
)
from genomelens.renderlist import RenderBatch, RenderList, assemble
from genomelens.scale import CameraScaleConfig, ScaleParam, distance_from_scale, transition_weights
from genomelens.scope import default_focus


def make_list(*batches):
    weights = transition_weights(ScaleParam(7.0))
    return RenderList(
        batches=tuple(batches),
        scale=ScaleParam(7.0),
        row=7,
        t=0.0,
        weights=weights,
        stats={"total": sum(len(b) for b in batches)},
    )


def make_batch(positions, radii, colors, ssao=1.0, role="coarse_shaded", order=0, refs=None):
    n = len(positions)
    return RenderBatch(
        role=role,
        draw_order=order,
        positions=np.asarray(positions, np.float32),
        radii=np.asarray(radii, np.float32),
        colors=np.asarray(colors, np.uint8),
        ssao_weight=ssao,
        ref_level=DataLevel.NUCLEOSOME,
        ref_index=np.asarray(refs if refs is not None else np.arange(n), np.int64),
    )


CAM = CameraPose(eye=(0, 0, -100), target=(0, 0, 0), up=(0, 1, 0), fov_deg=60, width=101, height=101)


def test_camera_pose_validation():
    with pytest.raises(ValueError):
        CameraPose(eye=(0, 0, 0), target=(0, 0, 0), up=(0, 1, 0), fov_deg=60, width=8, height=8)
    with pytest.raises(ValueError):
        CameraPose(eye=(0, 0, -1), target=(0, 0, 0), up=(0, 1, 0), fov_deg=0, width=8, height=8)
    with pytest.raises(ValueError):
        CameraPose(eye=(0, 0, -1), target=(0, 0, 0), up=(0, 1, 0), fov_deg=130, width=8, height=8)
    with pytest.raises(ValueError):
        CameraPose(eye=(0, 0, -1), target=(0, 0, 0), up=(0, 1, 0), fov_deg=60, width=0, height=8)


def test_camera_for_places_eye_along_view_dir():
    cam = camera_for((10.0, -3.0, 2.0), 500.0, 64, 48)
    assert cam.distance == pytest.approx(500.0, rel=1e-12)
    assert cam.target == (10.0, -3.0, 2.0)
    with pytest.raises(ValueError):
        camera_for((0, 0, 0), 0.0, 64, 48)


def test_empty_list_renders_white():
    image = render(make_list(), CAM)
    assert image.shape == (101, 101, 4)
    assert (image == 255).all()


def test_center_sphere_depth_is_analytic():
    rlist = make_list(make_batch([[0, 0, 0]], [10.0], [[200, 40, 40, 255]]))
    image = render(rlist, CAM)
    assert (image[50, 50, :3] != 255).any()
    assert (image[0, 0, :3] == 255).all()
    hit = pick(rlist, CAM, 50, 50)
    assert hit is not None
    assert hit.depth == pytest.approx(90.0, abs=1e-9)
    assert hit.element.index == 0


def test_covered_disk_area_matches_projection():
    rlist = make_list(make_batch([[0, 0, 0]], [10.0], [[200, 40, 40, 255]]))
    image = render(rlist, CAM)
    f_px = (101 / 2) / math.tan(math.radians(30))
    r_px = f_px * 10.0 / 100.0
    covered = int((image[:, :, 0] != 255).sum())
    assert covered == pytest.approx(math.pi * r_px * r_px, rel=0.15)


def test_nearer_sphere_wins_within_batch():
    rlist = make_list(
        make_batch([[0, 0, 0], [2, 0, -20]], [10, 10], [[255, 0, 0, 255], [0, 0, 255, 255]])
    )
    image = render(rlist, CAM)
    center = image[50, 50, :3].astype(int)
    assert center[2] > center[0]
    hit = pick(rlist, CAM, 50, 50)
    assert hit.element.index == 1


def test_render_is_permutation_invariant():
    rng = np.random.default_rng(0)
    n = 200
    positions = rng.uniform(-30, 30, (n, 3))
    positions[:, 2] = rng.uniform(-20, 40, n)
    radii = rng.uniform(2, 6, n)
    colors = rng.integers(0, 256, (n, 4), dtype=np.uint8)
    colors[:, 3] = 255
    # exact duplicates force depth ties to resolve by color key, not order
    positions[10] = positions[11]
    radii[10] = radii[11]
    colors[10] = (9, 9, 9, 255)
    colors[11] = (200, 200, 200, 255)
    baseline = render(make_list(make_batch(positions, radii, colors)), CAM)
    perm = rng.permutation(n)
    shuffled = render(
        make_list(make_batch(positions[perm], radii[perm], colors[perm], refs=perm)), CAM
    )
    assert np.array_equal(baseline, shuffled)


def test_flat_batch_has_zero_luminance_variation():
    rlist = make_list(make_batch([[0, 0, 0]], [10.0], [[130, 150, 170, 255]], ssao=0.0, role="coarse_flat"))
    image = render(rlist, CAM)
    covered = (image[:, :, :3] != 255).any(axis=2)
    values = image[covered][:, :3]
    assert (values == np.array([130, 150, 170])).all()


def test_shaded_batch_varies_across_disk():
    rlist = make_list(make_batch([[0, 0, 0]], [30.0], [[130, 150, 170, 255]]))
    image = render(rlist, CAM)
    covered = (image[:, :, :3] != 255).any(axis=2)
    values = image[covered][:, 0]
    assert values.max() > values.min()


def test_alpha_composites_over_white():
    rlist = make_list(make_batch([[0, 0, 0]], [10.0], [[0, 0, 0, 128]], ssao=0.0, role="coarse_flat"))
    image = render(rlist, CAM)
    assert tuple(image[50, 50, :3]) == (127, 127, 127)


def test_pick_alpha_threshold():
    opaque = make_list(make_batch([[0, 0, 0]], [10.0], [[0, 0, 0, 128]]))
    faint = make_list(make_batch([[0, 0, 0]], [10.0], [[0, 0, 0, 127]]))
    assert pick(opaque, CAM, 50, 50) is not None
    assert pick(faint, CAM, 50, 50) is None


def test_painter_order_vs_true_depth():
    rlist = make_list(
        make_batch([[0, 0, -20]], [10.0], [[255, 0, 0, 255]], role="coarse_shaded", order=0),
        make_batch([[0, 0, 10]], [10.0], [[0, 255, 0, 255]], role="overlay_detail", order=2),
    )
    image = render(rlist, CAM)
    center = image[50, 50, :3].astype(int)
    # overlay paints over coarse even though it sits farther away
    assert center[1] > center[0]
    # picking is by true ray depth, so the red sphere wins
    hit = pick(rlist, CAM, 50, 50)
    assert hit.role == "coarse_shaded"


def test_pick_outside_viewport_raises():
    rlist = make_list(make_batch([[0, 0, 0]], [10.0], [[0, 0, 0, 255]]))
    with pytest.raises(ValueError):
        pick(rlist, CAM, 101, 50)
    with pytest.raises(ValueError):
        pick(rlist, CAM, 0, -1)


def test_subpixel_spheres_are_culled_but_pickable():
    rlist = make_list(make_batch([[0, 0, 300]], [0.05], [[255, 0, 0, 255]]))
    image = render(rlist, CAM)
    assert (image[:, :, :3] == 255).all()
    assert pick(rlist, CAM, 50, 50) is not None


def test_ppm_bytes_and_round_trip(tmp_path):
    white = np.full((2, 2, 4), 255, np.uint8)
    path = tmp_path / "white.ppm"
    write_image(white, path)
    data = path.read_bytes()
    assert data == b"P6\n2 2\n255\n" + b"\xff" * 12
    assert np.array_equal(read_image(path), white[:, :, :3])


def test_render_write_twice_identical(tmp_path, dataset):
    focus = default_focus(dataset)
    rlist = assemble(dataset, ScaleParam(3.5), focus, DEFAULT_CONFIG)
    cam_cfg = CameraScaleConfig.from_engine(DEFAULT_CONFIG)
    cam = camera_for(focus.focus_point, distance_from_scale(3.5, cam_cfg), 96, 72)
    a = tmp_path / "a.ppm"
    b = tmp_path / "b.ppm"
    write_image(render(rlist, cam), a)
    write_image(render(rlist, cam), b)
    assert a.read_bytes() == b.read_bytes()
    assert (read_image(a) != 255).any()


def test_write_image_validates_shape(tmp_path):
    with pytest.raises(ValueError):
        write_image(np.zeros((4, 4), np.uint8), tmp_path / "x.ppm")
