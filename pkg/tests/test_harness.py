import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import ndimage

from uavmosaic.compositor import MosaicCanvas, Rect
from uavmosaic.features import detect_sift
from uavmosaic.geometry import Homography
from uavmosaic.harness import (EmptyMaskError, HarnessError, PoseEscapesSourceError,
                               evaluate, evaluate_transforms, generate_sequence, lawnmower_grid,
                               load_sequence, make_source, read_transforms,
                               required_source_size, save_sequence, seam_metric)
from uavmosaic.imaging import to_luma

SEEDS = st.integers(0, 2**32 - 1)


@pytest.fixture(scope="module")
def small_source():
    return make_source(400, 400, seed=4, check_size=False)


# make_source

def test_source_is_deterministic():
    a = make_source(1024, 1024, seed=3)
    b = make_source(1024, 1024, seed=3)
    assert a.tobytes() == b.tobytes() and a.shape == (1024, 1024, 3) and a.dtype == np.uint8


def test_source_seed_sensitivity():
    a = make_source(1024, 1024, seed=1)
    b = make_source(1024, 1024, seed=2)
    assert np.mean(np.any(a != b, axis=2)) > 0.5


def test_source_keypoint_count(texture):
    assert len(detect_sift(texture[100:700, 100:900])) >= 500


def test_source_minimum_size():
    with pytest.raises(HarnessError):
        make_source(800, 1024)


# generate_sequence

def test_single_frame_is_a_crop(texture):
    seq = generate_sequence(texture, 1, (800, 600))
    g = seq.gt[0].matrix
    np.testing.assert_allclose(g[:2, :2], np.eye(2), atol=1e-12)
    assert g[0, 2] == int(g[0, 2]) and g[1, 2] == int(g[1, 2])
    x, y = int(g[0, 2]), int(g[1, 2])
    np.testing.assert_array_equal(seq.frames[0], texture[y:y + 600, x:x + 800])


def test_step_size_for_overlap():
    src = np.zeros((1000, 2000, 3), np.uint8)
    seq = generate_sequence(src, 3, (800, 600), overlap=0.7, cols=3)
    xs = [g.matrix[0, 2] for g in seq.gt]
    assert np.diff(xs).tolist() == [240.0, 240.0]


def test_lawnmower_order():
    assert lawnmower_grid(7, 3) == [(0, 0), (1, 0), (2, 0), (2, 1), (1, 1), (0, 1), (0, 2)]


def test_rerender_consistency(texture):
    seq = generate_sequence(texture, 4, (300, 200), overlap=0.6, rot_jitter=5, scale_jitter=0.1,
                            seed=9)
    for frame, gt in zip(seq.frames, seq.gt):
        ys, xs = np.mgrid[0:200, 0:300].astype(float)
        m = gt.matrix
        w = m[2, 0] * xs + m[2, 1] * ys + m[2, 2]
        sx = (m[0, 0] * xs + m[0, 1] * ys + m[0, 2]) / w
        sy = (m[1, 0] * xs + m[1, 1] * ys + m[1, 2]) / w
        ref = np.stack([ndimage.map_coordinates(texture[..., c].astype(float), [sy, sx], order=1)
                        for c in range(3)], axis=2)
        rms = np.sqrt(((to_luma(frame).astype(float) - to_luma(np.round(ref).astype(np.uint8))) ** 2).mean())
        assert rms < 1.0


def test_pose_escapes_source():
    src = np.zeros((700, 900, 3), np.uint8)
    with pytest.raises(PoseEscapesSourceError):
        generate_sequence(src, 4, (800, 600), overlap=0.7)
    w, h = required_source_size(4, (800, 600), 0.7, 5.0, 0.05)
    generate_sequence(np.zeros((h, w, 3), np.uint8), 4, (800, 600), 0.7, 5.0, 0.05, seed=123)


def test_bad_generator_params(small_source):
    with pytest.raises(HarnessError):
        generate_sequence(small_source, 0, (64, 48))
    with pytest.raises(HarnessError):
        generate_sequence(small_source, 2, (64, 48), overlap=1.0)


@pytest.mark.invariant
@given(seed=SEEDS, n=st.integers(1, 6), rot=st.floats(0, 10), scl=st.floats(0, 0.2))
def test_gt_exactness(seed, n, rot, scl, small_source):
    seq = generate_sequence(small_source, n, (64, 48), 0.5, rot, scl, seed=seed)
    for g in seq.gt:
        np.testing.assert_allclose((g.inverse() @ g).matrix, np.eye(3), atol=1e-12)
        m = g.matrix
        # a similarity: equal diagonal, opposite off-diagonal, no perspective row
        assert abs(m[0, 0] - m[1, 1]) < 1e-12 and abs(m[0, 1] + m[1, 0]) < 1e-12
        assert m[2, 0] == 0 and m[2, 1] == 0


@pytest.mark.invariant
@given(seed=SEEDS, n=st.integers(1, 5), noise=st.floats(0, 5), photo=st.floats(0, 20))
def test_generator_determinism(seed, n, noise, photo, small_source):
    a = generate_sequence(small_source, n, (64, 48), 0.6, 4.0, 0.05, photo, noise, seed=seed)
    b = generate_sequence(small_source, n, (64, 48), 0.6, 4.0, 0.05, photo, noise, seed=seed)
    assert [f.tobytes() for f in a.frames] == [f.tobytes() for f in b.frames]
    assert [g.to_text() for g in a.gt] == [g.to_text() for g in b.gt]


@pytest.mark.invariant
@given(seed=SEEDS, noise=st.floats(0.1, 8), photo=st.floats(0.1, 30))
def test_noise_independence(seed, noise, photo, small_source):
    clean = generate_sequence(small_source, 4, (64, 48), 0.6, 3.0, 0.05, seed=seed)
    noisy = generate_sequence(small_source, 4, (64, 48), 0.6, 3.0, 0.05, photo, noise, seed=seed)
    assert [g.to_text() for g in clean.gt] == [g.to_text() for g in noisy.gt]


@pytest.mark.invariant
@given(seed=SEEDS)
def test_source_determinism(seed):
    a = make_source(96, 80, seed=seed, check_size=False)
    assert a.tobytes() == make_source(96, 80, seed=seed, check_size=False).tobytes()


# evaluation

def _seq(texture):
    return generate_sequence(texture, 3, (300, 200), overlap=0.6, rot_jitter=4, seed=1)


def test_eval_exact(texture):
    seq = _seq(texture)
    rep = evaluate_transforms({k: seq.mosaic_truth(k) for k in range(3)}, seq)
    assert rep.max_error < 1e-9 and rep.n_stitched == 3 and rep.drift < 1e-9


def test_eval_shifted(texture):
    seq = _seq(texture)
    est = {k: seq.mosaic_truth(k) @ Homography.translation(2, 0) for k in range(3)}
    rep = evaluate_transforms(est, seq, n_rejected=0)
    for k in (1, 2):
        assert rep.errors[k] == pytest.approx(2.0, abs=1e-9)
    assert rep.drift == pytest.approx(2.0)


def test_eval_index_mismatch(texture):
    seq = _seq(texture)
    with pytest.raises(HarnessError):
        evaluate_transforms({5: Homography.identity()}, seq)


def test_eval_pipeline(lawnmower_run):
    rep = evaluate(lawnmower_run["state"], lawnmower_run["seq"])
    assert rep.n_stitched + rep.n_rejected == 20
    assert all(e >= 0 for e in rep.errors.values())
    assert rep.max_error < 1.5


# seam metric

def test_seam_metric_constant():
    c = np.full((20, 20, 3), 77, np.uint8)
    assert seam_metric(c, np.ones((20, 20), bool)) == 0.0


def test_seam_metric_step_edge():
    img = np.full((20, 20, 3), 100, np.uint8)
    img[:, 10:] = 160
    mask = np.zeros((20, 20), bool)
    mask[5:15, 9:11] = True
    # Sobel row weights 1-2-1 sum to 4, central difference spans the 60-level step
    assert seam_metric(img, mask) == pytest.approx(4 * 60)
    canvas = MosaicCanvas(img, np.ones((20, 20), bool), (0, 0), Rect(0, 0, 20, 20))
    assert seam_metric(canvas, mask) == pytest.approx(240)


def test_seam_metric_errors():
    with pytest.raises(EmptyMaskError):
        seam_metric(np.zeros((5, 5, 3), np.uint8), np.zeros((5, 5), bool))
    with pytest.raises(HarnessError):
        seam_metric(np.zeros((5, 5, 3), np.uint8), np.ones((4, 5), bool))


# files

def test_sequence_round_trip(tmp_path, small_source):
    seq = generate_sequence(small_source, 3, (64, 48), 0.5, 2.0, seed=5)
    save_sequence(seq, tmp_path)
    assert (tmp_path / "frame_0002.ppm").exists() and (tmp_path / "gt.txt").exists()
    back = load_sequence(tmp_path)
    assert [f.tobytes() for f in back.frames] == [f.tobytes() for f in seq.frames]
    assert [g.to_text() for g in back.gt] == [g.to_text() for g in seq.gt]


def test_read_transforms_errors(tmp_path):
    p = tmp_path / "t.txt"
    p.write_text("# header\n0 1 0 0 0 1 0 0 0 1\n\n1 1 0 0 0 1\n")
    with pytest.raises(HarnessError, match=":4:"):
        read_transforms(p)
    p.write_text("0 1 0 0 0 1 0 0 0 1  # identity\n")
    assert read_transforms(p)[0] == Homography.identity()
