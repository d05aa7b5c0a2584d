import numpy as np
import pytest

from mespot.crop import (
    CropBox, FaceCropper, box_from_landmarks, clamp_box, crop_and_resize, face_box, lifted_box,
    refine_box,
)
from mespot.ingest import FrameSequence, LandmarkSet


def face_landmarks(x_range=(100, 300), y_top=50, y_bottom=400, y19=90, y37=120):
    """68 points spanning the given extremes, with L19/L37 at the given heights."""
    pts = np.empty((68, 2))
    pts[:, 0] = np.linspace(*x_range, 68)
    pts[:, 1] = np.linspace(y_top + 60, y_bottom - 20, 68)
    pts[0, 1] = y_top
    pts[1, 1] = y_bottom
    pts[18, 1] = y19
    pts[36, 1] = y37
    return pts


class TestBoxFromLandmarks:
    def test_eyebrow_lift(self):
        box = box_from_landmarks(face_landmarks())
        assert box == CropBox(100, 50 - (120 - 90), 300, 400)

    def test_no_lift_when_eye_level_with_brow(self):
        box = box_from_landmarks(face_landmarks(y19=120, y37=120))
        assert box.top == 50

    def test_top_clamped(self):
        box = box_from_landmarks(face_landmarks(y_top=10, y19=60, y37=100))
        assert box.top == 0
        assert lifted_box(face_landmarks(y_top=10, y19=60, y37=100))[1] == -30

    def test_degenerate(self):
        pts = np.zeros((68, 2))
        with pytest.raises(ValueError):
            box_from_landmarks(pts)

    def test_wrong_count(self):
        with pytest.raises(ValueError):
            box_from_landmarks(np.zeros((67, 2)))


class TestRefine:
    def test_higher_chin_wins(self):
        box = CropBox(100, 20, 300, 400)
        lm2 = face_landmarks(x_range=(0, 200), y_top=5, y_bottom=360, y19=40, y37=60)
        assert refine_box(box, lm2).bottom == 380

    def test_original_bottom_kept(self):
        box = CropBox(100, 20, 300, 400)
        lm2 = face_landmarks(x_range=(0, 200), y_top=5, y_bottom=400, y19=40, y37=60)
        assert refine_box(box, lm2).bottom == 400

    def test_absent(self):
        box = CropBox(100, 20, 300, 400)
        assert refine_box(box, None) is box

    def test_degenerate_refinement(self):
        box = CropBox(100, 20, 300, 400)
        lm2 = np.zeros((68, 2))
        with pytest.raises(ValueError):
            refine_box(box, lm2)


def test_translation_equivariance():
    rng = np.random.default_rng(0)
    for _ in range(100):
        pts = rng.integers(0, 400, (68, 2)).astype(float)
        dx, dy = (int(v) for v in rng.integers(-200, 200, 2))
        moved = pts + [dx, dy]
        before, after = lifted_box(pts), lifted_box(moved)
        assert after == (before[0] + dx, before[1] + dy, before[2] + dx, before[3] + dy)


def test_refine_never_lowers_bottom():
    rng = np.random.default_rng(1)
    for _ in range(100):
        box = CropBox(0, 0, 200, int(rng.integers(10, 400)))
        lm2 = rng.uniform(0, 500, (68, 2))
        assert refine_box(box, lm2).bottom <= box.bottom


def test_clamp():
    assert clamp_box(CropBox(-5, 0, 700, 500), 480, 640) == CropBox(0, 0, 639, 479)
    with pytest.raises(ValueError):
        clamp_box(CropBox(700, 0, 800, 10), 480, 640)


class TestCropAndResize:
    def _seq(self, n=3, shape=(227, 227)):
        rng = np.random.default_rng(0)
        return FrameSequence("v", rng.integers(0, 256, (n, *shape), dtype=np.uint8), 30)

    def test_identity(self):
        seq = self._seq()
        out = crop_and_resize(seq, CropBox(0, 0, 226, 226), 227)
        assert np.array_equal(out.frames, seq.frames)
        assert out.video_id == "v" and out.fps == 30

    def test_count_and_size(self):
        out = crop_and_resize(self._seq(3, (100, 120)), CropBox(10, 5, 90, 95), 64)
        assert out.frames.shape == (3, 64, 64)

    def test_same_box_every_frame(self):
        seq = self._seq(4, (50, 50))
        out = crop_and_resize(seq, CropBox(10, 10, 29, 29), 20)
        for i in range(4):
            assert np.array_equal(out.frames[i], seq.frames[i, 10:30, 10:30])

    def test_box_outside_frame(self):
        with pytest.raises(ValueError):
            crop_and_resize(self._seq(1, (50, 50)), CropBox(0, 0, 60, 40), 20)

    def test_bilinear_on_linear_ramp(self):
        # value 3x upsampled 2x: output pixel j samples x = j/2 - 1/4, giving
        # 1.5j - 0.75 (never a rounding tie)
        ramp = np.tile(np.arange(0, 150, 3, dtype=np.uint8), (50, 1))
        out = crop_and_resize(FrameSequence("v", ramp[None], 30), CropBox(0, 0, 49, 49), 100)
        j = np.arange(1, 99)
        assert out.frames[0, 0, 1:99].tolist() == np.floor(1.5 * j - 0.25).astype(int).tolist()


def test_face_cropper_transformer():
    rng = np.random.default_rng(0)
    seq = FrameSequence("v", rng.integers(0, 256, (2, 300, 300), dtype=np.uint8), 30)
    lm = LandmarkSet("v", face_landmarks(x_range=(50, 250), y_top=60, y_bottom=280, y19=80, y37=100))
    cropper = FaceCropper({"v": lm}, size=64)
    (out,) = cropper.fit_transform([seq])
    assert out.frames.shape == (2, 64, 64)
    assert cropper.boxes_["v"] == face_box(lm, 300, 300) == CropBox(50, 40, 250, 280)
    assert cropper.get_params()["size"] == 64
    with pytest.raises(KeyError):
        FaceCropper({}, 64).transform([seq])
