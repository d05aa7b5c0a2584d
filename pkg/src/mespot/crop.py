"""Face crop boxes from 68-point landmarks, and whole-video crop/resize.

Landmark numbers below are 1-based positions in the standard 68-point
ordering: L19 sits on the eyebrow, L37 at the outer eye corner. In the
``(68, 2)`` arrays they are rows 18 and 36.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Mapping, Optional

import numpy as np
from scipy.ndimage import map_coordinates
from sklearn.base import BaseEstimator, TransformerMixin

from .ingest import FrameSequence, LandmarkSet

EYEBROW = 19
EYE_CORNER = 37


@dataclass(frozen=True)
class CropBox:
    """Pixel box with inclusive bounds."""

    left: int
    top: int
    right: int
    bottom: int

    def __post_init__(self):
        if self.left >= self.right or self.top >= self.bottom:
            raise ValueError(f"degenerate crop box {self}")

    @property
    def width(self) -> int:
        return self.right - self.left + 1

    @property
    def height(self) -> int:
        return self.bottom - self.top + 1

    def shifted(self, dx: int, dy: int) -> "CropBox":
        return CropBox(self.left + dx, self.top + dy, self.right + dx, self.bottom + dy)


def _px(value: float) -> int:
    # round half up keeps boxes equivariant under integer shifts
    return math.floor(value + 0.5)


def lifted_box(landmarks) -> tuple[int, int, int, int]:
    """Unclamped ``(left, top, right, bottom)`` with the top edge raised by
    the eyebrow-to-eye distance ``y37 - y19``."""
    pts = np.asarray(landmarks, dtype=np.float64)
    if pts.shape != (68, 2):
        raise ValueError(f"expected 68 landmarks, got shape {pts.shape}")
    lift = pts[EYE_CORNER - 1, 1] - pts[EYEBROW - 1, 1]
    return (
        _px(pts[:, 0].min()),
        _px(pts[:, 1].min() - lift),
        _px(pts[:, 0].max()),
        _px(pts[:, 1].max()),
    )


def box_from_landmarks(landmarks) -> CropBox:
    left, top, right, bottom = lifted_box(landmarks)
    return CropBox(left, max(0, top), right, bottom)


def refine_box(box: CropBox, landmarks2=None) -> CropBox:
    """Pull the bottom edge up to the re-detected chin when that is higher.

    ``landmarks2`` are in the coordinates of the region cropped by ``box``.
    """
    if landmarks2 is None:
        return box
    pts = np.asarray(landmarks2, dtype=np.float64)
    if pts.shape != (68, 2):
        raise ValueError(f"expected 68 landmarks, got shape {pts.shape}")
    bottom = _px(pts[:, 1].max() + box.top)
    return replace(box, bottom=min(box.bottom, bottom))


def clamp_box(box: CropBox, height: int, width: int) -> CropBox:
    """Clip a box to a ``height x width`` frame; raises if nothing useful is left."""
    return CropBox(
        max(0, box.left), max(0, box.top),
        min(width - 1, box.right), min(height - 1, box.bottom),
    )


def resize_bilinear(image: np.ndarray, size: int) -> np.ndarray:
    """Bilinear resize to ``size x size`` with pixel-centre alignment."""
    h, w = image.shape
    ys = (np.arange(size) + 0.5) * (h / size) - 0.5
    xs = (np.arange(size) + 0.5) * (w / size) - 0.5
    yy, xx = np.meshgrid(ys, xs, indexing="ij")
    out = map_coordinates(image.astype(np.float64), [yy, xx], order=1, mode="nearest")
    return np.clip(np.floor(out + 0.5), 0, 255).astype(np.uint8)


def crop_and_resize(seq: FrameSequence, box: CropBox, size: int) -> FrameSequence:
    height, width = seq.shape
    if box.left < 0 or box.top < 0 or box.right >= width or box.bottom >= height:
        raise ValueError(f"{box} outside {width}x{height} frame")
    region = seq.frames[:, box.top:box.bottom + 1, box.left:box.right + 1]
    if region.shape[1:] == (size, size):
        frames = region.copy()
    else:
        frames = np.stack([resize_bilinear(f, size) for f in region])
    return FrameSequence(seq.video_id, frames, seq.fps)


def face_box(landmarks: LandmarkSet, height: int, width: int) -> CropBox:
    """First-frame box for a video: lifted landmark box, refined, clamped."""
    box = refine_box(box_from_landmarks(landmarks.pass1), landmarks.pass2)
    return clamp_box(box, height, width)


class FaceCropper(TransformerMixin, BaseEstimator):
    """Crop each video to the face box found on its first frame.

    Parameters
    ----------
    landmarks : mapping of video id to LandmarkSet
    size : int
        Side of the square output frames.
    """

    def __init__(self, landmarks: Optional[Mapping[str, LandmarkSet]] = None, size: int = 227):
        self.landmarks = landmarks
        self.size = size

    def fit(self, X, y=None):
        self.boxes_ = {seq.video_id: self._box(seq) for seq in X}
        return self

    def _box(self, seq: FrameSequence) -> CropBox:
        if not self.landmarks or seq.video_id not in self.landmarks:
            raise KeyError(f"no landmarks for video {seq.video_id!r}")
        return face_box(self.landmarks[seq.video_id], *seq.shape)

    def transform(self, X):
        boxes = getattr(self, "boxes_", {})
        out = []
        for seq in X:
            box = boxes.get(seq.video_id) or self._box(seq)
            out.append(crop_and_resize(seq, box, self.size))
        return out
