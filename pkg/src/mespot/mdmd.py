"""Main Directional Maximal Difference (MDMD) features.

For frame ``i`` and offset ``k`` two flow fields are compared: head->current
(``F[i-k]`` to ``F[i]``) and head->tail (``F[i-k]`` to ``F[i+k]``). Within
each block of the face grid, the current-field vectors are voted into
direction bins; for the vectors in the winning bin, the magnitude drop
``rho_hc - rho_ht`` at the same points is computed and the mean of the largest
third is the block value. The frame value is the mean of the largest third
of block values, and the relative difference against frames ``i - k + 1`` and
``i + k - 1`` removes slow background drift.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .flow import FlowBackend, FlowField
from .ingest import FrameSequence


class SequenceTooShort(ValueError):
    """The video has too few frames for the requested offset."""


@dataclass(frozen=True)
class DirectionBinning:
    """``a`` equal sectors of the circle.

    Axis-centred (default): bin 0 is ``[-pi/a, pi/a)`` and bin ``j`` is centred
    on ``j * 2pi/a``. Otherwise bin 0 is ``[0, 2pi/a)``.
    """

    a: int = 4
    axis_centered: bool = True

    def __post_init__(self):
        if self.a < 1:
            raise ValueError("need at least one direction bin")

    @property
    def width(self) -> float:
        return 2.0 * math.pi / self.a

    def assign(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=np.float64)
        shift = self.width / 2.0 if self.axis_centered else 0.0
        return np.floor((theta + shift) / self.width).astype(np.int64) % self.a


@dataclass(frozen=True)
class BlockGrid:
    """``b x b`` tiling of a ``height x width`` frame.

    Blocks are ``height // b`` by ``width // b`` pixels; the last row and
    column of blocks absorb the remainder.
    """

    b: int
    height: int
    width: int

    def __post_init__(self):
        if self.b < 1 or self.height < self.b or self.width < self.b:
            raise ValueError(f"cannot tile {self.height}x{self.width} into {self.b}x{self.b} blocks")

    @property
    def n_blocks(self) -> int:
        return self.b * self.b

    def assign(self, ys, xs) -> np.ndarray:
        """Block index (row-major) of every point of the ``ys x xs`` grid."""
        rows = np.minimum(np.asarray(ys) // (self.height // self.b), self.b - 1)
        cols = np.minimum(np.asarray(xs) // (self.width // self.b), self.b - 1)
        return rows[:, None] * self.b + cols[None, :]


def main_direction(theta, binning: DirectionBinning) -> tuple[int, np.ndarray]:
    """Most populated direction bin and the boolean mask of its members.

    Ties go to the smallest bin index.
    """
    theta = np.asarray(theta, dtype=np.float64).ravel()
    if theta.size == 0:
        raise ValueError("main_direction needs at least one vector")
    bins = binning.assign(theta)
    main = int(np.argmax(np.bincount(bins, minlength=binning.a)))
    return main, bins == main


def top_third_mean(values) -> float:
    """Mean of the ``max(1, floor(len/3))`` largest values."""
    values = np.asarray(values, dtype=np.float64).ravel()
    if values.size == 0:
        raise ValueError("no values")
    m = max(1, values.size // 3)
    top = np.sort(values)[::-1][:m]
    return float(top.mean())


def maximal_difference(rho_hc, rho_ht) -> float:
    rho_hc = np.asarray(rho_hc, dtype=np.float64).ravel()
    rho_ht = np.asarray(rho_ht, dtype=np.float64).ravel()
    if rho_hc.shape != rho_ht.shape:
        raise ValueError("head-current and head-tail magnitudes must pair one to one")
    return top_third_mean(rho_hc - rho_ht)


def frame_feature(block_values, b: Optional[int] = None) -> float:
    block_values = np.asarray(block_values, dtype=np.float64).ravel()
    if b is not None and block_values.size != b * b:
        raise ValueError(f"expected {b * b} block values, got {block_values.size}")
    return top_third_mean(block_values)


def block_differences(hc: FlowField, ht: FlowField, grid: BlockGrid,
                      binning: DirectionBinning) -> np.ndarray:
    """Per-block maximal difference for one frame triple."""
    if not hc.same_grid(ht):
        raise ValueError("head-current and head-tail flows must share a sampling grid")
    blocks = grid.assign(hc.ys, hc.xs).ravel()
    theta = hc.theta.ravel()
    diff = (hc.rho - ht.rho).ravel()
    out = np.empty(grid.n_blocks)
    for j in range(grid.n_blocks):
        in_block = blocks == j
        if not in_block.any():
            raise ValueError(f"block {j} has no flow samples; reduce the grid stride")
        _, members = main_direction(theta[in_block], binning)
        out[j] = top_third_mean(diff[in_block][members])
    return out


def compute_dbar_series(seq: FrameSequence, k: int, backend: FlowBackend,
                        grid: Optional[BlockGrid] = None,
                        binning: Optional[DirectionBinning] = None, b: int = 6) -> np.ndarray:
    """Frame features for frames ``k+1 .. n-k`` (1-based), in order."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if seq.n <= 2 * k:
        raise SequenceTooShort(f"{seq.video_id}: {seq.n} frames, need more than {2 * k} for k={k}")
    grid = grid or BlockGrid(b, *seq.shape)
    binning = binning or DirectionBinning()
    dbar = np.empty(seq.n - 2 * k)
    for pos, i in enumerate(range(k + 1, seq.n - k + 1)):
        head = seq.frame(i - k)
        hc = backend.estimate(head, seq.frame(i))
        ht = backend.estimate(head, seq.frame(i + k))
        dbar[pos] = frame_feature(block_differences(hc, ht, grid, binning), grid.b)
    return dbar


def relative_difference(dbar, k: int) -> np.ndarray:
    """``r[i] = dbar[i] - (dbar[i-k+1] + dbar[i+k-1]) / 2``.

    ``dbar`` covers frames ``k+1 .. n-k``; the result covers only the frames
    whose two neighbours are inside that range, ``2k .. n-2k+1``.
    """
    dbar = np.asarray(dbar, dtype=np.float64)
    span = len(dbar) - 2 * k + 2
    if k < 1 or span < 1:
        raise SequenceTooShort(f"{len(dbar)} frame features are too few for k={k}")
    return dbar[k - 1:k - 1 + span] - 0.5 * (dbar[:span] + dbar[2 * k - 2:2 * k - 2 + span])


def threshold_and_flag(r, p: float) -> tuple[float, np.ndarray]:
    """Adaptive threshold ``mean + p * (max - mean)`` and the positions above it.

    Returned positions index into ``r``.
    """
    r = np.asarray(r, dtype=np.float64)
    if r.size == 0:
        raise ValueError("empty relative-difference series")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    r_max = float(r.max())
    # the mean is clamped into [min, max] so a constant series rounds to itself
    r_mean = min(max(float(r.mean()), float(r.min())), r_max)
    threshold = r_max if p >= 1.0 else min(r_max, r_mean + p * (r_max - r_mean))
    return threshold, np.flatnonzero(r > threshold)


@dataclass(frozen=True, eq=False)
class FrameFeatureSeries:
    """Frame features of one video at one offset ``k``.

    ``dbar[j]`` belongs to frame ``k + 1 + j`` and ``r[j]`` to frame ``2k + j``.
    """

    video_id: str
    k: int
    dbar: np.ndarray
    r: np.ndarray

    @property
    def dbar_start(self) -> int:
        return self.k + 1

    @property
    def r_start(self) -> int:
        return 2 * self.k

    @property
    def r_frames(self) -> np.ndarray:
        return np.arange(self.r_start, self.r_start + len(self.r))

    @property
    def dbar_frames(self) -> np.ndarray:
        return np.arange(self.dbar_start, self.dbar_start + len(self.dbar))

    def flag(self, p: float) -> tuple[float, np.ndarray]:
        """Threshold and flagged frame numbers at ``p``."""
        threshold, pos = threshold_and_flag(self.r, p)
        return threshold, pos + self.r_start

    @classmethod
    def from_dbar(cls, video_id: str, k: int, dbar) -> "FrameFeatureSeries":
        dbar = np.asarray(dbar, dtype=np.float64)
        return cls(video_id, k, dbar, relative_difference(dbar, k))

    def dump_csv(self, path, p: Optional[float] = None) -> None:
        """Write ``frame,dbar,r,flagged``; empty cells where a value is undefined."""
        flagged = set(self.flag(p)[1].tolist()) if p is not None else set()
        dbar = dict(zip(self.dbar_frames.tolist(), self.dbar.tolist()))
        r = dict(zip(self.r_frames.tolist(), self.r.tolist()))
        with Path(path).open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["frame", "dbar", "r", "flagged"])
            for frame in sorted(dbar):
                writer.writerow([frame, repr(dbar[frame]),
                                 repr(r[frame]) if frame in r else "",
                                 int(frame in flagged)])


def feature_series(seq: FrameSequence, k: int, backend: FlowBackend,
                   b: int = 6, binning: Optional[DirectionBinning] = None) -> FrameFeatureSeries:
    dbar = compute_dbar_series(seq, k, backend, BlockGrid(b, *seq.shape), binning)
    return FrameFeatureSeries.from_dbar(seq.video_id, k, dbar)
