"""Turn flagged frames into macro/micro intervals."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from .flow import FlowBackend
from .ingest import KINDS, DatasetProfile, FormatError, FrameSequence, Kind
from .mdmd import DirectionBinning, FrameFeatureSeries, SequenceTooShort, feature_series

logger = logging.getLogger(__name__)

PREDICTION_HEADER = ["video_id", "start", "end", "type", "k", "p"]


@dataclass(frozen=True, order=True)
class SpottedInterval:
    video_id: str
    start: int
    end: int
    kind: Kind
    k_used: int
    p_used: float

    def __post_init__(self):
        if self.start > self.end:
            raise ValueError(f"interval start {self.start} after end {self.end}")

    @property
    def length(self) -> int:
        return self.end - self.start + 1


def flags_to_runs(flags: Iterable[int]) -> list[tuple[int, int]]:
    """Maximal runs of consecutive frame numbers, sorted."""
    frames = np.unique(np.asarray(list(flags), dtype=np.int64))
    if frames.size == 0:
        return []
    breaks = np.flatnonzero(np.diff(frames) != 1)
    starts = np.concatenate(([frames[0]], frames[breaks + 1]))
    ends = np.concatenate((frames[breaks], [frames[-1]]))
    return [(int(s), int(e)) for s, e in zip(starts, ends)]


def filter_runs(runs, kind: Kind, profile: DatasetProfile, video_id: str = "",
                p: float = float("nan")) -> list[SpottedInterval]:
    """Keep the runs whose length fits ``kind``; the rest are dropped."""
    k = profile.k(kind)
    return [SpottedInterval(video_id, s, e, kind, k, p)
            for s, e in runs if profile.length_ok(kind, e - s + 1)]


def intervals_from_series(series: FrameFeatureSeries, kind: Kind, profile: DatasetProfile,
                          p: float) -> list[SpottedInterval]:
    _, flags = series.flag(p)
    return filter_runs(flags_to_runs(flags), kind, profile, series.video_id, p)


def spot_video(seq: FrameSequence, profile: DatasetProfile, kind: Kind, p: float,
               backend: FlowBackend, binning: Optional[DirectionBinning] = None) -> list[SpottedInterval]:
    """Full pipeline for one (already cropped) video and one expression kind."""
    try:
        series = feature_series(seq, profile.k(kind), backend, profile.blocks,
                                binning or DirectionBinning(profile.directions))
    except SequenceTooShort as exc:
        logger.warning("skipping %s pass: %s", kind, exc)
        return []
    return intervals_from_series(series, kind, profile, p)


def write_predictions(intervals: Iterable[SpottedInterval], path) -> None:
    rows = sorted(intervals, key=lambda s: (s.video_id, KINDS.index(s.kind), s.start, s.end))
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(PREDICTION_HEADER)
        for s in rows:
            writer.writerow([s.video_id, s.start, s.end, s.kind, s.k_used, f"{s.p_used:g}"])


def read_predictions(path) -> list[SpottedInterval]:
    path = Path(path)
    out = []
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != PREDICTION_HEADER:
            raise FormatError(f"{path}: expected header {','.join(PREDICTION_HEADER)}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                video_id, start, end, kind, k, p = (c.strip() for c in row)
                if kind not in KINDS:
                    raise ValueError(f"unknown type {kind!r}")
                out.append(SpottedInterval(video_id, int(start), int(end), kind, int(k), float(p)))
            except ValueError as exc:
                raise FormatError(f"{path}:{lineno}: {exc}") from None
    return out
