"""Interval-overlap evaluation of spotted intervals against ground truth.

A spotted interval is a true positive when its frame-count IoU with a
ground-truth interval of the same kind reaches 0.5. Matching is one-to-one,
so a video contributes ``a <= min(m, n)`` true positives. Dataset scores
pool the counts of all videos before computing recall, precision and F1;
the overall score pools macro and micro counts the same way.
"""

from __future__ import annotations

import csv
import json
import logging
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .ingest import KINDS, GroundTruthInterval, Kind

logger = logging.getLogger(__name__)

IOU_THRESHOLD = 0.5
SCOPES = ("macro", "micro", "overall")


def _bounds(interval) -> tuple[int, int]:
    if isinstance(interval, tuple):
        start, end = interval
    else:
        start, end = interval.start, interval.end
    if start > end:
        raise ValueError(f"malformed interval [{start}, {end}]")
    return int(start), int(end)


def _overlap(a: tuple[int, int], b: tuple[int, int]) -> tuple[int, int]:
    inter = max(0, min(a[1], b[1]) - max(a[0], b[0]) + 1)
    union = (a[1] - a[0] + 1) + (b[1] - b[0] + 1) - inter
    return inter, union


def interval_iou(spotted, truth) -> float:
    """IoU of two inclusive frame intervals, measured in frames."""
    inter, union = _overlap(_bounds(spotted), _bounds(truth))
    return inter / union


@dataclass(frozen=True)
class VideoEval:
    video_id: str
    kind: Kind
    m: int
    n: int
    a: int

    def __post_init__(self):
        if not 0 <= self.a <= min(self.m, self.n):
            raise ValueError(f"TP count {self.a} incompatible with m={self.m}, n={self.n}")

    @property
    def fp(self) -> int:
        return self.n - self.a

    @property
    def fn(self) -> int:
        return self.m - self.a


def match_pairs(spotted: Sequence, truth: Sequence, k_iou: float = IOU_THRESHOLD) -> list[tuple[int, int]]:
    """Greedy one-to-one matching, highest IoU first.

    Returns ``(spotted_index, truth_index)`` pairs. Candidate pairs need
    IoU >= ``k_iou``; ties are taken in order of truth onset, then spotted
    start.
    """
    threshold = Fraction(str(k_iou))
    s_bounds = [_bounds(s) for s in spotted]
    t_bounds = [_bounds(t) for t in truth]
    candidates = []
    for si, s in enumerate(s_bounds):
        for ti, t in enumerate(t_bounds):
            inter, union = _overlap(s, t)
            if inter and inter * threshold.denominator >= threshold.numerator * union:
                candidates.append((-Fraction(inter, union), t, s, ti, si))
    candidates.sort(key=lambda c: c[:3])
    used_s, used_t, pairs = set(), set(), []
    for *_, ti, si in candidates:
        if si in used_s or ti in used_t:
            continue
        used_s.add(si)
        used_t.add(ti)
        pairs.append((si, ti))
    return pairs


def match_video(spotted: Sequence, truth: Sequence, k_iou: float = IOU_THRESHOLD,
                video_id: str = "", kind: Kind = "micro") -> VideoEval:
    a = len(match_pairs(spotted, truth, k_iou))
    return VideoEval(video_id, kind, m=len(truth), n=len(spotted), a=a)


@dataclass(frozen=True)
class Score:
    """Pooled counts for one scope; undefined ratios are ``None``."""

    M: int
    N: int
    A: int

    @property
    def fp(self) -> int:
        return self.N - self.A

    @property
    def fn(self) -> int:
        return self.M - self.A

    @property
    def recall(self) -> Optional[float]:
        return self.A / self.M if self.M else None

    @property
    def precision(self) -> Optional[float]:
        return self.A / self.N if self.N else None

    @property
    def f1(self) -> Optional[float]:
        r, p = self.recall, self.precision
        if r is not None and p is not None and r + p > 0:
            return 2 * r * p / (r + p)
        if self.M + self.N > 0:
            return 0.0
        return None

    def as_dict(self, ndigits: Optional[int] = 4) -> dict:
        def fmt(x):
            return x if x is None or ndigits is None else round(x, ndigits)

        return {"M": self.M, "N": self.N, "A": self.A, "FP": self.fp, "FN": self.fn,
                "recall": fmt(self.recall), "precision": fmt(self.precision), "f1": fmt(self.f1)}


@dataclass(frozen=True)
class DatasetEval:
    macro: Score
    micro: Score
    overall: Score

    def __getitem__(self, scope: str) -> Score:
        if scope not in SCOPES:
            raise KeyError(scope)
        return getattr(self, scope)

    def as_dict(self, ndigits: Optional[int] = 4) -> dict:
        return {scope: self[scope].as_dict(ndigits) for scope in SCOPES}


def aggregate(videos: Iterable[VideoEval]) -> DatasetEval:
    sums = {kind: [0, 0, 0] for kind in KINDS}
    for v in videos:
        acc = sums[v.kind]
        acc[0] += v.m
        acc[1] += v.n
        acc[2] += v.a
    macro, micro = Score(*sums["macro"]), Score(*sums["micro"])
    return DatasetEval(macro, micro, Score(macro.M + micro.M, macro.N + micro.N, macro.A + micro.A))


def evaluate(spotted: Iterable, truth: Iterable[GroundTruthInterval],
             k_iou: float = IOU_THRESHOLD) -> tuple[list[VideoEval], DatasetEval]:
    """Score predictions against (normalised) ground truth, per video and pooled.

    Predictions for a video without any ground truth count entirely as false
    positives.
    """
    by_key: dict[tuple[str, str], tuple[list, list]] = defaultdict(lambda: ([], []))
    truth_videos = set()
    for g in truth:
        by_key[g.video_id, g.kind][1].append(g)
        truth_videos.add(g.video_id)
    for s in spotted:
        by_key[s.video_id, s.kind][0].append(s)
    unknown = sorted({vid for vid, _ in by_key} - truth_videos)
    if unknown:
        logger.warning("predictions for videos absent from ground truth (all false positives): %s",
                       ", ".join(unknown))
    videos = [match_video(s, t, k_iou, video_id=vid, kind=kind)
              for (vid, kind), (s, t) in sorted(by_key.items())]
    return videos, aggregate(videos)


def report(videos: Sequence[VideoEval], dataset: DatasetEval) -> dict:
    return {
        "videos": [{"video_id": v.video_id, "kind": v.kind, "m": v.m, "n": v.n, "a": v.a,
                    "fp": v.fp, "fn": v.fn} for v in videos],
        "dataset": dataset.as_dict(),
    }


def write_report(videos: Sequence[VideoEval], dataset: DatasetEval, path) -> None:
    Path(path).write_text(json.dumps(report(videos, dataset), indent=2) + "\n")


SWEEP_HEADER = ["p", "kind", "tp", "fp", "fn", "precision", "recall", "f1"]


def sweep_report(results: Iterable[tuple[float, DatasetEval]]) -> list[dict]:
    """One row per (p, scope), ordered by p then macro/micro/overall."""
    rows = []
    for p, dataset in sorted(results, key=lambda item: item[0]):
        for scope in SCOPES:
            score = dataset[scope]
            rows.append({"p": p, "kind": scope, "tp": score.A, "fp": score.fp, "fn": score.fn,
                         "precision": score.precision, "recall": score.recall, "f1": score.f1})
    return rows


def write_sweep(rows: Sequence[dict], path) -> None:
    def cell(x):
        if x is None:
            return ""
        return f"{x:.4f}" if isinstance(x, float) else x

    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SWEEP_HEADER)
        for row in rows:
            writer.writerow([f"{row['p']:g}"] + [cell(row[c]) for c in SWEEP_HEADER[1:]])
