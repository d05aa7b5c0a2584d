"""Synthetic videos with planted expressions and known ground truth.

Each video is a smoothed random texture. A planted event moves the texture
inside a rectangle of face blocks along a triangular displacement profile:
zero at onset, ``peak`` pixels at the midpoint, zero again at offset, so the
face is neutral on both sides of the event.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np
from scipy.ndimage import gaussian_filter, map_coordinates

from .flow import default_search_radius
from .ingest import FrameSequence, GroundTruthInterval, Kind, LandmarkSet


@dataclass(frozen=True)
class PlantedEvent:
    onset: int
    offset: int
    kind: Kind = "micro"
    peak: float = 3.0
    region: tuple[int, int, int, int] = (2, 2, 3, 3)  # block rows/cols, inclusive
    angle: float = 0.0  # degrees, y-up

    def displacement(self, t: int) -> float:
        if self.offset == self.onset or not self.onset <= t <= self.offset:
            return 0.0
        mid = 0.5 * (self.onset + self.offset)
        half = 0.5 * (self.offset - self.onset)
        return self.peak * (1.0 - abs(t - mid) / half)


@dataclass(frozen=True)
class SynthSpec:
    video_id: str
    n: int
    size: int = 227
    events: tuple[PlantedEvent, ...] = ()
    sigma: float = 0.0
    seed: int = 0
    fps: int = 30
    blocks: int = 6
    texture_scale: float = 2.0

    def validate(self) -> None:
        if self.n < 1 or self.size < self.blocks:
            raise ValueError("need n >= 1 and size >= blocks")
        if self.sigma < 0:
            raise ValueError("noise sigma must be non-negative")
        limit = default_search_radius(self.size)
        for ev in self.events:
            if not 1 <= ev.onset <= ev.offset <= self.n:
                raise ValueError(f"event [{ev.onset}, {ev.offset}] outside frames 1..{self.n}")
            if not 0 <= ev.peak <= limit:
                raise ValueError(f"peak displacement {ev.peak} exceeds search radius {limit}")
            r0, c0, r1, c1 = ev.region
            if not (0 <= r0 <= r1 < self.blocks and 0 <= c0 <= c1 < self.blocks):
                raise ValueError(f"region {ev.region} outside the {self.blocks}x{self.blocks} grid")
        for kind in ("macro", "micro"):
            spans = sorted((e.onset, e.offset) for e in self.events if e.kind == kind)
            for (_, end), (start, _) in zip(spans, spans[1:]):
                if start <= end:
                    raise ValueError(f"overlapping {kind} events")

    @classmethod
    def from_dict(cls, data: dict) -> "SynthSpec":
        data = dict(data)
        events = []
        for ev in data.pop("events", []):
            ev = dict(ev)
            if "region" in ev:
                ev["region"] = tuple(ev["region"])
            events.append(PlantedEvent(**ev))
        return cls(events=tuple(events), **data)


def _region_pixels(region, size: int, blocks: int) -> tuple[slice, slice]:
    step = size // blocks
    r0, c0, r1, c1 = region
    stop_r = size if r1 == blocks - 1 else (r1 + 1) * step
    stop_c = size if c1 == blocks - 1 else (c1 + 1) * step
    return slice(r0 * step, stop_r), slice(c0 * step, stop_c)


def texture(size: int, rng: np.random.Generator, scale: float = 2.0) -> np.ndarray:
    base = gaussian_filter(rng.standard_normal((size, size)), scale)
    base = (base - base.min()) / (base.max() - base.min())
    return 20.0 + 215.0 * base


def generate(spec: SynthSpec) -> tuple[FrameSequence, list[GroundTruthInterval]]:
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    base = texture(spec.size, rng, spec.texture_scale)
    yy, xx = np.mgrid[0:spec.size, 0:spec.size].astype(np.float64)
    frames = np.empty((spec.n, spec.size, spec.size), dtype=np.uint8)
    for t in range(1, spec.n + 1):
        frame = base.copy()
        for ev in spec.events:
            d = ev.displacement(t)
            if d == 0.0:
                continue
            rows, cols = _region_pixels(ev.region, spec.size, spec.blocks)
            dx = d * math.cos(math.radians(ev.angle))
            dy = -d * math.sin(math.radians(ev.angle))
            coords = [yy[rows, cols] - dy, xx[rows, cols] - dx]
            frame[rows, cols] = map_coordinates(base, coords, order=1, mode="nearest")
        if spec.sigma > 0:
            frame = frame + rng.normal(0.0, spec.sigma, frame.shape)
        frames[t - 1] = np.clip(np.floor(frame + 0.5), 0, 255)
    truth = [GroundTruthInterval(spec.video_id, ev.onset, round(0.5 * (ev.onset + ev.offset)),
                                 ev.offset, ev.kind) for ev in spec.events]
    return FrameSequence(spec.video_id, frames, spec.fps), truth


def full_frame_landmarks(video_id: str, size: int) -> LandmarkSet:
    """Landmarks whose face box is the whole ``size x size`` frame.

    The eyebrow lift pushes the top edge above the image, so it clamps to 0.
    """
    pts = np.empty((68, 2))
    pts[:, 0] = np.linspace(0, size - 1, 68)
    pts[:, 1] = np.linspace(20, size - 1, 68)
    pts[18, 1] = 10.0  # L19, eyebrow: topmost point
    pts[36, 1] = 40.0  # L37, eye corner
    return LandmarkSet(video_id, pts)


def planted_micro_spec(video_id: str, seed: int, n: int = 80, size: int = 227,
                       span: tuple[int, int] = (9, 16), peak: float = 3.0,
                       sigma: float = 1.0, margin: Optional[int] = None) -> SynthSpec:
    """One random micro event placed where the relative-difference series of
    the CAS(ME)^2 micro pass (k = 12) is defined."""
    rng = np.random.default_rng(seed)
    length = int(rng.integers(span[0], span[1] + 1))
    margin = 2 * 12 + 2 if margin is None else margin
    onset = int(rng.integers(margin, n - margin - length + 2))
    r0, c0 = (int(v) for v in rng.integers(0, 5, size=2))
    event = PlantedEvent(onset, onset + length - 1, "micro", peak, (r0, c0, r0 + 1, c0 + 1),
                         float(rng.uniform(0.0, 360.0)))
    return SynthSpec(video_id, n, size, (event,), sigma, seed)


def load_synth_specs(path, seed: Optional[int] = None) -> list[SynthSpec]:
    """Read a JSON spec: either one video object or ``{"videos": [...]}``.

    Top-level keys other than ``videos`` are defaults for every video; a
    per-video ``seed`` wins over ``seed``, which defaults to the video's
    position in the list.
    """
    data = json.loads(Path(path).read_text())
    if "videos" not in data:
        data = {"videos": [data]}
    defaults = {k: v for k, v in data.items() if k != "videos"}
    if seed is not None:
        defaults["seed"] = seed
    specs = []
    for i, video in enumerate(data["videos"]):
        merged = {**defaults, **video}
        merged.setdefault("video_id", f"synth_{i + 1:03d}")
        merged["seed"] = merged.get("seed", 0) + (0 if "seed" in video else i)
        try:
            specs.append(SynthSpec.from_dict(merged))
        except TypeError as exc:
            raise ValueError(f"invalid synth spec for video {i + 1}: {exc}") from None
    for spec in specs:
        spec.validate()
    return specs
