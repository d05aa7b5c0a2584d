"""Frame sequences, annotations, landmarks and dataset profiles.

Frame indices are 1-based everywhere: frame ``i`` of a sequence is
``seq.frame(i) == seq.frames[i - 1]``.

Annotation CSV (header mandatory)::

    video_id,onset,apex,offset,type
    s15_0101,120,131,0,macro

``apex`` may be empty. An ``offset`` of 0 marks an expression that never
ended; :func:`normalize_ground_truth` closes it at the apex.

Landmark CSV (header mandatory)::

    pass,index,x,y
    1,1,103.0,211.0
    ...

``pass`` is 1 (first frame) or 2 (re-detection inside the first-pass box, in
that box's coordinates); ``index`` runs 1..68 in the standard 68-point
ordering. The JSON equivalent is ``{"pass1": [[x, y], ...], "pass2": [...]}``
with ``pass2`` optional.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Literal, Optional

import numpy as np
from PIL import Image

logger = logging.getLogger(__name__)

Kind = Literal["macro", "micro"]
KINDS: tuple[Kind, ...] = ("macro", "micro")
IMAGE_SUFFIXES = {".png", ".pgm", ".ppm", ".pnm", ".bmp", ".jpg", ".jpeg", ".tif", ".tiff"}
N_LANDMARKS = 68
ANNOTATION_HEADER = ["video_id", "onset", "apex", "offset", "type"]


class FormatError(ValueError):
    """Raised when an input file does not follow its documented schema."""


@dataclass(frozen=True, eq=False)
class FrameSequence:
    video_id: str
    frames: np.ndarray  # (n, height, width) uint8
    fps: int

    def __post_init__(self):
        frames = np.asarray(self.frames)
        if frames.ndim != 3 or len(frames) == 0:
            raise ValueError("a sequence needs at least one 2-D frame")
        if self.fps <= 0:
            raise ValueError(f"fps must be positive, got {self.fps}")
        object.__setattr__(self, "frames", frames)

    @property
    def n(self) -> int:
        return len(self.frames)

    @property
    def shape(self) -> tuple[int, int]:
        return self.frames.shape[1:]

    def frame(self, i: int) -> np.ndarray:
        if not 1 <= i <= self.n:
            raise IndexError(f"frame {i} outside 1..{self.n}")
        return self.frames[i - 1]


@dataclass(frozen=True)
class GroundTruthInterval:
    video_id: str
    onset: int
    apex: Optional[int]
    offset: int
    kind: Kind

    @property
    def start(self) -> int:
        return self.onset

    @property
    def end(self) -> int:
        return self.offset


@dataclass(frozen=True, eq=False)
class LandmarkSet:
    video_id: str
    pass1: np.ndarray  # (68, 2) x, y
    pass2: Optional[np.ndarray] = None

    def __post_init__(self):
        object.__setattr__(self, "pass1", _check_points(self.pass1, "pass1"))
        if self.pass2 is not None:
            object.__setattr__(self, "pass2", _check_points(self.pass2, "pass2"))


@dataclass(frozen=True)
class DatasetProfile:
    name: str
    fps: int
    k_macro: int
    k_micro: int
    micro_len_min: int
    micro_len_max: int
    macro_len_min: int
    blocks: int = 6
    directions: int = 4
    crop_size: int = 227

    def k(self, kind: Kind) -> int:
        return self.k_macro if kind == "macro" else self.k_micro

    def length_ok(self, kind: Kind, length: int) -> bool:
        if kind == "micro":
            return self.micro_len_min <= length <= self.micro_len_max
        return length >= self.macro_len_min


def builtin_profiles() -> dict[str, DatasetProfile]:
    """Parameter bundles for CAS(ME)^2 (30 fps) and SAMM Long Videos (200 fps)."""
    return {
        "casme2": DatasetProfile("casme2", fps=30, k_macro=39, k_micro=12,
                                 micro_len_min=7, micro_len_max=16, macro_len_min=17),
        "samm": DatasetProfile("samm", fps=200, k_macro=260, k_micro=80,
                               micro_len_min=47, micro_len_max=105, macro_len_min=106),
    }


def load_profile(name_or_path: str) -> DatasetProfile:
    """A builtin profile by name, or a custom one from a JSON/TOML file."""
    profiles = builtin_profiles()
    if name_or_path in profiles:
        return profiles[name_or_path]
    path = Path(name_or_path)
    if not path.is_file():
        raise ValueError(f"unknown profile {name_or_path!r}; builtin: {sorted(profiles)}")
    if path.suffix == ".toml":
        import tomli

        data = tomli.loads(path.read_text())
    else:
        data = json.loads(path.read_text())
    data.setdefault("name", path.stem)
    try:
        return DatasetProfile(**data)
    except TypeError as exc:
        raise FormatError(f"{path}: {exc}") from None


def _to_gray(img: Image.Image) -> np.ndarray:
    if img.mode in ("L", "P", "1", "I", "I;16", "F"):
        if img.mode in ("P", "1"):
            img = img.convert("RGB")
        else:
            arr = np.asarray(img)
            if arr.dtype != np.uint8:
                raise FormatError(f"unsupported grayscale depth {arr.dtype}")
            return arr
    rgb = np.asarray(img.convert("RGB"), dtype=np.float64)
    gray = 0.299 * rgb[..., 0] + 0.587 * rgb[..., 1] + 0.114 * rgb[..., 2]
    return np.clip(np.floor(gray + 0.5), 0, 255).astype(np.uint8)


def load_frame_sequence(dir_path, video_id: str, fps: int) -> FrameSequence:
    """Read every image in ``dir_path`` (lexicographic order) as one grayscale video."""
    dir_path = Path(dir_path)
    files = sorted(p for p in dir_path.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES)
    if not files:
        raise FileNotFoundError(f"no image files in {dir_path}")
    frames = []
    for path in files:
        try:
            with Image.open(path) as img:
                gray = _to_gray(img)
        except OSError as exc:
            raise FormatError(f"cannot read {path}: {exc}") from exc
        if frames and gray.shape != frames[0].shape:
            raise FormatError(f"{path.name} is {gray.shape}, expected {frames[0].shape}")
        frames.append(gray)
    return FrameSequence(video_id, np.stack(frames), fps)


def save_frame_sequence(seq: FrameSequence, dir_path, suffix: str = ".png") -> list[Path]:
    dir_path = Path(dir_path)
    dir_path.mkdir(parents=True, exist_ok=True)
    width = max(4, len(str(seq.n)))
    paths = []
    for i, frame in enumerate(seq.frames, start=1):
        path = dir_path / f"frame_{i:0{width}d}{suffix}"
        Image.fromarray(np.asarray(frame, dtype=np.uint8), mode="L").save(path)
        paths.append(path)
    return paths


def _parse_int(text: str, what: str, where: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise FormatError(f"{where}: {what} {text!r} is not an integer") from None


def parse_annotations(path) -> list[GroundTruthInterval]:
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ANNOTATION_HEADER:
            raise FormatError(f"{path}: expected header {','.join(ANNOTATION_HEADER)}, got {header}")
        out = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            where = f"{path}:{lineno}"
            if len(row) != 5:
                raise FormatError(f"{where}: expected 5 fields, got {len(row)}")
            video_id, onset, apex, offset, kind = (c.strip() for c in row)
            if kind not in KINDS:
                raise FormatError(f"{where}: unknown type {kind!r}")
            out.append(GroundTruthInterval(
                video_id=video_id,
                onset=_parse_int(onset, "onset", where),
                apex=_parse_int(apex, "apex", where) if apex else None,
                offset=_parse_int(offset, "offset", where),
                kind=kind,
            ))
    return out


def write_annotations(intervals: Iterable[GroundTruthInterval], path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(ANNOTATION_HEADER)
        for g in intervals:
            writer.writerow([g.video_id, g.onset, "" if g.apex is None else g.apex, g.offset, g.kind])


def normalize_ground_truth(g: GroundTruthInterval) -> GroundTruthInterval:
    """Close an unterminated interval (offset 0) at its apex."""
    if g.offset == 0:
        if g.apex is None:
            raise ValueError(f"{g.video_id}: offset 0 with no apex, interval cannot be closed")
        g = replace(g, offset=g.apex)
    if g.onset < 1 or g.offset < g.onset:
        raise ValueError(f"{g.video_id}: invalid interval [{g.onset}, {g.offset}]")
    return g


def _check_points(points, label: str) -> np.ndarray:
    pts = np.asarray(points, dtype=np.float64)
    if pts.shape != (N_LANDMARKS, 2):
        raise FormatError(f"{label}: expected {N_LANDMARKS} (x, y) points, got shape {pts.shape}")
    if not np.all(np.isfinite(pts)) or (pts < 0).any():
        raise FormatError(f"{label}: coordinates must be finite and non-negative")
    return pts


def parse_landmarks(path, video_id: Optional[str] = None) -> LandmarkSet:
    path = Path(path)
    video_id = video_id or path.stem
    if path.suffix.lower() == ".json":
        data = json.loads(path.read_text())
        if "pass1" not in data:
            raise FormatError(f"{path}: missing 'pass1'")
        return LandmarkSet(video_id, data["pass1"], data.get("pass2"))

    passes: dict[int, dict[int, tuple[float, float]]] = {1: {}, 2: {}}
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != ["pass", "index", "x", "y"]:
            raise FormatError(f"{path}: expected header pass,index,x,y")
        for lineno, row in enumerate(reader, start=2):
            where = f"{path}:{lineno}"
            try:
                p, idx = int(row["pass"]), int(row["index"])
                x, y = float(row["x"]), float(row["y"])
            except (TypeError, ValueError):
                raise FormatError(f"{where}: malformed row {row}") from None
            if p not in passes or not 1 <= idx <= N_LANDMARKS:
                raise FormatError(f"{where}: pass must be 1 or 2 and index 1..{N_LANDMARKS}")
            if idx in passes[p]:
                raise FormatError(f"{where}: duplicate landmark {idx} in pass {p}")
            passes[p][idx] = (x, y)

    def collect(p):
        pts = passes[p]
        if len(pts) != N_LANDMARKS:
            raise FormatError(f"{path}: pass {p} has {len(pts)} landmarks, expected {N_LANDMARKS}")
        return [pts[i] for i in range(1, N_LANDMARKS + 1)]

    return LandmarkSet(video_id, collect(1), collect(2) if passes[2] else None)


def write_landmarks(lm: LandmarkSet, path) -> None:
    path = Path(path)
    if path.suffix.lower() == ".json":
        data = {"pass1": lm.pass1.tolist()}
        if lm.pass2 is not None:
            data["pass2"] = lm.pass2.tolist()
        path.write_text(json.dumps(data))
        return
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["pass", "index", "x", "y"])
        for p, pts in ((1, lm.pass1), (2, lm.pass2)):
            if pts is None:
                continue
            for idx, (x, y) in enumerate(pts, start=1):
                writer.writerow([p, idx, f"{x:g}", f"{y:g}"])
