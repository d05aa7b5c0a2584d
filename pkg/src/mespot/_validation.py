"""Input checks shared by the estimators and the CLI."""

from __future__ import annotations

import numbers
from typing import Iterable

from .ingest import KINDS, FrameSequence, Kind


def check_sequences(X) -> list[FrameSequence]:
    if isinstance(X, FrameSequence):
        X = [X]
    seqs = list(X)
    bad = [type(s).__name__ for s in seqs if not isinstance(s, FrameSequence)]
    if bad:
        raise TypeError(f"expected FrameSequence items, got {sorted(set(bad))}")
    ids = [s.video_id for s in seqs]
    if len(set(ids)) != len(ids):
        raise ValueError("video ids must be unique within one call")
    return seqs


def check_fraction(p, name: str = "p") -> float:
    if isinstance(p, bool) or not isinstance(p, numbers.Real):
        raise TypeError(f"{name} must be a real number, got {type(p).__name__}")
    p = float(p)
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {p}")
    return p


def check_kinds(kinds) -> tuple[Kind, ...]:
    """Normalise ``"both"``, a single kind, or an iterable of kinds."""
    if kinds == "both":
        return KINDS
    if isinstance(kinds, str):
        kinds = (kinds,)
    kinds = tuple(dict.fromkeys(kinds))
    unknown = [k for k in kinds if k not in KINDS]
    if unknown or not kinds:
        raise ValueError(f"kinds must be 'both' or a subset of {KINDS}, got {kinds}")
    return tuple(k for k in KINDS if k in kinds)


def check_grid(start: float, stop: float, step: float) -> list[float]:
    """Inclusive p grid ``start, start + step, ..., stop``."""
    start, stop = check_fraction(start, "p_start"), check_fraction(stop, "p_end")
    if stop < start:
        raise ValueError(f"inverted grid: p_end {stop} < p_start {start}")
    if start == stop:
        return [start]
    if step <= 0 or step > stop - start + 1e-12:
        raise ValueError(f"step {step} must be positive and no larger than the range {stop - start:g}")
    count = int(round((stop - start) / step))
    if abs(start + count * step - stop) > 1e-9:
        raise ValueError(f"range {start:g}..{stop:g} is not a whole number of {step:g} steps")
    return [round(start + i * step, 10) for i in range(count + 1)]


def flatten(groups: Iterable[Iterable]) -> list:
    return [item for group in groups for item in group]
