"""Optical flow between frame pairs.

Flow estimators implement the :class:`FlowBackend` protocol. The bundled
:class:`ReferenceFlow` is an exhaustive block matcher with parabolic
subpixel refinement; anything with a ``name`` and an ``estimate`` method can
be registered in :data:`BACKENDS` and selected by name.

Directions follow a y-up convention: ``theta = atan2(-v, u)`` so an upward
motion on the image (negative ``v``) has ``theta = +pi/2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Protocol

import numba
import numpy as np


@dataclass(frozen=True)
class FlowField:
    """Displacements sampled on a regular grid of pixel positions.

    ``u`` and ``v`` have shape ``(len(ys), len(xs))``; ``u`` is rightward and
    ``v`` downward, both in pixels.
    """

    ys: np.ndarray
    xs: np.ndarray
    u: np.ndarray
    v: np.ndarray
    rho: np.ndarray = field(default=None, repr=False)
    theta: np.ndarray = field(default=None, repr=False)

    @property
    def shape(self) -> tuple[int, int]:
        return self.u.shape

    def same_grid(self, other: "FlowField") -> bool:
        return np.array_equal(self.ys, other.ys) and np.array_equal(self.xs, other.xs)


def polar(u, v) -> tuple[np.ndarray, np.ndarray]:
    """Magnitude and direction of displacement vectors, theta in [-pi, pi)."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    rho = np.hypot(u, v)
    # + 0.0 turns -0.0 into +0.0 so the zero vector gets theta = 0
    theta = np.arctan2(-v + 0.0, u + 0.0)
    theta = np.where(theta >= np.pi, -np.pi, theta)
    theta = np.where(rho == 0.0, 0.0, theta)
    return rho, theta


def to_polar(flow: FlowField) -> FlowField:
    rho, theta = polar(flow.u, flow.v)
    return FlowField(flow.ys, flow.xs, flow.u, flow.v, rho, theta)


def from_polar(rho, theta) -> tuple[np.ndarray, np.ndarray]:
    rho = np.asarray(rho, dtype=np.float64)
    theta = np.asarray(theta, dtype=np.float64)
    return rho * np.cos(theta), -rho * np.sin(theta)


class FlowBackend(Protocol):
    name: str

    def estimate(self, frame_a: np.ndarray, frame_b: np.ndarray) -> FlowField: ...


def search_offsets(radius: int) -> np.ndarray:
    """Integer offsets ``(du, dv)`` in ``[-radius, radius]^2``.

    Ordered by magnitude, then direction, so a first-minimum scan breaks ties
    toward the smallest displacement.
    """
    dv, du = np.mgrid[-radius:radius + 1, -radius:radius + 1]
    du = du.ravel()
    dv = dv.ravel()
    rho, theta = polar(du, dv)
    order = np.lexsort((theta, rho))
    return np.ascontiguousarray(np.stack([du[order], dv[order]], axis=1)).astype(np.int64)


@dataclass
class ReferenceFlow:
    """Exhaustive SSD block matching with subpixel parabola refinement.

    For each grid point the ``(2*window+1)^2`` patch of ``frame_a`` is compared
    against patches of ``frame_b`` displaced by every integer offset within
    ``search`` pixels; samples outside the image are edge-clamped. The SSD
    minimum is refined independently along x and y by fitting a parabola
    through the minimum and its two neighbours. A zero-cost match is exact
    and left unrefined, so identical frames give an all-zero field.

    Parameters
    ----------
    window : int
        Patch half-width.
    search : int
        Search radius in pixels.
    stride : int
        Grid spacing; 1 samples every pixel.
    subpixel : bool
        Disable to get the raw integer argmin.
    static_deadzone : bool
        Leave points whose best integer match is zero displacement
        unrefined. Without this, sensor noise on a static face turns into
        sub-pixel jitter of random direction.
    """

    window: int = 4
    search: int = 12
    stride: int = 1
    subpixel: bool = True
    static_deadzone: bool = True
    name: str = "reference"

    def __post_init__(self):
        if self.window < 1 or self.search < 1 or self.stride < 1:
            raise ValueError("window, search and stride must all be >= 1")

    def grid(self, height: int, width: int) -> tuple[np.ndarray, np.ndarray]:
        return np.arange(0, height, self.stride), np.arange(0, width, self.stride)

    def estimate(self, frame_a: np.ndarray, frame_b: np.ndarray) -> FlowField:
        a = np.asarray(frame_a, dtype=np.float64)
        b = np.asarray(frame_b, dtype=np.float64)
        if a.ndim != 2 or a.shape != b.shape:
            raise ValueError(f"frames must be 2-D with equal shapes, got {a.shape} and {b.shape}")
        height, width = a.shape
        ys, xs = self.grid(height, width)
        if np.array_equal(a, b):
            zero = np.zeros((len(ys), len(xs)))
            return to_polar(FlowField(ys, xs, zero, zero.copy()))
        pad = self.window + self.search + 1
        a_pad = np.pad(a, pad, mode="edge")
        b_pad = np.pad(b, pad, mode="edge")
        offsets = search_offsets(self.search)
        u, v = _block_match(a_pad, b_pad, ys, xs, offsets, self.window, self.search, pad,
                            self.subpixel, self.static_deadzone)
        return to_polar(FlowField(ys, xs, u, v))


@numba.njit(cache=True)
def _patch_ssd(a_pad, b_pad, y, x, du, dv, w):
    total = 0.0
    for qy in range(-w, w + 1):
        for qx in range(-w, w + 1):
            d = a_pad[y + qy, x + qx] - b_pad[y + qy + dv, x + qx + du]
            total += d * d
    return total


@numba.njit(cache=True)
def _vertex(c_minus, c0, c_plus):
    denom = c_minus - 2.0 * c0 + c_plus
    if denom <= 0.0:
        return 0.0
    delta = (c_minus - c_plus) / (2.0 * denom)
    return min(0.5, max(-0.5, delta))


@numba.njit(cache=True)
def _block_match(a_pad, b_pad, ys, xs, offsets, w, s, pad, subpixel, deadzone):
    n_y = ys.shape[0]
    n_x = xs.shape[0]
    height = a_pad.shape[0] - 2 * pad
    width = a_pad.shape[1] - 2 * pad
    k = 2 * w + 1
    n_rows = height + 2 * w
    n_cols = width + 2 * w
    integral = np.zeros((n_rows + 1, n_cols + 1))
    row_cum = np.zeros(n_cols + 1)
    best = np.full((n_y, n_x), np.inf)
    best_idx = np.zeros((n_y, n_x), dtype=np.int64)
    # offsets are scanned in magnitude order; strict < keeps the first minimum
    for idx in range(offsets.shape[0]):
        du = offsets[idx, 0]
        dv = offsets[idx, 1]
        for i in range(n_rows):
            ay = pad - w + i
            a_row = a_pad[ay, pad - w:pad - w + n_cols]
            b_row = b_pad[ay + dv, pad - w + du:pad - w + du + n_cols]
            acc = 0.0
            for j in range(n_cols):
                d = a_row[j] - b_row[j]
                acc += d * d
                row_cum[j + 1] = acc
            above = integral[i]
            here = integral[i + 1]
            for j in range(n_cols + 1):
                here[j] = above[j] + row_cum[j]
        for r in range(n_y):
            lo = integral[ys[r]]
            hi = integral[ys[r] + k]
            best_r = best[r]
            idx_r = best_idx[r]
            for c in range(n_x):
                left = xs[c]
                cost = hi[left + k] - lo[left + k] - hi[left] + lo[left]
                if cost < best_r[c]:
                    best_r[c] = cost
                    idx_r[c] = idx

    u = np.zeros((n_y, n_x))
    v = np.zeros((n_y, n_x))
    for r in range(n_y):
        py = ys[r] + pad
        for c in range(n_x):
            px = xs[c] + pad
            du = offsets[best_idx[r, c], 0]
            dv = offsets[best_idx[r, c], 1]
            fu = float(du)
            fv = float(dv)
            c0 = best[r, c]
            # a zero-cost match is exact; refining it would only add bias
            if subpixel and c0 > 0.0 and not (deadzone and du == 0 and dv == 0):
                if abs(du) < s:
                    fu += _vertex(_patch_ssd(a_pad, b_pad, py, px, du - 1, dv, w), c0,
                                  _patch_ssd(a_pad, b_pad, py, px, du + 1, dv, w))
                if abs(dv) < s:
                    fv += _vertex(_patch_ssd(a_pad, b_pad, py, px, du, dv - 1, w), c0,
                                  _patch_ssd(a_pad, b_pad, py, px, du, dv + 1, w))
            u[r, c] = fu
            v[r, c] = fv
    return u, v


BACKENDS: dict[str, Callable[..., FlowBackend]] = {"reference": ReferenceFlow}


def get_backend(name: str, **params) -> FlowBackend:
    try:
        factory = BACKENDS[name]
    except KeyError:
        raise ValueError(f"unknown flow backend {name!r}; available: {sorted(BACKENDS)}") from None
    return factory(**params)


def default_search_radius(crop_size: int) -> int:
    return math.ceil(0.05 * crop_size)
