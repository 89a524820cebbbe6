import logging
from typing import Callable, List, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from .common_types import (
    ConfigError,
    CoordinateLineSpec,
    PathKind,
    PathSpec,
    RectangleSpec,
    SegmentSpec,
)

logger = logging.getLogger(__name__)


class CurvePath(BaseModel):
    """A smooth path t -> theta(t) with its velocity."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    kind: PathKind
    point_fn: Callable[[float], np.ndarray]
    velocity_fn: Callable[[float], np.ndarray]
    samples: int = Field(default=64, gt=0)
    legs: List["CurvePath"] = Field(default_factory=list)

    def point(self, t: float) -> np.ndarray:
        return np.asarray(self.point_fn(float(t)), dtype=float)

    def velocity(self, t: float) -> np.ndarray:
        return np.asarray(self.velocity_fn(float(t)), dtype=float)

    def sample_times(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.samples + 1)

    @property
    def start(self) -> np.ndarray:
        return self.point(0.0)

    @property
    def end(self) -> np.ndarray:
        return self.point(1.0)


CurvePath.model_rebuild()


def segment(start, end, samples: int = 64, kind: PathKind = PathKind.SEGMENT) -> CurvePath:
    a = np.asarray(start, dtype=float)
    b = np.asarray(end, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"segment endpoints differ in shape: {a.shape} vs {b.shape}")
    return CurvePath(
        kind=kind,
        point_fn=lambda t: a + t * (b - a),
        velocity_fn=lambda t: b - a,
        samples=samples,
    )


def line(start, direction, samples: int = 64) -> CurvePath:
    """The line t -> start + t v, defined for every real t."""
    a = np.asarray(start, dtype=float)
    v = np.asarray(direction, dtype=float)
    return CurvePath(
        kind=PathKind.SEGMENT,
        point_fn=lambda t: a + t * v,
        velocity_fn=lambda t: v,
        samples=samples,
    )


def coordinate_line(theta, p: int, samples: int = 64) -> CurvePath:
    """The path t -> theta + t g_p."""
    a = np.asarray(theta, dtype=float)
    if not 0 <= p < a.size:
        raise ValueError(f"coordinate index {p} out of range for n={a.size}")
    g = np.zeros_like(a)
    g[p] = 1.0
    return CurvePath(
        kind=PathKind.COORDINATE_LINE,
        point_fn=lambda t: a + t * g,
        velocity_fn=lambda t: g,
        samples=samples,
    )


def composite(legs: list[CurvePath], samples: int | None = None) -> CurvePath:
    """Concatenates legs, each traversed on an equal share of [0, 1]."""
    if not legs:
        raise ValueError("composite path needs at least one leg")
    for before, after in zip(legs, legs[1:]):
        gap = np.max(np.abs(before.end - after.start))
        if gap > 1e-12:
            raise ValueError(f"composite legs are discontinuous (gap {gap:.3e})")
    count = len(legs)

    def locate(t: float) -> tuple[CurvePath, float]:
        k = min(int(np.floor(t * count)), count - 1)
        k = max(k, 0)
        return legs[k], t * count - k

    return CurvePath(
        kind=PathKind.COMPOSITE,
        point_fn=lambda t: locate(t)[0].point(locate(t)[1]),
        velocity_fn=lambda t: count * locate(t)[0].velocity(locate(t)[1]),
        samples=samples or sum(leg.samples for leg in legs),
        legs=legs,
    )


def rectangle(theta, p: int, q: int, s: float, t: float, samples: int = 64) -> CurvePath:
    """Closed loop theta -> theta + s g_p -> theta + s g_p + t g_q -> theta + t g_q -> theta."""
    a = np.asarray(theta, dtype=float)
    gp = np.zeros_like(a)
    gp[p] = s
    gq = np.zeros_like(a)
    gq[q] = t
    corners = [a, a + gp, a + gp + gq, a + gq, a]
    legs = [segment(x, y, samples, kind=PathKind.RECTANGLE_LEG) for x, y in zip(corners, corners[1:])]
    return composite(legs)


def path_from_spec(spec: Union[SegmentSpec, CoordinateLineSpec, RectangleSpec]) -> CurvePath:
    if isinstance(spec, SegmentSpec):
        return segment(spec.start, spec.to, spec.samples)
    if isinstance(spec, CoordinateLineSpec):
        return coordinate_line(spec.start, spec.p, spec.samples)
    a = np.asarray(spec.start, dtype=float)
    b = np.asarray(spec.to, dtype=float)
    differing = np.flatnonzero(a != b)
    if differing.size != 2:
        raise ConfigError("rectangle corners must differ in exactly two coordinates", field="to")
    p, q = (int(i) for i in differing)
    return rectangle(a, p, q, float(b[p] - a[p]), float(b[q] - a[q]), spec.samples)


def load_path(raw: str | bytes) -> CurvePath:
    """Parses path JSON into a CurvePath.

    Raises:
        ConfigError: If the JSON is malformed or fails validation.
    """
    try:
        spec = PathSpec.validate_json(raw)
    except ValidationError as e:
        raise ConfigError(str(e), field="path") from e
    return path_from_spec(spec)
