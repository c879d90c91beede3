"""
Planar-circle incidence geometry
Circles on the cylinder S^1 x R, the flat Lorentz space R^{1,2} that
parametrizes them, null planes, cone relations and the classification of
directions by the axis of their plane pencil.
"""
import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Tuple

import numpy as np

from .defaults import setting

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi


class GeometryError(Exception):
    """Custom exception for invalid geometric input"""
    pass


class ConeRelation(str, Enum):
    FUTURE = 'future'
    PAST = 'past'
    NEITHER = 'neither'
    EQUAL = 'equal'


class CausalType(str, Enum):
    SPACELIKE = 'spacelike'
    NULL = 'null'
    TIMELIKE = 'timelike'


def normalize_angle(theta: float) -> float:
    theta = math.fmod(float(theta), TWO_PI)
    if theta < 0:
        theta += TWO_PI
    # fmod of a value just below 2pi can round up
    return 0.0 if theta >= TWO_PI else theta


@dataclass(frozen=True)
class CylinderPoint:
    theta: float
    v: float

    def __post_init__(self):
        object.__setattr__(self, 'theta', normalize_angle(self.theta))
        object.__setattr__(self, 'v', float(self.v))

    @property
    def omega(self) -> complex:
        return complex(math.cos(self.theta), math.sin(self.theta))


@dataclass(frozen=True)
class SpacetimePoint:
    t: float
    x1: float
    x2: float

    def __post_init__(self):
        for name in ('t', 'x1', 'x2'):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise GeometryError(f"Spacetime coordinate {name} is not finite")
            object.__setattr__(self, name, value)

    @property
    def z(self) -> complex:
        return complex(self.x1, self.x2)

    @classmethod
    def from_tz(cls, t: float, z: complex) -> 'SpacetimePoint':
        return cls(t, z.real, z.imag)

    def as_tuple(self) -> Tuple[float, float, float]:
        return (self.t, self.x1, self.x2)


@dataclass(frozen=True)
class MinkowskiVector:
    tau: float
    xi1: float
    xi2: float

    @property
    def q(self) -> float:
        """Quadratic form of -dt^2 + dx1^2 + dx2^2."""
        return -self.tau ** 2 + self.xi1 ** 2 + self.xi2 ** 2

    @property
    def is_zero(self) -> bool:
        return self.tau == 0.0 and self.xi1 == 0.0 and self.xi2 == 0.0


@dataclass(frozen=True)
class DirectionClass:
    by_metric: CausalType
    by_axis: CausalType
    axis_distance: float
    crossings: int

    @property
    def consistent(self) -> bool:
        return self.by_metric == self.by_axis


@dataclass(frozen=True)
class NullPlane:
    """The plane of circles through a cylinder point: t + <omega, x> = v."""
    point: CylinderPoint
    normal: Tuple[float, float, float]
    offset: float

    @property
    def normal_norm(self) -> float:
        return MinkowskiVector(*self.normal).q

    def contains(self, c: SpacetimePoint, tol: float = 1e-12) -> bool:
        return abs(side_of_circle(c, self.point)) <= tol * max(1.0, abs(self.offset))


def circle_height(c: SpacetimePoint, theta):
    """Height v of the planar circle C_c over angle theta (vectorized in theta)."""
    return c.t + c.x1 * np.cos(theta) + c.x2 * np.sin(theta)


def side_of_circle(c: SpacetimePoint, p: CylinderPoint) -> float:
    """
    Signed position of p relative to the circle C_c.

    Returns:
        t + <omega, x> - v; positive in the upper domain, negative in the
        lower domain and zero on the circle
    """
    return float(c.t + c.x1 * math.cos(p.theta) + c.x2 * math.sin(p.theta) - p.v)


def cone_relation(c: SpacetimePoint, c2: SpacetimePoint) -> ConeRelation:
    """Closed-cone relation of c2 to c (circle of c2 inside the closed domains of c)."""
    if c == c2:
        return ConeRelation.EQUAL
    dt = c.t - c2.t
    spatial = math.hypot(c.x1 - c2.x1, c.x2 - c2.x2)
    if dt >= spatial:
        return ConeRelation.FUTURE
    if -dt >= spatial:
        return ConeRelation.PAST
    return ConeRelation.NEITHER


def cone_relation_sampled(c: SpacetimePoint, c2: SpacetimePoint, n_theta: int = 1000,
                          tol: float = 0.0) -> ConeRelation:
    """Brute-force cone relation: sample side_of_circle of c along the circle of c2."""
    if c == c2:
        return ConeRelation.EQUAL
    theta = np.linspace(0.0, TWO_PI, n_theta, endpoint=False)
    sides = circle_height(c, theta) - circle_height(c2, theta)
    if np.min(sides) >= -tol:
        return ConeRelation.FUTURE
    if np.max(sides) <= tol:
        return ConeRelation.PAST
    return ConeRelation.NEITHER


def classify_direction(d: MinkowskiVector, tol: float = None) -> DirectionClass:
    """
    Classify a direction by the sign of the metric and by its plane pencil.

    The circles through c and c + d share the axis {omega : tau + <omega, xi> = 0};
    two crossings of the unit circle mean spacelike, tangency null, none timelike.

    Args:
        d: Nonzero Minkowski vector
        tol: Relative null tolerance

    Returns:
        DirectionClass with both classifications and the axis distance |tau|/|xi|
    """
    if d.is_zero:
        raise GeometryError("Cannot classify the zero vector")
    tol = setting('TWISTOR_NULL_TOLERANCE') if tol is None else tol

    tau2 = d.tau ** 2
    xi2 = d.xi1 ** 2 + d.xi2 ** 2
    scale = max(tau2, xi2, 1.0)

    q = -tau2 + xi2
    if abs(q) <= tol * scale:
        by_metric = CausalType.NULL
    elif q > 0:
        by_metric = CausalType.SPACELIKE
    else:
        by_metric = CausalType.TIMELIKE

    if xi2 == 0.0:
        return DirectionClass(by_metric=by_metric, by_axis=CausalType.TIMELIKE,
                              axis_distance=math.inf, crossings=0)

    distance = abs(d.tau) / math.sqrt(xi2)
    if abs(distance ** 2 - 1.0) <= tol * scale / xi2:
        by_axis, crossings = CausalType.NULL, 1
    elif distance < 1.0:
        by_axis, crossings = CausalType.SPACELIKE, 2
    else:
        by_axis, crossings = CausalType.TIMELIKE, 0

    return DirectionClass(by_metric=by_metric, by_axis=by_axis, axis_distance=distance, crossings=crossings)


def null_plane(p: CylinderPoint) -> NullPlane:
    """The plane of spacetime points whose circles pass through p."""
    return NullPlane(point=p, normal=(1.0, math.cos(p.theta), math.sin(p.theta)), offset=p.v)


def lorentz_interval(c: SpacetimePoint, c2: SpacetimePoint) -> float:
    return MinkowskiVector(c2.t - c.t, c2.x1 - c.x1, c2.x2 - c.x2).q


def circles_meet(c: SpacetimePoint, c2: SpacetimePoint) -> int:
    """Number of intersection points of the circles C_c and C_c2 (2, 1 or 0; -1 if equal)."""
    if c == c2:
        return -1
    return classify_direction(MinkowskiVector(c2.t - c.t, c2.x1 - c.x1, c2.x2 - c.x2)).crossings
