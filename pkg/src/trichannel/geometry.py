"""Planar predicates and the linear node motion model.

``orient2d`` and ``incircle`` return exact signs: a floating-point filter
decides the common case and a rational (``fractions.Fraction``) fallback
settles anything inside the filter's error bound.  Every function here is
pure and reentrant.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Tuple

Point = Tuple[float, float]
Vector = Tuple[float, float]

_EPS = math.ulp(1.0) / 2.0  # 2^-53
CCW_ERRBOUND = (3.0 + 16.0 * _EPS) * _EPS
ICC_ERRBOUND = (10.0 + 96.0 * _EPS) * _EPS


class DegenerateTriangleError(ValueError):
    """Raised when a predicate needs a non-collinear triangle and got one."""


class NodeKind(str, Enum):
    STATIC = "static"
    DYNAMIC = "dynamic"
    VIRTUAL = "virtual"
    EGO = "ego"


@dataclass(frozen=True)
class NodeState:
    """Disc-shaped node: position, velocity and radius.

    Scenario-level validation additionally requires static/virtual nodes to
    carry zero velocity; derived tables (e.g. after motion transmission) may
    relax that, so it is not enforced here.
    """

    id: int
    x: float
    y: float
    vx: float
    vy: float
    r: float
    kind: NodeKind = NodeKind.STATIC

    def __post_init__(self) -> None:
        if self.r < 0:
            raise ValueError(f"node {self.id}: negative radius {self.r}")

    @property
    def position(self) -> Point:
        return (self.x, self.y)

    @property
    def velocity(self) -> Vector:
        return (self.vx, self.vy)


class InCircleSide(Enum):
    INSIDE = "inside"
    COCIRCULAR = "cocircular"
    OUTSIDE = "outside"


@dataclass(frozen=True)
class InCircleResult:
    """Signed in-circle value plus its exact classification.

    Downstream code must branch on ``side`` only; ``gamma`` is the
    floating-point product of the two determinants and may round to zero
    even when the sign is known.
    """

    gamma: float
    side: InCircleSide

    @property
    def is_event(self) -> bool:
        """Inside or cocircular; cocircular counts as an event (conservative)."""
        return self.side is not InCircleSide.OUTSIDE


def position_at(node: NodeState, t: float) -> Point:
    """Linear motion model: position of ``node`` after ``t`` seconds."""
    return (node.x + node.vx * t, node.y + node.vy * t)


def _signed_float(value: Fraction) -> float:
    """float(value), but never losing a nonzero sign to underflow."""
    if value == 0:
        return 0.0
    f = float(value)
    if f != 0.0:
        return f
    return math.copysign(5e-324, 1.0 if value > 0 else -1.0)


def _orient2d_exact(a: Point, b: Point, c: Point) -> float:
    ax, ay = Fraction(a[0]), Fraction(a[1])
    bx, by = Fraction(b[0]), Fraction(b[1])
    cx, cy = Fraction(c[0]), Fraction(c[1])
    det = (ax - cx) * (by - cy) - (ay - cy) * (bx - cx)
    return _signed_float(det)


def orient2d(a: Point, b: Point, c: Point) -> float:
    """Twice the signed area of (a, b, c): > 0 iff counterclockwise.

    The sign is exact for any double-precision input.
    """
    detleft = (a[0] - c[0]) * (b[1] - c[1])
    detright = (a[1] - c[1]) * (b[0] - c[0])
    det = detleft - detright
    detsum = abs(detleft) + abs(detright)
    if abs(det) > CCW_ERRBOUND * detsum:
        return det
    return _orient2d_exact(a, b, c)


def _incircle_det_fast(a: Point, b: Point, c: Point, p: Point) -> Tuple[float, bool]:
    """det[[x, y, x^2+y^2, 1]] over rows (a, b, c, p) and a certainty flag."""
    adx = a[0] - p[0]
    ady = a[1] - p[1]
    bdx = b[0] - p[0]
    bdy = b[1] - p[1]
    cdx = c[0] - p[0]
    cdy = c[1] - p[1]

    bdxcdy = bdx * cdy
    cdxbdy = cdx * bdy
    alift = adx * adx + ady * ady
    cdxady = cdx * ady
    adxcdy = adx * cdy
    blift = bdx * bdx + bdy * bdy
    adxbdy = adx * bdy
    bdxady = bdx * ady
    clift = cdx * cdx + cdy * cdy

    det = (
        alift * (bdxcdy - cdxbdy)
        + blift * (cdxady - adxcdy)
        + clift * (adxbdy - bdxady)
    )
    permanent = (
        (abs(bdxcdy) + abs(cdxbdy)) * alift
        + (abs(cdxady) + abs(adxcdy)) * blift
        + (abs(adxbdy) + abs(bdxady)) * clift
    )
    return det, abs(det) > ICC_ERRBOUND * permanent


def _incircle_det_exact(a: Point, b: Point, c: Point, p: Point) -> float:
    px, py = Fraction(p[0]), Fraction(p[1])
    rows = []
    for q in (a, b, c):
        qx = Fraction(q[0]) - px
        qy = Fraction(q[1]) - py
        rows.append((qx, qy, qx * qx + qy * qy))
    (adx, ady, alift), (bdx, bdy, blift), (cdx, cdy, clift) = rows
    det = (
        alift * (bdx * cdy - cdx * bdy)
        + blift * (cdx * ady - adx * cdy)
        + clift * (adx * bdy - bdx * ady)
    )
    return _signed_float(det)


def incircle(a: Point, b: Point, c: Point, p: Point) -> InCircleResult:
    """Test whether ``p`` lies inside the circumcircle of triangle (a, b, c).

    Returns the signed value gamma = D4 * D2A, the product of the 4x4
    lifted determinant (columns 1, x, y, x^2+y^2) and the triangle's signed
    doubled area.  The second factor makes the sign insensitive to the
    ordering of (a, b, c): gamma < 0 means inside, 0 cocircular, > 0
    outside, exactly.

    Raises ``DegenerateTriangleError`` when (a, b, c) are collinear.
    """
    orient = orient2d(a, b, c)
    if orient == 0.0:
        raise DegenerateTriangleError(f"collinear triangle {a}, {b}, {c}")

    det, certain = _incircle_det_fast(a, b, c, p)
    if not certain:
        det = _incircle_det_exact(a, b, c, p)

    # det is the [[x, y, x^2+y^2, 1]] row order; the column order used by
    # gamma is an odd permutation of it, hence the negation.
    gamma = -det * orient
    if det == 0.0:
        side = InCircleSide.COCIRCULAR
    elif (det > 0.0) == (orient > 0.0):
        side = InCircleSide.INSIDE
    else:
        side = InCircleSide.OUTSIDE
    return InCircleResult(gamma=gamma, side=side)


def dist(a: Point, b: Point) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])
