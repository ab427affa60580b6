"""Rotated-box representations, conversions and exact overlap computation.

Two parameterizations are supported. The long-side definition stores the
longer side as ``h`` and measures ``theta`` (degrees) from the x-axis to
that side, with ``theta`` canonical in (-90, 90] (period 180). The OpenCV
definition measures ``theta`` in [-90, 0) from the x-axis to the ``w``
side, which may be the shorter or the longer one. Both describe the same
set of rectangles; the angle that appears discontinuous differs, which is
exactly the behaviour the rest of the package studies.
"""

import math
from dataclasses import dataclass, replace

from .errors import DegenerateGeometryError, InvalidInputError
from .validation import check_choice, check_finite_scalar, check_positive_scalar

# Points within this distance of a clip edge count as inside; keeps
# shared-edge and shared-vertex cases from flapping between 0 and tiny
# negative intersection areas.
_CLIP_EPS = 1e-12

LONGSIDE = "longside"
OPENCV = "opencv"
_DEFINITIONS = frozenset({LONGSIDE, OPENCV})


def canonicalize_angle(theta, period=180.0):
    """Reduce an angle in degrees to the canonical interval (-period/2, period/2].

    Args:
        theta: Angle in degrees, any finite value.
        period: Symmetry period, 180 for long-side angles and 90 for
            square boxes whose long axis is ambiguous.

    Returns:
        The unique representative of ``theta`` modulo ``period`` lying in
        (-period/2, period/2].
    """
    theta = check_finite_scalar(theta, "theta")
    if period not in (90.0, 180.0, 90, 180):
        raise InvalidInputError(f"period must be 90 or 180, got {period!r}")
    period = float(period)
    r = theta % period
    if r > period / 2.0:
        r -= period
    return r


def angle_distance(a, b, period=180.0):
    """Shortest modular distance in degrees between two angles."""
    a = check_finite_scalar(a, "a")
    b = check_finite_scalar(b, "b")
    period = check_positive_scalar(period, "period")
    d = abs(a - b) % period
    return min(d, period - d)


@dataclass(frozen=True)
class RotatedBoxLongSide:
    """Rotated rectangle in the long-side definition.

    ``h`` is the longer side, ``w`` the shorter, and ``theta`` (degrees,
    canonical in (-90, 90]) is the angle from the x-axis to the ``h`` side.
    """

    x: float
    y: float
    h: float
    w: float
    theta: float

    def __post_init__(self):
        object.__setattr__(self, "x", check_finite_scalar(self.x, "x"))
        object.__setattr__(self, "y", check_finite_scalar(self.y, "y"))
        object.__setattr__(self, "h", check_positive_scalar(self.h, "h"))
        object.__setattr__(self, "w", check_positive_scalar(self.w, "w"))
        object.__setattr__(self, "theta", check_finite_scalar(self.theta, "theta"))
        if self.h < self.w:
            raise InvalidInputError(
                f"long side h must be >= short side w, got h={self.h} w={self.w}; "
                "use RotatedBoxLongSide.from_sides to normalize")
        if not (-90.0 < self.theta <= 90.0):
            raise InvalidInputError(
                f"theta must lie in (-90, 90], got {self.theta}; "
                "use canonicalize_angle first")

    @classmethod
    def from_sides(cls, x, y, side_a, side_b, angle_of_a):
        """Build a canonical box from two sides and the angle of the first.

        Sorts the sides so the longer becomes ``h`` and shifts the angle by
        90 degrees when the roles swap.
        """
        side_a = check_positive_scalar(side_a, "side_a")
        side_b = check_positive_scalar(side_b, "side_b")
        angle_of_a = check_finite_scalar(angle_of_a, "angle_of_a")
        if side_a >= side_b:
            h, w, axis = side_a, side_b, angle_of_a
        else:
            h, w, axis = side_b, side_a, angle_of_a + 90.0
        return cls(x, y, h, w, canonicalize_angle(axis, 180.0))

    @property
    def area(self):
        return self.h * self.w

    def canonical_form(self):
        """Return self, with the square ambiguity resolved to theta in (-45, 45]."""
        if self.h == self.w:
            return replace(self, theta=canonicalize_angle(self.theta, 90.0))
        return self


@dataclass(frozen=True)
class RotatedBoxOpenCV:
    """Rotated rectangle in the OpenCV definition.

    ``theta`` (degrees) lies in [-90, 0) and is measured from the x-axis to
    the ``w`` side; ``h`` is the side along theta + 90. Neither side is
    required to be the longer one.
    """

    x: float
    y: float
    w: float
    h: float
    theta: float

    def __post_init__(self):
        object.__setattr__(self, "x", check_finite_scalar(self.x, "x"))
        object.__setattr__(self, "y", check_finite_scalar(self.y, "y"))
        object.__setattr__(self, "w", check_positive_scalar(self.w, "w"))
        object.__setattr__(self, "h", check_positive_scalar(self.h, "h"))
        object.__setattr__(self, "theta", check_finite_scalar(self.theta, "theta"))
        if not (-90.0 <= self.theta < 0.0):
            raise InvalidInputError(
                f"opencv theta must lie in [-90, 0), got {self.theta}")

    @property
    def area(self):
        return self.h * self.w


@dataclass(frozen=True)
class QuadBox:
    """Quadrilateral given by four (x, y) vertices in drawing order."""

    vertices: tuple

    def __post_init__(self):
        verts = tuple(
            (check_finite_scalar(p[0], "vertex x"), check_finite_scalar(p[1], "vertex y"))
            for p in self.vertices)
        if len(verts) != 4:
            raise InvalidInputError(f"a quad needs 4 vertices, got {len(verts)}")
        object.__setattr__(self, "vertices", verts)
        if _polygon_area(verts) <= 0.0:
            raise DegenerateGeometryError("quad has zero area")
        if _segments_cross(verts[0], verts[1], verts[2], verts[3]) or \
                _segments_cross(verts[1], verts[2], verts[3], verts[0]):
            raise InvalidInputError("quad is self-intersecting")

    @property
    def area(self):
        return _polygon_area(self.vertices)


def _cross(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def _segments_cross(p1, p2, p3, p4):
    """True when segments p1p2 and p3p4 properly intersect (interiors cross)."""
    d1 = _cross(p3, p4, p1)
    d2 = _cross(p3, p4, p2)
    d3 = _cross(p1, p2, p3)
    d4 = _cross(p1, p2, p4)
    return ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0)) and \
        d1 != 0 and d2 != 0 and d3 != 0 and d4 != 0


def _polygon_area(vertices):
    """Unsigned shoelace area of a polygon given as a vertex sequence."""
    area = 0.0
    n = len(vertices)
    for i in range(n):
        x1, y1 = vertices[i]
        x2, y2 = vertices[(i + 1) % n]
        area += x1 * y2 - x2 * y1
    return abs(area) / 2.0


def _signed_area(vertices):
    area = 0.0
    n = len(vertices)
    for i in range(n):
        x1, y1 = vertices[i]
        x2, y2 = vertices[(i + 1) % n]
        area += x1 * y2 - x2 * y1
    return area / 2.0


def longside_to_quad(box):
    """Corner coordinates of a long-side box.

    Vertices start at the rotated image of local corner (+h/2, +w/2) and
    proceed counter-clockwise.

    Args:
        box: RotatedBoxLongSide.

    Returns:
        QuadBox with the four corners.
    """
    if not isinstance(box, RotatedBoxLongSide):
        raise InvalidInputError("longside_to_quad expects a RotatedBoxLongSide")
    t = math.radians(box.theta)
    c, s = math.cos(t), math.sin(t)
    dx, dy = box.h / 2.0, box.w / 2.0
    local = ((dx, dy), (-dx, dy), (-dx, -dy), (dx, -dy))
    verts = tuple(
        (box.x + c * px - s * py, box.y + s * px + c * py) for px, py in local)
    return QuadBox(verts)


def _convex_hull(points):
    """Monotone-chain convex hull, counter-clockwise, no collinear vertices."""
    pts = sorted(set((float(x), float(y)) for x, y in points))
    if len(pts) < 3:
        raise DegenerateGeometryError("hull needs at least 3 distinct points")
    lower = []
    for p in pts:
        while len(lower) >= 2 and _cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper = []
    for p in reversed(pts):
        while len(upper) >= 2 and _cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    hull = lower[:-1] + upper[:-1]
    if len(hull) < 3:
        raise DegenerateGeometryError("points are collinear")
    return hull


def quad_to_longside(quad):
    """Minimum-area enclosing rotated rectangle of a quad, long-side form.

    Scans the convex-hull edges (rotating-calipers style: some edge of the
    hull is flush with the optimal rectangle) and keeps the orientation with
    the smallest bounding area. Exact rectangles round-trip to themselves;
    for squares the long axis is ambiguous and the angle is reported in
    (-45, 45].

    Args:
        quad: QuadBox.

    Returns:
        RotatedBoxLongSide enclosing the quad with minimal area.

    Raises:
        DegenerateGeometryError: if the vertices collapse to a segment.
    """
    if not isinstance(quad, QuadBox):
        raise InvalidInputError("quad_to_longside expects a QuadBox")
    hull = _convex_hull(quad.vertices)
    n = len(hull)
    best = None
    for i in range(n):
        x1, y1 = hull[i]
        x2, y2 = hull[(i + 1) % n]
        ex, ey = x2 - x1, y2 - y1
        norm = math.hypot(ex, ey)
        if norm == 0.0:
            continue
        ux, uy = ex / norm, ey / norm
        vx, vy = -uy, ux
        a = [px * ux + py * uy for px, py in hull]
        b = [px * vx + py * vy for px, py in hull]
        amin, amax = min(a), max(a)
        bmin, bmax = min(b), max(b)
        area = (amax - amin) * (bmax - bmin)
        if best is None or area < best[0]:
            best = (area, ux, uy, amin, amax, bmin, bmax)
    if best is None:
        raise DegenerateGeometryError("no usable hull edge")
    _, ux, uy, amin, amax, bmin, bmax = best
    vx, vy = -uy, ux
    ca, cb = (amin + amax) / 2.0, (bmin + bmax) / 2.0
    cx = ca * ux + cb * vx
    cy = ca * uy + cb * vy
    len_u = amax - amin
    len_v = bmax - bmin
    if len_u <= 0.0 or len_v <= 0.0:
        raise DegenerateGeometryError("enclosing rectangle has zero extent")
    if abs(len_u - len_v) <= 1e-9 * max(len_u, len_v):
        theta = canonicalize_angle(math.degrees(math.atan2(uy, ux)), 90.0)
        h, w = max(len_u, len_v), min(len_u, len_v)
    elif len_u > len_v:
        theta = canonicalize_angle(math.degrees(math.atan2(uy, ux)), 180.0)
        h, w = len_u, len_v
    else:
        theta = canonicalize_angle(math.degrees(math.atan2(vy, vx)), 180.0)
        h, w = len_v, len_u
    return RotatedBoxLongSide(cx, cy, h, w, theta)


def _wrap90(theta):
    """Map an angle to [-90, 90) keeping the 180-degree period."""
    return ((theta + 90.0) % 180.0) - 90.0


def convert_definition(box, target):
    """Convert a rotated box between the long-side and OpenCV definitions.

    The mapping is exact parameter bookkeeping (no polygon round trip):
    the OpenCV angle is the axis of whichever side falls in [-90, 0).
    Squares come back with the long-side angle canonicalized to (-45, 45].

    Args:
        box: RotatedBoxLongSide or RotatedBoxOpenCV.
        target: "longside" or "opencv".

    Returns:
        The equivalent box in the requested definition; the input object is
        returned unchanged when it already is in the target definition.
    """
    check_choice(target, "target", _DEFINITIONS)
    if isinstance(box, RotatedBoxLongSide):
        if target == LONGSIDE:
            return box
        a = _wrap90(box.theta)
        if a < 0.0:
            return RotatedBoxOpenCV(box.x, box.y, w=box.h, h=box.w, theta=a)
        return RotatedBoxOpenCV(box.x, box.y, w=box.w, h=box.h, theta=a - 90.0)
    if isinstance(box, RotatedBoxOpenCV):
        if target == OPENCV:
            return box
        if box.w >= box.h:
            h, w, axis = box.w, box.h, box.theta
        else:
            h, w, axis = box.h, box.w, box.theta + 90.0
        period = 90.0 if h == w else 180.0
        return RotatedBoxLongSide(box.x, box.y, h, w,
                                  canonicalize_angle(axis, period))
    raise InvalidInputError(f"unsupported box type {type(box).__name__}")


def _clip_polygon(subject, clipper):
    """Sutherland-Hodgman clip of ``subject`` by convex ``clipper`` (CCW)."""
    output = list(subject)
    n = len(clipper)
    for i in range(n):
        if not output:
            break
        cx1, cy1 = clipper[i]
        cx2, cy2 = clipper[(i + 1) % n]
        ex, ey = cx2 - cx1, cy2 - cy1
        inp = output
        output = []
        prev = inp[-1]
        prev_in = ex * (prev[1] - cy1) - ey * (prev[0] - cx1) >= -_CLIP_EPS
        for cur in inp:
            cur_in = ex * (cur[1] - cy1) - ey * (cur[0] - cx1) >= -_CLIP_EPS
            if cur_in:
                if not prev_in:
                    output.append(_line_intersect(cx1, cy1, cx2, cy2, prev, cur))
                output.append(cur)
            elif prev_in:
                output.append(_line_intersect(cx1, cy1, cx2, cy2, prev, cur))
            prev, prev_in = cur, cur_in
    return output


def _line_intersect(cx1, cy1, cx2, cy2, p, q):
    """Intersection of segment pq with the infinite line through the clip edge."""
    dcx, dcy = cx1 - cx2, cy1 - cy2
    dpx, dpy = p[0] - q[0], p[1] - q[1]
    den = dcx * dpy - dcy * dpx
    if den == 0.0:
        # Parallel within fp noise: either endpoint is on the line.
        return q
    n1 = cx1 * cy2 - cy1 * cx2
    n2 = p[0] * q[1] - p[1] * q[0]
    return ((n1 * dpx - dcx * n2) / den, (n1 * dpy - dcy * n2) / den)


def convex_polygon_intersection_area(poly_a, poly_b):
    """Intersection area of two convex polygons given as vertex sequences."""
    a = list(poly_a)
    b = list(poly_b)
    if _signed_area(b) < 0.0:
        b.reverse()
    clipped = _clip_polygon(a, b)
    if len(clipped) < 3:
        return 0.0
    return _polygon_area(clipped)


def rotated_iou(box_a, box_b):
    """Exact intersection-over-union of two long-side boxes.

    Clips one corner polygon against the other (Sutherland-Hodgman) and
    measures the result with the shoelace formula. The two arguments are
    ordered by a deterministic key first, so the call is exactly symmetric.

    Args:
        box_a: RotatedBoxLongSide.
        box_b: RotatedBoxLongSide.

    Returns:
        IoU in [0, 1].
    """
    for b in (box_a, box_b):
        if not isinstance(b, RotatedBoxLongSide):
            raise InvalidInputError("rotated_iou expects RotatedBoxLongSide inputs")
    key_a = (box_a.x, box_a.y, box_a.h, box_a.w, box_a.theta)
    key_b = (box_b.x, box_b.y, box_b.h, box_b.w, box_b.theta)
    if key_b < key_a:
        box_a, box_b = box_b, box_a
    quad_a = longside_to_quad(box_a).vertices
    quad_b = longside_to_quad(box_b).vertices
    inter = convex_polygon_intersection_area(quad_a, quad_b)
    # Shoelace areas keep identical boxes at IoU exactly 1 (the self-clip
    # reproduces the vertex list, so the same rounding applies everywhere).
    area_a = _polygon_area(quad_a)
    area_b = _polygon_area(quad_b)
    inter = min(inter, area_a, area_b)
    union = area_a + area_b - inter
    if union <= 0.0:
        return 0.0
    return min(1.0, max(0.0, inter / union))
