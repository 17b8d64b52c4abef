# This file is part of shrinkerlab.
#
# Copyright 2022 the shrinkerlab authors
#
# Shrinkerlab is free software: you can redistribute it and/or modify it
# under the terms of the GNU General Public License as published by
# the Free Software Foundation, either version 3 of the License, or
# (at your option) any later version.
#
# Shrinkerlab is distributed in the hope that it will be useful, but
# WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE. See the GNU
# General Public License for more details.
#
# You should have received a copy of the GNU General Public License
# along with shrinkerlab. If not, see <https://www.gnu.org/licenses/>.

"""Discrete geometry of profile curves in the (x, r) half-plane.

A profile curve is the meridian of a hypersurface of revolution in
R^{n+1}: the point (x, r) sweeps the (n-1)-sphere of radius r around the
x-axis. Nodes are traversed counterclockwise and the unit normal points
out of the region bounded by the profile.
"""

import attr
import logging
import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.interpolate import CubicSpline
from scipy.spatial import cKDTree
from typing import Optional, Tuple
from .errors import (
    AxisContactError,
    InvalidCurveError,
    OffsetError,
    SelfIntersectionError,
)

logger = logging.getLogger('shrinkerlab')

MIN_RESAMPLE_NODES = 8


def as_node_array(arg):
    nodes = np.array(arg, dtype=float)
    if nodes.ndim != 2 or nodes.shape[1] != 2:
        raise InvalidCurveError('Nodes must be a list of (x, r) pairs')
    nodes.setflags(write=False)
    return nodes


def _validate_dimension(instance, attribute, value):
    if value < 2:
        raise InvalidCurveError(f'Hypersurface dimension must be at least 2, got {value}')


@attr.frozen(eq=False)
class ProfileCurve:
    nodes: np.ndarray = attr.field(converter=as_node_array)
    n: int = attr.field(default=2, converter=int, validator=_validate_dimension)
    closed: bool = attr.field(default=True, converter=bool)

    def __attrs_post_init__(self):
        if len(self.nodes) < 3:
            raise InvalidCurveError('A profile curve needs at least 3 nodes')

        bad = np.flatnonzero(~np.isfinite(self.nodes).all(axis=1))
        if bad.size > 0:
            raise InvalidCurveError(f'Node {bad[0]} is not finite', node=int(bad[0]))

        r = self.nodes[:, 1]
        if self.closed:
            inner = r
            offset = 0
        else:
            inner = r[1:-1]
            offset = 1
            for end in (0, len(r) - 1):
                if r[end] < 0:
                    raise InvalidCurveError(
                        f'Node {end} has r = {r[end]} < 0', node=end)
        bad = np.flatnonzero(inner <= 0)
        if bad.size > 0:
            node = int(bad[0]) + offset
            raise InvalidCurveError(
                f'Node {node} has r = {r[node]} <= 0', node=node)

        scale = max(float(np.abs(self.nodes).max()), 1.0)
        if signed_area(self.nodes) < -1e-12 * scale**2 or \
           (self.closed and signed_area(self.nodes) <= 0):
            raise InvalidCurveError('Profile curve must be oriented counterclockwise')

    @classmethod
    def counterclockwise(cls, nodes, n=2, closed=True):
        """Build a curve, reversing the node order if needed."""
        nodes = np.asarray(nodes, dtype=float)
        if signed_area(nodes) < 0:
            nodes = nodes[::-1]
        return cls(nodes, n=n, closed=closed)

    @property
    def x(self):
        return self.nodes[:, 0]

    @property
    def r(self):
        return self.nodes[:, 1]

    @property
    def size(self):
        return len(self.nodes)

    @property
    def axis_ends(self):
        """Open-curve ends that lie on the rotation axis."""
        if self.closed:
            return (False, False)
        return (self.nodes[0, 1] == 0.0, self.nodes[-1, 1] == 0.0)

    def segments(self):
        if self.closed:
            return self.nodes, np.roll(self.nodes, -1, axis=0)
        return self.nodes[:-1], self.nodes[1:]

    def segment_lengths(self):
        a, b = self.segments()
        return np.hypot(*(b - a).T)

    @property
    def length(self):
        return float(self.segment_lengths().sum())

    @property
    def area(self):
        """Area enclosed by the profile (closed through the axis for open
        axis-ended curves)."""
        return signed_area(self.nodes)

    def centroid(self):
        """Length-weighted centroid of the polyline."""
        a, b = self.segments()
        w = np.hypot(*(b - a).T)
        return ((a + b) * 0.5 * w[:, None]).sum(axis=0) / w.sum()

    def diameter(self):
        extent = self.nodes.max(axis=0) - self.nodes.min(axis=0)
        return float(np.hypot(*extent))

    def spacing_ratio(self):
        h = self.segment_lengths()
        return float(h.max() / h.min())

    def scaled(self, factor):
        return ProfileCurve(self.nodes * factor, n=self.n, closed=self.closed)

    def with_nodes(self, nodes):
        return ProfileCurve(nodes, n=self.n, closed=self.closed)

    def reflected(self):
        """Mirror image under x -> -x, kept counterclockwise."""
        mirrored = self.nodes * np.array([-1.0, 1.0])
        return ProfileCurve(mirrored[::-1], n=self.n, closed=self.closed)


@attr.frozen(eq=False)
class GeometryBundle:
    tangent: np.ndarray
    normal: np.ndarray
    kappa: np.ndarray
    rotational: np.ndarray  # nu_r / r, the curvature of the revolution orbits
    H: np.ndarray
    A2: np.ndarray
    support: np.ndarray
    h_prev: np.ndarray
    h_next: np.ndarray


@attr.frozen
class Enclosure:
    enclosed: bool
    intersecting: bool

    def __bool__(self):
        return self.enclosed


@attr.frozen
class Proximity:
    hausdorff: float
    normal_sup: float
    curvature_sup: float


def signed_area(nodes):
    x = nodes[:, 0]
    r = nodes[:, 1]
    return 0.5 * float(np.dot(x, np.roll(r, -1)) - np.dot(np.roll(x, -1), r))


def ellipse_profile(center, a, b, count, n=2):
    """Axis-parallel ellipse with semi-axes a (along x) and b (along r)."""
    phi = 2 * np.pi * np.arange(count) / count
    nodes = np.column_stack([center[0] + a * np.cos(phi),
                             center[1] + b * np.sin(phi)])
    return ProfileCurve(nodes, n=n)


def circle_profile(center, radius, count, n=2):
    return ellipse_profile(center, radius, radius, count, n=n)


def _ghost(end, neighbour):
    if end[1] == 0.0:
        # Axis end: mirror image of the neighbour continues the meridian
        return np.array([neighbour[0], -neighbour[1]])
    return 2.0 * end - neighbour


def _padded(curve, width):
    """Nodes with width extra nodes on both sides, wrapped or ghosted."""
    p = curve.nodes
    if curve.closed:
        return np.concatenate([p[-width:], p, p[:width]])
    left = [_ghost(p[0], p[k]) for k in range(width, 0, -1)]
    right = [_ghost(p[-1], p[-1 - k]) for k in range(1, width + 1)]
    return np.vstack([left, p, right])


def _triple(prev, p, nxt):
    """Tangent of the quadratic through three nodes and their Menger curvature."""
    dm = p - prev
    dp = nxt - p
    hm = np.hypot(dm[:, 0], dm[:, 1])
    hp = np.hypot(dp[:, 0], dp[:, 1])
    d = (hm**2)[:, None] * dp + (hp**2)[:, None] * dm
    tangent = d / np.hypot(d[:, 0], d[:, 1])[:, None]
    chord = np.hypot(*(nxt - prev).T)
    cross = dm[:, 0] * dp[:, 1] - dm[:, 1] * dp[:, 0]
    return tangent, 2.0 * cross / (hm * hp * chord)


def default_r_floor(curve):
    return 1e-6 * radial_extent(curve)[1]


def geometry_bundle(curve: ProfileCurve, r_floor: Optional[float] = None) -> GeometryBundle:
    """Per-node tangent, outward normal and curvatures.

    The tangent is the derivative of the quadratic through three
    consecutive nodes and the profile curvature is the Menger curvature
    of the same triple. Both are exact on circles and their error is
    even in the stride, so curves of at least 8 nodes combine the
    neighbour triple with the next-but-one triple (Richardson
    extrapolation). That is fourth order on smoothly spaced nodes and
    still exact on circles.
    """
    if r_floor is None:
        r_floor = default_r_floor(curve)

    p = curve.nodes
    m = len(p)
    r = p[:, 1]
    interior = r != 0.0 if not curve.closed else np.ones(m, dtype=bool)
    low = np.flatnonzero(interior & (r < r_floor))
    if low.size > 0:
        node = int(low[0])
        raise AxisContactError(
            f'Node {node} is at r = {r[node]:.3g}, below the axis floor {r_floor:.3g}',
            node=node)

    w = 2 if m >= 8 else 1
    q = _padded(curve, w)
    prev = q[w - 1:w - 1 + m]
    nxt = q[w + 1:w + 1 + m]
    hm = np.hypot(*(p - prev).T)
    hp = np.hypot(*(nxt - p).T)
    degenerate = np.flatnonzero((hm == 0) | (hp == 0))
    if degenerate.size > 0:
        node = int(degenerate[0])
        raise InvalidCurveError(f'Node {node} coincides with a neighbour', node=node)

    tangent, kappa = _triple(prev, p, nxt)
    if w == 2:
        tangent_wide, kappa_wide = _triple(q[:m], p, q[4:4 + m])
        tangent = 4.0 * tangent - tangent_wide
        tangent /= np.hypot(tangent[:, 0], tangent[:, 1])[:, None]
        kappa = (4.0 * kappa - kappa_wide) / 3.0
    normal = np.column_stack([tangent[:, 1], -tangent[:, 0]])

    rotational = np.empty_like(kappa)
    rotational[interior] = normal[interior, 1] / r[interior]
    rotational[~interior] = kappa[~interior]

    n = curve.n
    H = kappa + (n - 1) * rotational
    A2 = kappa**2 + (n - 1) * rotational**2
    support = p[:, 0] * normal[:, 0] + r * normal[:, 1]

    return GeometryBundle(tangent=tangent, normal=normal, kappa=kappa,
                          rotational=rotational, H=H, A2=A2,
                          support=support, h_prev=hm, h_next=hp)


def shrinker_residual(curve: ProfileCurve) -> np.ndarray:
    g = geometry_bundle(curve)
    return g.H - 0.5 * g.support


def parabolic_residual(curve: ProfileCurve, t: float) -> Tuple[np.ndarray, np.ndarray]:
    """Returns (S, F) with S = H - <X,nu>/(-2t) and F = <X,nu> + 2tH."""
    if t >= 0:
        raise ValueError(f'Parabolic residual is defined only for t < 0, got t = {t}')

    g = geometry_bundle(curve)
    S = g.H - g.support / (-2.0 * t)
    F = g.support + 2.0 * t * g.H
    return S, F


def _spline_parameterization(curve):
    """Cubic spline through the nodes in cumulative chord length.

    Returns (spline, u_start, u_end) where [u_start, u_end] covers the
    curve itself.
    """
    p = curve.nodes
    if curve.closed:
        pts = np.vstack([p, p[:1]])
        u = np.concatenate([[0.0], np.cumsum(np.hypot(*np.diff(pts, axis=0).T))])
        return CubicSpline(u, pts, bc_type='periodic'), 0.0, u[-1]

    left, right = curve.axis_ends
    mirror = np.array([1.0, -1.0])
    pieces = []
    pad = min(3, len(p) - 1)
    if left:
        pieces.append(p[pad:0:-1] * mirror)
    pieces.append(p)
    if right:
        pieces.append(p[-2:-2 - pad:-1] * mirror)
    pts = np.vstack(pieces)
    u = np.concatenate([[0.0], np.cumsum(np.hypot(*np.diff(pts, axis=0).T))])
    start = pad if left else 0
    end = len(pts) - 1 - (pad if right else 0)
    return CubicSpline(u, pts, bc_type='not-a-knot'), u[start], u[end]


def resample(curve: ProfileCurve, target_spacing: float,
             uniform_tol: float = 1e-3) -> ProfileCurve:
    """Redistribute nodes at equal arc length along a cubic spline.

    Curves that already have the requested node count and a chord spacing
    ratio within 1 + uniform_tol are returned unchanged.
    """
    if curve.size < MIN_RESAMPLE_NODES:
        raise InvalidCurveError(
            f'Resampling needs at least {MIN_RESAMPLE_NODES} nodes, got {curve.size}')
    if target_spacing <= 0:
        raise ValueError(f'Target spacing must be positive, got {target_spacing}')

    segments = max(MIN_RESAMPLE_NODES, int(round(curve.length / target_spacing)))
    return resample_count(curve, segments if curve.closed else segments + 1,
                          uniform_tol=uniform_tol)


def resample_count(curve: ProfileCurve, count: int,
                   uniform_tol: float = 1e-3) -> ProfileCurve:
    if count == curve.size and curve.spacing_ratio() <= 1 + uniform_tol:
        return curve

    spline, u0, u1 = _spline_parameterization(curve)
    sub = 16
    uu = np.linspace(u0, u1, sub * curve.size + 1)
    speed = np.hypot(*spline(uu, 1).T)
    s = cumulative_trapezoid(speed, uu, initial=0.0)

    segments = count if curve.closed else count - 1
    targets = s[-1] * np.arange(count) / segments
    nodes = spline(np.interp(targets, s, uu))
    if not curve.closed:
        nodes[0] = curve.nodes[0]
        nodes[-1] = curve.nodes[-1]

    logger.log(5, f'Resampled {curve.size} -> {count} nodes')
    return curve.with_nodes(nodes)


def _segment_intersections(a1, b1, a2, b2):
    """Proper crossings of segment pairs given as row-aligned arrays."""
    def cross(u, v):
        return u[:, 0] * v[:, 1] - u[:, 1] * v[:, 0]

    e2 = b2 - a2
    e1 = b1 - a1
    d1 = cross(e2, a1 - a2)
    d2 = cross(e2, b1 - a2)
    d3 = cross(e1, a2 - a1)
    d4 = cross(e1, b2 - a1)
    return (d1 * d2 < 0) & (d3 * d4 < 0)


def self_intersection(curve: ProfileCurve) -> Optional[Tuple[int, int]]:
    """First pair of crossing segments, or None for a simple curve."""
    a, b = curve.segments()
    m = len(a)
    reach = np.hypot(*(b - a).T).max()
    tree = cKDTree(0.5 * (a + b))
    pairs = tree.query_pairs(reach * (1 + 1e-9), output_type='ndarray')
    if len(pairs) == 0:
        return None

    i, j = pairs[:, 0], pairs[:, 1]
    gap = np.abs(i - j)
    keep = gap > 1
    if curve.closed:
        keep &= gap < m - 1
    i, j = i[keep], j[keep]
    hits = np.flatnonzero(_segment_intersections(a[i], b[i], a[j], b[j]))
    if hits.size == 0:
        return None

    k = hits[np.lexsort((j[hits], i[hits]))[0]]
    return (int(min(i[k], j[k])), int(max(i[k], j[k])))


def check_simple(curve: ProfileCurve):
    hit = self_intersection(curve)
    if hit is not None:
        raise SelfIntersectionError(f'Segments {hit[0]} and {hit[1]} cross', hit)


def curves_intersect(a: ProfileCurve, b: ProfileCurve) -> bool:
    a1, b1 = a.segments()
    a2, b2 = b.segments()
    reach = 0.5 * (np.hypot(*(b1 - a1).T).max() + np.hypot(*(b2 - a2).T).max())
    tree = cKDTree(0.5 * (a2 + b2))
    candidates = tree.query_ball_point(0.5 * (a1 + b1), reach * (1 + 1e-9))
    counts = np.array([len(c) for c in candidates])
    if counts.sum() == 0:
        return False

    i = np.repeat(np.arange(len(a1)), counts)
    j = np.concatenate([np.asarray(c, dtype=int) for c in candidates])
    return bool(_segment_intersections(a1[i], b1[i], a2[j], b2[j]).any())


def contains(curve: ProfileCurve, points, chunk=256) -> np.ndarray:
    """Even-odd point-in-polygon test against the region of curve."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    v = curve.nodes
    w = np.roll(v, -1, axis=0)
    inside = np.empty(len(points), dtype=bool)
    for start in range(0, len(points), chunk):
        px = points[start:start + chunk, 0][:, None]
        pr = points[start:start + chunk, 1][:, None]
        straddles = (v[:, 1] > pr) != (w[:, 1] > pr)
        with np.errstate(divide='ignore', invalid='ignore'):
            x_cross = v[:, 0] + (pr - v[:, 1]) * (w[:, 0] - v[:, 0]) / (w[:, 1] - v[:, 1])
        crossings = np.count_nonzero(straddles & (px < x_cross), axis=1)
        inside[start:start + chunk] = crossings % 2 == 1
    return inside


def enclosure_test(inner: ProfileCurve, outer: ProfileCurve) -> Enclosure:
    intersecting = curves_intersect(inner, outer)
    enclosed = (not intersecting) and bool(contains(outer, inner.nodes).all())
    return Enclosure(enclosed=enclosed, intersecting=intersecting)


def nearest_points(points, curve: ProfileCurve):
    """Closest points on the polyline of curve.

    Returns (distance, segment index, segment parameter in [0, 1]) per
    query point.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    a, b = curve.segments()
    e = b - a
    half = 0.5 * np.hypot(*e.T).max()

    node_dist, _ = cKDTree(curve.nodes).query(points)
    tree = cKDTree(0.5 * (a + b))
    candidates = tree.query_ball_point(points, node_dist + half * (1 + 1e-9))
    counts = np.array([len(c) for c in candidates])
    i = np.repeat(np.arange(len(points)), counts)
    j = np.concatenate([np.asarray(c, dtype=int) for c in candidates])

    ee = np.einsum('ij,ij->i', e[j], e[j])
    u = np.clip(np.einsum('ij,ij->i', points[i] - a[j], e[j]) / ee, 0.0, 1.0)
    foot = a[j] + u[:, None] * e[j]
    dist = np.hypot(*(points[i] - foot).T)

    order = np.lexsort((dist, i))
    _, first = np.unique(i[order], return_index=True)
    best = order[first]
    return dist[best], j[best], u[best]


def _segment_distance(points, start, end):
    e = end - start
    ee = np.einsum('ij,ij->i', e, e)
    u = np.einsum('ij,ij->i', points - start, e) / np.where(ee > 0, ee, 1.0)
    foot = start + np.clip(u, 0.0, 1.0)[:, None] * e
    return np.hypot(*(points - foot).T)


def _directed_hausdorff(a, b, tol, max_rounds=64):
    # The distance to one segment of b is convex along a segment of a, so
    # a piece whose ends share a nearest segment peaks at an end.  Other
    # pieces are bisected until their bound is within tol.
    start, end = b.segments()
    dist, seg, _ = nearest_points(a.nodes, b)
    best = float(dist.max())

    i0 = np.arange(len(a.segments()[0]))
    i1 = (i0 + 1) % a.size
    p0, p1 = a.nodes[i0], a.nodes[i1]
    d0, d1, k0, k1 = dist[i0], dist[i1], seg[i0], seg[i1]
    for _ in range(max_rounds):
        bound = np.minimum(np.maximum(d0, _segment_distance(p1, start[k0], end[k0])),
                           np.maximum(_segment_distance(p0, start[k1], end[k1]), d1))
        keep = bound > best + tol
        if not keep.any():
            return best
        p0, p1, d0, d1, k0, k1 = (v[keep] for v in (p0, p1, d0, d1, k0, k1))
        mid = 0.5 * (p0 + p1)
        dm, km, _ = nearest_points(mid, b)
        best = max(best, float(dm.max()))
        p0, p1 = np.vstack([p0, mid]), np.vstack([mid, p1])
        d0, d1 = np.concatenate([d0, dm]), np.concatenate([dm, d1])
        k0, k1 = np.concatenate([k0, km]), np.concatenate([km, k1])

    logger.debug(f'Hausdorff refinement stopped with {len(p0)} open pieces')
    return best


def hausdorff_distance(a: ProfileCurve, b: ProfileCurve, tol: float = 1e-12) -> float:
    """Symmetric Hausdorff distance of the two polylines.

    Every point of each polyline counts, not just its nodes. The result is
    exact up to tol times the larger diameter.
    """
    tol = tol * max(a.diameter(), b.diameter(), 1.0)
    return max(_directed_hausdorff(a, b, tol), _directed_hausdorff(b, a, tol))


def proximity(a: ProfileCurve, b: ProfileCurve) -> Proximity:
    """Hausdorff distance plus sup-differences of normal and curvature
    under closest-node matching."""
    ga = geometry_bundle(a)
    gb = geometry_bundle(b)
    _, match = cKDTree(a.nodes).query(b.nodes)
    normal_sup = np.hypot(*(gb.normal - ga.normal[match]).T).max()
    curvature_sup = np.abs(gb.kappa - ga.kappa[match]).max()
    return Proximity(hausdorff=hausdorff_distance(a, b),
                     normal_sup=float(normal_sup),
                     curvature_sup=float(curvature_sup))


def radial_extent(curve: ProfileCurve) -> Tuple[float, float]:
    d = np.hypot(curve.x, curve.r)
    return float(d.min()), float(d.max())


def normal_offset(curve: ProfileCurve, a: float,
                  r_floor: Optional[float] = None) -> ProfileCurve:
    """Move every node by a along its outward normal (a < 0 is inward)."""
    if a == 0:
        return curve

    g = geometry_bundle(curve, r_floor=r_floor)
    focal = np.abs(a) * np.abs(g.kappa)
    worst = int(np.argmax(focal))
    if focal[worst] >= 1:
        raise OffsetError(
            f'Offset {a} exceeds the focal distance {1 / abs(g.kappa[worst]):.4g} '
            f'at node {worst}', arc=(worst, worst))

    nodes = curve.nodes + a * g.normal
    low = np.flatnonzero(nodes[:, 1] <= 0)
    if not curve.closed:
        low = low[(low != 0) & (low != curve.size - 1)]
    if low.size > 0:
        raise OffsetError(
            f'Offset {a} pushes nodes {low[0]}..{low[-1]} across the axis',
            arc=(int(low[0]), int(low[-1])))

    moved = curve.with_nodes(nodes)
    hit = self_intersection(moved)
    if hit is not None:
        raise OffsetError(
            f'Offset {a} folds the curve between nodes {hit[0]} and {hit[1]}',
            arc=hit)

    return moved
