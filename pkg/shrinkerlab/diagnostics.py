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

import attr
import math
import logging
import numpy as np
from typing import Optional, Tuple
from .errors import NonPositiveQuantityError
from .flow import Trajectory
from .profile import ProfileCurve, geometry_bundle, nearest_points

logger = logging.getLogger('shrinkerlab')


def _half_cells(r_node, r_other, h, w):
    """Integral of r^w over the half segment from a node toward its
    neighbour, by Simpson's rule (r is linear along a segment)."""
    r_mid = 0.5 * (r_node + r_other)
    r_quarter = 0.5 * (r_node + r_mid)
    return h / 12 * (r_node**w + 4 * r_quarter**w + r_mid**w)


def surface_laplacian(curve: ProfileCurve, f: np.ndarray) -> np.ndarray:
    """Laplace-Beltrami operator of the revolved hypersurface applied to
    a rotationally symmetric function given at the nodes.

    Finite volumes for r^{1-n} d/ds (r^{n-1} df/ds) on the polyline, with
    dual cells between segment midpoints. At an axis end the limit
    n f_ss is used; other open ends get NaN.
    """
    w = curve.n - 1
    r = curve.r
    h = curve.segment_lengths()
    if curve.closed:
        r_next = np.roll(r, -1)
        flux = ((0.5 * (r + r_next))**w) * (np.roll(f, -1) - f) / h
        cell = _half_cells(r, r_next, h, w) + \
            _half_cells(r, np.roll(r, 1), np.roll(h, 1), w)
        return (flux - np.roll(flux, 1)) / cell

    flux = ((0.5 * (r[:-1] + r[1:]))**w) * np.diff(f) / h
    cell = _half_cells(r[1:-1], r[2:], h[1:], w) + \
        _half_cells(r[1:-1], r[:-2], h[:-1], w)
    lap = np.full(len(f), np.nan)
    lap[1:-1] = (flux[1:] - flux[:-1]) / cell
    left, right = curve.axis_ends
    if left:
        lap[0] = curve.n * 2 * (f[1] - f[0]) / h[0]**2
    if right:
        lap[-1] = curve.n * 2 * (f[-2] - f[-1]) / h[-1]**2
    return lap


def _F(curve, t):
    g = geometry_bundle(curve)
    return g.support + 2 * t * g.H, g


def _interpolate_on(curve, values, points):
    _, seg, u = nearest_points(points, curve)
    nxt = (seg + 1) % curve.size
    return (1 - u) * values[seg] + u * values[nxt]


@attr.frozen(eq=False)
class JacobiReport:
    t: np.ndarray
    residual: np.ndarray
    floor: np.ndarray

    @property
    def floor_dominated(self):
        return bool(np.any(self.floor > 0.5 * self.residual))


def _time_derivative(states, values, k, before, after):
    """Three-point dF/dt at the nodes of states[k] and the factor c with
    error c F_ttt."""
    now = states[k]
    Fm = _interpolate_on(states[before].curve, values[before], now.curve.nodes)
    Fp = _interpolate_on(states[after].curve, values[after], now.curve.nodes)
    F = values[k]
    dm = now.t - states[before].t
    dp = states[after].t - now.t
    dF = (dm**2 * (Fp - F) + dp**2 * (F - Fm)) / (dm * dp * (dm + dp))
    return dF, dm * dp / 6


def jacobi_residual(trajectory: Trajectory) -> JacobiReport:
    """Sup norm of dF/dt - Delta F - |A|^2 F per interior snapshot.

    F = <X,nu> + 2tH. The time derivative is a three-point difference
    along closest-point correspondences between consecutive snapshots.
    The floor is its truncation error, estimated against the wider
    stencil reaching two snapshots out; it is NaN with fewer than four
    snapshots.
    """
    states = trajectory.states
    computed = [_F(s.curve, s.t) for s in states]
    values = [F for F, _ in computed]
    last = len(states) - 1
    times = []
    norms = []
    floors = []
    for k in range(1, last):
        F_now, g = computed[k]
        dF, c = _time_derivative(states, values, k, k - 1, k + 1)
        residual = dF - surface_laplacian(states[k].curve, F_now) - g.A2 * F_now

        wide = (max(k - 2, 0), min(k + 2, last))
        if wide == (k - 1, k + 1):
            floor = math.nan
        else:
            dW, cw = _time_derivative(states, values, k, *wide)
            floor = c * float(np.nanmax(np.abs(dW - dF))) / (cw - c)

        times.append(states[k].t)
        norms.append(float(np.nanmax(np.abs(residual))))
        floors.append(floor)

    report = JacobiReport(t=np.array(times), residual=np.array(norms),
                          floor=np.array(floors))
    if len(times) and report.floor_dominated:
        worst = float(np.nanmax(report.floor))
        logger.warning(f'Snapshot cadence too coarse for the Jacobi residual, '
                       f'time-difference floor about {worst:.3g}')
    return report


def _pair_extremes(p, normal, targets, exclude_self):
    """Extremes of 2<x - y, nu(x)>/|x - y|^2 over target points y."""
    upper = np.full(len(p), -np.inf)
    lower = np.full(len(p), np.inf)
    for start in range(0, len(p), 256):
        block = slice(start, start + 256)
        diff = p[block, None, :] - targets[None, :, :]
        den = np.einsum('ijk,ijk->ij', diff, diff)
        num = 2 * np.einsum('ijk,ik->ij', diff, normal[block])
        degenerate = den == 0
        if exclude_self:
            rows = np.arange(len(p))[block]
            degenerate[np.arange(len(rows)), rows] = True
        with np.errstate(divide='ignore', invalid='ignore'):
            ratio = num / den
        upper[block] = np.where(degenerate, -np.inf, ratio).max(axis=1)
        lower[block] = np.where(degenerate, np.inf, ratio).min(axis=1)
    return upper, lower


def noncollapsing_ratios(curve: ProfileCurve, quantity: str = 'H',
                         t: Optional[float] = None) -> Tuple[float, float]:
    """(max kbar/q, min kunder/q) for the inscribed and exterior ball
    curvatures of the revolved hypersurface.

    For a fixed pair of profile points the ball ratio is monotone in the
    cosine of the revolution angle between them, so it suffices to
    compare each node with all nodes and with their mirror images across
    the axis. The limits y -> x along the profile and along the orbit are
    the principal curvatures kappa and nu_r/r. quantity 'G' is
    -(<X,nu> + 2tH) and needs t < 0.
    """
    g = geometry_bundle(curve)
    if quantity == 'H':
        q = g.H
    elif quantity == 'G':
        if t is None or t >= 0:
            raise ValueError('Quantity G is defined only for t < 0')
        q = -(g.support + 2 * t * g.H)
    else:
        raise ValueError(f'Unknown noncollapsing quantity {quantity}')

    bad = np.flatnonzero(q <= 0)
    if bad.size > 0:
        node = int(bad[0])
        raise NonPositiveQuantityError(
            f'Quantity {quantity} = {q[node]:.3g} is not positive at node {node}', node)

    p = curve.nodes
    up_same, low_same = _pair_extremes(p, g.normal, p, exclude_self=True)
    up_mirror, low_mirror = _pair_extremes(p, g.normal, p * np.array([1.0, -1.0]),
                                           exclude_self=False)
    kbar = np.max([up_same, up_mirror, g.kappa, g.rotational], axis=0)
    kunder = np.min([low_same, low_mirror, g.kappa, g.rotational], axis=0)
    return float((kbar / q).max()), float((kunder / q).min())
