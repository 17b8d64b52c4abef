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

"""Rotationally symmetric mean curvature flow of profile curves.

Nodes move with the mean curvature vector -H nu of the revolved
hypersurface, advanced by Heun's method. An additional tangential
relaxation keeps the spacing uniform, and the curve is resampled when
the spacing or the curvature resolution degrades.
"""

import attr
import logging
import math
import time
import numpy as np
from typing import List, Optional
from .errors import InvalidCurveError, StepRejected
from .profile import (
    ProfileCurve,
    geometry_bundle,
    radial_extent,
    resample_count,
    self_intersection,
)

logger = logging.getLogger('shrinkerlab')

SERIES_COLUMNS = ('t', 'max_abs_A', 'd_min', 'd_max', 'min_S', 'max_F',
                  'length', 'area', 'min_r')

SINGULAR = 'singular'
HORIZON = 'horizon'
TRUNCATED = 'truncated'
FAULT = 'fault'


@attr.frozen
class FlowOptions:
    c_cfl: float = attr.field(default=0.2, validator=attr.validators.gt(0))
    c_diff: float = attr.field(default=0.4, validator=attr.validators.gt(0))
    redistribution: float = 0.5
    max_spacing_ratio: float = 1.5
    retry_cap: int = 8
    max_steps: int = 5_000_000
    wall_clock: Optional[float] = None
    snapshot_interval: float = 0.01
    snapshot_steps: int = 1000
    curvature_blowup: float = 1e3
    diameter_collapse: float = 1e-3
    min_nodes: int = 64
    adapt_nodes: bool = True
    adapt_every: int = 50
    simplicity_every: int = 25
    r_floor_factor: float = 1e-6


@attr.frozen(eq=False)
class FlowState:
    curve: ProfileCurve
    t: float
    step_index: int = 0


@attr.frozen
class FlowEvent:
    t: float
    kind: str
    payload: dict = attr.Factory(dict)


@attr.define(eq=False)
class Trajectory:
    states: List[FlowState] = attr.Factory(list)
    events: List[FlowEvent] = attr.Factory(list)
    series: np.ndarray = attr.Factory(lambda: np.empty((0, len(SERIES_COLUMNS))))
    initial_d_max: float = math.nan
    initial_diameter: float = math.nan
    t_sing: Optional[float] = None

    def column(self, name):
        return self.series[:, SERIES_COLUMNS.index(name)]

    @property
    def times(self):
        return np.array([s.t for s in self.states])

    @property
    def final(self):
        return self.states[-1]

    @property
    def terminal_event(self):
        return self.events[-1] if self.events else None


def mcf_velocity(curve: ProfileCurve, r_floor: Optional[float] = None) -> np.ndarray:
    """Normal speed of every node along its outward normal."""
    return -geometry_bundle(curve, r_floor=r_floor).H


def dt_max(curve: ProfileCurve, opts: FlowOptions = FlowOptions(), bundle=None) -> float:
    """Curvature-scaled step bound, capped by the explicit diffusion limit
    of the node spacing."""
    g = bundle if bundle is not None else geometry_bundle(curve)
    h_min = curve.segment_lengths().min()
    return min(opts.c_cfl / g.A2.max(), opts.c_diff * h_min**2 / curve.n)


def _velocity(curve, r_floor):
    g = geometry_bundle(curve, r_floor=r_floor)
    return -g.H[:, None] * g.normal


def _redistribute(curve, strength):
    """Slide nodes along the tangent toward equal spacing."""
    p = curve.nodes
    if curve.closed:
        prev = np.roll(p, 1, axis=0)
        nxt = np.roll(p, -1, axis=0)
    else:
        prev = np.vstack([p[:1], p[:-1]])
        nxt = np.vstack([p[1:], p[-1:]])
    hm = np.hypot(*(p - prev).T)
    hp = np.hypot(*(nxt - p).T)
    chord = nxt - prev
    tangent = chord / np.hypot(*chord.T)[:, None]
    shift = 0.5 * strength * (hp - hm)
    if not curve.closed:
        shift[0] = shift[-1] = 0.0
    return p + shift[:, None] * tangent


def _check_folds(curve):
    a, b = curve.segments()
    e = b - a
    following = np.roll(e, -1, axis=0) if curve.closed else e[1:]
    dots = np.einsum('ij,ij->i', e[:len(following)], following)
    folds = np.flatnonzero(dots <= 0)
    if folds.size > 0:
        raise StepRejected(f'Curve folds back at node {folds[0] + 1}')


def step(state: FlowState, dt: float, opts: FlowOptions = FlowOptions(),
         r_floor: Optional[float] = None, check_simple: bool = True) -> FlowState:
    """One Heun step followed by tangential redistribution.

    Raises StepRejected when the new curve is invalid.
    """
    if dt == 0:
        return state

    curve = state.curve
    if r_floor is None:
        r_floor = opts.r_floor_factor * radial_extent(curve)[1]

    try:
        k1 = _velocity(curve, r_floor)
        predictor = curve.with_nodes(curve.nodes + dt * k1)
        k2 = _velocity(predictor, r_floor)
        moved = curve.with_nodes(curve.nodes + 0.5 * dt * (k1 + k2))
        if opts.redistribution > 0:
            moved = moved.with_nodes(_redistribute(moved, opts.redistribution))
    except InvalidCurveError as ex:
        raise StepRejected(ex.message)

    _check_folds(moved)
    r = moved.r if moved.closed else moved.r[1:-1]
    if r.min() < r_floor:
        raise StepRejected(f'Axis contact at r = {r.min():.3g}')
    if check_simple:
        hit = self_intersection(moved)
        if hit is not None:
            raise StepRejected(f'Segments {hit[0]} and {hit[1]} cross')

    return FlowState(curve=moved, t=state.t + dt, step_index=state.step_index + 1)


def _series_row(state, bundle):
    curve = state.curve
    t = state.t
    d_min, d_max = radial_extent(curve)
    if t < 0:
        S = bundle.H - bundle.support / (-2 * t)
        F = bundle.support + 2 * t * bundle.H
        min_S, max_F = float(S.min()), float(F.max())
    else:
        min_S = max_F = math.nan
    return (t, math.sqrt(bundle.A2.max()), d_min, d_max, min_S, max_F,
            curve.length, curve.area, float(curve.r.min()))


class _NodeBudget:
    """Node count that keeps the curvature resolution of the initial
    curve."""
    def __init__(self, curve, opts):
        g = geometry_bundle(curve)
        self.initial = curve.size
        self.floor = min(curve.size, opts.min_nodes)
        self.resolution = curve.length * np.abs(g.kappa).max() / curve.size

    def target(self, curve, bundle):
        wanted = math.ceil(curve.length * np.abs(bundle.kappa).max() / self.resolution)
        return max(min(self.initial, wanted), self.floor)


def _maybe_remesh(state, bundle, budget, opts):
    curve = state.curve
    count = curve.size
    if opts.adapt_nodes and state.step_index % opts.adapt_every == 0:
        wanted = budget.target(curve, bundle)
        if wanted < 0.8 * count or wanted > 1.25 * count:
            count = wanted
    if count == curve.size and curve.spacing_ratio() <= opts.max_spacing_ratio:
        return state

    logger.debug(f'Remeshing at t={state.t:.6g}: {curve.size} -> {count} nodes')
    remeshed = resample_count(curve, count, uniform_tol=0.0)
    return attr.evolve(state, curve=remeshed)


def evolve(state: FlowState, opts: FlowOptions = FlowOptions(),
           t_end: Optional[float] = None, r_floor: Optional[float] = None) -> Trajectory:
    """Flow until a singularity, the time horizon t_end or a budget is
    reached.

    The terminal event is the last entry of the returned trajectory's
    events.
    """
    curve0 = state.curve
    d_max0 = radial_extent(curve0)[1]
    diameter0 = curve0.diameter()
    if r_floor is None:
        r_floor = opts.r_floor_factor * d_max0

    trajectory = Trajectory(initial_d_max=d_max0, initial_diameter=diameter0)
    trajectory.states.append(state)
    budget = _NodeBudget(curve0, opts)
    rows = []
    last_snapshot_t = state.t
    last_snapshot_step = state.step_index
    started = time.monotonic()
    steps = 0

    def finish(kind, **payload):
        trajectory.events.append(FlowEvent(t=state.t, kind=kind, payload=payload))
        logger.debug(f'Flow stopped at t={state.t:.9g} after {steps} steps: {kind} {payload}')

    while True:
        try:
            bundle = geometry_bundle(state.curve, r_floor=r_floor)
        except InvalidCurveError as ex:
            finish(FAULT, reason=ex.message, step=state.step_index)
            break
        rows.append(_series_row(state, bundle))

        max_A = math.sqrt(bundle.A2.max())
        if max_A * d_max0 > opts.curvature_blowup:
            finish(SINGULAR, criterion='curvature', max_abs_A=max_A)
            break
        if state.curve.diameter() < opts.diameter_collapse * diameter0:
            finish(SINGULAR, criterion='diameter', max_abs_A=max_A)
            break
        if t_end is not None and t_end - state.t <= 1e-14 * max(1.0, abs(t_end)):
            finish(HORIZON)
            break
        if steps >= opts.max_steps or \
           (opts.wall_clock is not None and time.monotonic() - started > opts.wall_clock):
            finish(TRUNCATED, steps=steps)
            break

        dt = dt_max(state.curve, opts, bundle)
        landing = t_end is not None and dt >= t_end - state.t
        if landing:
            dt = t_end - state.t

        check_simple = state.step_index % opts.simplicity_every == 0
        for attempt in range(opts.retry_cap + 1):
            try:
                new_state = step(state, dt, opts, r_floor, check_simple=check_simple)
                break
            except StepRejected as ex:
                if attempt == opts.retry_cap:
                    new_state = None
                    reason = ex.message
                    break
                logger.debug(f'Retry attempt {attempt + 1} of {opts.retry_cap}: {ex.message}')
                dt *= 0.5
                landing = False

        if new_state is None:
            finish(FAULT, reason=reason, step=state.step_index)
            break

        if landing:
            new_state = attr.evolve(new_state, t=t_end)
        state = _maybe_remesh(new_state, bundle, budget, opts)
        steps += 1

        if state.t - last_snapshot_t >= opts.snapshot_interval or \
           state.step_index - last_snapshot_step >= opts.snapshot_steps:
            trajectory.states.append(state)
            last_snapshot_t = state.t
            last_snapshot_step = state.step_index

    if trajectory.states[-1] is not state:
        trajectory.states.append(state)
    trajectory.series = np.array(rows)
    return trajectory
