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

"""Self-shrinking S^1 x S^{n-1} profiles by shooting.

The profile of a rotationally symmetric shrinker is a closed geodesic of
the conformal metric lambda^2 (dx^2 + dr^2) on the half-plane, with
lambda = r^{n-1} exp(-(x^2 + r^2)/4). Equivalently its tangent angle
theta obeys

    dtheta/ds = (x sin(theta) - r cos(theta))/2 + (n-1) cos(theta)/r

which is integrated here from the inner point (0, r0) with a horizontal
tangent. A closed profile symmetric under x -> -x is found when the
trajectory returns to x = 0 with a horizontal tangent again.
"""

import attr
import logging
import math
import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq
from typing import List, Optional, Tuple
from .errors import AxisContactError, ShootingError
from .profile import ProfileCurve, self_intersection, shrinker_residual

logger = logging.getLogger('shrinkerlab')

CLOSED = 'closed'
AXIS = 'axis'
ESCAPE = 'escape'
CAP = 'cap'


def _wrap_angle(theta):
    """Wrap an angle into (-pi, pi]."""
    wrapped = math.remainder(theta, 2 * math.pi)
    return math.pi if wrapped == -math.pi else wrapped


@attr.frozen
class ShootState:
    x: float
    r: float
    theta: float = attr.field(default=0.0,
                              converter=_wrap_angle)
    s: float = 0.0

    def __attrs_post_init__(self):
        if self.r <= 0:
            raise AxisContactError(f'Shooting state at r = {self.r} is off the half-plane')


@attr.frozen
class ShootOptions:
    step: float = attr.field(default=1e-3, validator=attr.validators.gt(0))
    r_floor: float = 1e-6
    r_cap: float = 10.0
    x_cap: float = 8.0
    s_cap: float = 60.0
    method: str = attr.field(default='rk4',
                             validator=attr.validators.in_(['rk4', 'dop853']))


@attr.frozen(eq=False)
class ShootOutcome:
    r0: float
    status: str
    miss: float
    half_length: float
    trajectory: np.ndarray  # rows of (s, x, r, theta)

    @property
    def closed(self):
        return self.status == CLOSED


@attr.frozen(eq=False)
class ShooterResult:
    r0: float
    n: int
    profile: ProfileCurve
    miss: float
    residual_max: float
    bracket_history: List[Tuple[float, float]] = attr.Factory(list)
    degraded: bool = False

    def metadata(self):
        return {
            'r0': self.r0,
            'n': self.n,
            'nodes': self.profile.size,
            'miss': self.miss,
            'residual_max': self.residual_max,
            'degraded': self.degraded,
            'bracket_history': [[float(a), float(b)] for a, b in self.bracket_history],
        }


def conformal_factor(point, n):
    x, r = point
    x = np.asarray(x, dtype=float)
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise ValueError('Conformal factor is defined only for r > 0')
    value = r**(n - 1) * np.exp(-(x**2 + r**2) / 4)
    return float(value) if value.ndim == 0 else value


def log_conformal_gradient(x, r, n):
    """Gradient of log(lambda) in the (x, r) half-plane."""
    return -0.5 * x, (n - 1) / r - 0.5 * r


def _rhs(x, r, theta, n):
    c = math.cos(theta)
    s = math.sin(theta)
    return c, s, 0.5 * (x * s - r * c) + (n - 1) * c / r


def shrinker_ode_rhs(state: ShootState, n: int, r_floor: float = 0.0):
    """Returns (dx/ds, dr/ds, dtheta/ds) at state."""
    if state.r <= r_floor:
        raise AxisContactError(f'Trajectory reached the axis at r = {state.r}')
    return _rhs(state.x, state.r, state.theta, n)


def _rk4(x, r, theta, h, n):
    k1 = _rhs(x, r, theta, n)
    k2 = _rhs(x + 0.5 * h * k1[0], r + 0.5 * h * k1[1], theta + 0.5 * h * k1[2], n)
    k3 = _rhs(x + 0.5 * h * k2[0], r + 0.5 * h * k2[1], theta + 0.5 * h * k2[2], n)
    k4 = _rhs(x + h * k3[0], r + h * k3[1], theta + h * k3[2], n)
    return (x + h / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]),
            r + h / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]),
            theta + h / 6 * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2]))


def integrate_trajectory(state: ShootState, length: float, n: int, step: float) -> np.ndarray:
    """Fixed-step RK4 over the given arc length.

    Returns rows of (s, x, r, theta); the last step is shortened to land
    exactly on length.
    """
    x, r, theta, s = state.x, state.r, state.theta, state.s
    rows = [(s, x, r, theta)]
    end = s + length
    while s < end:
        h = min(step, end - s)
        x, r, theta = _rk4(x, r, theta, h, n)
        s = end if h < step else s + h
        if r <= 0:
            raise AxisContactError(f'Trajectory reached the axis at s = {s}')
        rows.append((s, x, r, theta))
    return np.array(rows)


def _crossing_step(x, r, theta, h, n, nx):
    """Partial RK4 step that lands on x = 0."""
    sigma = h * x / (x - nx)
    cx, cr, cth = x, r, theta
    for _ in range(30):
        cx, cr, cth = _rk4(x, r, theta, sigma, n)
        correction = cx / math.cos(cth)
        sigma = min(max(sigma - correction, 0.0), h)
        if abs(correction) < 1e-15:
            break
    return sigma, cx, cr, cth


def _miss(theta):
    return _wrap_angle(theta - math.pi)


def _shoot_rk4(r0, n, opts):
    x, r, theta, s = 0.0, r0, 0.0, 0.0
    rows = [(s, x, r, theta)]
    h = opts.step
    status = CAP
    miss = math.nan
    while s < opts.s_cap:
        try:
            nx, nr, nth = _rk4(x, r, theta, h, n)
        except ZeroDivisionError:
            status = AXIS
            break

        if nr <= opts.r_floor:
            status = AXIS
            break
        if nr > opts.r_cap or abs(nx) > opts.x_cap:
            status = ESCAPE
            break
        if x > 0.0 and nx <= 0.0:
            sigma, cx, cr, cth = _crossing_step(x, r, theta, h, n, nx)
            s += sigma
            rows.append((s, 0.0, cr, cth))
            status = CLOSED
            miss = _miss(cth)
            break

        x, r, theta = nx, nr, nth
        s += h
        rows.append((s, x, r, theta))

    return ShootOutcome(r0=r0, status=status, miss=miss,
                        half_length=s if status == CLOSED else math.nan,
                        trajectory=np.array(rows))


def _shoot_dop853(r0, n, opts):
    def fun(s, y):
        return _rhs(y[0], y[1], y[2], n)

    def crossing(s, y):
        return y[0]
    crossing.terminal = True
    crossing.direction = -1

    def axis(s, y):
        return y[1] - opts.r_floor
    axis.terminal = True
    axis.direction = -1

    def escape(s, y):
        return min(opts.r_cap - y[1], opts.x_cap - abs(y[0]))
    escape.terminal = True
    escape.direction = -1

    sol = solve_ivp(fun, (0.0, opts.s_cap), [0.0, r0, 0.0], method='DOP853',
                    rtol=1e-12, atol=1e-12, events=[crossing, axis, escape],
                    max_step=10 * opts.step)
    rows = np.column_stack([sol.t, sol.y.T])
    status = CAP
    miss = math.nan
    half_length = math.nan
    if len(sol.t_events[0]) > 0:
        status = CLOSED
        half_length = float(sol.t_events[0][0])
        miss = _miss(float(sol.y_events[0][0][2]))
    elif len(sol.t_events[1]) > 0:
        status = AXIS
    elif len(sol.t_events[2]) > 0:
        status = ESCAPE
    return ShootOutcome(r0=r0, status=status, miss=miss,
                        half_length=half_length, trajectory=rows)


def shoot(r0: float, n: int, opts: ShootOptions = ShootOptions()) -> ShootOutcome:
    """Integrate from (0, r0) with a horizontal tangent to the next x = 0
    crossing.

    miss is the angle between the tangent and the x-axis at the crossing,
    zero for a closed symmetric profile.
    """
    if r0 <= 0:
        raise ValueError(f'Initial radius must be positive, got {r0}')

    if opts.method == 'dop853':
        outcome = _shoot_dop853(r0, n, opts)
    else:
        outcome = _shoot_rk4(r0, n, opts)
    logger.log(5, f'shoot r0={r0:.15g}: {outcome.status} miss={outcome.miss:.3e}')
    return outcome


def scan(n: int, r_values, opts: ShootOptions = ShootOptions()) -> List[ShootOutcome]:
    return [shoot(float(r0), n, opts) for r0 in r_values]


def default_scan_range(n, step=0.05):
    top = math.sqrt(2 * (n - 1))
    return np.arange(0.1, top - 0.5 * step, step)


def find_brackets(outcomes: List[ShootOutcome]) -> List[Tuple[float, float]]:
    """Failure-free sign changes of miss between adjacent scan samples."""
    brackets = []
    for a, b in zip(outcomes, outcomes[1:]):
        if not (a.closed and b.closed):
            continue
        if abs(a.miss) > 0.75 * math.pi or abs(b.miss) > 0.75 * math.pi:
            continue
        if a.miss == 0.0 or a.miss * b.miss < 0:
            brackets.append((a.r0, b.r0))
    return brackets


def torus_profile(r0: float, n: int, nodes: int = 2048,
                  opts: ShootOptions = ShootOptions()) -> ProfileCurve:
    """Closed profile from the half trajectory and its mirror image.

    The half trajectory is integrated again with a step that places the
    nodes at exactly equal arc length.
    """
    if nodes < 8 or nodes % 2:
        raise ValueError(f'Torus profile needs an even node count >= 8, got {nodes}')

    outcome = shoot(r0, n, attr.evolve(opts, method='rk4'))
    if not outcome.closed:
        raise ShootingError(f'Trajectory from r0 = {r0} does not close ({outcome.status})')

    half = nodes // 2
    sub = max(1, math.ceil(outcome.half_length / half / opts.step))
    h = outcome.half_length / (half * sub)
    x, r, theta = 0.0, r0, 0.0
    right = [(0.0, r0)]
    for k in range(half * sub):
        x, r, theta = _rk4(x, r, theta, h, n)
        if (k + 1) % sub == 0:
            right.append((x, r))
    right[-1] = (0.0, right[-1][1])

    right = np.array(right)
    left = right[-2:0:-1] * np.array([-1.0, 1.0])
    return ProfileCurve(np.vstack([right, left]), n=n)


def _refine_bracket(n, bracket, tol, opts, history):
    def miss(r0):
        outcome = shoot(r0, n, opts)
        history.append((r0, outcome.miss))
        if not outcome.closed:
            raise ShootingError(
                f'Shot from r0 = {r0} failed ({outcome.status}) inside the bracket',
                scan=list(history))
        return outcome.miss

    a, b = bracket
    ma = miss(a)
    mb = miss(b)
    if ma * mb > 0:
        raise ShootingError(
            f'No sign change of the miss angle in [{a}, {b}]: {ma:.3e}, {mb:.3e}',
            scan=list(history))

    r0 = brentq(miss, a, b, xtol=1e-14, maxiter=200)
    final = miss(r0)
    if abs(final) >= tol:
        raise ShootingError(
            f'Bisection in [{a}, {b}] stalled at |miss| = {abs(final):.3e}',
            scan=list(history))
    return r0, final


def find_torus(n: int, bracket: Optional[Tuple[float, float]] = None,
               tol: float = 1e-10, nodes: int = 2048,
               residual_tol: float = 1e-5,
               opts: ShootOptions = ShootOptions()) -> ShooterResult:
    if bracket is not None:
        candidates = [tuple(bracket)]
    else:
        outcomes = scan(n, default_scan_range(n), opts)
        candidates = find_brackets(outcomes)
        logger.debug(f'Scan for n={n} found brackets {candidates}')
        if not candidates:
            raise ShootingError(f'Scan found no sign change for n = {n}',
                                scan=[(o.r0, o.miss) for o in outcomes])

    failure = None
    for candidate in candidates:
        history = []
        try:
            r0, miss = _refine_bracket(n, candidate, tol, opts, history)
            profile = torus_profile(r0, n, nodes, opts)
        except ShootingError as ex:
            logger.debug(ex.message)
            failure = ex
            continue

        if self_intersection(profile) is not None:
            logger.debug(f'Profile from r0 = {r0} is not embedded')
            failure = ShootingError(f'Closed profile from r0 = {r0} is not embedded',
                                    scan=history)
            continue

        residual_max = float(np.abs(shrinker_residual(profile)).max())
        degraded = residual_max > residual_tol
        if degraded:
            logger.warning(f'Shrinker residual {residual_max:.3e} exceeds '
                           f'the tolerance {residual_tol:.1e}')

        logger.debug(f'Closed profile for n={n} at r0={r0!r}, '
                     f'residual {residual_max:.3e}')
        return ShooterResult(r0=r0, n=n, profile=profile, miss=miss,
                             residual_max=residual_max,
                             bracket_history=history, degraded=degraded)

    raise failure


def reference_profile(kind: str, n: int, radius: Optional[float] = None,
                      count: int = 129, extent: float = 2.0) -> ProfileCurve:
    """Closed-form shrinker profiles in open-curve test mode.

    'sphere' is the meridian semicircle with both ends on the axis;
    'cylinder-segment' is the line r = radius over |x| <= extent.
    """
    if kind == 'sphere':
        R = math.sqrt(2 * n) if radius is None else radius
        phi = np.linspace(0.0, math.pi, count)
        nodes = np.column_stack([R * np.cos(phi), R * np.sin(phi)])
        nodes[0, 1] = 0.0
        nodes[-1, 1] = 0.0
        return ProfileCurve(nodes, n=n, closed=False)
    elif kind == 'cylinder-segment':
        c = math.sqrt(2 * (n - 1)) if radius is None else radius
        x = np.linspace(extent, -extent, count)
        return ProfileCurve(np.column_stack([x, np.full(count, c)]), n=n, closed=False)
    else:
        raise ValueError(f'Unknown reference profile {kind}')
