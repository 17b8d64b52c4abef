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
import logging
import math
import numpy as np
from .entropy import gaussian_density
from .flow import SINGULAR, Trajectory

logger = logging.getLogger('shrinkerlab')

CIRCLE = 'circle'
POINT = 'point'


def cylinder_density():
    """Gaussian density of the self-similarly shrinking S^1 x R^{n-1}."""
    return math.sqrt(2 * math.pi / math.e)


@attr.frozen
class SingularityRecord:
    t_sing: float
    d_sing: float
    center_x: float
    typeI_constant: float
    fit_constant: float
    fit_residual: float
    fit_points: int
    shape: str
    final_diameter: float
    low_confidence: bool = False

    @property
    def is_circle(self):
        return self.shape == CIRCLE

    def center(self):
        """Spacetime center of the singularity as (x0, rho0)."""
        return (self.center_x, self.d_sing if self.is_circle else 0.0)

    def metadata(self):
        return attr.asdict(self)


@attr.frozen(eq=False)
class DimensionlessSeries:
    t: np.ndarray
    values: np.ndarray
    verdict: bool = True

    @property
    def sup(self):
        return float(self.values.max()) if len(self.values) else math.nan

    @property
    def terminal(self):
        return float(self.values[-1]) if len(self.values) else math.nan


def _fit_blowup(t, y, t_ref):
    """Least-squares line through 1/max|A|^2 = (t_sing - t)/c."""
    slope, intercept = np.polyfit(t - t_ref, y, 1)
    if slope >= 0:
        return math.nan, math.nan
    return t_ref - intercept / slope, -1.0 / slope


def detect_singularity(trajectory: Trajectory, decades: float = 1.0,
                       residual_limit: float = 0.1) -> SingularityRecord:
    """Extrapolate the singular time from the curvature blow-up rate.

    max|A|^2 ~ c/(t_sing - t) is fitted over the final decade of
    t_sing - t, twice, re-centering the window on the updated estimate.
    """
    event = trajectory.terminal_event
    if event is None or event.kind != SINGULAR:
        raise ValueError('Trajectory did not end at a curvature blow-up')

    t = trajectory.column('t')
    A2 = trajectory.column('max_abs_A')**2
    y = 1.0 / A2
    t_last = t[-1]
    span = 10.0**decades

    window = y <= span * y[-1]
    low_confidence = False
    t_sing = math.nan
    c = math.nan
    for _ in range(3):
        if np.count_nonzero(window) < 3:
            window = np.zeros_like(window)
            window[-3:] = True
            low_confidence = True
        t_sing, c = _fit_blowup(t[window], y[window], t_last)
        if not math.isfinite(t_sing):
            low_confidence = True
            break
        window = (t_sing - t) <= span * (t_sing - t_last)

    if not math.isfinite(t_sing) or t_sing <= t_last:
        low_confidence = True
        t_sing = t_last + (t_last - t[-2])
    if not math.isfinite(c):
        c = math.nan
        residual = math.inf
    else:
        fitted = c / (t_sing - t[window])
        residual = float(np.sqrt(np.mean(((fitted - A2[window]) / A2[window])**2)))
    if residual > residual_limit:
        low_confidence = True
        logger.warning(f'Type-I fit residual {residual:.3g} exceeds {residual_limit}')

    final = trajectory.final.curve
    center_x, d_sing = final.centroid()
    diameter = final.diameter()
    shape = CIRCLE if (diameter < 0.05 * d_sing and final.r.min() > 0.5 * d_sing) else POINT

    before = t < t_sing
    typeI = float(np.max((t_sing - t[before]) * A2[before]))

    return SingularityRecord(t_sing=float(t_sing), d_sing=float(d_sing),
                             center_x=float(center_x), typeI_constant=typeI,
                             fit_constant=float(c), fit_residual=residual,
                             fit_points=int(np.count_nonzero(window)),
                             shape=shape, final_diameter=float(diameter),
                             low_confidence=low_confidence)


def type_one_profile(trajectory: Trajectory, record: SingularityRecord) -> DimensionlessSeries:
    if record.low_confidence:
        logger.warning('Type-I profile from a low-confidence singularity record')
    t = trajectory.column('t')
    before = t < record.t_sing
    values = (record.t_sing - t[before]) * trajectory.column('max_abs_A')[before]**2
    return DimensionlessSeries(t=t[before], values=values)


def huisken_monotonicity_check(trajectory: Trajectory, record: SingularityRecord,
                               rtol: float = 0.01,
                               resolved: float = 10.0) -> DimensionlessSeries:
    """Gaussian density centered at the singular point with scale
    t_sing - t, per snapshot.

    Snapshots closer to t_sing than resolved times the last computed gap
    are skipped; the extrapolated t_sing is not accurate there.
    """
    gap = record.t_sing - trajectory.column('t')[-1]
    center = record.center()
    times = []
    values = []
    for state in trajectory.states:
        scale = record.t_sing - state.t
        if scale < resolved * gap:
            continue
        times.append(state.t)
        values.append(gaussian_density(state.curve, center, scale))

    values = np.array(values)
    monotone = bool(np.all(values[1:] <= values[:-1] * (1 + rtol)))
    if not monotone:
        logger.warning('Gaussian density increases along the flow')
    return DimensionlessSeries(t=np.array(times), values=values, verdict=monotone)
