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

"""Ancient flows from inward perturbations of the shrinking torus.

Each member T_i of the family is the torus profile moved inward by 1/i.
Its flow from t = -1 ends in a neckpinch at t_i; rescaling by the radius
d_i of the singular circle gives flows that are compared across i.
"""

import attr
import logging
import math
import os
import numpy as np
from concurrent.futures import ProcessPoolExecutor
from typing import Dict, List, Optional, Sequence, Tuple
from .entropy import GridSpec, entropy_sup_grid
from .errors import PerturbationError
from .flow import (
    FAULT,
    SINGULAR,
    FlowOptions,
    FlowState,
    Trajectory,
    evolve,
)
from .io import (
    load_trajectory,
    save_trajectory,
    trajectory_complete,
    write_csv,
    write_json,
)
from .profile import (
    ProfileCurve,
    enclosure_test,
    geometry_bundle,
    hausdorff_distance,
    nearest_points,
    normal_offset,
    proximity,
    radial_extent,
    shrinker_residual,
)
from .singularity import (
    DimensionlessSeries,
    SingularityRecord,
    cylinder_density,
    detect_singularity,
    huisken_monotonicity_check,
    type_one_profile,
)

logger = logging.getLogger('shrinkerlab')

CLEAN = 'clean'
LOW_CONFIDENCE = 'low-confidence'
TRUNCATED = 'truncated'


@attr.frozen
class PerturbationReport:
    i: int
    hausdorff: float
    normal_sup: float
    curvature_sup: float
    min_S: float
    predicted_min_S: float

    @property
    def relative_error(self):
        return abs(self.min_S - self.predicted_min_S) / self.predicted_min_S


def build_perturbed(torus: ProfileCurve, i: int) -> ProfileCurve:
    """The torus profile moved inward by 1/i, checked to be shrinker
    mean convex."""
    if i < 1:
        raise ValueError(f'Perturbation index must be positive, got {i}')

    perturbed = normal_offset(torus, -1.0 / i)
    margin = float(shrinker_residual(perturbed).min())
    if margin <= 0:
        raise PerturbationError(
            f'T_{i} is not shrinker mean convex: min(H - <X,nu>/2) = {margin:.3g}',
            margin)
    return perturbed


def perturbation_report(torus: ProfileCurve, i: int,
                        perturbed: Optional[ProfileCurve] = None) -> PerturbationReport:
    """Measured proximity and shrinker margin of T_i next to the first
    order prediction (1/i) min(|A|^2 + 1/2)."""
    if perturbed is None:
        perturbed = build_perturbed(torus, i)
    g = geometry_bundle(torus)
    close = proximity(torus, perturbed)
    return PerturbationReport(
        i=i,
        hausdorff=close.hausdorff,
        normal_sup=close.normal_sup,
        curvature_sup=close.curvature_sup,
        min_S=float(shrinker_residual(perturbed).min()),
        predicted_min_S=float((g.A2 + 0.5).min() / i))


@attr.frozen
class FamilyOptions:
    i_list: Sequence[int] = attr.field(default=(4, 8, 16, 32), converter=tuple)
    t_start: float = -1.0
    flow: FlowOptions = FlowOptions()
    threads: int = 1
    grid: GridSpec = GridSpec()
    cauchy_points: int = 12
    blowdown_t_max: float = -4.0


@attr.define(eq=False)
class FamilyRow:
    i: int
    status: str
    hausdorff: float
    normal_sup: float
    curvature_sup: float
    min_S_start: float
    predicted_min_S: float
    entropy_sup: float
    entropy_gap: float
    t_sing: float = math.nan
    d_sing: float = math.nan
    ratio: float = math.nan
    typeI_constant: float = math.nan
    circle: bool = False
    enclosed: bool = False
    radius_bounds: bool = False
    min_S_positive: bool = False
    nonsoliton_margin: float = math.nan
    nonsoliton: bool = False
    convex_onset: Optional[float] = None
    mean_convex_onset: Optional[float] = None
    huisken_monotone: Optional[bool] = None
    huisken_terminal: Optional[float] = None
    run_dir: Optional[str] = None

    @property
    def clean(self):
        return self.status == CLEAN

    def metadata(self):
        return attr.asdict(self)


@attr.define(eq=False)
class CauchyTable:
    times: np.ndarray
    pairs: List[tuple]
    distances: np.ndarray  # one row per pair
    verdict: bool
    truncated: bool = False

    def metadata(self):
        return {
            'times': self.times,
            'pairs': [list(p) for p in self.pairs],
            'distances': self.distances,
            'verdict': self.verdict,
            'truncated': self.truncated,
        }


@attr.frozen(eq=False)
class BlowdownSeries:
    t: np.ndarray
    distance: np.ndarray
    verdict: bool
    # False when the flow starts after t_max and the earliest snapshots were used
    reached: bool = True

    def metadata(self):
        return {'t': self.t, 'distance': self.distance, 'verdict': self.verdict,
                'reached': self.reached}


@attr.define(eq=False)
class FamilyReport:
    n: int
    torus_entropy: float
    bound_constant: float
    rows: List[FamilyRow] = attr.Factory(list)
    checks: Dict[str, Optional[bool]] = attr.Factory(dict)
    rescaled: Dict[int, Trajectory] = attr.Factory(dict)
    type_one: Dict[int, DimensionlessSeries] = attr.Factory(dict)
    cauchy: Optional[CauchyTable] = None
    blowdown: Dict[int, BlowdownSeries] = attr.Factory(dict)

    @property
    def clean_rows(self):
        return [row for row in self.rows if row.clean]

    def metadata(self):
        return {
            'n': self.n,
            'torus_entropy': self.torus_entropy,
            'bound_constant': self.bound_constant,
            'rows': [row.metadata() for row in self.rows],
            'checks': self.checks,
            'cauchy': self.cauchy.metadata() if self.cauchy else None,
            'blowdown': {str(i): b.metadata() for i, b in self.blowdown.items()},
        }


### Rescaling and interpolation ###


def rescale_record(record: SingularityRecord) -> SingularityRecord:
    d = record.d_sing
    return attr.evolve(record, t_sing=record.t_sing / d**2, d_sing=1.0,
                       center_x=record.center_x / d,
                       final_diameter=record.final_diameter / d)


def rescale_flow(trajectory: Trajectory, record: SingularityRecord) -> Trajectory:
    """Parabolic rescaling X -> X/d_i, t -> t/d_i^2 of a whole flow."""
    if record.low_confidence:
        logger.warning('Rescaling a flow with a low-confidence singularity record')
    d = record.d_sing
    states = [FlowState(curve=s.curve.scaled(1.0 / d), t=s.t / d**2,
                        step_index=s.step_index)
              for s in trajectory.states]
    events = [attr.evolve(e, t=e.t / d**2) for e in trajectory.events]
    # t, max_abs_A, d_min, d_max, min_S, max_F, length, area, min_r
    factors = np.array([1 / d**2, d, 1 / d, 1 / d, d, 1 / d, 1 / d, 1 / d**2, 1 / d])
    return Trajectory(states=states, events=events,
                      series=trajectory.series * factors,
                      initial_d_max=trajectory.initial_d_max / d,
                      initial_diameter=trajectory.initial_diameter / d,
                      t_sing=record.t_sing / d**2)


def curve_at(trajectory: Trajectory, t: float) -> ProfileCurve:
    """Profile at time t, interpolated between the bracketing snapshots.

    Nodes of the earlier snapshot move linearly toward their closest
    points on the later one.
    """
    times = trajectory.times
    if not times[0] <= t <= times[-1]:
        raise ValueError(f'Time {t} is outside the trajectory [{times[0]}, {times[-1]}]')

    k = int(np.searchsorted(times, t, side='right')) - 1
    if times[k] == t or k == len(times) - 1:
        return trajectory.states[k].curve

    before = trajectory.states[k].curve
    after = trajectory.states[k + 1].curve
    w = (t - times[k]) / (times[k + 1] - times[k])
    _, seg, u = nearest_points(before.nodes, after)
    a, b = after.segments()
    foot = a[seg] + u[:, None] * (b[seg] - a[seg])
    return before.with_nodes((1 - w) * before.nodes + w * foot)


### Family members ###


def _run_member(torus: ProfileCurve, i: int, t_start: float, flow_opts: FlowOptions,
                directory: Optional[str]):
    """Flow T_i from t_start, or load a complete archive from directory."""
    perturbed = build_perturbed(torus, i)
    if directory is not None and trajectory_complete(directory):
        logger.info(f'Reusing the archived flow of T_{i} in {directory}')
        trajectory, record = load_trajectory(directory)
        return perturbed, trajectory, record

    logger.debug(f'Flowing T_{i} from t = {t_start}')
    trajectory = evolve(FlowState(curve=perturbed, t=t_start), flow_opts)
    record = None
    if trajectory.terminal_event.kind == SINGULAR:
        record = detect_singularity(trajectory)
        trajectory.t_sing = record.t_sing
    if directory is not None:
        save_trajectory(trajectory, directory, record)
    return perturbed, trajectory, record


def _first_time(states, predicate):
    for state in states:
        if predicate(geometry_bundle(state.curve)):
            return float(state.t)
    return None


def _member_row(torus, i, perturbed, trajectory, record, torus_entropy,
                bound_constant, noise, opts, directory):
    report = perturbation_report(torus, i, perturbed)
    entropy_sup = entropy_sup_grid(perturbed, opts.grid).value
    row = FamilyRow(i=i, status=CLEAN, hausdorff=report.hausdorff,
                    normal_sup=report.normal_sup,
                    curvature_sup=report.curvature_sup,
                    min_S_start=report.min_S,
                    predicted_min_S=report.predicted_min_S,
                    entropy_sup=entropy_sup,
                    entropy_gap=entropy_sup - torus_entropy,
                    run_dir=directory)

    terminal = trajectory.terminal_event
    if terminal.kind == FAULT:
        row.status = FAULT
        logger.warning(f'Flow of T_{i} faulted at t = {terminal.t:.6g}: '
                       f'{terminal.payload.get("reason")}')
    elif terminal.kind != SINGULAR or record is None:
        row.status = TRUNCATED
        logger.warning(f'Flow of T_{i} stopped without a singularity ({terminal.kind})')
    elif record.low_confidence:
        row.status = LOW_CONFIDENCE

    if record is not None:
        row.t_sing = record.t_sing
        row.d_sing = record.d_sing
        row.ratio = record.d_sing**2 / -record.t_sing if record.t_sing < 0 else math.nan
        row.typeI_constant = record.typeI_constant
        row.circle = record.is_circle

    negative = [s for s in trajectory.states if s.t < 0]
    row.enclosed = all(
        enclosure_test(s.curve, torus.scaled(math.sqrt(-s.t))).enclosed
        for s in negative)

    t = trajectory.column('t')
    past = t < 0
    scale = np.sqrt(-2 * t[past])
    d_min = trajectory.column('d_min')[past]
    d_max = trajectory.column('d_max')[past]
    row.radius_bounds = bool(np.all(d_min > scale / bound_constant) and
                             np.all(d_max < bound_constant * scale))
    row.min_S_positive = bool(np.all(trajectory.column('min_S')[past] > 0))
    max_F = trajectory.column('max_F')[past]
    row.nonsoliton_margin = float(max_F.min())
    row.nonsoliton = row.nonsoliton_margin < -10 * noise

    row.convex_onset = _first_time(trajectory.states, lambda g: bool(np.all(g.kappa >= 0)))
    row.mean_convex_onset = _first_time(trajectory.states, lambda g: bool(np.all(g.H > 0)))

    if row.clean:
        huisken = huisken_monotonicity_check(trajectory, record)
        row.huisken_monotone = huisken.verdict
        row.huisken_terminal = huisken.terminal
    return row


def _monotone(values, increasing):
    diffs = np.diff(values)
    return bool(np.all(diffs > 0) if increasing else np.all(diffs < 0))


def _band(values, factor):
    values = np.asarray(values)
    return bool(len(values) > 0 and values.min() > 0 and values.max() <= factor * values.min())


def run_family(torus: ProfileCurve, opts: FamilyOptions = FamilyOptions(),
               out_dir: Optional[str] = None) -> FamilyReport:
    """Flow every T_i and aggregate the per-member and cross-member
    diagnostics.

    Members run in up to opts.threads worker processes. With out_dir,
    every flow is archived under out_dir/i_<i> before aggregation, and
    complete archives found there are reused.
    """
    i_list = sorted(opts.i_list)
    for i in i_list:
        # Reject a too small i before any flow starts
        build_perturbed(torus, i)

    directories = {i: os.path.join(out_dir, f'i_{i}') if out_dir else None for i in i_list}
    members = {}
    if opts.threads > 1 and len(i_list) > 1:
        with ProcessPoolExecutor(max_workers=min(opts.threads, len(i_list))) as pool:
            futures = {i: pool.submit(_run_member, torus, i, opts.t_start, opts.flow,
                                      directories[i])
                       for i in i_list}
            members = {i: futures[i].result() for i in i_list}
    else:
        for i in i_list:
            members[i] = _run_member(torus, i, opts.t_start, opts.flow, directories[i])

    torus_entropy = entropy_sup_grid(torus, opts.grid).value
    d_min, d_max = radial_extent(torus)
    bound_constant = 1.1 * max(d_max / math.sqrt(2), math.sqrt(2) / d_min)
    noise = 2 * float(np.abs(shrinker_residual(torus)).max())

    report = FamilyReport(n=torus.n, torus_entropy=torus_entropy,
                          bound_constant=bound_constant)
    for i in i_list:
        perturbed_i, trajectory, record = members[i]
        row = _member_row(torus, i, perturbed_i, trajectory, record, torus_entropy,
                          bound_constant, noise, opts, f'i_{i}' if out_dir else None)
        report.rows.append(row)
        if row.clean:
            rescaled = rescale_flow(trajectory, record)
            report.rescaled[i] = rescaled
            report.type_one[i] = type_one_profile(rescaled, rescale_record(record))
            report.blowdown[i] = blowdown_check(rescaled, torus, opts.blowdown_t_max)
        logger.info(f'T_{i}: {row.status}, t_i = {row.t_sing:.6g}, d_i = {row.d_sing:.6g}')

    clean = report.clean_rows
    report.checks = {
        'all_clean': len(clean) == len(report.rows),
        't_negative': all(row.t_sing < 0 for row in clean),
        't_increasing': _monotone([row.t_sing for row in clean], increasing=True),
        'd_decreasing': _monotone([row.d_sing for row in clean], increasing=False),
        'ratio_band': _band([row.ratio for row in clean], 4.0),
        'typeI_band': _band([row.typeI_constant for row in clean], 2.0),
        'circles': all(row.circle for row in clean),
        'enclosed': all(row.enclosed for row in clean),
        'radius_bounds': all(row.radius_bounds for row in clean),
        'min_S_positive': all(row.min_S_positive for row in clean),
        'nonsoliton': all(row.nonsoliton for row in clean),
        'huisken_monotone': all(row.huisken_monotone for row in clean),
        'huisken_cylinder': all(
            abs(row.huisken_terminal / cylinder_density() - 1) < 0.05 for row in clean),
        'entropy_below_two': all(row.entropy_sup < 2 for row in report.rows),
    }
    if len(clean) >= 3:
        report.cauchy = convergence_report(report, opts.cauchy_points)
        report.checks['cauchy'] = report.cauchy.verdict
    else:
        logger.warning(f'Only {len(clean)} clean flows, skipping the Cauchy table')
    if report.blowdown:
        reached = [b for b in report.blowdown.values() if b.reached]
        if reached:
            report.checks['blowdown'] = all(b.verdict for b in reached)
        else:
            logger.warning(f'No rescaled flow reaches t = {opts.blowdown_t_max}, '
                           f'the blowdown check does not apply')
            report.checks['blowdown'] = None
    return report


def count_checks(checks) -> Tuple[int, int]:
    """(passed, applicable) over a checks dict. None marks a check that
    does not apply."""
    applicable = [value for value in checks.values() if value is not None]
    return sum(bool(value) for value in applicable), len(applicable)


### Cross-member comparison ###


def cauchy_grid(rescaled: Dict[int, Trajectory], points: int = 12):
    """Log-uniform grid of rescaled times inside every flow's domain.

    The grid runs from 0.9 times the latest start to twice the earliest
    end. When that is empty it covers the inner 80% of the common range
    and is marked truncated. Returns (times, truncated).
    """
    start = max(r.times[0] for r in rescaled.values())
    end = min(r.times[-1] if r.t_sing is None else min(r.t_sing, r.times[-1])
              for r in rescaled.values())
    if not start < end:
        logger.warning('Rescaled flows share no common time range')
        return np.empty(0), True

    lo = 0.9 * start
    hi = 2 * end
    truncated = not lo < hi
    if truncated:
        lo = start + 0.1 * (end - start)
        hi = start + 0.9 * (end - start)
        logger.warning(f'Common rescaled time range [{start:.4g}, {end:.4g}) is short, '
                       f'Cauchy grid truncated to [{lo:.4g}, {hi:.4g}]')
    return -np.geomspace(-lo, -hi, points), truncated


def cauchy_distances(a: Trajectory, b: Trajectory, times) -> np.ndarray:
    return np.array([hausdorff_distance(curve_at(a, t), curve_at(b, t)) for t in times])


def convergence_report(family: FamilyReport, points: int = 12) -> CauchyTable:
    """Hausdorff distances between consecutive rescaled flows on a
    common time grid. The verdict requires the distances to decrease in
    i at every grid time."""
    indices = sorted(family.rescaled)
    if len(indices) < 3:
        logger.warning(f'Cauchy table needs 3 rescaled flows, got {len(indices)}')
    times, truncated = cauchy_grid(family.rescaled, points)
    pairs = list(zip(indices, indices[1:]))
    distances = np.array([
        cauchy_distances(family.rescaled[i], family.rescaled[j], times)
        for i, j in pairs
    ]).reshape(len(pairs), len(times))
    verdict = bool(len(times) > 0 and np.all(distances[1:] <= distances[:-1]))
    return CauchyTable(times=times, pairs=pairs, distances=distances,
                       verdict=verdict, truncated=truncated)


def blowdown_check(rescaled: Trajectory, torus: ProfileCurve,
                   t_max: float = -4.0, threshold: float = 0.05) -> BlowdownSeries:
    """Normalized distance between the rescaled flow and the shrinking
    torus sqrt(-t) T at early times.

    A flow that starts after t_max is measured over the first third of
    its lifetime instead, and the series is marked as not reached.
    """
    early = [s for s in rescaled.states if s.t <= t_max]
    reached = bool(early)
    if not reached:
        first = rescaled.states[0].t
        last = rescaled.t_sing if rescaled.t_sing is not None else rescaled.states[-1].t
        cutoff = min(first + (last - first) / 3, 0.0)
        early = [s for s in rescaled.states if s.t <= cutoff and s.t < 0]
        logger.warning(f'Rescaled flow starts at t = {first:.4g}, after t = {t_max}; '
                       f'measuring the blowdown distance up to t = {cutoff:.4g}')
    if not early:
        return BlowdownSeries(t=np.empty(0), distance=np.empty(0), verdict=False,
                              reached=False)

    times = np.array([s.t for s in early])
    distance = np.array([
        hausdorff_distance(s.curve, torus.scaled(math.sqrt(-s.t))) / math.sqrt(-s.t)
        for s in early
    ])
    verdict = bool(distance[0] < threshold and np.all(np.diff(distance) >= -1e-12))
    return BlowdownSeries(t=times, distance=distance, verdict=verdict, reached=reached)


def write_family(report: FamilyReport, directory):
    """family_report.json plus the Cauchy, blowdown and type-I tables."""
    os.makedirs(directory, exist_ok=True)
    write_json(os.path.join(directory, 'family_report.json'), report.metadata())

    if report.cauchy is not None:
        table = report.cauchy
        columns = ['t'] + [f'd_{i}_{j}' for i, j in table.pairs]
        rows = [[t] + list(table.distances[:, k]) for k, t in enumerate(table.times)]
        write_csv(os.path.join(directory, 'cauchy.csv'), columns, rows)

    rows = [[i, t, d] for i, b in sorted(report.blowdown.items())
            for t, d in zip(b.t, b.distance)]
    write_csv(os.path.join(directory, 'blowdown.csv'), ['i', 't', 'distance'], rows)

    rows = [[i, t, v] for i, s in sorted(report.type_one.items())
            for t, v in zip(s.t, s.values)]
    write_csv(os.path.join(directory, 'typeI.csv'), ['i', 't', 'value'], rows)
