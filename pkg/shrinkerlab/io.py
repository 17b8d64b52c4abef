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

"""File formats of curves, run archives and family reports."""

import attr
import csv
import io
import json
import logging
import math
import os
import tempfile
import numpy as np
from typing import Optional, Tuple
from .errors import CurveFormatError, InvalidConfigError
from .flow import SERIES_COLUMNS, FlowEvent, FlowOptions, FlowState, Trajectory
from .profile import ProfileCurve, signed_area
from .singularity import SingularityRecord

logger = logging.getLogger('shrinkerlab')

SERIES_HEADER = '# shrinkerlab series v1'


def atomic_write(path, text):
    """Write text to path through a temporary file in the same directory."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix='.tmp-')
    try:
        with os.fdopen(fd, 'w', encoding='utf-8', newline='') as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise


def json_safe(value):
    """Replace non-finite floats by None, recursively."""
    if isinstance(value, dict):
        return {key: json_safe(val) for key, val in value.items()}
    elif isinstance(value, (list, tuple)):
        return [json_safe(val) for val in value]
    elif isinstance(value, np.ndarray):
        return json_safe(value.tolist())
    elif isinstance(value, (np.floating, float)):
        return float(value) if math.isfinite(value) else None
    elif isinstance(value, np.integer):
        return int(value)
    elif isinstance(value, np.bool_):
        return bool(value)
    return value


def write_json(path, data):
    atomic_write(path, json.dumps(json_safe(data), indent=2, allow_nan=False) + '\n')


def read_json(path):
    with open(path, 'r', encoding='utf-8') as f:
        return json.load(f)


### Curves ###


def curve_to_json(curve: ProfileCurve) -> str:
    nodes = ', '.join(f'[{float(x)!r}, {float(r)!r}]' for x, r in curve.nodes)
    return (f'{{"n": {curve.n}, "closed": {"true" if curve.closed else "false"}, '
            f'"nodes": [{nodes}]}}\n')


def write_curve(curve: ProfileCurve, path):
    atomic_write(path, curve_to_json(curve))


def _number(value, node):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise CurveFormatError(f'Node {node} has a non-numeric coordinate', node=node)
    if not math.isfinite(value):
        raise CurveFormatError(f'Node {node} has a non-finite coordinate', node=node)
    return float(value)


def parse_curve(text: str) -> ProfileCurve:
    """Parse and validate the curve JSON format.

    Nodes given clockwise are reversed.
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as ex:
        raise CurveFormatError(f'Malformed curve JSON: {ex}')

    if not isinstance(data, dict) or 'nodes' not in data or 'n' not in data:
        raise CurveFormatError('Curve JSON must be an object with "n" and "nodes"')
    n = data['n']
    if isinstance(n, bool) or not isinstance(n, int) or n < 2:
        raise CurveFormatError(f'Invalid dimension n = {n!r}')
    closed = data.get('closed', True)
    if not isinstance(closed, bool):
        raise CurveFormatError('"closed" must be a boolean')

    raw = data['nodes']
    if not isinstance(raw, list) or len(raw) < 3:
        raise CurveFormatError('A curve needs at least 3 nodes')
    nodes = []
    for k, node in enumerate(raw):
        if not isinstance(node, list) or len(node) != 2:
            raise CurveFormatError(f'Node {k} is not an [x, r] pair', node=k)
        nodes.append((_number(node[0], k), _number(node[1], k)))

    nodes = np.array(nodes)
    r = nodes[:, 1]
    on_axis_allowed = np.zeros(len(nodes), dtype=bool)
    if not closed:
        on_axis_allowed[[0, -1]] = r[[0, -1]] == 0.0
    bad = np.flatnonzero((r <= 0) & ~on_axis_allowed)
    if bad.size > 0:
        node = int(bad[0])
        raise CurveFormatError(f'Node {node} has r = {r[node]!r} <= 0', node=node)

    if signed_area(nodes) < 0:
        nodes = nodes[::-1]
    try:
        return ProfileCurve(nodes, n=n, closed=closed)
    except ValueError as ex:
        raise CurveFormatError(str(ex), node=getattr(ex, 'node', None))


def read_curve(path) -> ProfileCurve:
    try:
        with open(path, 'r', encoding='utf-8') as f:
            text = f.read()
    except OSError as ex:
        raise CurveFormatError(f'Can\'t read curve file {path}: {ex.strerror}')
    return parse_curve(text)


### Series ###


def _csv_text(header_comment, columns, rows):
    buf = io.StringIO()
    if header_comment:
        buf.write(header_comment + '\n')
    writer = csv.writer(buf, lineterminator='\n')
    writer.writerow(columns)
    for row in rows:
        writer.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v
                         for v in row])
    return buf.getvalue()


def write_csv(path, columns, rows, header_comment=None):
    atomic_write(path, _csv_text(header_comment, columns, rows))


def append_csv_row(path, columns, row):
    """Append one row, writing the column header to a new file."""
    if os.path.exists(path):
        with open(path, 'r', encoding='utf-8') as f:
            existing = f.read()
        atomic_write(path, existing + _csv_text(None, columns, [row]).split('\n', 1)[1])
    else:
        write_csv(path, columns, [row])


def write_series(path, series: np.ndarray):
    write_csv(path, SERIES_COLUMNS, series, header_comment=SERIES_HEADER)


def read_series(path) -> np.ndarray:
    with open(path, 'r', encoding='utf-8', newline='') as f:
        first = f.readline().rstrip('\n')
        if first != SERIES_HEADER:
            raise InvalidConfigError(f'{path} is not a version 1 series file')
        reader = csv.reader(f)
        columns = tuple(next(reader))
        if columns != SERIES_COLUMNS:
            raise InvalidConfigError(f'Unexpected series columns in {path}')
        rows = [[float(v) for v in row] for row in reader if row]
    return np.array(rows).reshape(-1, len(SERIES_COLUMNS))


### Run archives ###


def save_trajectory(trajectory: Trajectory, directory,
                    record: Optional[SingularityRecord] = None):
    """Archive a trajectory. singularity.json is written last and marks
    the archive complete; it holds null when there is no record."""
    os.makedirs(directory, exist_ok=True)
    write_series(os.path.join(directory, 'series.csv'), trajectory.series)

    index = []
    for k, state in enumerate(trajectory.states):
        filename = f'snap_{k}.json'
        write_curve(state.curve, os.path.join(directory, filename))
        index.append({'k': k, 't': state.t, 'step': state.step_index, 'file': filename})
    write_json(os.path.join(directory, 'snapshots.json'), {
        'initial_d_max': trajectory.initial_d_max,
        'initial_diameter': trajectory.initial_diameter,
        'snapshots': index,
    })

    events = [{'t': e.t, 'kind': e.kind, 'payload': e.payload} for e in trajectory.events]
    write_json(os.path.join(directory, 'events.json'), events)
    write_json(os.path.join(directory, 'singularity.json'),
               record.metadata() if record is not None else None)


def trajectory_complete(directory) -> bool:
    return os.path.isfile(os.path.join(directory, 'singularity.json'))


def load_record(directory) -> Optional[SingularityRecord]:
    data = read_json(os.path.join(directory, 'singularity.json'))
    if data is None:
        return None
    data = {key: (math.nan if val is None else val) for key, val in data.items()}
    return SingularityRecord(**data)


def load_trajectory(directory) -> Tuple[Trajectory, Optional[SingularityRecord]]:
    index = read_json(os.path.join(directory, 'snapshots.json'))
    states = [
        FlowState(curve=read_curve(os.path.join(directory, entry['file'])),
                  t=entry['t'], step_index=entry['step'])
        for entry in index['snapshots']
    ]
    events = [FlowEvent(t=e['t'], kind=e['kind'], payload=e['payload'])
              for e in read_json(os.path.join(directory, 'events.json'))]
    trajectory = Trajectory(
        states=states, events=events,
        series=read_series(os.path.join(directory, 'series.csv')),
        initial_d_max=index['initial_d_max'],
        initial_diameter=index['initial_diameter'])
    record = load_record(directory) if trajectory_complete(directory) else None
    if record is not None:
        trajectory.t_sing = record.t_sing
    return trajectory, record


### Configuration ###


def _positive(instance, attribute, value):
    if value is not None and not value > 0:
        raise InvalidConfigError(f'{attribute.name} must be positive, got {value}')


def _dimension(instance, attribute, value):
    if value < 2:
        raise InvalidConfigError(f'n must be at least 2, got {value}')


def _increasing(instance, attribute, value):
    if any(i < 1 for i in value):
        raise InvalidConfigError(f'Perturbation indices must be positive: {list(value)}')
    if any(b <= a for a, b in zip(value, value[1:])):
        raise InvalidConfigError(
            f'Perturbation indices must be strictly increasing: {list(value)}')


def _at_least_one(instance, attribute, value):
    if value < 1:
        raise InvalidConfigError(f'{attribute.name} must be at least 1, got {value}')


@attr.frozen
class RunConfig:
    n: int = attr.field(default=2, converter=int, validator=_dimension)
    tol: float = attr.field(default=1e-10, converter=float, validator=_positive)
    residual_tol: float = attr.field(default=1e-5, converter=float, validator=_positive)
    nodes: int = attr.field(default=2048, converter=int, validator=_at_least_one)
    bracket: Optional[Tuple[float, float]] = attr.field(
        default=None, converter=attr.converters.optional(tuple))
    i_list: Tuple[int, ...] = attr.field(default=(4, 8, 16, 32), converter=tuple,
                                         validator=_increasing)
    threads: int = attr.field(default=1, converter=int, validator=_at_least_one)
    t0: float = attr.field(default=-1.0, converter=float)
    t_end: Optional[float] = attr.field(default=None,
                                        converter=attr.converters.optional(float))
    c_cfl: float = attr.field(default=0.2, converter=float, validator=_positive)
    max_steps: int = attr.field(default=5_000_000, converter=int, validator=_at_least_one)
    wall_clock: Optional[float] = attr.field(
        default=None, converter=attr.converters.optional(float), validator=_positive)
    snapshot_interval: float = attr.field(default=0.01, converter=float,
                                          validator=_positive)

    def __attrs_post_init__(self):
        if self.bracket is not None:
            a, b = self.bracket
            if not 0 < a < b:
                raise InvalidConfigError(f'Invalid bracket {a}, {b}')
        if self.t_end is not None and self.t_end <= self.t0:
            raise InvalidConfigError(f't_end {self.t_end} is not after t0 {self.t0}')

    def flow_options(self) -> FlowOptions:
        return FlowOptions(c_cfl=self.c_cfl, max_steps=self.max_steps,
                           wall_clock=self.wall_clock,
                           snapshot_interval=self.snapshot_interval)
