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

import json
import math
import os
import numpy as np
import pytest
from shrinkerlab.errors import CurveFormatError, InvalidConfigError
from shrinkerlab.flow import SERIES_COLUMNS, FlowState, evolve
from shrinkerlab.io import (
    SERIES_HEADER,
    RunConfig,
    append_csv_row,
    curve_to_json,
    json_safe,
    load_trajectory,
    parse_curve,
    read_curve,
    read_json,
    read_series,
    save_trajectory,
    trajectory_complete,
    write_curve,
    write_json,
    write_series,
)
from shrinkerlab.profile import circle_profile, ellipse_profile
from shrinkerlab.shooting import reference_profile
from shrinkerlab.singularity import detect_singularity


def test_curve_round_trip_is_byte_identical(tmpdir):
    curve = ellipse_profile((0.1, 2.0), 1.3, 0.7, 33, n=3)
    path = str(tmpdir.join('curve.json'))
    write_curve(curve, path)
    again = read_curve(path)

    assert again.n == 3
    assert again.closed
    assert np.array_equal(again.nodes, curve.nodes)
    assert curve_to_json(again) == curve_to_json(curve)
    with open(path) as f:
        assert f.read() == curve_to_json(curve)


def test_open_curve_round_trip():
    sphere = reference_profile('sphere', 2, count=9)
    again = parse_curve(curve_to_json(sphere))

    assert not again.closed
    assert again.axis_ends == (True, True)
    assert np.array_equal(again.nodes, sphere.nodes)


def test_clockwise_curve_is_reversed():
    curve = circle_profile((0.0, 3.0), 1.0, 16)
    data = {'n': 2, 'nodes': curve.nodes[::-1].tolist()}
    parsed = parse_curve(json.dumps(data))

    assert parsed.area > 0
    assert np.array_equal(parsed.nodes, curve.nodes)


def test_curve_format_errors():
    with pytest.raises(CurveFormatError):
        parse_curve('{"n": 2, "nodes": [[0, 1], [1, 1]')
    with pytest.raises(CurveFormatError):
        parse_curve('{"nodes": [[0, 1], [1, 1], [1, 2]]}')
    with pytest.raises(CurveFormatError):
        parse_curve('{"n": 1, "nodes": [[0, 1], [1, 1], [1, 2]]}')
    with pytest.raises(CurveFormatError):
        parse_curve('{"n": 2, "closed": "yes", "nodes": [[0, 1], [1, 1], [1, 2]]}')
    with pytest.raises(CurveFormatError):
        parse_curve('{"n": 2, "nodes": [[0, 1], [1, 1]]}')

    with pytest.raises(CurveFormatError) as excinfo:
        parse_curve('{"n": 2, "nodes": [[0, 1], [1, 1], [1, "2"], [0, 2]]}')
    assert excinfo.value.node == 2

    with pytest.raises(CurveFormatError) as excinfo:
        parse_curve('{"n": 2, "nodes": [[0, 1], [1, 1], [1], [0, 2]]}')
    assert excinfo.value.node == 2

    with pytest.raises(CurveFormatError) as excinfo:
        parse_curve('{"n": 2, "nodes": [[0, 1], [1, 1], [1, 0.0], [0, 2]]}')
    assert excinfo.value.node == 2
    assert 'Node 2' in excinfo.value.message


def test_read_missing_curve(tmpdir):
    with pytest.raises(CurveFormatError):
        read_curve(str(tmpdir.join('missing.json')))


def test_json_safe():
    data = {'a': math.nan, 'b': [1.0, math.inf], 'c': np.float64(2.5),
            'd': np.array([1, 2]), 'e': np.bool_(True), 'f': (np.int64(3),)}

    assert json_safe(data) == {'a': None, 'b': [1.0, None], 'c': 2.5,
                               'd': [1, 2], 'e': True, 'f': [3]}


def test_write_json(tmpdir):
    path = str(tmpdir.join('sub', 'data.json'))
    write_json(path, {'x': math.nan, 'y': 1.5})

    assert read_json(path) == {'x': None, 'y': 1.5}
    assert os.listdir(str(tmpdir.join('sub'))) == ['data.json']


def test_series_round_trip(tmpdir):
    series = np.arange(2 * len(SERIES_COLUMNS), dtype=float).reshape(2, -1) / 3
    series[0, 4] = math.nan
    path = str(tmpdir.join('series.csv'))
    write_series(path, series)

    with open(path) as f:
        lines = f.read().splitlines()
    assert lines[0] == SERIES_HEADER
    assert lines[1] == ','.join(SERIES_COLUMNS)

    again = read_series(path)
    assert math.isnan(again[0, 4])
    again[0, 4] = series[0, 4] = 0.0
    assert np.array_equal(again, series)


def test_series_header_is_checked(tmpdir):
    path = str(tmpdir.join('series.csv'))
    with open(path, 'w') as f:
        f.write('t,max_abs_A\n0.0,1.0\n')

    with pytest.raises(InvalidConfigError):
        read_series(path)


def test_append_csv_row(tmpdir):
    path = str(tmpdir.join('report.csv'))
    append_csv_row(path, ['a', 'b'], [1, 0.5])
    append_csv_row(path, ['a', 'b'], [2, 0.25])

    with open(path) as f:
        assert f.read() == 'a,b\n1,0.5\n2,0.25\n'


def test_trajectory_archive(tmpdir):
    sphere = reference_profile('sphere', 2, radius=1.0, count=33)
    trajectory = evolve(FlowState(sphere, 0.0))
    record = detect_singularity(trajectory)
    directory = str(tmpdir.join('run'))

    assert not trajectory_complete(directory)
    save_trajectory(trajectory, directory, record)
    assert trajectory_complete(directory)

    loaded, loaded_record = load_trajectory(directory)
    assert loaded_record == record
    assert loaded.t_sing == record.t_sing
    assert np.array_equal(loaded.times, trajectory.times)
    assert np.array_equal(loaded.final.curve.nodes, trajectory.final.curve.nodes)
    assert [s.step_index for s in loaded.states] == \
        [s.step_index for s in trajectory.states]
    assert loaded.terminal_event.kind == trajectory.terminal_event.kind
    assert loaded.initial_d_max == trajectory.initial_d_max
    assert np.array_equal(np.isnan(loaded.series), np.isnan(trajectory.series))
    assert np.array_equal(np.nan_to_num(loaded.series), np.nan_to_num(trajectory.series))


def test_archive_without_record(tmpdir):
    curve = circle_profile((0.0, 3.0), 1.0, 32)
    trajectory = evolve(FlowState(curve, 0.0), t_end=1e-3)
    directory = str(tmpdir.join('run'))
    save_trajectory(trajectory, directory)

    assert read_json(os.path.join(directory, 'singularity.json')) is None
    loaded, record = load_trajectory(directory)
    assert record is None
    assert loaded.t_sing is None


def test_run_config_defaults():
    config = RunConfig()

    assert config.n == 2
    assert config.i_list == (4, 8, 16, 32)
    opts = config.flow_options()
    assert opts.c_cfl == 0.2
    assert opts.wall_clock is None


def test_run_config_validation():
    with pytest.raises(InvalidConfigError):
        RunConfig(n=1)
    with pytest.raises(InvalidConfigError):
        RunConfig(tol=0)
    with pytest.raises(InvalidConfigError):
        RunConfig(i_list=[8, 4])
    with pytest.raises(InvalidConfigError):
        RunConfig(i_list=[0, 4])
    with pytest.raises(InvalidConfigError):
        RunConfig(threads=0)
    with pytest.raises(InvalidConfigError):
        RunConfig(bracket=(1.0, 0.5))
    with pytest.raises(InvalidConfigError):
        RunConfig(t0=-1.0, t_end=-2.0)
    with pytest.raises(InvalidConfigError):
        RunConfig(wall_clock=-5)

    assert RunConfig(bracket=[0.5, 1.0]).bracket == (0.5, 1.0)
