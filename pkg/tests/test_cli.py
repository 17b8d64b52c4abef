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
from shrinkerlab.construction import CLEAN, FamilyReport, FamilyRow, write_family
from shrinkerlab.exitcodes import EX_SUCCESS, EX_TRUNCATED, EX_USAGE, EX_DATAERR
from shrinkerlab.flow import FlowOptions, FlowState, evolve
from shrinkerlab.io import read_json, save_trajectory, write_curve
from shrinkerlab.profile import circle_profile
from shrinkerlab.shooting import reference_profile
from shrinkerlab.shrinkerlab import main
from utils import Capturing


def run(*args):
    with Capturing() as output:
        code = main(['shrinkerlab'] + [str(a) for a in args])
    return code, output


def sphere_file(tmpdir, radius=1.0, count=33):
    path = str(tmpdir.join('sphere.json'))
    write_curve(reference_profile('sphere', 2, radius=radius, count=count), path)
    return path


def test_usage():
    assert main(['shrinkerlab']) == EX_USAGE

    code, output = run('--help')
    assert code == EX_SUCCESS
    assert output[0].startswith('shrinkerlab ')
    assert any(line.strip().startswith('construct') for line in output)


def test_unknown_command():
    assert main(['shrinkerlab', 'download']) == EX_USAGE


def test_invalid_option_value(tmpdir):
    code, _ = run('evolve', '--curve', sphere_file(tmpdir),
                  '--out', tmpdir.join('run'), '--max-steps', 'many')
    assert code == EX_DATAERR


def test_invalid_curve_reports_node(tmpdir, caplog):
    path = str(tmpdir.join('bad.json'))
    with open(path, 'w') as f:
        f.write('{"n": 2, "nodes": [[0, 1], [1, 1], [1, -0.5], [0, 2]]}')

    code, _ = run('entropy', '--curve', path)
    assert code == EX_DATAERR
    assert 'Node 2' in caplog.text


def test_evolve_sphere(tmpdir):
    out = str(tmpdir.join('run'))
    code, output = run('evolve', '--curve', sphere_file(tmpdir), '--t0', 0,
                       '--out', out, '--json-summary')

    assert code == EX_SUCCESS
    summary = json.loads(output[-1])
    assert summary['terminal'] == 'singular'
    assert summary['shape'] == 'point'
    assert math.isclose(summary['t_sing'], 0.25, abs_tol=1e-4)
    record = read_json(os.path.join(out, 'singularity.json'))
    assert record['t_sing'] == summary['t_sing']


def test_evolve_step_budget(tmpdir):
    out = str(tmpdir.join('run'))
    code, output = run('evolve', '--curve', sphere_file(tmpdir), '--t0', 0,
                       '--out', out, '--max-steps', 5, '--json-summary')

    assert code == EX_TRUNCATED
    assert json.loads(output[-1])['terminal'] == 'truncated'
    assert read_json(os.path.join(out, 'singularity.json')) is None


def test_evolve_is_deterministic(tmpdir):
    curve = sphere_file(tmpdir)
    series = []
    for name in ('a', 'b'):
        out = str(tmpdir.join(name))
        code, _ = run('evolve', '--curve', curve, '--t0', 0, '--out', out,
                      '--max-steps', 200, '-q')
        assert code == EX_TRUNCATED
        with open(os.path.join(out, 'series.csv'), 'rb') as f:
            series.append(f.read())

    assert series[0] == series[1]


def test_entropy_of_sphere(tmpdir):
    path = sphere_file(tmpdir, radius=2.0, count=1025)
    code, output = run('entropy', '--curve', path)

    assert code == EX_SUCCESS
    report = json.loads('\n'.join(output))
    assert math.isclose(report['F01'], 4 / math.e, rel_tol=1e-5)
    assert report['bound_ok']['entropy_below_two']
    assert 'entropy_sup' not in report


def test_entropy_csv_rows(tmpdir):
    path = sphere_file(tmpdir, radius=2.0)
    csv_path = str(tmpdir.join('entropy.csv'))
    for _ in range(2):
        code, output = run('entropy', '--curve', path, '--csv', csv_path,
                           '--json-summary')
        assert code == EX_SUCCESS
        assert len(output) == 1

    with open(csv_path) as f:
        lines = f.read().splitlines()
    assert lines[0] == 'n,L_n,A,F01,entropy_sup,bound_dn'
    assert len(lines) == 3
    assert lines[1] == lines[2]


def test_shoot_summary(torus2):
    scan = f'{torus2.r0 - 0.01}:{torus2.r0 + 0.01}:0.02'
    code, output = run('shoot', '--n', 2, '--scan', scan, '--json-summary')

    assert code == EX_SUCCESS
    summary = json.loads(output[0])
    assert summary['command'] == 'shoot'
    assert len(summary['brackets']) == 1
    a, b = summary['brackets'][0]
    assert a < torus2.r0 < b


def test_find_torus_then_entropy(tmpdir, torus2):
    out = str(tmpdir.join('torus.json'))
    bracket = f'{torus2.r0 - 0.01},{torus2.r0 + 0.01}'
    code, output = run('find-torus', '--bracket', bracket, '--nodes', 512,
                       '--out', out, '--json-summary')

    assert code == EX_SUCCESS
    summary = json.loads(output[0])
    assert math.isclose(summary['r0'], torus2.r0, abs_tol=1e-9)
    assert os.path.exists(out + '.shooter.json')

    code, output = run('entropy', '--curve', out, '--json-summary')
    assert code == EX_SUCCESS
    report = json.loads(output[0])
    assert report['F01'] < 2
    assert report['L_n'] < report['bound_dn']


def test_entropy_quiet(tmpdir):
    code, output = run('entropy', '--curve', sphere_file(tmpdir), '-q')

    assert code == EX_SUCCESS
    assert output == []


def test_report_missing_family(tmpdir, caplog):
    missing = str(tmpdir.join('nowhere'))
    code, _ = run('report', '--family', missing)

    assert code == EX_DATAERR
    assert 'family_report.json' in caplog.text


def small_family(directory):
    curve = circle_profile((0.0, 3.0), 1.0, 32)
    trajectory = evolve(FlowState(curve, -1.0), FlowOptions(max_steps=5))
    save_trajectory(trajectory, os.path.join(directory, 'i_4'))
    write_curve(curve, os.path.join(directory, 'torus.json'))

    row = FamilyRow(i=4, status=CLEAN, hausdorff=0.25, normal_sup=0.01,
                    curvature_sup=0.5, min_S_start=0.2, predicted_min_S=0.21,
                    entropy_sup=1.86, entropy_gap=0.01, run_dir='i_4')
    report = FamilyReport(n=2, torus_entropy=1.85, bound_constant=3.0, rows=[row],
                          checks={'all_clean': True, 'cauchy': False, 'blowdown': None})
    write_family(report, directory)


def test_report_of_moved_family(tmpdir):
    original = str(tmpdir.join('family'))
    small_family(original)
    moved = str(tmpdir.join('elsewhere'))
    os.rename(original, moved)

    code, output = run('report', '--family', moved, '--svg')

    assert code == EX_SUCCESS
    assert output == ['1 of 2 checks passed']
    assert os.path.exists(os.path.join(moved, 'profiles.svg'))

    code, output = run('report', '--family', moved, '--json-summary')
    assert json.loads(output[0])['checks']['blowdown'] is None
