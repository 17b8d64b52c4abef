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

import sys
import json
import logging
import os.path
import configargparse
from .construction import FamilyOptions, count_checks, rescale_flow, rescale_record, curve_at, \
    run_family, write_family
from .entropy import GridSpec, entropy_report
from .errors import InvalidConfigError, ShootingError
from .exitcodes import EX_SUCCESS, EX_TRUNCATED, EX_FAULT, EX_USAGE, EX_DATAERR
from .flow import FAULT, SINGULAR, TRUNCATED, FlowState, evolve
from .io import RunConfig, append_csv_row, json_safe, load_trajectory, read_curve, read_json, \
    save_trajectory, write_csv, write_curve, write_json
from .profile import ProfileCurve
from .shooting import ShootOptions, default_scan_range, find_brackets, find_torus, scan
from .singularity import detect_singularity, type_one_profile
from .svg import render_profile_svg, render_series_svg
from .utils import print_enc, parse_int_list, parse_pair, parse_range
from .version import __version__


class PlainInfoFormatter(logging.Formatter):
    def format(self, record):
        if record.levelno == logging.INFO:
            return record.getMessage()
        else:
            return super(PlainInfoFormatter, self).format(record)


def shrinkerlab_logger():
    logger = logging.getLogger('shrinkerlab')
    if not logger.handlers:  # If this logger already has a local handler, don't add another.
        handler = logging.StreamHandler()
        formatter = PlainInfoFormatter('%(levelname)s: %(message)s')
        handler.setFormatter(formatter)
        logger.addHandler(handler)
    return logger


logger = shrinkerlab_logger()

COMMANDS = {
    'shoot': 'Scan the miss angle of shooting trajectories over initial radii',
    'find-torus': 'Find the closed shrinker profile in a bracket',
    'entropy': 'Weighted length, Gaussian area and entropy of a profile',
    'evolve': 'Flow a profile to its first singular time',
    'construct': 'Flow the perturbed torus family and compare the rescaled flows',
    'report': 'Summarize and draw a family directory',
}


class ArgumentParserEncoded(configargparse.ArgumentParser):
    def _print_message(self, message, file=None):
        if message:
            if file is None:
                file = sys.stderr
            print_enc(message, file, False)

    def error(self, message):
        raise InvalidConfigError(f'{self.prog}: {message}')


def arg_parser(command):
    description = (
        f'shrinkerlab {__version__}: {COMMANDS[command]}\n'
        'Copyright (C) 2022 the shrinkerlab authors, license: GPLv3\n'
    )

    parser = ArgumentParserEncoded(
        prog=f'shrinkerlab {command}',
        default_config_files=['~/.shrinkerlab.conf'],
        ignore_unknown_config_file_keys=True,
        description=description,
        formatter_class=configargparse.RawDescriptionHelpFormatter)
    parser.add_argument('-V', '--verbose',
                        action='count', dest='verbosity', default=0,
                        help='Increase output verbosity. -VV is really verbose.')
    parser.add_argument('--debug', action='store_const', const=2,
                        dest='verbosity',
                        help='Really verbose output, same as -VV')
    parser.add_argument('-q', '--quiet', action='count', dest='quietness', default=0,
                        help='Don\'t print the summary line. -qq prints only errors.')
    parser.add_argument('--json-summary', action='store_true',
                        help='Print the summary as one line of JSON')
    parser.add_argument('-c', '--config', metavar='FILENAME',
                        is_config_file=True, help='config file path')

    if command in ('shoot', 'find-torus', 'construct'):
        shoot_group = parser.add_argument_group('Shooting')
        shoot_group.add_argument('--n', metavar='N', type=int, default=2,
                                 help='Hypersurface dimension (default: 2)')
        shoot_group.add_argument('--step', metavar='H', type=float, default=1e-3,
                                 help='Arc length step of the RK4 integrator')
        if command == 'shoot':
            shoot_group.add_argument('--scan', metavar='A:B:STEP', type=parse_range,
                                     help='Initial radii to scan, default: '
                                     '0.1 to sqrt(2(n-1)) in steps of 0.05')
            shoot_group.add_argument('--method', choices=['rk4', 'dop853'],
                                     default='rk4', help='Integrator')
            shoot_group.add_argument('--out', metavar='FILENAME',
                                     help='Write the scan as CSV')
        else:
            shoot_group.add_argument('--bracket', metavar='A,B', type=parse_pair,
                                     help='Initial radius bracket, default: '
                                     'found by a scan')
            shoot_group.add_argument('--tol', metavar='RAD', type=float, default=1e-10,
                                     help='Miss angle tolerance')
            shoot_group.add_argument('--residual-tol', metavar='TOL', type=float,
                                     default=1e-5,
                                     help='Shrinker residual above which the '
                                     'result is flagged degraded')
            shoot_group.add_argument('--nodes', metavar='COUNT', type=int,
                                     default=2048 if command == 'find-torus' else 1024,
                                     help='Node count of the profile')

    if command == 'find-torus':
        parser.add_argument('--out', metavar='FILENAME', required=True,
                            help='Profile curve JSON. The shooting record is '
                            'written next to it as FILENAME.shooter.json')

    if command in ('entropy', 'evolve'):
        parser.add_argument('--curve', metavar='FILENAME', required=True,
                            help='Profile curve JSON')

    if command == 'entropy':
        parser.add_argument('--sup-grid', action='store_true',
                            help='Maximize the Gaussian density over a grid '
                            'of centers and scales')
        parser.add_argument('--csv', metavar='FILENAME',
                            help='Append a row to this CSV report')

    if command in ('evolve', 'construct'):
        flow_group = parser.add_argument_group('Flow')
        if command == 'evolve':
            flow_group.add_argument('--n', metavar='N', type=int,
                                    help='Override the dimension stored in the curve')
            flow_group.add_argument('--t0', metavar='T', type=float, default=-1.0,
                                    help='Initial time (default: -1)')
            flow_group.add_argument('--t-end', metavar='T', type=float,
                                    help='Stop at this time if no singularity '
                                    'comes first')
        flow_group.add_argument('--c-cfl', metavar='C', type=float, default=0.2,
                                help='Time step factor, dt = C/max|A|^2')
        flow_group.add_argument('--max-steps', metavar='COUNT', type=int,
                                default=5_000_000, help='Step budget per flow')
        flow_group.add_argument('--wall-clock', metavar='S', type=float,
                                help='Time budget per flow in seconds')
        flow_group.add_argument('--snapshot-interval', metavar='T', type=float,
                                default=0.01, help='Time between snapshots')
        flow_group.add_argument('--out', metavar='DIR', required=True,
                                help='Output directory')

    if command == 'construct':
        family_group = parser.add_argument_group('Family')
        family_group.add_argument('--i', metavar='LIST', type=parse_int_list,
                                  dest='i_list', default=[4, 8, 16, 32],
                                  help='Perturbation indices, comma separated '
                                  '(default: 4,8,16,32)')
        family_group.add_argument('--threads', metavar='COUNT', type=int, default=1,
                                  env_var='SHRINKERLAB_THREADS',
                                  help='Maximum number of flows run in parallel')

    if command == 'report':
        parser.add_argument('--family', metavar='DIR', required=True,
                            help='Directory written by the construct command')
        parser.add_argument('--svg', action='store_true',
                            help='Draw profile overlays and the type-I ratio plot')

    return parser


def set_log_level(args):
    verbosity = args.verbosity - args.quietness

    if verbosity <= -2:
        logger.setLevel(logging.ERROR)
    elif verbosity == -1:
        logger.setLevel(logging.WARNING)
    elif verbosity == 0:
        logger.setLevel(logging.INFO)
    elif verbosity == 1:
        logger.setLevel(logging.DEBUG)
    elif verbosity >= 2:
        logger.setLevel(5)


def print_summary(args, summary, human):
    if args.json_summary:
        print_enc(json.dumps(json_safe(summary), sort_keys=True, allow_nan=False))
    elif args.quietness == 0:
        print_enc(human)


def shoot_options(args, method='rk4'):
    return ShootOptions(step=args.step, method=method)


### commands ###


def shoot_command(args):
    RunConfig(n=args.n)
    r_values = args.scan if args.scan is not None else default_scan_range(args.n)
    outcomes = scan(args.n, r_values, shoot_options(args, args.method))
    for o in outcomes:
        logger.debug(f'r0 = {o.r0:.6f}: {o.status}, miss = {o.miss:+.6e}')
    brackets = find_brackets(outcomes)

    if args.out:
        write_csv(args.out, ['r0', 'status', 'miss'],
                  [[o.r0, o.status, o.miss] for o in outcomes])

    summary = {
        'command': 'shoot',
        'n': args.n,
        'brackets': [list(b) for b in brackets],
    }
    human = ', '.join(f'[{a:.4g}, {b:.4g}]' for a, b in brackets) or 'none'
    print_summary(args, summary, f'Brackets with a sign change: {human}')
    return EX_SUCCESS


def torus_from_args(args, nodes):
    config = RunConfig(n=args.n, tol=args.tol, residual_tol=args.residual_tol,
                       nodes=nodes, bracket=args.bracket)
    return find_torus(config.n, bracket=config.bracket, tol=config.tol,
                      nodes=config.nodes, residual_tol=config.residual_tol,
                      opts=shoot_options(args))


def find_torus_command(args):
    try:
        result = torus_from_args(args, args.nodes)
    except ShootingError as ex:
        logger.error(ex.message)
        return EX_FAULT

    write_curve(result.profile, args.out)
    write_json(args.out + '.shooter.json', result.metadata())
    summary = dict(result.metadata(), command='find-torus', out=args.out)
    print_summary(args, summary,
                  f'Closed profile at r0 = {result.r0:.12f}, '
                  f'residual {result.residual_max:.3e}, written to {args.out}')
    return EX_SUCCESS


def entropy_command(args):
    curve = read_curve(args.curve)
    report = entropy_report(curve, GridSpec() if args.sup_grid else None)
    meta = report.metadata()

    if args.csv:
        columns = ['n', 'L_n', 'A', 'F01', 'entropy_sup', 'bound_dn']
        row = [report.n, report.L_n, report.A, report.F01,
               report.entropy_sup if report.entropy_sup is not None else float('nan'),
               report.bound_dn]
        append_csv_row(args.csv, columns, row)

    print_summary(args, meta, json.dumps(json_safe(meta), sort_keys=True, indent=2))
    return EX_SUCCESS


def flow_config(args, **kwargs):
    return RunConfig(c_cfl=args.c_cfl, max_steps=args.max_steps,
                     wall_clock=args.wall_clock,
                     snapshot_interval=args.snapshot_interval, **kwargs)


def evolve_command(args):
    curve = read_curve(args.curve)
    config = flow_config(args, n=args.n if args.n is not None else curve.n,
                         t0=args.t0, t_end=args.t_end)
    if config.n != curve.n:
        curve = ProfileCurve(curve.nodes, n=config.n, closed=curve.closed)

    trajectory = evolve(FlowState(curve=curve, t=config.t0), config.flow_options(),
                        t_end=config.t_end)
    terminal = trajectory.terminal_event
    record = None
    if terminal.kind == SINGULAR:
        record = detect_singularity(trajectory)
        trajectory.t_sing = record.t_sing
    save_trajectory(trajectory, args.out, record)

    summary = {
        'command': 'evolve',
        'out': args.out,
        'terminal': terminal.kind,
        't': terminal.t,
        't_sing': record.t_sing if record else None,
        'shape': record.shape if record else None,
    }
    print_summary(args, summary, f'Flow ended at t = {terminal.t:.9g}: {terminal.kind}')

    if terminal.kind == FAULT:
        logger.error(f'Flow fault: {terminal.payload.get("reason")}. '
                     f'See {os.path.join(args.out, "events.json")}')
        return EX_FAULT
    elif terminal.kind == TRUNCATED:
        return EX_TRUNCATED
    return EX_SUCCESS


def construct_command(args):
    config = flow_config(args, n=args.n, tol=args.tol, residual_tol=args.residual_tol,
                         nodes=args.nodes, bracket=args.bracket, i_list=args.i_list,
                         threads=args.threads)
    try:
        result = torus_from_args(args, config.nodes)
    except ShootingError as ex:
        logger.error(ex.message)
        return EX_FAULT
    write_curve(result.profile, os.path.join(args.out, 'torus.json'))
    write_json(os.path.join(args.out, 'torus.json.shooter.json'), result.metadata())

    opts = FamilyOptions(i_list=config.i_list, flow=config.flow_options(),
                         threads=config.threads)
    report = run_family(result.profile, opts, out_dir=args.out)
    write_family(report, args.out)

    failed = [row.i for row in report.rows if not row.clean]
    summary = {
        'command': 'construct',
        'out': args.out,
        'checks': report.checks,
        'failed': failed,
    }
    passed, applicable = count_checks(report.checks)
    print_summary(args, summary,
                  f'{len(report.rows) - len(failed)} of {len(report.rows)} flows clean, '
                  f'{passed} of {applicable} checks passed')

    if any(row.status == FAULT for row in report.rows):
        return EX_FAULT
    elif failed:
        return EX_TRUNCATED
    return EX_SUCCESS


def report_command(args):
    family = read_json(os.path.join(args.family, 'family_report.json'))
    checks = family['checks']
    for name, value in sorted(checks.items()):
        verdict = 'n/a' if value is None else 'ok' if value else 'FAILED'
        logger.info(f'{name}: {verdict}')

    if args.svg:
        draw_family(args.family, family)

    summary = {'command': 'report', 'family': args.family, 'checks': checks}
    passed, applicable = count_checks(checks)
    print_summary(args, summary, f'{passed} of {applicable} checks passed')
    return EX_SUCCESS


def draw_family(directory, family):
    torus = read_curve(os.path.join(directory, 'torus.json'))
    curves = [torus]
    styles = [{'label': 'T', 'color': '#000000'}]
    rescaled = []
    type_one = []
    for row in family['rows']:
        if not row['run_dir']:
            continue
        trajectory, record = load_trajectory(os.path.join(directory, row['run_dir']))
        curves.append(trajectory.states[0].curve)
        styles.append({'label': f'T_{row["i"]}'})
        if row['status'] == 'clean' and record is not None:
            flow = rescale_flow(trajectory, record)
            rescaled.append((row['i'], flow))
            series = type_one_profile(flow, rescale_record(record))
            type_one.append((f'i = {row["i"]}', series.t, series.values))

    render_profile_svg(curves, os.path.join(directory, 'profiles.svg'), styles)
    if rescaled:
        t = max(flow.times[0] for _, flow in rescaled)
        render_profile_svg([curve_at(flow, t) for _, flow in rescaled],
                           os.path.join(directory, 'profiles_rescaled.svg'),
                           [{'label': f'i = {i}'} for i, _ in rescaled])
        render_series_svg(type_one, os.path.join(directory, 'typeI.svg'),
                          y_label='(t_i - t)|A|^2')


HANDLERS = {
    'shoot': shoot_command,
    'find-torus': find_torus_command,
    'entropy': entropy_command,
    'evolve': evolve_command,
    'construct': construct_command,
    'report': report_command,
}


def print_usage(out=None):
    lines = [f'shrinkerlab {__version__}', '', 'Commands:']
    lines.extend(f'  {name:<12} {text}' for name, text in COMMANDS.items())
    lines.append('')
    lines.append('Run "shrinkerlab COMMAND --help" for the options of a command.')
    print_enc('\n'.join(lines), out)


def execute(argv):
    if not argv or argv[0] in ('-h', '--help'):
        print_usage(sys.stdout if argv else sys.stderr)
        return EX_SUCCESS if argv else EX_USAGE

    command = argv[0]
    if command not in HANDLERS:
        logger.error(f'Unknown command "{command}". '
                     f'Valid commands: {", ".join(COMMANDS)}')
        return EX_USAGE

    try:
        args = arg_parser(command).parse_args(argv[1:])
        set_log_level(args)
        return HANDLERS[command](args)
    except InvalidConfigError as ex:
        logger.error(ex.message)
        return EX_DATAERR
    except OSError as ex:
        logger.error(f'{ex.filename}: {ex.strerror}')
        return EX_DATAERR


### main program ###


def main(argv=sys.argv):
    logging.addLevelName(5, 'TRACE')
    return execute(argv[1:])
