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

from .construction import FamilyOptions, FamilyReport, build_perturbed, run_family, \
    write_family
from .entropy import GridSpec, entropy_report, gaussian_density
from .exitcodes import EX_SUCCESS, EX_TRUNCATED, EX_FAULT, EX_USAGE, EX_DATAERR
from .flow import FlowOptions, FlowState, Trajectory, evolve
from .io import RunConfig, read_curve, write_curve
from .profile import ProfileCurve, geometry_bundle
from .shooting import ShootOptions, ShooterResult, find_torus, torus_profile
from .singularity import SingularityRecord, detect_singularity
from .version import __version__

__all__ = [
    '__version__',
    'ProfileCurve',
    'geometry_bundle',
    'ShootOptions',
    'ShooterResult',
    'find_torus',
    'torus_profile',
    'GridSpec',
    'entropy_report',
    'gaussian_density',
    'FlowOptions',
    'FlowState',
    'Trajectory',
    'evolve',
    'SingularityRecord',
    'detect_singularity',
    'FamilyOptions',
    'FamilyReport',
    'build_perturbed',
    'run_family',
    'write_family',
    'RunConfig',
    'read_curve',
    'write_curve',
    'EX_SUCCESS',
    'EX_TRUNCATED',
    'EX_FAULT',
    'EX_USAGE',
    'EX_DATAERR',
]
