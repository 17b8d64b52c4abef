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

import math
import numpy as np
import pytest
from shrinkerlab.flow import FlowState, evolve
from shrinkerlab.profile import circle_profile
from shrinkerlab.shooting import reference_profile
from shrinkerlab.singularity import (
    CIRCLE,
    POINT,
    DimensionlessSeries,
    SingularityRecord,
    cylinder_density,
    detect_singularity,
    huisken_monotonicity_check,
    type_one_profile,
)


@pytest.fixture(scope='module')
def sphere_flow():
    sphere = reference_profile('sphere', 2, radius=1.0, count=65)
    return evolve(FlowState(sphere, 0.0))


@pytest.fixture(scope='module')
def thin_torus_flow():
    return evolve(FlowState(circle_profile((0.0, 3.0), 0.1, 64), 0.0))


def test_sphere_singular_time(sphere_flow):
    record = detect_singularity(sphere_flow)

    assert record.t_sing == pytest.approx(0.25, abs=1e-6)
    assert record.fit_constant == pytest.approx(0.5, rel=1e-3)
    assert record.typeI_constant == pytest.approx(0.5, rel=1e-2)
    assert record.fit_residual < 0.01
    assert record.fit_points >= 3
    assert not record.low_confidence
    assert record.shape == POINT
    assert not record.is_circle
    assert record.center() == (record.center_x, 0.0)
    assert abs(record.center_x) < 1e-6


def test_sphere_type_one_profile(sphere_flow):
    record = detect_singularity(sphere_flow)
    profile = type_one_profile(sphere_flow, record)

    assert np.all(profile.t < record.t_sing)
    assert profile.sup == pytest.approx(0.5, rel=2e-2)
    early = profile.values[profile.t <= 0.2]
    assert early == pytest.approx(np.full(len(early), 0.5), rel=1e-2)


def test_sphere_huisken_density(sphere_flow):
    record = detect_singularity(sphere_flow)
    density = huisken_monotonicity_check(sphere_flow, record)

    assert density.verdict
    assert len(density.t) > 10
    early = density.t <= 0.2
    assert density.values[early] == pytest.approx(np.full(early.sum(), 4 / math.e), rel=1e-3)


def test_thin_torus_collapses_to_circle(thin_torus_flow):
    record = detect_singularity(thin_torus_flow)

    assert record.shape == CIRCLE
    assert record.is_circle
    assert record.t_sing == pytest.approx(0.005, rel=0.05)
    assert record.d_sing == pytest.approx(3.0, abs=0.01)
    assert abs(record.center_x) < 1e-6
    assert record.center() == (record.center_x, record.d_sing)
    assert record.typeI_constant == pytest.approx(0.5, rel=0.05)
    assert record.final_diameter < 0.05 * record.d_sing


def test_thin_torus_density_approaches_cylinder(thin_torus_flow):
    record = detect_singularity(thin_torus_flow)
    density = huisken_monotonicity_check(thin_torus_flow, record)

    assert density.verdict
    assert density.values == pytest.approx(
        np.full(len(density.values), cylinder_density()), rel=2e-2)


def test_detect_requires_singular_end():
    curve = circle_profile((0.0, 3.0), 1.0, 64)
    trajectory = evolve(FlowState(curve, 0.0), t_end=1e-3)

    with pytest.raises(ValueError):
        detect_singularity(trajectory)


def test_record_metadata():
    record = SingularityRecord(t_sing=0.1, d_sing=2.0, center_x=0.5,
                               typeI_constant=0.51, fit_constant=0.5,
                               fit_residual=1e-3, fit_points=40, shape=CIRCLE,
                               final_diameter=0.01)
    meta = record.metadata()

    assert meta['shape'] == 'circle'
    assert meta['low_confidence'] is False
    assert meta['fit_points'] == 40
    assert record.center() == (0.5, 2.0)


def test_empty_series():
    series = DimensionlessSeries(t=np.array([]), values=np.array([]))

    assert math.isnan(series.sup)
    assert math.isnan(series.terminal)
    assert series.verdict
