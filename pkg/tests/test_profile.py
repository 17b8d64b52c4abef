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
from shrinkerlab.errors import (
    AxisContactError,
    InvalidCurveError,
    SelfIntersectionError,
)
from shrinkerlab.profile import (
    ProfileCurve,
    check_simple,
    circle_profile,
    ellipse_profile,
    enclosure_test,
    geometry_bundle,
    hausdorff_distance,
    normal_offset,
    parabolic_residual,
    proximity,
    radial_extent,
    resample,
    self_intersection,
    shrinker_residual,
)
from shrinkerlab.shooting import reference_profile


def test_circle_curvature_and_outward_normal():
    curve = circle_profile((0.5, 3.0), 1.0, 64)
    g = geometry_bundle(curve)

    assert g.kappa == pytest.approx(np.ones(64), abs=1e-12)
    radial = (curve.nodes - np.array([0.5, 3.0]))
    assert np.einsum('ij,ij->i', g.normal, radial) == pytest.approx(np.ones(64), abs=1e-12)
    assert np.hypot(*g.normal.T) == pytest.approx(np.ones(64), abs=1e-12)


def test_sphere_calibration():
    sphere = reference_profile('sphere', 2, radius=2.0, count=65)
    g = geometry_bundle(sphere)

    assert g.H == pytest.approx(np.ones(65), abs=1e-10)
    assert g.support == pytest.approx(np.full(65, 2.0), abs=1e-10)
    assert g.kappa[32] == pytest.approx(0.5, abs=1e-12)


def test_cylinder_segment():
    c = math.sqrt(2)
    cylinder = reference_profile('cylinder-segment', 2, radius=c, count=21)
    g = geometry_bundle(cylinder)

    assert np.abs(g.kappa).max() < 1e-12
    assert g.normal[:, 1] == pytest.approx(np.ones(21))
    assert g.H == pytest.approx(np.full(21, 1 / c))
    assert g.A2 == pytest.approx(np.full(21, 0.5))


def test_shrinker_residual_of_spheres():
    unit = reference_profile('sphere', 2, radius=1.0, count=65)
    assert shrinker_residual(unit) == pytest.approx(np.full(65, 1.5), abs=1e-10)

    for n in (2, 3, 4):
        shrinker = reference_profile('sphere', n, count=129)
        assert np.abs(shrinker_residual(shrinker)).max() < 1e-10


def test_parabolic_residual_identities():
    curve = ellipse_profile((0.3, 2.5), 1.2, 0.7, 96, n=3)

    S, F = parabolic_residual(curve, -1.0)
    assert S == pytest.approx(shrinker_residual(curve), abs=1e-13)

    for t in (-2.0, -0.5, -0.01):
        S, F = parabolic_residual(curve, t)
        assert np.abs(F - 2 * t * S).max() < 1e-12


def test_parabolic_residual_vanishes_on_shrinking_sphere():
    n = 2
    for t in (-1.0, -0.5, -0.125):
        sphere = reference_profile('sphere', n, radius=math.sqrt(-2 * n * t), count=129)
        S, F = parabolic_residual(sphere, t)
        assert np.abs(S).max() < 1e-9
        assert np.abs(F).max() < 1e-9


def test_parabolic_residual_rejects_nonnegative_time():
    curve = circle_profile((0.0, 3.0), 1.0, 32)
    with pytest.raises(ValueError):
        parabolic_residual(curve, 0.0)


def test_curvature_fourth_order():
    a, b = 2.0, 1.0
    errors = []
    for count in (64, 128, 256):
        curve = ellipse_profile((0.0, 3.0), a, b, count)
        phi = 2 * np.pi * np.arange(count) / count
        exact = a * b / (a**2 * np.sin(phi)**2 + b**2 * np.cos(phi)**2)**1.5
        errors.append(np.abs(geometry_bundle(curve).kappa - exact).max())

    assert errors[0] / errors[1] > 10
    assert errors[1] / errors[2] > 10


def test_invalid_curves():
    with pytest.raises(InvalidCurveError) as excinfo:
        ProfileCurve([(0.0, 1.0), (1.0, 1.0), (1.0, -0.5), (0.0, 2.0)])
    assert excinfo.value.node == 2

    clockwise = circle_profile((0.0, 3.0), 1.0, 16).nodes[::-1]
    with pytest.raises(InvalidCurveError):
        ProfileCurve(clockwise)

    reoriented = ProfileCurve.counterclockwise(clockwise)
    assert reoriented.area > 0

    with pytest.raises(InvalidCurveError):
        ProfileCurve([(0.0, 1.0), (1.0, 1.0)])


def test_axis_contact():
    curve = circle_profile((0.0, 2.0), 1.0, 32)
    with pytest.raises(AxisContactError):
        geometry_bundle(curve, r_floor=1.5)


def test_resample_circle():
    curve = circle_profile((0.0, 3.0), 1.0, 16)
    fine = resample(curve, 2 * math.pi / 64)

    assert fine.size == 64
    assert abs(fine.length - 2 * math.pi) / (2 * math.pi) < 1e-3
    h = fine.segment_lengths()
    assert h.max() / h.min() < 1.1


def test_resample_is_identity_on_uniform_curves():
    curve = circle_profile((0.0, 3.0), 1.0, 64)
    same = resample(curve, curve.length / 64)

    assert np.abs(same.nodes - curve.nodes).max() < 1e-12


def test_resample_rejects_small_curves():
    curve = circle_profile((0.0, 3.0), 1.0, 6)
    with pytest.raises(InvalidCurveError):
        resample(curve, 0.1)


def test_resample_area_converges_at_second_order():
    a, b = 2.0, 1.0
    source = ellipse_profile((0.0, 3.0), a, b, 2048)
    errors = []
    for count in (32, 64, 128):
        coarse = resample(source, source.length / count)
        errors.append(abs(coarse.area - math.pi * a * b))

    assert 3.5 < errors[0] / errors[1] < 4.5
    assert 3.5 < errors[1] / errors[2] < 4.5


def test_normal_offset_circle():
    curve = circle_profile((0.0, 3.0), 2.0, 64)
    inner = normal_offset(curve, -0.5)

    radius = np.hypot(inner.x, inner.r - 3.0)
    assert radius == pytest.approx(np.full(64, 1.5), abs=1e-12)
    assert normal_offset(curve, 0.0) is curve


def test_normal_offset_round_trip():
    curve = ellipse_profile((0.0, 3.0), 2.0, 1.0, 256)
    a = 0.05
    back = normal_offset(normal_offset(curve, a), -a)
    max_kappa = np.abs(geometry_bundle(curve).kappa).max()

    assert hausdorff_distance(curve, back) < 10 * a**2 * max_kappa**2


def test_normal_offset_past_focal_distance():
    curve = circle_profile((0.0, 3.0), 1.0, 64)
    with pytest.raises(InvalidCurveError):
        normal_offset(curve, -1.5)


def test_enclosure():
    small = circle_profile((0.0, 3.0), 1.0, 64)
    big = circle_profile((0.0, 3.0), 2.0, 64)
    far = circle_profile((5.0, 3.0), 2.0, 64)
    crossing = circle_profile((1.0, 3.0), 1.0, 64)

    assert enclosure_test(small, big)
    assert not enclosure_test(big, small)
    result = enclosure_test(small, far)
    assert not result.enclosed
    assert not result.intersecting
    result = enclosure_test(small, crossing)
    assert not result.enclosed
    assert result.intersecting


def test_hausdorff_distance():
    inner = circle_profile((0.0, 3.0), 1.0, 64)
    outer = circle_profile((0.0, 3.0), 2.0, 64)

    assert hausdorff_distance(inner, outer) == pytest.approx(1.0, abs=1e-12)
    assert hausdorff_distance(outer, inner) == pytest.approx(1.0, abs=1e-12)
    assert hausdorff_distance(inner, inner) < 1e-14


def test_hausdorff_distance_between_nodes():
    box = ProfileCurve.counterclockwise([(0, 10), (4, 10), (4, 14), (0, 14)])
    notched = ProfileCurve.counterclockwise([(0, 10), (1, 12), (4, 10), (4, 14), (0, 14)])

    # farthest point of the notch sits at (1.6, 11.6), away from nodes and midpoints
    assert hausdorff_distance(box, notched) == pytest.approx(1.6, abs=1e-9)
    assert hausdorff_distance(notched, box) == pytest.approx(1.6, abs=1e-9)


def test_proximity_of_identical_curves():
    curve = ellipse_profile((0.0, 3.0), 1.5, 1.0, 128)
    close = proximity(curve, curve)

    assert close.hausdorff < 1e-14
    assert close.normal_sup < 1e-14
    assert close.curvature_sup < 1e-14


def test_radial_extent():
    sphere = reference_profile('sphere', 2, radius=2.0, count=33)
    assert radial_extent(sphere) == pytest.approx((2.0, 2.0))

    circle = circle_profile((0.0, 3.0), 1.0, 64)
    assert radial_extent(circle) == pytest.approx((2.0, 4.0))


def test_self_intersection():
    nodes = [(0, 1), (4, 1), (4, 3), (2, 3), (2, 0.5), (1, 0.5), (1, 2), (0, 2)]
    curve = ProfileCurve(nodes)

    assert self_intersection(curve) == (0, 3)
    with pytest.raises(SelfIntersectionError) as excinfo:
        check_simple(curve)
    assert excinfo.value.segments == (0, 3)

    assert self_intersection(circle_profile((0.0, 3.0), 1.0, 64)) is None


def test_reflection():
    curve = ellipse_profile((0.0, 3.0), 2.0, 1.0, 64)
    mirrored = curve.reflected()

    assert mirrored.area == pytest.approx(curve.area)
    assert hausdorff_distance(curve, mirrored) < 1e-12
