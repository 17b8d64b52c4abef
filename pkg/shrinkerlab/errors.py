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

class InvalidCurveError(ValueError):
    """A profile curve violates one of its validity conditions.

    node is the index of the first offending node, or None when the
    problem is not tied to a single node.
    """
    def __init__(self, message, node=None):
        super().__init__(message)
        self.message = message
        self.node = node


class AxisContactError(InvalidCurveError):
    """A node came closer to the rotation axis than the configured floor"""
    pass


class SelfIntersectionError(InvalidCurveError):
    def __init__(self, message, segments):
        super().__init__(message, node=segments[0])
        self.segments = segments


class OffsetError(InvalidCurveError):
    """Normal offset produced an invalid curve.

    arc is a (first, last) node index pair around the failure.
    """
    def __init__(self, message, arc):
        super().__init__(message, node=arc[0])
        self.arc = arc


class ShootingError(Exception):
    def __init__(self, message, scan=None):
        super().__init__(message)
        self.message = message
        self.scan = scan or []


class PerturbationError(ValueError):
    """Inward offset is too small to make the profile shrinker mean convex"""
    def __init__(self, message, margin):
        super().__init__(message)
        self.message = message
        self.margin = margin


class NonPositiveQuantityError(ValueError):
    def __init__(self, message, node):
        super().__init__(message)
        self.message = message
        self.node = node


class StepRejected(Exception):
    """Flow step produced an invalid curve. Retried with a smaller dt."""
    def __init__(self, message):
        self.message = message


class InvalidConfigError(Exception):
    def __init__(self, message):
        super().__init__(message)
        self.message = message


class CurveFormatError(InvalidConfigError):
    def __init__(self, message, node=None):
        super().__init__(message)
        self.node = node
