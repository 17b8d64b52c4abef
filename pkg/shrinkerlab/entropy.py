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
from numpy.polynomial.legendre import leggauss
from scipy.special import gamma, ive
from typing import Optional, Tuple
from .profile import ProfileCurve

logger = logging.getLogger('shrinkerlab')


def sphere_volume(k):
    """Volume of the unit k-sphere in R^{k+1}."""
    return 2 * math.pi**((k + 1) / 2) / gamma((k + 1) / 2)


def dn_bound(n: int) -> float:
    """Upper bound 2^n Gamma(n/2) for the weighted length of a closed
    geodesic."""
    if n < 2:
        raise ValueError(f'Dimension must be at least 2, got {n}')
    return float(2**n * gamma(n / 2))


def _trapezoid(curve, values):
    """Composite trapezoid rule along the polyline."""
    if curve.closed:
        ends = values + np.roll(values, -1)
    else:
        ends = values[:-1] + values[1:]
    return float(0.5 * np.dot(ends, curve.segment_lengths()))


def weighted_length(curve: ProfileCurve) -> float:
    x, r = curve.x, curve.r
    lam = r**(curve.n - 1) * np.exp(-(x**2 + r**2) / 4)
    return _trapezoid(curve, lam)


def gaussian_area(curve: ProfileCurve) -> float:
    return float(sphere_volume(curve.n - 1) * weighted_length(curve))


def entropy_compact(curve: ProfileCurve) -> float:
    """F-functional at center 0 and scale 1; equals the entropy of a
    compact shrinker."""
    return gaussian_area(curve) / (4 * math.pi)**(curve.n / 2)


def _angular_kernel_bessel(r, rho0, t0, n):
    # Integral over S^{n-1} of exp(r rho0 <omega, e>/(2 t0)), times
    # exp(-r rho0/(2 t0)) to stay finite for sharp kernels.
    a = r * rho0 / (2 * t0)
    nu = n / 2 - 1
    kernel = np.full(np.shape(a), sphere_volume(n - 1), dtype=float)
    positive = a > 0
    ap = a[positive]
    kernel[positive] = (2 * math.pi)**(n / 2) * ap**(-nu) * ive(nu, ap)
    return kernel


def _angular_kernel_legendre(r, rho0, t0, n, points=32):
    xi, w = leggauss(points)
    phi = 0.5 * math.pi * (xi + 1)
    weights = 0.5 * math.pi * w * np.sin(phi)**(n - 2)
    a = (r * rho0 / (2 * t0))[:, None]
    values = np.exp(a * (np.cos(phi)[None, :] - 1))
    return sphere_volume(n - 2) * values @ weights


def gaussian_density(curve: ProfileCurve, center: Tuple[float, float], scale: float,
                     method: str = 'bessel') -> float:
    """Gaussian density of the revolved hypersurface.

    center is (x0, rho0): the axial coordinate and the distance from the
    axis. Every point of R^{n+1} has this form up to a rotation about the
    axis. The angular integral is evaluated in closed form with Bessel
    functions, or by 32-point Gauss-Legendre when method is
    'gauss-legendre'.
    """
    if scale <= 0:
        raise ValueError(f'Density scale must be positive, got {scale}')

    x0, rho0 = center
    n = curve.n
    x, r = curve.x, curve.r
    exponent = -((x - x0)**2 + (r - rho0)**2) / (4 * scale)
    if method == 'bessel':
        kernel = _angular_kernel_bessel(r, rho0, scale, n)
    elif method == 'gauss-legendre':
        kernel = _angular_kernel_legendre(r, rho0, scale, n)
    else:
        raise ValueError(f'Unknown quadrature {method}')

    integrand = r**(n - 1) * np.exp(exponent) * kernel
    return _trapezoid(curve, integrand) / (4 * math.pi * scale)**(n / 2)


@attr.frozen
class GridSpec:
    t_lo: float = attr.field(default=0.25, validator=attr.validators.gt(0))
    t_hi: float = 4.0
    scales: int = 9
    box: float = 1.0
    centers: int = 9

    def scale_values(self):
        return np.geomspace(self.t_lo, self.t_hi, self.scales)

    def center_values(self):
        """Centers on the rotation axis and in the plane x = 0."""
        axial = [(float(x0), 0.0) for x0 in np.linspace(-self.box, self.box, self.centers)]
        planar = [(0.0, float(rho)) for rho in np.linspace(0.0, self.box, self.centers)[1:]]
        return axial + planar


@attr.frozen
class DensityMaximum:
    value: float
    center: Tuple[float, float]
    scale: float


def entropy_sup_grid(curve: ProfileCurve, grid: GridSpec = GridSpec()) -> DensityMaximum:
    best = None
    for scale in grid.scale_values():
        for center in grid.center_values():
            value = gaussian_density(curve, center, float(scale))
            if best is None or value > best.value:
                best = DensityMaximum(value=value, center=center, scale=float(scale))
    logger.debug(f'Density maximum {best.value:.6f} at center {best.center}, '
                 f'scale {best.scale:.4g}')
    return best


@attr.frozen
class EntropyReport:
    n: int
    L_n: float
    A: float
    F01: float
    bound_dn: float
    entropy_sup: Optional[float] = None
    sup_center: Optional[Tuple[float, float]] = None
    sup_scale: Optional[float] = None

    @property
    def bound_ok(self):
        entropy = self.F01 if self.entropy_sup is None else self.entropy_sup
        return {
            'L_n_below_bound': self.L_n < self.bound_dn,
            'entropy_below_two': entropy < 2,
        }

    def metadata(self):
        meta = {
            'n': self.n,
            'L_n': self.L_n,
            'A': self.A,
            'F01': self.F01,
            'entropy_sup': self.entropy_sup,
            'sup_center': list(self.sup_center) if self.sup_center else None,
            'sup_scale': self.sup_scale,
            'bound_dn': self.bound_dn,
            'bound_ok': self.bound_ok,
        }
        return {key: val for key, val in meta.items() if val is not None}


def entropy_report(curve: ProfileCurve, grid: Optional[GridSpec] = None) -> EntropyReport:
    L = weighted_length(curve)
    A = sphere_volume(curve.n - 1) * L
    report = EntropyReport(n=curve.n, L_n=L, A=float(A),
                           F01=float(A / (4 * math.pi)**(curve.n / 2)),
                           bound_dn=dn_bound(curve.n))
    if grid is not None:
        best = entropy_sup_grid(curve, grid)
        report = attr.evolve(report, entropy_sup=best.value,
                             sup_center=best.center, sup_scale=best.scale)
    return report
