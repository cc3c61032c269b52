"""The invariant curve of 4-periodic orbits and the region between it and its reverse.

For a centrally symmetric table whose map has such a curve ``{delta = d(psi)}``,
``tan d(psi) = h(psi) / h(psi + pi/2)`` and ``h(psi)^2 + h(psi + pi/2)^2 = R^2``
is constant.  Conversely a profile ``d`` with ``d(psi + pi/2) = pi/2 - d(psi)``
defines the support function ``h = R sin d``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import geometry
from .errors import NoFourPeriodicCurve, ProfileSymmetryViolated, TableError
from .geometry import SupportFunction, Table
from .phasemap import (TWO_PI, angle_diff, boundary_point, incidence_to_chart_arrays,
                       reflect_arrays, wrap)
from ._backend import kernels

PROFILE_GRID = 1024
DEFAULT_TOLERANCE = 1e-8
SYMMETRY_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class DProfile:
    """Angle function ``d(psi)`` of the curve, stored as a trigonometric interpolant.

    ``samples`` are values on the uniform grid ``2 pi j / n``; evaluation and
    derivatives are spectral.
    """

    R: float
    samples: np.ndarray = field(repr=False)
    table: Table | None = field(default=None, repr=False)
    _k: np.ndarray = field(default=None, repr=False)
    _a: np.ndarray = field(default=None, repr=False)
    _b: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=float)
        n = samples.size
        F = np.fft.rfft(samples) / n
        k = np.arange(F.size, dtype=float)
        a = 2.0 * F.real
        b = -2.0 * F.imag
        a[0] = F.real[0]
        b[0] = 0.0
        if n % 2 == 0:
            # drop the Nyquist mode: it has no well-defined derivative
            a[-1] = 0.0
            b[-1] = 0.0
        keep = (np.abs(a) > 1e-17) | (np.abs(b) > 1e-17)
        keep[0] = True
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "_k", k[keep])
        object.__setattr__(self, "_a", a[keep])
        object.__setattr__(self, "_b", b[keep])

    @property
    def grid(self):
        n = self.samples.size
        return TWO_PI * np.arange(n) / n

    def __call__(self, psi, derivs=(0,)):
        psi = np.asarray(psi, dtype=float)
        arg = np.multiply.outer(psi, self._k)
        cs, sn = np.cos(arg), np.sin(arg)
        k, a, b = self._k, self._a, self._b
        out = []
        for m in derivs:
            if m == 0:
                out.append(cs @ a + sn @ b)
            elif m == 1:
                out.append(cs @ (k * b) - sn @ (k * a))
            elif m == 2:
                out.append(-(cs @ (k * k * a) + sn @ (k * k * b)))
            elif m == 3:
                out.append(sn @ (k**3 * a) - cs @ (k**3 * b))
            else:
                raise ValueError("derivative order above 3 not supported")
        return out[0] if len(out) == 1 else tuple(out)

    def d(self, psi):
        return self(psi, (0,))

    def derivatives(self, psi):
        """``(d, d', d'')`` at ``psi``."""
        return self(psi, (0, 1, 2))

    def to_json(self):
        return {"R": self.R, "d_samples": [float(v) for v in self.samples]}


def _check_profile(samples, tol=SYMMETRY_TOL):
    n = samples.size
    if n % 4:
        raise ProfileSymmetryViolated(f"grid size {n} is not divisible by 4")
    if not np.all((samples > 0) & (samples < math.pi / 2)):
        raise ProfileSymmetryViolated("d must lie strictly inside (0, pi/2)")
    quarter = np.roll(samples, -n // 4)
    err = float(np.max(np.abs(quarter - (math.pi / 2 - samples))))
    if err > tol:
        raise ProfileSymmetryViolated(
            f"d(psi + pi/2) = pi/2 - d(psi) violated by {err:.3e}")
    return err


def d_profile(table: Table, tolerance: float = DEFAULT_TOLERANCE,
              grid: int = PROFILE_GRID) -> DProfile:
    """Profile of the 4-periodic invariant curve of ``table``.

    Raises :class:`NoFourPeriodicCurve` when ``h(psi)^2 + h(psi + pi/2)^2``
    varies by more than ``tolerance`` relative to its mean.
    """
    psi = TWO_PI * np.arange(grid) / grid
    (h,) = table.h(psi, (0,))
    (H,) = table.h(psi + math.pi / 2, (0,))
    R2 = h * h + H * H
    mean = float(np.mean(R2))
    variation = float((R2.max() - R2.min()) / mean)
    if variation > tolerance:
        raise NoFourPeriodicCurve(variation, tolerance)
    return DProfile(R=math.sqrt(mean), samples=np.arctan2(h, H), table=table)


def r_squared_variation(table: Table, grid: int = PROFILE_GRID):
    psi = TWO_PI * np.arange(grid) / grid
    (h,) = table.h(psi, (0,))
    (H,) = table.h(psi + math.pi / 2, (0,))
    R2 = h * h + H * H
    return float((R2.max() - R2.min()) / np.mean(R2)), float(np.mean(R2))


def table_from_d(d_samples, R: float, tolerance: float = geometry.DEFAULT_TOLERANCE,
                 max_harmonic: int | None = None) -> Table:
    """Table with support function ``h = R sin d``.

    ``d_samples`` are values on a uniform grid over [0, 2 pi) whose size is a
    multiple of 4.
    """
    samples = np.asarray(d_samples, dtype=float)
    _check_profile(samples)
    if not R > 0:
        raise TableError("R must be positive")
    n = samples.size
    F = np.fft.rfft(R * np.sin(samples)) / n
    top = n // 2 - 2 if max_harmonic is None else min(max_harmonic, n // 2 - 2)
    ks = np.arange(0, top + 1, 2)
    cos_even = 2.0 * F.real[ks]
    cos_even[0] = F.real[0]
    sin_even = -2.0 * F.imag[ks[1:]]
    mags = np.hypot(cos_even, np.concatenate([[0.0], sin_even]))
    significant = np.flatnonzero(mags > 1e-15 * abs(cos_even[0]))
    last = int(significant[-1]) if significant.size else 0
    support = SupportFunction.from_even(cos_even[: last + 1], sin_even[:last])
    return geometry.build_table(support, tolerance=tolerance)


def profile_samples(func, grid: int = PROFILE_GRID):
    """Sample a callable ``d(psi)`` on the standard uniform grid."""
    return np.asarray(func(TWO_PI * np.arange(grid) / grid), dtype=float)


def perturbed_profile(eps: float, mode: str = "sin2", grid: int = PROFILE_GRID):
    """Samples of ``d = pi/4 + eps * trig(m psi)`` for mode strings like ``sin2``."""
    kind, m = mode[:3], int(mode[3:])
    trig = {"sin": np.sin, "cos": np.cos}[kind]
    return profile_samples(lambda t: math.pi / 4 + eps * trig(m * t), grid)


def load_profile(path):
    with open(path) as fh:
        data = json.load(fh)
    samples = np.asarray(data["d_samples"], dtype=float)
    _check_profile(samples)
    return DProfile(R=float(data["R"]), samples=samples)


def profile_from_samples(d_samples, R: float, table: Table | None = None) -> DProfile:
    samples = np.asarray(d_samples, dtype=float)
    _check_profile(samples)
    return DProfile(R=float(R), samples=samples, table=table)


# ---------------------------------------------------------------- validation

@dataclass
class ValidationReport:
    samples: int
    max_closure: float
    max_parallelogram: float
    max_rectangle: float
    max_curve_deviation: float
    failures: int

    def closes(self, tol=1e-8):
        return self.failures == 0 and self.max_closure < tol

    def as_dict(self):
        return dict(self.__dict__)


def alpha_points(table: Table, profile: DProfile, psi):
    """Phase coordinates ``(p, phi)`` of the lines on the curve arriving at ``psi``."""
    return incidence_to_chart_arrays(table, psi, profile(psi))


def validate_four_periodic(table: Table, profile: DProfile, samples: int = 100) -> ValidationReport:
    """Iterate 4 times from ``samples`` points of the curve and measure closure.

    Reports rather than asserts: the parallelogram check compares the
    diagonals' midpoints, the rectangle check the cosine between consecutive
    normals.
    """
    psi0 = TWO_PI * (np.arange(samples) + 0.5) / samples
    p0, phi0 = alpha_points(table, profile, psi0)
    P, PHI, PSI, DEL, fail_step, _ = kernels.orbit(
        table.cos_even, table.sin_even, np.ascontiguousarray(p0), np.ascontiguousarray(phi0), 4)
    ok = fail_step < 0
    closure = np.abs(P[4] - P[0]) + np.abs(angle_diff(PHI[4], PHI[0]))
    x, y = boundary_point(table, PSI)
    para = np.hypot(x[0] + x[2] - x[1] - x[3], y[0] + y[2] - y[1] - y[3])
    rect = np.max(np.abs(np.cos(np.diff(np.vstack([PSI, PSI[:1]]), axis=0))), axis=0)
    dev = np.max(np.abs(DEL - profile(PSI)), axis=0)

    def worst(v):
        v = v[ok]
        return float(np.max(v)) if v.size else float("nan")

    return ValidationReport(
        samples=samples,
        max_closure=worst(closure),
        max_parallelogram=worst(para),
        max_rectangle=worst(rect),
        max_curve_deviation=worst(dev),
        failures=int(np.count_nonzero(~ok)),
    )


# ---------------------------------------------------------------- region B

@dataclass(frozen=True, eq=False)
class RegionB:
    """Lines whose incidence satisfies ``d(psi) <= delta <= pi - d(psi)``."""

    profile: DProfile
    table: Table
    mu: float

    def contains_incidence(self, psi, delta, tol=1e-12):
        d = self.profile(psi)
        return (delta >= d - tol) & (delta <= math.pi - d + tol)

    def contains(self, z, tol=1e-12):
        _, _, psi, delta, status = reflect_arrays(self.table, z.p, z.phi)
        if status[0]:
            return False
        return bool(self.contains_incidence(float(wrap(psi[0])), float(delta[0]), tol))

    def contains_arrays(self, p, phi, tol=1e-12):
        _, _, psi, delta, status = reflect_arrays(self.table, p, phi)
        inside = np.zeros(status.shape, dtype=bool)
        ok = status == 0
        inside[ok] = self.contains_incidence(wrap(psi[ok]), delta[ok], tol)
        return inside


def region_b(profile: DProfile, table: Table | None = None) -> RegionB:
    table = table if table is not None else profile.table
    if table is None:
        raise ValueError("profile carries no table; pass one explicitly")
    return RegionB(profile=profile, table=table, mu=mu_b(table, profile))


def mu_b(table: Table, profile: DProfile, panels=None, order=None):
    """``mu(B) = int rho(psi) * 2 cos d(psi) dpsi`` (delta-integral in closed form)."""
    from . import _quadrature as quad
    nodes, weights = quad.composite_gauss_legendre(
        0.0, TWO_PI, panels or table.panels, order or table.order)
    return float(weights @ (table.rho(nodes) * 2.0 * np.cos(profile(nodes))))
