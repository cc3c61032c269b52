"""Oriented-line charts, generating functions and the billiard map.

A line is stored as ``(p, phi)``: ``phi`` is the angle of its right unit
normal ``n_phi = (cos phi, sin phi)``, so the line runs in direction
``t_phi = (-sin phi, cos phi)``, and ``p = <x, n_phi>`` for every point ``x``
on it.  The reflection point reached by a line is described by the normal
angle ``psi`` there and the angle ``delta`` between the line and the tangent;
in terms of the incoming and outgoing lines ``psi = (phi + phi1)/2`` and
``delta = (phi1 - phi)/2``.

The map is driven by the generating function ``S(phi, phi1) = 2 h(psi) sin
delta`` (positive sign convention, twist ``S12 > 0``): the outgoing line is
the root of ``p + S_1(phi, phi1) = 0``, which is monotone in ``phi1``.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from ._backend import kernels
from .errors import (CoincidentPoints, DegenerateChord, NoConvergence, OrbitError,
                     RootNotBracketed)
from .geometry import Table, boundary_point

TWO_PI = 2.0 * math.pi
DELTA_EPS = 1e-9

_STATUS_ERRORS = {
    1: (DegenerateChord, "line is tangential or misses the table"),
    2: (RootNotBracketed, "no sign change of p + S_1 on (phi, phi + 2 pi)"),
    3: (NoConvergence, "reflection root did not converge"),
}


def wrap(angle):
    """Reduce to [0, 2 pi)."""
    r = np.mod(angle, TWO_PI)
    # tiny negative inputs round up to exactly 2 pi
    return np.where(r >= TWO_PI, 0.0, r) if np.ndim(r) else (0.0 if r >= TWO_PI else r)


def angle_diff(a, b):
    """Signed difference ``a - b`` reduced to (-pi, pi]."""
    return -np.mod(-(np.asarray(a) - np.asarray(b)) + math.pi, TWO_PI) + math.pi


@dataclass(frozen=True)
class PhasePoint:
    p: float
    phi: float
    psi: float | None = None
    delta: float | None = None

    def reversed(self) -> "PhasePoint":
        """Same line with the opposite orientation."""
        return PhasePoint(-self.p, self.phi + math.pi)

    def as_array(self):
        return np.array([self.p, self.phi])


class GeneratingDerivatives(NamedTuple):
    S11: float
    S22: float
    S12: float


def generating_function(table: Table, phi, phi1):
    """``S(phi, phi1) = 2 h(psi) sin(delta)``."""
    psi = 0.5 * (phi + phi1)
    delta = 0.5 * (phi1 - phi)
    (h,) = table.h(psi, (0,))
    return 2.0 * h * np.sin(delta)


def s_derivatives(table: Table, psi, delta) -> GeneratingDerivatives:
    """Second partials of ``S`` at the chord with incidence ``(psi, delta)``.

    Works elementwise on arrays.
    """
    sd = np.sin(delta)
    if np.any(np.abs(sd) < 1e-12):
        raise DegenerateChord(f"sin(delta) below 1e-12 (delta={delta})")
    h, h1, h2 = table.h(psi)
    cd = np.cos(delta)
    half = 0.5 * (h2 - h) * sd
    out = GeneratingDerivatives(half - h1 * cd, half + h1 * cd, 0.5 * (h2 + h) * sd)
    if np.ndim(psi) == 0 and np.ndim(delta) == 0:
        return GeneratingDerivatives(*(float(v) for v in out))
    return out


def _raise_status(code, context=""):
    exc, msg = _STATUS_ERRORS[int(code)]
    raise exc(msg + context)


def reflect_arrays(table: Table, p, phi):
    """Vectorised map on raw arrays: ``(p1, phi1, psi, delta, status)``.

    ``status`` is 0 on success and 1/2/3 for degenerate chord / root not
    bracketed / no convergence; failed entries are NaN.
    """
    p = np.ascontiguousarray(np.atleast_1d(p), dtype=float)
    phi = np.ascontiguousarray(np.atleast_1d(phi), dtype=float)
    return kernels.reflect(table.cos_even, table.sin_even, p, phi)


def reflect(table: Table, z: PhasePoint) -> PhasePoint:
    """Image of ``z`` under the billiard map."""
    p1, phi1, _, _, status = reflect_arrays(table, z.p, z.phi)
    if status[0]:
        _raise_status(status[0], f" at (p, phi) = ({z.p!r}, {z.phi!r})")
    return PhasePoint(float(p1[0]), float(phi1[0]))


def chart_to_incidence(table: Table, z: PhasePoint):
    """``(psi, delta)`` of the boundary point where the line ``z`` is reflected."""
    _, _, psi, delta, status = reflect_arrays(table, z.p, z.phi)
    if status[0]:
        _raise_status(status[0], f" at (p, phi) = ({z.p!r}, {z.phi!r})")
    return float(wrap(psi[0])), float(delta[0])


def incidence_to_chart(table: Table, psi, delta) -> PhasePoint:
    """The line arriving at the boundary point ``psi`` at angle ``delta``."""
    if not DELTA_EPS <= delta <= math.pi - DELTA_EPS:
        raise DegenerateChord(f"delta={delta!r} outside [1e-9, pi - 1e-9]")
    h, h1 = table.h(psi, (0, 1))
    p = float(h * math.cos(delta) - h1 * math.sin(delta))
    return PhasePoint(p, float(psi - delta), float(psi), float(delta))


def incidence_to_chart_arrays(table: Table, psi, delta):
    h, h1 = table.h(psi, (0, 1))
    return h * np.cos(delta) - h1 * np.sin(delta), psi - delta


# ---------------------------------------------------------------- arclength

def arclength(table: Table, psi):
    """Arclength from the point with normal angle 0 to the one with angle ``psi``.

    Integrates ``rho = h + h''`` term by term.
    """
    psi = np.asarray(psi, dtype=float)
    k = table.harmonics[1:]
    c = table.cos_even[1:]
    s = table.sin_even[1:]
    w = 1.0 - k * k
    arg = np.multiply.outer(psi, k)
    val = table.cos_even[0] * psi + np.sin(arg) @ (w * c / k) + (1.0 - np.cos(arg)) @ (w * s / k)
    return float(val) if val.ndim == 0 else val


def psi_at_arclength(table: Table, s, tol=1e-14, max_iter=50):
    """Inverse of :func:`arclength` by safeguarded Newton (``ds/dpsi = rho > 0``)."""
    s = np.asarray(s, dtype=float)
    P = table.P
    turns = np.floor(s / P)
    r = s - turns * P
    psi = TWO_PI * r / P
    lo = np.zeros_like(psi)
    hi = np.full_like(psi, TWO_PI)
    for _ in range(max_iter):
        f = arclength(table, psi) - r
        lo = np.where(f < 0, psi, lo)
        hi = np.where(f > 0, psi, hi)
        step = f / table.rho(psi)
        new = psi - step
        new = np.where((new <= lo) | (new >= hi), 0.5 * (lo + hi), new)
        if np.all(np.abs(new - psi) < tol):
            psi = new
            break
        psi = new
    out = psi + turns * TWO_PI
    return float(out) if out.ndim == 0 else out


class ChordPartials(NamedTuple):
    L: float
    L1: float
    L2: float
    L12: float
    L11: float
    L22: float
    delta: float
    delta1: float


def chord_length_partials(table: Table, s, s1) -> ChordPartials:
    """Chord length ``L(s, s1) = |gamma(s) - gamma(s1)|`` and its partials.

    ``delta`` (``delta1``) is the angle between the chord and the tangent at
    ``gamma(s)`` (``gamma(s1)``), so ``L1 = -cos delta`` and ``L2 = cos delta1``.
    """
    P = table.P
    if abs(math.remainder(s - s1, P)) < 1e-12 * P:
        raise CoincidentPoints(f"s={s!r} and s1={s1!r} coincide modulo the perimeter")
    psi = psi_at_arclength(table, s)
    psi1 = psi_at_arclength(table, s1)
    x0, y0 = boundary_point(table, psi)
    x1, y1 = boundary_point(table, psi1)
    cx, cy = x1 - x0, y1 - y0
    L = math.hypot(cx, cy)
    ux, uy = cx / L, cy / L
    # unit tangents (counterclockwise)
    t0 = (-math.sin(psi), math.cos(psi))
    t1 = (-math.sin(psi1), math.cos(psi1))
    cos_d = ux * t0[0] + uy * t0[1]
    sin_d = t0[0] * uy - t0[1] * ux
    cos_d1 = ux * t1[0] + uy * t1[1]
    # the chord leaves through gamma(s1): sin(delta1) = <u, outer normal>
    sin_d1 = t1[1] * ux - t1[0] * uy
    k0 = 1.0 / float(table.rho(psi))
    k1 = 1.0 / float(table.rho(psi1))
    return ChordPartials(
        L=L,
        L1=-cos_d,
        L2=cos_d1,
        L12=sin_d * sin_d1 / L,
        L11=sin_d * sin_d / L - k0 * sin_d,
        L22=sin_d1 * sin_d1 / L - k1 * sin_d1,
        delta=math.atan2(sin_d, cos_d),
        delta1=math.atan2(sin_d1, cos_d1),
    )


# ---------------------------------------------------------------- orbits

@dataclass(frozen=True, eq=False)
class OrbitSegment:
    """Phase points ``z_0 .. z_n`` and the incidence of each chord ``z_k -> z_k+1``.

    ``phi`` is kept unwrapped, so ``phi[k+1] - phi[k] = 2 delta[k]``.
    """

    p: np.ndarray
    phi: np.ndarray
    psi: np.ndarray
    delta: np.ndarray

    def __len__(self):
        return len(self.p)

    def point(self, k) -> PhasePoint:
        if k < len(self.psi):
            return PhasePoint(float(self.p[k]), float(self.phi[k]),
                              float(self.psi[k]), float(self.delta[k]))
        return PhasePoint(float(self.p[k]), float(self.phi[k]))

    @property
    def n_chords(self):
        return len(self.psi)


def iterate(table: Table, z: PhasePoint, n: int) -> OrbitSegment:
    """Apply the map ``n`` times starting from ``z``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    P, PHI, PSI, DEL, fail_step, fail_code = kernels.orbit(
        table.cos_even, table.sin_even, np.array([z.p], float), np.array([z.phi], float), int(n))
    if fail_step[0] >= 0:
        exc, msg = _STATUS_ERRORS[int(fail_code[0])]
        raise OrbitError(int(fail_step[0]), exc(msg))
    return OrbitSegment(P[:, 0].copy(), PHI[:, 0].copy(), PSI[:, 0].copy(), DEL[:, 0].copy())


def iterate_backward(table: Table, z: PhasePoint, n: int) -> OrbitSegment:
    """Segment ``T^-n z .. z`` obtained through orientation reversal."""
    back = iterate(table, z.reversed(), n)
    p = -back.p[::-1]
    phi = back.phi[::-1] + math.pi
    psi = back.psi[::-1]
    delta = math.pi - back.delta[::-1]
    return OrbitSegment(p.copy(), phi.copy(), psi.copy(), delta.copy())


def centered_segment(table: Table, z: PhasePoint, N: int) -> OrbitSegment:
    """Orbit segment ``z_-N .. z_N`` with ``z_0 = z``."""
    back = iterate_backward(table, z, N)
    fwd = iterate(table, z, N)
    # align the unwrapped angle of the backward half with the forward one
    shift = fwd.phi[0] - back.phi[-1]
    return OrbitSegment(
        np.concatenate([back.p[:-1], fwd.p]),
        np.concatenate([back.phi[:-1] + shift, fwd.phi]),
        np.concatenate([back.psi + shift, fwd.psi]),
        np.concatenate([back.delta, fwd.delta]),
    )


def write_orbit_csv(stream, table: Table, segment: OrbitSegment):
    """Write ``step, p, phi, psi, delta`` rows; angles reduced to [0, 2 pi)."""
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["step", "p", "phi", "psi", "delta"])
    last = len(segment) - 1
    for k in range(len(segment)):
        if k < last:
            psi, delta = segment.psi[k], segment.delta[k]
        else:
            try:
                psi, delta = chart_to_incidence(table, segment.point(k))
            except (DegenerateChord, RootNotBracketed, NoConvergence):
                psi = delta = float("nan")
        writer.writerow([k, repr(float(segment.p[k])), repr(float(wrap(segment.phi[k]))),
                         repr(float(wrap(psi))), repr(float(delta))])
