"""Second variation, Jacobi fields and locally maximizing orbits.

For the functional ``sum S(phi_k, phi_k+1)`` the second variation along a
configuration is the tridiagonal matrix with diagonal
``a_k = S22(phi_k-1, phi_k) + S11(phi_k, phi_k+1)`` and off-diagonal
``b_k = S12(phi_k, phi_k+1)``.  A segment is locally maximizing when this
matrix is negative definite; Jacobi fields solve
``b_k-1 x_k-1 + a_k x_k + b_k x_k+1 = 0``.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ._backend import kernels
from .errors import BilliardError, PivotUnderflow
from .geometry import Table
from .phasemap import (OrbitSegment, PhasePoint, angle_diff, arclength, centered_segment,
                       chord_length_partials, incidence_to_chart, iterate, s_derivatives)

PIVOT_TOL = 1e-14
CHUNK = 2048

MAXIMIZING = "maximizing"
NOT_MAXIMIZING = "not_maximizing"
UNDECIDED = "undecided"
_VERDICT_CODES = {1: MAXIMIZING, 0: NOT_MAXIMIZING, -1: UNDECIDED, -2: UNDECIDED}

__all__ = [
    "OrbitSegment", "MaxClassification", "jacobi_coefficients",
    "second_variation_negative_definite", "is_locally_maximizing", "classify_points",
    "jacobi_field", "find_conjugate_point", "refine_conjugate_point",
    "tangent_map_fd", "omega_on_alpha", "chord_hessian_classification",
]


@dataclass(frozen=True)
class MaxClassification:
    verdict: str
    N: Optional[int] = None
    first_bad_index: Optional[int] = None
    min_pivot: Optional[float] = None

    @property
    def maximizing(self):
        return self.verdict == MAXIMIZING


def jacobi_coefficients(table: Table, segment: OrbitSegment):
    """Coefficients ``(a, b)`` along ``segment``.

    With chords ``c_0 .. c_n-1`` joining lines ``phi_0 .. phi_n``, ``a[j]`` is
    the diagonal entry at interior line ``phi_j+1`` and ``b[k] = S12(c_k)``
    for every chord, so ``b`` is one longer than ``a``.
    """
    n = segment.n_chords
    if n < 2:
        raise ValueError("segment needs at least 3 phase points")
    S11, S22, S12 = s_derivatives(table, segment.psi, segment.delta)
    a = S22[:-1] + S11[1:]
    return np.asarray(a), np.asarray(S12)


def second_variation_negative_definite(a, b, pivot_tol: float = PIVOT_TOL,
                                       N: Optional[int] = None,
                                       strict: bool = False) -> MaxClassification:
    """Classify the tridiagonal matrix with diagonal ``a`` and off-diagonal ``b``.

    ``b`` may carry the two boundary couplings as well (length ``len(a) + 1``,
    as returned by :func:`jacobi_coefficients`); they are dropped.  Pivots of
    the negated matrix follow ``u_1 = -a_1``, ``u_k+1 = -a_k+1 - b_k^2 / u_k``.
    With ``strict`` a tiny pivot raises :class:`PivotUnderflow` instead of
    returning an undecided verdict.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    m = a.size
    if b.size == m + 1:
        b = b[1:-1]
    if b.size != m - 1:
        raise ValueError(f"off-diagonal has length {b.size}, expected {m - 1}")
    u = 0.0
    smallest = math.inf
    for k in range(m):
        u = -a[k] if k == 0 else -a[k] - b[k - 1] ** 2 / u
        if abs(u) < pivot_tol:
            if strict:
                raise PivotUnderflow(k + 1, float(u))
            return MaxClassification(UNDECIDED, N, k + 1, float(u))
        if u < 0:
            return MaxClassification(NOT_MAXIMIZING, N, k + 1, float(u))
        smallest = min(smallest, float(u))
    return MaxClassification(MAXIMIZING, N, None, smallest if m else None)


def _as_arrays(p, phi):
    return (np.ascontiguousarray(np.atleast_1d(p), dtype=float),
            np.ascontiguousarray(np.atleast_1d(phi), dtype=float))


def classify_points(table: Table, p, phi, N: int, horizons=None,
                    pivot_tol: float = PIVOT_TOL, workers: int = 1):
    """Batch classification of centred windows.

    Returns ``(verdict, first_bad)`` of shape ``(m, len(horizons))`` with
    codes 1 maximizing, 0 not maximizing, -1 pivot underflow, -2 orbit
    failure.  Work is split into fixed-size chunks, so results do not depend
    on ``workers``.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    p, phi = _as_arrays(p, phi)
    hz = np.asarray([N] if horizons is None else horizons, dtype=np.int64)
    if np.any(hz < 1) or np.any(hz > N):
        raise ValueError("horizons must lie in [1, N]")
    starts = range(0, p.size, CHUNK)

    def run(i):
        sl = slice(i, i + CHUNK)
        return kernels.classify(table.cos_even, table.sin_even, p[sl], phi[sl], int(N),
                                hz, float(pivot_tol))

    if workers > 1 and p.size > CHUNK:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, starts))
    else:
        parts = [run(i) for i in starts]
    if not parts:
        return (np.empty((0, hz.size), np.int8), np.empty((0, hz.size), np.int32))
    return (np.concatenate([v for v, _ in parts]), np.concatenate([f for _, f in parts]))


def is_locally_maximizing(table: Table, z: PhasePoint, N: int,
                          pivot_tol: float = PIVOT_TOL) -> MaxClassification:
    """Classify the window ``z_-N .. z_N`` of the orbit through ``z``."""
    if N < 2:
        raise ValueError("N must be >= 2")
    v, f = classify_points(table, z.p, z.phi, N, pivot_tol=pivot_tol)
    code = int(v[0, 0])
    return MaxClassification(_VERDICT_CODES[code], N, int(f[0, 0]) or None)


def verdict_name(code):
    return _VERDICT_CODES[int(code)]


# ---------------------------------------------------------------- Jacobi fields

def jacobi_field_from_coefficients(a, b):
    """Field with ``x_0 = 0``, ``x_1 = 1`` propagated through all coefficients.

    ``a`` has length ``n - 1`` and ``b`` length ``n``; returns ``x_0 .. x_n``.
    """
    n = len(b)
    x = np.zeros(n + 1)
    x[1] = 1.0
    for k in range(1, n):
        x[k + 1] = -(b[k - 1] * x[k - 1] + a[k - 1] * x[k]) / b[k]
    return x


def jacobi_field(table: Table, z: PhasePoint, n: int):
    """Jacobi field ``dphi_0 .. dphi_n`` along the forward orbit of ``z``.

    Starts from a vertical vector: ``dphi_0 = 0``, ``dphi_1 = 1``.
    """
    seg = iterate(table, z, n)
    a, b = jacobi_coefficients(table, seg)
    return jacobi_field_from_coefficients(a, b)


def _first_conjugate(x):
    for k in range(2, len(x)):
        if x[k] == 0.0 or np.sign(x[k]) != np.sign(x[k - 1]):
            return k
    return None


def find_conjugate_point(table: Table, z: PhasePoint, max_n: int) -> Optional[int]:
    """Smallest ``n >= 2`` at which the vertical Jacobi field vanishes or changes sign."""
    if max_n < 1:
        raise ValueError("max_n must be >= 1")
    if max_n < 2:
        return None
    return _first_conjugate(jacobi_field(table, z, max_n))


def refine_conjugate_point(table: Table, start: tuple, stop: tuple, n: int,
                           tol: float = 1e-13, max_iter: int = 200) -> PhasePoint:
    """Point where ``dphi_n`` vanishes on the incidence segment ``start -> stop``.

    ``start`` and ``stop`` are ``(psi, delta)`` pairs at which ``dphi_n`` has
    opposite signs; the zero is found by bisection, so the returned line and
    its ``n``-th image are conjugate.
    """
    def value(t):
        psi = start[0] + t * (stop[0] - start[0])
        delta = start[1] + t * (stop[1] - start[1])
        z = incidence_to_chart(table, psi, delta)
        return jacobi_field(table, z, n)[n], z

    lo, hi = 0.0, 1.0
    f_lo, _ = value(lo)
    f_hi, _ = value(hi)
    if np.sign(f_lo) == np.sign(f_hi):
        raise BilliardError("dphi_n has the same sign at both ends of the segment")
    z = None
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        f_mid, z = value(mid)
        if f_mid == 0.0:
            break
        if np.sign(f_mid) == np.sign(f_lo):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
        if hi - lo < tol:
            break
    return z


def tangent_map_fd(table: Table, z: PhasePoint, n: int, v=(1.0, 0.0), eps: float = 1e-6):
    """Central finite-difference image ``DT^n(z) v`` in ``(p, phi)`` coordinates."""
    plus = iterate(table, PhasePoint(z.p + eps * v[0], z.phi + eps * v[1]), n)
    minus = iterate(table, PhasePoint(z.p - eps * v[0], z.phi - eps * v[1]), n)
    dp = (plus.p[n] - minus.p[n]) / (2 * eps)
    dphi = float(angle_diff(plus.phi[n], minus.phi[n])) / (2 * eps)
    return np.array([dp, dphi])


# ---------------------------------------------------------------- chart independence

def chord_hessian_classification(table: Table, z: PhasePoint, N: int,
                                 pivot_tol: float = PIVOT_TOL) -> MaxClassification:
    """Classify the centred window through the chord-length functional.

    The configuration is the sequence of bounce points ``s_k``; the window
    uses the ``2N`` bounce points of the same orbit segment that
    :func:`is_locally_maximizing` examines, with the two outermost held fixed.
    """
    seg = centered_segment(table, z, N)
    s = arclength(table, seg.psi)
    m = len(s)
    L11 = np.empty(m - 1)
    L22 = np.empty(m - 1)
    L12 = np.empty(m - 1)
    for k in range(m - 1):
        cp = chord_length_partials(table, float(s[k]), float(s[k + 1]))
        L11[k], L22[k], L12[k] = cp.L11, cp.L22, cp.L12
    a = L22[:-1] + L11[1:]
    return second_variation_negative_definite(a, L12, pivot_tol, N=N)


# ---------------------------------------------------------------- omega on alpha

@dataclass
class OmegaReport:
    samples: int
    min_step_margin: float
    max_abs_omega: float
    bound_K: float
    max_relation_residual: float
    min_dphi_ratio: float

    @property
    def step_inequality_holds(self):
        return self.min_step_margin >= -1e-8

    @property
    def bound_holds(self):
        return self.max_abs_omega < self.bound_K

    def as_dict(self):
        return dict(self.__dict__)


def _alpha_graph(table, profile, psi):
    """``phi``, ``p`` and their ``psi``-derivatives along the curve."""
    d, d1 = profile(psi, (0, 1))
    h, h1, h2 = table.h(psi)
    cd, sd = np.cos(d), np.sin(d)
    p = h * cd - h1 * sd
    dp = h1 * cd - h * sd * d1 - h2 * sd - h1 * cd * d1
    return psi - d, p, 1.0 - d1, dp


def omega_on_alpha(table: Table, profile, samples: int = 256) -> OmegaReport:
    """Check the step inequality for ``omega = dp/dphi`` along the invariant curve.

    On the curve the invariant line field is its tangent, so ``omega`` is the
    slope of the graph ``p(phi)``.  The map sends the point over ``psi`` to the
    point over ``psi + pi/2``; ``dphi_ratio`` is the induced stretch of the
    ``phi``-component.  Both relations ``omega(z) = -S11 - S12 r`` and
    ``omega(Tz) = S22 + S12 / r`` are checked, as is the bound
    ``|omega| < max(rho + h + |h'|)``.
    """
    psi = 2 * math.pi * (np.arange(samples) + 0.5) / samples
    _, _, dphi0, dp0 = _alpha_graph(table, profile, psi)
    _, _, dphi1, dp1 = _alpha_graph(table, profile, psi + math.pi / 2)
    omega0 = dp0 / dphi0
    omega1 = dp1 / dphi1
    d = profile(psi)
    S11, S22, S12 = s_derivatives(table, psi, d)
    ratio = dphi1 / dphi0
    margin = (omega1 - omega0) - (S11 + S22 + 2 * S12)
    res = np.maximum(np.abs(omega0 - (-S11 - S12 * ratio)),
                     np.abs(omega1 - (S22 + S12 / ratio)))
    grid = np.linspace(0, 2 * math.pi, 4096, endpoint=False)
    h, h1, h2 = table.h(grid)
    K = float(np.max(h + h2 + h + np.abs(h1)))
    return OmegaReport(
        samples=samples,
        min_step_margin=float(np.min(margin)),
        max_abs_omega=float(np.max(np.abs(omega0))),
        bound_K=K,
        max_relation_residual=float(np.max(res)),
        min_dphi_ratio=float(np.min(ratio)),
    )
