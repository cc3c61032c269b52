"""Centrally symmetric convex curves given by truncated Fourier support functions.

The support function is

    h(psi) = sum_k  c_k cos(k psi) + s_k sin(k psi),

and central symmetry about the origin means only even harmonics occur.  A
validated curve together with its cached scalar metrics is a :class:`Table`.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from . import _quadrature as quad
from .errors import NonPositive, NotCentrallySymmetric, NotConvex, TableError

DEFAULT_TOLERANCE = 1e-12
VALIDATION_GRID = 4096
TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class SupportFunction:
    """Fourier coefficients of a support function, indexed by harmonic number.

    ``cos_coeffs[k]`` multiplies ``cos(k psi)`` and ``sin_coeffs[k]``
    multiplies ``sin(k psi)``; ``sin_coeffs[0]`` is ignored.  Odd entries are
    allowed here so that invalid input can be represented and rejected by
    :func:`build_table`.
    """

    cos_coeffs: tuple
    sin_coeffs: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "cos_coeffs", tuple(float(c) for c in self.cos_coeffs))
        object.__setattr__(self, "sin_coeffs", tuple(float(s) for s in self.sin_coeffs))

    @classmethod
    def from_even(cls, cos_even: Sequence[float], sin_even: Sequence[float] = ()):
        """Build from even-harmonic lists ``[c0, c2, c4, ...]`` and ``[s2, s4, ...]``."""
        n = max(len(cos_even), len(sin_even) + 1)
        cos_full = [0.0] * (2 * n - 1)
        sin_full = [0.0] * (2 * n - 1)
        for j, c in enumerate(cos_even):
            cos_full[2 * j] = c
        for j, s in enumerate(sin_even, start=1):
            sin_full[2 * j] = s
        return cls(tuple(cos_full), tuple(sin_full))

    @property
    def max_harmonic(self):
        return max(len(self.cos_coeffs), len(self.sin_coeffs)) - 1

    def dense(self):
        """Return (k, c_k, s_k) arrays over all harmonics 0..max_harmonic."""
        n = self.max_harmonic + 1
        c = np.zeros(n)
        s = np.zeros(n)
        c[: len(self.cos_coeffs)] = self.cos_coeffs
        s[: len(self.sin_coeffs)] = self.sin_coeffs
        s[0] = 0.0
        return np.arange(n, dtype=float), c, s


def _fourier_eval(k, c, s, psi, derivs=(0, 1, 2)):
    psi = np.asarray(psi, dtype=float)
    arg = np.multiply.outer(psi, k)
    cs, sn = np.cos(arg), np.sin(arg)
    out = []
    for m in derivs:
        # d^m/dpsi^m of c cos + s sin, written as a phase shift by m*pi/2
        if m % 4 == 0:
            v = cs @ c + sn @ s
        elif m % 4 == 1:
            v = -sn @ (k * c) + cs @ (k * s)
        elif m % 4 == 2:
            v = -(cs @ (k**2 * c) + sn @ (k**2 * s))
        else:
            v = sn @ (k**3 * c) - cs @ (k**3 * s)
        out.append(v)
    return out


@dataclass(frozen=True)
class Metrics:
    P: float
    A: float
    beta: float
    D: float
    defect: float
    rho_min: float
    rho_max: float

    def as_dict(self):
        return {
            "P": self.P,
            "A": self.A,
            "beta": self.beta,
            "D": self.D,
            "defect": self.defect,
            "rho_min": self.rho_min,
            "rho_max": self.rho_max,
        }


@dataclass(frozen=True, eq=False)
class Table:
    """A validated, immutable billiard table.

    Only the even harmonics are retained: ``harmonics`` holds ``0, 2, 4, ...``
    and ``cos_even`` / ``sin_even`` the matching coefficients.  Use
    :func:`build_table` to construct one.
    """

    support: SupportFunction
    tolerance: float
    harmonics: np.ndarray = field(repr=False)
    cos_even: np.ndarray = field(repr=False)
    sin_even: np.ndarray = field(repr=False)
    metrics: Metrics = None
    panels: int = quad.DEFAULT_PANELS
    order: int = quad.DEFAULT_ORDER

    # convenience accessors mirroring the cached metrics
    @property
    def P(self):
        return self.metrics.P

    @property
    def A(self):
        return self.metrics.A

    @property
    def beta(self):
        return self.metrics.beta

    @property
    def D(self):
        return self.metrics.D

    @property
    def defect(self):
        return self.metrics.defect

    @property
    def rho_min(self):
        return self.metrics.rho_min

    def h(self, psi, derivs=(0, 1, 2)):
        return _fourier_eval(self.harmonics, self.cos_even, self.sin_even, psi, derivs)

    def rho(self, psi):
        h0, h2 = self.h(psi, (0, 2))
        return h0 + h2

    def quadrature(self, a=0.0, b=TWO_PI):
        return quad.composite_gauss_legendre(a, b, self.panels, self.order)

    def is_circle(self, tol=1e-9):
        return bool(np.all(np.abs(self.cos_even[1:]) < tol) and np.all(np.abs(self.sin_even[1:]) < tol))

    def to_json(self):
        return {
            "cos": [float(c) for c in self.cos_even],
            "sin": [float(s) for s in self.sin_even[1:]],
            "tolerance": self.tolerance,
        }


def support_eval(table: Table, psi):
    """Return ``(h, h', h'')`` at ``psi`` (scalar or array), evaluated term by term."""
    h0, h1, h2 = table.h(psi)
    if np.ndim(psi) == 0:
        return float(h0), float(h1), float(h2)
    return h0, h1, h2


def boundary_point(table: Table, psi):
    """Point of the curve whose outer normal has angle ``psi``.

    Uses ``gamma = h n + h' t`` with ``n = (cos, sin)`` and ``t = (-sin, cos)``.
    """
    h0, h1 = table.h(psi, (0, 1))
    c, s = np.cos(psi), np.sin(psi)
    x = h0 * c - h1 * s
    y = h0 * s + h1 * c
    if np.ndim(psi) == 0:
        return float(x), float(y)
    return x, y


def _refine(func, grid, values, idx, sign):
    """Polish a grid extremum of ``func`` with a bounded scalar search."""
    step = grid[1] - grid[0]
    lo, hi = grid[idx] - step, grid[idx] + step
    res = minimize_scalar(lambda t: sign * func(t), bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-12})
    best = sign * res.fun
    if sign * best > sign * values[idx]:
        return float(grid[idx]), float(values[idx])
    return float(res.x), float(best)


def _extrema(func, grid, kind):
    vals = func(grid)
    if kind == "min":
        idx = int(np.argmin(vals))
        return _refine(func, grid, vals, idx, 1.0)
    idx = int(np.argmax(vals))
    return _refine(func, grid, vals, idx, -1.0)


def build_table(support: SupportFunction, tolerance: float = DEFAULT_TOLERANCE,
                panels: int = quad.DEFAULT_PANELS, order: int = quad.DEFAULT_ORDER,
                grid: int = VALIDATION_GRID) -> Table:
    """Validate ``support`` and compute the cached metrics.

    Raises
    ------
    NotCentrallySymmetric
        An odd harmonic exceeds ``tolerance``.
    NonPositive
        ``h <= 0`` somewhere (origin not interior).
    NotConvex
        ``h + h'' <= 0`` somewhere.
    """
    if not tolerance > 0:
        raise TableError("tolerance must be positive")
    k, c, s = support.dense()
    if not (np.all(np.isfinite(c)) and np.all(np.isfinite(s))):
        raise TableError("coefficients must be finite")
    for kk in range(1, len(k), 2):
        mag = math.hypot(c[kk], s[kk])
        if mag > tolerance:
            raise NotCentrallySymmetric(kk, mag)
    even = slice(0, len(k), 2)
    harmonics = k[even].copy()
    cos_even = c[even].copy()
    sin_even = s[even].copy()
    if not cos_even[0] > 0:
        raise TableError("mean term c0 must be positive")
    for arr in (harmonics, cos_even, sin_even):
        arr.setflags(write=False)

    def h_of(t):
        return _fourier_eval(harmonics, cos_even, sin_even, t, (0,))[0]

    def rho_of(t):
        h0, h2 = _fourier_eval(harmonics, cos_even, sin_even, t, (0, 2))
        return h0 + h2

    # pi-periodic, so a half-period grid suffices
    g = np.linspace(0.0, math.pi, grid, endpoint=False)
    psi_h, h_min = _extrema(h_of, g, "min")
    if h_min <= 0:
        raise NonPositive(psi_h, h_min)
    psi_r, rho_min = _extrema(rho_of, g, "min")
    if rho_min <= 0:
        raise NotConvex(psi_r, rho_min)
    _, rho_max = _extrema(rho_of, g, "max")
    _, h_max = _extrema(h_of, g, "max")

    nodes, weights = quad.composite_gauss_legendre(0.0, TWO_PI, panels, order)
    h0, h1 = _fourier_eval(harmonics, cos_even, sin_even, nodes, (0, 1))
    P = float(weights @ h0)
    A = float(0.5 * (weights @ (h0 * h0 - h1 * h1)))
    metrics = Metrics(
        P=P,
        A=A,
        beta=1.0 / rho_max,
        # width in direction psi is h(psi) + h(psi + pi) = 2 h(psi)
        D=2.0 * h_max,
        defect=P * P - 4.0 * math.pi * A,
        rho_min=rho_min,
        rho_max=rho_max,
    )
    return Table(support=support, tolerance=tolerance, harmonics=harmonics,
                 cos_even=cos_even, sin_even=sin_even, metrics=metrics,
                 panels=panels, order=order)


def metrics(table: Table) -> Metrics:
    return table.metrics


def project_even(func, max_harmonic, samples=None):
    """Even-harmonic Fourier projection of a 2*pi-periodic function.

    Returns ``(cos_even, sin_even)`` in the layout of
    :meth:`SupportFunction.from_even`.
    """
    if samples is None:
        samples = max(1024, 8 * max_harmonic)
    psi = TWO_PI * np.arange(samples) / samples
    F = np.fft.rfft(func(psi)) / samples
    ks = np.arange(0, max_harmonic + 1, 2)
    cos_even = 2.0 * F.real[ks]
    cos_even[0] = F.real[0]
    sin_even = -2.0 * F.imag[ks[1:]]
    return cos_even, sin_even


def circle(r: float = 1.0, **kwargs) -> Table:
    return build_table(SupportFunction((float(r),)), **kwargs)


def ellipse_support(a, b):
    def h(psi):
        return np.sqrt((a * np.cos(psi)) ** 2 + (b * np.sin(psi)) ** 2)
    return h


def ellipse(a: float, b: float, max_harmonic: int = 32, **kwargs) -> Table:
    """Axis-aligned ellipse with semi-axes ``a`` (x) and ``b`` (y).

    The exact support function is not a finite series, so it is projected
    onto the even harmonics up to ``max_harmonic``.
    """
    cos_even, sin_even = project_even(ellipse_support(a, b), max_harmonic)
    return build_table(SupportFunction.from_even(cos_even, sin_even), **kwargs)


def load_table(path, **kwargs) -> Table:
    """Read a table definition file.

    Two layouts are accepted: the compact ``{"cos": [c0, c2, ...],
    "sin": [s2, ...], "tolerance": t}`` with odd slots omitted, and an
    explicit ``{"harmonics": [[k, c_k, s_k], ...]}`` that may name any
    harmonic (so asymmetric input can be stated and diagnosed).
    """
    with open(path) as fh:
        data = json.load(fh)
    return table_from_dict(data, **kwargs)


def table_from_dict(data, **kwargs) -> Table:
    if not isinstance(data, dict):
        raise TableError("table definition must be a JSON object")
    tol = float(data.get("tolerance", kwargs.pop("tolerance", DEFAULT_TOLERANCE)))
    kwargs.pop("tolerance", None)
    if "harmonics" in data:
        terms = [(int(t[0]), float(t[1]), float(t[2]) if len(t) > 2 else 0.0)
                 for t in data["harmonics"]]
        if not terms or min(t[0] for t in terms) < 0:
            raise TableError("harmonic indices must be non-negative")
        n = max(t[0] for t in terms) + 1
        cos_full = [0.0] * n
        sin_full = [0.0] * n
        for kk, ck, sk in terms:
            cos_full[kk] += ck
            sin_full[kk] += sk
        support = SupportFunction(tuple(cos_full), tuple(sin_full))
    elif "cos" in data:
        support = SupportFunction.from_even(data["cos"], data.get("sin", []))
    else:
        raise TableError("table definition needs 'cos' or 'harmonics'")
    return build_table(support, tolerance=tol, **kwargs)
