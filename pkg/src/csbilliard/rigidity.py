"""Integral quantities and the inequality chain bounding the isoperimetric defect.

Everything is expressed through the angle profile ``d(psi)`` of the
4-periodic curve and recomputed from both sides, so each step of the
argument is checked numerically rather than assumed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, fields

import numpy as np

from . import _quadrature as quad
from .errors import InconsistentInputs
from .fourcurve import DProfile
from .geometry import Table
from .measure import MeasureEstimate

QUARTER = math.pi / 4
D_CLAMP = 1e-9
IDENTITY_TOL = 1e-8
PROFILE_MATCH_TOL = 1e-8


# ---------------------------------------------------------------- functions of d

def _clamp(d):
    return np.clip(d, D_CLAMP, math.pi / 2 - D_CLAMP)


def f_value(d):
    d = _clamp(d)
    return QUARTER + (QUARTER - d) * np.cos(2 * d) + 0.5 * np.sin(2 * d)


def f_prime(d):
    d = _clamp(d)
    return -2.0 * (QUARTER - d) * np.sin(2 * d)


def f_second(d):
    d = _clamp(d)
    return -4.0 * (QUARTER - d) * np.cos(2 * d) + 2.0 * np.sin(2 * d)


def f2_value(d):
    return QUARTER - (d - QUARTER) * np.cos(2 * d) / 3.0 - np.sin(2 * d) / 6.0


def f3_value(d):
    return np.sin(2 * d) - f_value(d)


def chord_factor(d):
    """``int_d^{pi-d} sin^2`` = ``pi/2 - d + sin(2d)/2``."""
    return math.pi / 2 - d + 0.5 * np.sin(2 * d)


def bracket_quartic(d):
    """``f2 + f''/3 - f'^2/(4f)``, the coefficient of ``d'^4``."""
    f = f_value(d)
    return f2_value(d) + f_second(d) / 3.0 - f_prime(d) ** 2 / (4.0 * f)


def bracket_quadratic(d):
    """``sin 2d + 3f``, the coefficient of ``d'^2``."""
    return np.sin(2 * d) + 3.0 * f_value(d)


# ---------------------------------------------------------------- integrands

def _u_terms(s, c, d1, d2, factor):
    return (
        d2 * d2 * c * c * factor,
        -2.0 * d2 * d1 * d1 * s * c * factor,
        d2 * s * c * factor,
        d1 ** 4 * s * s * factor,
        -d1 * d1 * s * s * factor,
    )


@dataclass
class IntegrandBundle:
    psi: np.ndarray
    U: np.ndarray
    U_terms: tuple
    U_hat: tuple
    V: tuple
    W: tuple
    X: tuple
    f: np.ndarray
    f1: np.ndarray
    f2nd: np.ndarray
    f2: np.ndarray
    f3: np.ndarray
    Y: np.ndarray
    Y1: np.ndarray
    g: np.ndarray


def integrand_bundle(profile: DProfile, psi) -> IntegrandBundle:
    """All proof integrands at ``psi`` from their closed forms in ``d, d', d''``.

    ``U_hat`` is each ``U_j`` after the quarter-turn substitution (sin and
    cos swapped, ``d' -> -d'``, ``d'' -> -d''``, ``d -> pi/2 - d``) evaluated
    from the data at ``psi`` itself.
    """
    psi = np.asarray(psi, dtype=float)
    d, d1, d2 = profile(psi, (0, 1, 2))
    s, c = np.sin(d), np.cos(d)
    factor = chord_factor(d)
    s2 = np.sin(2 * d)
    c2 = np.cos(2 * d)
    U_terms = _u_terms(s, c, d1, d2, factor)
    U_hat = _u_terms(c, s, -d1, -d2, chord_factor(math.pi / 2 - d))
    U = (s - s * d1 ** 2 + c * d2) * (-s * d1 ** 2 + c * d2) * factor

    even = QUARTER + (d - QUARTER) * c2 + 0.5 * s2
    f = f_value(d)
    V = (
        d2 * d2 * f,
        d2 * d1 * d1 * s2 * (2 * d - math.pi / 2),
        d2 * s2 * (QUARTER - d),
        d1 ** 4 * even,
        -d1 * d1 * even,
    )
    W = (
        V[0],
        d1 ** 4 * (-4.0 / 3.0 * c2 * (d - QUARTER) - 2.0 / 3.0 * s2),
        d1 * d1 * (2 * c2 * (d - QUARTER) + s2),
        V[3],
        V[4],
    )
    f2 = f2_value(d)
    f3 = f3_value(d)
    X = (W[0], d1 ** 4 * f2, d1 * d1 * f3)
    f1 = f_prime(d)
    f2nd = f_second(d)
    sq = np.sqrt(f)
    Y = d1 * sq
    Y1 = sq * d2 + f1 * d1 * d1 / (2 * sq)
    g = f * d2 * d2 - f2nd * d1 ** 4 / 3.0 + f1 * f1 * d1 ** 4 / (4 * f) - 4 * f * d1 * d1
    return IntegrandBundle(psi, U, U_terms, U_hat, V, W, X, f, f1, f2nd, f2, f3, Y, Y1, g)


# ---------------------------------------------------------------- integrals

def _rule(a, b, panels=128, order=16):
    return quad.composite_gauss_legendre(a, b, panels, order)


def integral_I(table: Table, profile: DProfile, panels=None, order=None, delta_order: int = 24):
    """``I`` by the closed-form delta integral and by 2-D quadrature over B.

    Returns ``(one_d, two_d)``.
    """
    nodes, weights = quad.composite_gauss_legendre(
        0.0, 2 * math.pi, panels or table.panels, order or table.order)
    h, _, h2 = table.h(nodes)
    d = profile(nodes)
    one_d = float(weights @ (h2 * (h + h2) * chord_factor(d)))
    dl, wl = quad.gauss_legendre(d, math.pi - d, delta_order)
    inner = np.sum(wl * np.sin(dl) ** 2, axis=-1)
    two_d = float(weights @ (h2 * (h + h2) * inner))
    return one_d, two_d


def _integrate(values, weights):
    return float(weights @ values)


@dataclass
class IdentityReport:
    int_U: float
    half_V: float
    half_W: float
    half_X: float
    int_U_full: float
    residual_V: float
    residual_W: float
    residual_X: float
    residual_doubling: float
    residual_pointwise_X: float
    residual_U_split: float
    residual_U_hat: float

    def max_residual(self):
        return max(self.residual_V, self.residual_W, self.residual_X, self.residual_doubling)

    def as_dict(self):
        return dict(self.__dict__)


def check_integral_identities(profile: DProfile) -> IdentityReport:
    """Residuals of the integral identities over ``[0, pi]``.

    Also reports pointwise residuals: the five-term split of ``U``, the
    quarter-turn substitution ``U_hat(psi) = U(psi + pi/2)`` termwise, and
    ``X1 + X2 + X3 = g + d'^4 (quartic bracket) + d'^2 (quadratic bracket)``.
    """
    nodes, w = _rule(0.0, math.pi)
    b = integrand_bundle(profile, nodes)
    shifted = integrand_bundle(profile, nodes + math.pi / 2)
    int_U = _integrate(b.U, w)
    half_V = 0.5 * _integrate(sum(b.V), w)
    half_W = 0.5 * _integrate(sum(b.W), w)
    half_X = 0.5 * _integrate(sum(b.X), w)
    full_nodes, full_w = _rule(0.0, 2 * math.pi, 256)
    int_U_full = _integrate(integrand_bundle(profile, full_nodes).U, full_w)
    d, d1 = profile(nodes, (0, 1))
    rhs = b.g + d1 ** 4 * bracket_quartic(d) + d1 ** 2 * bracket_quadratic(d)
    return IdentityReport(
        int_U=int_U,
        half_V=half_V,
        half_W=half_W,
        half_X=half_X,
        int_U_full=int_U_full,
        residual_V=abs(int_U - half_V),
        residual_W=abs(int_U - half_W),
        residual_X=abs(int_U - half_X),
        residual_doubling=abs(int_U_full - 2 * int_U),
        residual_pointwise_X=float(np.max(np.abs(sum(b.X) - rhs))),
        residual_U_split=float(np.max(np.abs(b.U - sum(b.U_terms)))),
        residual_U_hat=float(max(np.max(np.abs(uh - us))
                                 for uh, us in zip(b.U_hat, shifted.U_terms))),
    )


@dataclass
class WirtingerReport:
    functional: float
    mean_Y: float
    int_g: float

    @property
    def holds(self):
        return self.functional >= -1e-10 and abs(self.mean_Y) < 1e-10

    def as_dict(self):
        return dict(self.__dict__)


def wirtinger_check(profile: DProfile) -> WirtingerReport:
    """``int_0^pi (Y'^2 - 4 Y^2)``, ``int_0^pi Y`` and ``int_0^pi g``."""
    nodes, w = _rule(0.0, math.pi)
    b = integrand_bundle(profile, nodes)
    return WirtingerReport(
        functional=_integrate(b.Y1 ** 2 - 4 * b.Y ** 2, w),
        mean_Y=_integrate(b.Y, w),
        int_g=_integrate(b.g, w),
    )


@dataclass
class ChainReport:
    """The chain ``2 int U >= A1 >= A2 >= A3 = A4`` over ``[0, pi]`` and the closing step."""

    twice_int_U: float
    quadratic_term: float
    flat_term: float
    cos_term: float
    h_prime_term: float
    defect: float
    h_prime_bound: float
    tolerance: float

    @property
    def holds(self):
        t = self.tolerance
        return (self.twice_int_U >= self.quadratic_term - t
                and self.quadratic_term >= self.flat_term - t
                and self.flat_term >= self.cos_term - t
                and abs(self.cos_term - self.h_prime_term) <= t)

    @property
    def cauchy_schwarz_holds(self):
        return self.defect <= self.h_prime_bound + self.tolerance

    def as_dict(self):
        out = dict(self.__dict__)
        out.update(holds=self.holds, cauchy_schwarz_holds=self.cauchy_schwarz_holds)
        return out


def uh_chain_check(table: Table, profile: DProfile, tolerance: float = IDENTITY_TOL) -> ChainReport:
    nodes, w = _rule(0.0, math.pi)
    b = integrand_bundle(profile, nodes)
    d, d1 = profile(nodes, (0, 1))
    _, h1, _ = table.h(nodes)
    R2 = profile.R ** 2
    full_nodes, full_w = _rule(0.0, 2 * math.pi, 256)
    _, h1_full, _ = table.h(full_nodes)
    return ChainReport(
        twice_int_U=2 * _integrate(b.U, w),
        quadratic_term=_integrate(d1 ** 2 * bracket_quadratic(d), w),
        flat_term=1.5 * math.pi * _integrate(d1 ** 2, w),
        cos_term=1.5 * math.pi * _integrate(np.cos(d) ** 2 * d1 ** 2, w),
        h_prime_term=1.5 * math.pi / R2 * _integrate(h1 ** 2, w),
        defect=table.defect,
        h_prime_bound=2 * math.pi * _integrate(h1_full ** 2, full_w),
        tolerance=tolerance,
    )


@dataclass
class LemmaReport:
    grid: int
    min_quadratic_margin: float
    max_reduction_residual: float
    min_quartic_bracket: float
    min_quadratic_bracket: float
    f_min: float
    f_max: float

    @property
    def holds(self):
        return (self.min_quadratic_margin >= -1e-12
                and self.max_reduction_residual <= 1e-12
                and self.min_quartic_bracket > 0
                and self.min_quadratic_bracket > 0
                and self.f_min >= 0.5 + QUARTER - 1e-15
                and self.f_max < math.pi / 2)

    def as_dict(self):
        out = dict(self.__dict__)
        out["holds"] = self.holds
        return out


def lemma_brackets_check(grid: int = 10_000, eps: float = 1e-6) -> LemmaReport:
    """Pointwise sweep of both brackets over ``d`` in ``(eps, pi/2 - eps)``."""
    d = np.linspace(eps, math.pi / 2 - eps, grid)
    f = f_value(d)
    quadratic = bracket_quadratic(d)
    quartic = bracket_quartic(d)
    reduced = (QUARTER + 0.5 * np.sin(2 * d)) ** 2 - (d - QUARTER) ** 2
    return LemmaReport(
        grid=grid,
        min_quadratic_margin=float(np.min(quadratic - 1.5 * math.pi)),
        max_reduction_residual=float(np.max(np.abs(f * quartic - reduced))),
        min_quartic_bracket=float(np.min(quartic)),
        min_quadratic_bracket=float(np.min(quadratic)),
        f_min=float(np.min(f)),
        f_max=float(np.max(f)),
    )


# ---------------------------------------------------------------- main theorem

CERTIFIED = "certified"
CONSISTENT = "consistent"
VIOLATED = "violated"


@dataclass
class RigidityReport:
    I: float
    I_two_d: float
    I_from_U: float
    defect: float
    beta: float
    R: float
    int_U_half: float
    lower_bound_I: float
    lower_bound_U: float
    main_lhs: float
    mu_Delta: float
    mu_Delta_error: float
    undecided_mass: float
    sandwich_rhs: float
    identities: dict
    wirtinger: dict
    chain: dict
    tolerances: dict
    flag_a: bool
    flag_b: bool
    flag_c: str
    flag_d: bool
    flag_e: dict
    certified_horizon: int | None = None
    dual_quadrature_gap: float = 0.0

    @property
    def any_violated(self):
        return (not self.flag_a or not self.flag_b or self.flag_c == VIOLATED
                or not self.flag_d)

    def as_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}


def profile_matches(table: Table, profile: DProfile, tol: float = PROFILE_MATCH_TOL):
    """Largest relative deviation of ``h`` from ``R sin d`` on the profile grid."""
    psi = profile.grid
    (h,) = table.h(psi, (0,))
    return float(np.max(np.abs(h - profile.R * np.sin(profile.samples))) / np.max(h))


def verify_main_theorem(table: Table, profile: DProfile, mu_delta: MeasureEstimate,
                        undecided_mass: float = 0.0, by_horizon=None,
                        tolerance: float = IDENTITY_TOL) -> RigidityReport:
    """Evaluate the bound chain and flag each inequality.

    ``by_horizon`` optionally maps horizons to ``(mu_M, mu_Delta, undecided)``
    estimates; the smallest horizon whose estimate already certifies the
    measure bound is recorded.
    """
    mismatch = profile_matches(table, profile)
    if mismatch > PROFILE_MATCH_TOL:
        raise InconsistentInputs(
            f"profile does not belong to the table (relative deviation {mismatch:.3e})")
    one_d, two_d = integral_I(table, profile)
    ident = check_integral_identities(profile)
    wirt = wirtinger_check(profile)
    chain = uh_chain_check(table, profile, tolerance)
    R2 = profile.R ** 2
    defect = table.defect
    beta = table.beta
    int_U = ident.int_U
    main_lhs = 3 * beta / 16 * defect

    def status(est):
        if est.value - 3 * est.error >= main_lhs:
            return CERTIFIED
        if est.value + 3 * est.error >= main_lhs:
            return CONSISTENT
        return VIOLATED

    certified = None
    for M in sorted(by_horizon or {}):
        if status(by_horizon[M][1]) == CERTIFIED:
            certified = int(M)
            break
    sandwich = 2 / beta * (mu_delta.value + undecided_mass + 3 * mu_delta.error)
    circle_tol = 1e-10
    flag_e = {
        "defect_zero": abs(defect) < 1e-12,
        "I_zero": abs(one_d) < circle_tol,
        "profile_flat": bool(np.max(np.abs(profile.samples - QUARTER)) < 1e-9),
        "mu_Delta_zero": mu_delta.value == 0.0,
    }
    flag_e["equality_case"] = all(flag_e.values())
    return RigidityReport(
        I=one_d,
        I_two_d=two_d,
        I_from_U=R2 * ident.int_U_full,
        defect=defect,
        beta=beta,
        R=profile.R,
        int_U_half=int_U,
        lower_bound_I=3 / 8 * defect,
        lower_bound_U=3 / (16 * R2) * defect,
        main_lhs=main_lhs,
        mu_Delta=mu_delta.value,
        mu_Delta_error=mu_delta.error,
        undecided_mass=undecided_mass,
        sandwich_rhs=sandwich,
        identities=ident.as_dict(),
        wirtinger=wirt.as_dict(),
        chain=chain.as_dict(),
        tolerances={"identity": tolerance, "profile_match": PROFILE_MATCH_TOL,
                    "sigma_multiplier": 3.0, "circle": circle_tol},
        flag_a=one_d >= 3 / 8 * defect - tolerance,
        flag_b=int_U >= 3 / (16 * R2) * defect - tolerance,
        flag_c=status(mu_delta),
        flag_d=one_d <= sandwich + tolerance,
        flag_e=flag_e,
        certified_horizon=certified,
        dual_quadrature_gap=abs(one_d - two_d),
    )
