"""The invariant measure ``rho(psi) sin(delta) dpsi ddelta`` and estimates over B.

Sets of lines are described in incidence coordinates ``(psi, delta)``.  The
region B between the 4-periodic curve and its reverse is parametrised as
``delta = d(psi) + t (pi - 2 d(psi))`` with ``t`` in [0, 1]; uniform samples
in ``(psi, t)`` then carry the importance weight ``rho sin(delta) (pi - 2d)``.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import _quadrature as quad
from .fourcurve import DProfile, mu_b
from .geometry import Table
from .phasemap import TWO_PI, incidence_to_chart_arrays, reflect_arrays, wrap
from .variational import classify_points

QUADRATURE = "quadrature"
MONTE_CARLO = "monte_carlo"


@dataclass(frozen=True)
class MeasureEstimate:
    value: float
    error: float
    method: str
    N: int | None = None
    samples: int = 0
    seed: int | None = None

    def as_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class MeasureReport:
    """Result of :func:`estimate_m_measure` at the main horizon ``N``.

    ``by_horizon`` maps every requested horizon to ``(mu_M, mu_Delta,
    undecided)`` computed on the same sample set; ``verdicts`` holds the
    per-sample codes, one column per horizon in increasing order.
    """

    mu_B: MeasureEstimate
    mu_M: MeasureEstimate
    mu_Delta: MeasureEstimate
    undecided_mass: float
    N: int
    samples: int
    seed: int
    by_horizon: dict
    verdicts: np.ndarray = field(default=None, repr=False)

    @property
    def verdict(self):
        """Per-sample codes at the main horizon."""
        return self.verdicts[:, sorted(self.by_horizon).index(self.N)]

    def as_json(self):
        return {
            "mu_B": self.mu_B.value,
            "mu_M": self.mu_M.value,
            "mu_Delta": self.mu_Delta.value,
            "undecided_mass": self.undecided_mass,
            "N": self.N,
            "samples": self.samples,
            "seed": self.seed,
            "stderr": self.mu_Delta.error,
        }


def measure_of_B(table: Table, profile: DProfile) -> MeasureEstimate:
    """``mu(B)``; the error is the change when the quadrature panels are doubled."""
    value = mu_b(table, profile)
    finer = mu_b(table, profile, panels=2 * table.panels)
    return MeasureEstimate(value, abs(finer - value), QUADRATURE, samples=0)


def box_measure(table: Table, psi_range, delta_range, panels: int = 16, order: int = 16):
    """``mu`` of an incidence rectangle by tensor Gauss-Legendre (closed form in delta)."""
    nodes, weights = quad.composite_gauss_legendre(psi_range[0], psi_range[1], panels, order)
    inner = math.cos(delta_range[0]) - math.cos(delta_range[1])
    return float(weights @ table.rho(nodes)) * inner


# ---------------------------------------------------------------- sampling

def _strata(samples: int):
    """Split ``samples`` into a ``(n_psi, n_t)`` grid with ``n_t`` near sqrt(samples / 4)."""
    target = max(1.0, math.sqrt(samples / 4.0))
    divisors = [k for k in range(1, int(math.isqrt(samples)) + 1) if samples % k == 0]
    n_t = min(divisors, key=lambda k: (abs(k - target), k))
    return samples // n_t, n_t


def stratified_points(table: Table, profile: DProfile, samples: int, seed: int):
    """Jittered stratified sample of B.

    Returns ``(psi, delta, weight)``; ``weight`` is the density of ``mu``
    with respect to the uniform measure on ``[0, 2 pi) x [0, 1]``.  The set
    depends only on ``samples`` and ``seed``.
    """
    if samples < 1:
        raise ValueError("samples must be positive")
    n_psi, n_t = _strata(samples)
    rng = np.random.default_rng(seed)
    jitter = rng.random((n_psi, n_t, 2))
    i = np.arange(n_psi)[:, None]
    j = np.arange(n_t)[None, :]
    psi = (TWO_PI * (i + jitter[..., 0]) / n_psi).ravel()
    t = ((j + jitter[..., 1]) / n_t).ravel()
    d = profile(psi)
    delta = d + t * (math.pi - 2.0 * d)
    weight = TWO_PI * table.rho(psi) * np.sin(delta) * (math.pi - 2.0 * d)
    return psi, delta, weight


def _ratio(weight, mask):
    """Weighted fraction and its standard error (ratio estimator)."""
    total = weight.sum()
    r = float(weight[mask].sum() / total)
    resid = weight * (mask.astype(float) - r)
    return r, float(math.sqrt(np.sum(resid * resid)) / total)


def estimate_m_measure(table: Table, profile: DProfile, N: int, samples: int = 10_000,
                       seed: int = 0, horizons=None, workers: int = 1,
                       mu_B: MeasureEstimate | None = None, points=None) -> MeasureReport:
    """Estimate ``mu`` of the maximizing and non-maximizing parts of B at horizon ``N``.

    Points whose classification is undecided (pivot underflow or orbit
    failure) go into ``undecided_mass`` and count toward neither part.
    Extra ``horizons`` (each at most ``N``) are evaluated on the same orbits.
    ``points`` may carry a precomputed ``(psi, delta, weight)`` sample.
    """
    if N < 2:
        raise ValueError("N must be >= 2")
    hz = sorted({int(N), *(int(h) for h in (horizons or ()))})
    if mu_B is None:
        mu_B = measure_of_B(table, profile)
    psi, delta, weight = points if points is not None else stratified_points(
        table, profile, samples, seed)
    p, phi = incidence_to_chart_arrays(table, psi, delta)
    verdict, _ = classify_points(table, p, phi, N, horizons=hz, workers=workers)
    by_horizon = {}
    for col, M in enumerate(hz):
        v = verdict[:, col]
        fm, em = _ratio(weight, v == 1)
        fd, ed = _ratio(weight, v == 0)
        fu, _ = _ratio(weight, v < 0)
        by_horizon[M] = (
            MeasureEstimate(mu_B.value * fm, mu_B.value * em, MONTE_CARLO, M, psi.size, seed),
            MeasureEstimate(mu_B.value * fd, mu_B.value * ed, MONTE_CARLO, M, psi.size, seed),
            mu_B.value * fu,
        )
    mu_M, mu_D, und = by_horizon[int(N)]
    return MeasureReport(mu_B, mu_M, mu_D, und, int(N), int(psi.size), seed, by_horizon, verdict)


def classify_sample(table: Table, profile: DProfile, N: int, samples: int, seed: int,
                    workers: int = 1):
    """``(psi, delta, verdict)`` for the stratified sample, for phase portraits."""
    psi, delta, _ = stratified_points(table, profile, samples, seed)
    p, phi = incidence_to_chart_arrays(table, psi, delta)
    verdict, _ = classify_points(table, p, phi, N, workers=workers)
    return psi, delta, verdict[:, 0]


# ---------------------------------------------------------------- preservation

def forward_incidence(table: Table, psi, delta):
    """Incidence of the next reflection after the bounce ``(psi, delta)``."""
    h, h1, _ = table.h(psi)
    p1 = h * np.cos(delta) + h1 * np.sin(delta)
    _, _, psi1, delta1, status = reflect_arrays(table, p1, psi + delta)
    return wrap(psi1), delta1, status


def backward_incidence(table: Table, psi, delta):
    """Incidence of the previous reflection, via the reversed line."""
    p, phi = incidence_to_chart_arrays(table, psi, delta)
    _, _, psi0, delta0, status = reflect_arrays(table, -p, phi + math.pi)
    return wrap(psi0), math.pi - delta0, status


def _box_outline(psi_range, delta_range, per_side=400):
    t = np.linspace(0.0, 1.0, per_side, endpoint=False)
    (a, b), (c, e) = psi_range, delta_range
    psi = np.concatenate([a + (b - a) * t, np.full_like(t, b), b - (b - a) * t, np.full_like(t, a)])
    delta = np.concatenate([np.full_like(t, c), c + (e - c) * t, np.full_like(t, e), e - (e - c) * t])
    return psi, delta


@dataclass
class BoxCheck:
    psi_range: tuple
    delta_range: tuple
    mu_box: float
    mu_preimage: float
    stderr: float

    @property
    def sigmas(self):
        return abs(self.mu_preimage - self.mu_box) / self.stderr if self.stderr > 0 else 0.0


def preimage_measure(table: Table, psi_range, delta_range, samples: int, seed: int = 0):
    """Monte-Carlo ``mu(T^-1 box)``.

    The preimage lies inside the bounding rectangle of the preimage of the
    box outline; that rectangle is sampled uniformly and a sample counts when
    its forward image lands in the box.
    """
    ob_psi, ob_delta = _box_outline(psi_range, delta_range)
    pre_psi, pre_delta, status = backward_incidence(table, ob_psi, ob_delta)
    if np.any(status):
        raise ValueError("box outline leaves the region where the map is defined")
    ref = pre_psi[0]
    unwrapped = ref + (pre_psi - ref + math.pi) % TWO_PI - math.pi
    pad_psi = 0.05 * (unwrapped.max() - unwrapped.min()) + 1e-9
    pad_delta = 0.05 * (pre_delta.max() - pre_delta.min()) + 1e-9
    lo_psi, hi_psi = unwrapped.min() - pad_psi, unwrapped.max() + pad_psi
    lo_d = max(pre_delta.min() - pad_delta, 1e-6)
    hi_d = min(pre_delta.max() + pad_delta, math.pi - 1e-6)
    rng = np.random.default_rng(seed)
    u = rng.random((samples, 2))
    psi = lo_psi + (hi_psi - lo_psi) * u[:, 0]
    delta = lo_d + (hi_d - lo_d) * u[:, 1]
    psi1, delta1, status = forward_incidence(table, psi, delta)
    rel = (psi1 - psi_range[0]) % TWO_PI
    inside = (status == 0) & (rel <= psi_range[1] - psi_range[0]) & \
             (delta1 >= delta_range[0]) & (delta1 <= delta_range[1])
    area = (hi_psi - lo_psi) * (hi_d - lo_d)
    vals = np.where(inside, table.rho(psi) * np.sin(delta), 0.0) * area
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(samples))


def jacobian_determinants(table: Table, p, phi, eps: float = 1e-5):
    """``det DT`` in ``(p, phi)`` coordinates by fourth-order central differences."""
    p = np.asarray(p, dtype=float)
    phi = np.asarray(phi, dtype=float)
    cols = []
    for dp, dphi in ((eps, 0.0), (0.0, eps)):
        img = {k: reflect_arrays(table, p + k * dp, phi + k * dphi) for k in (-2, -1, 1, 2)}
        cols.append(tuple((-img[2][i] + 8 * img[1][i] - 8 * img[-1][i] + img[-2][i]) / (12 * eps)
                          for i in (0, 1)))
    (a, c), (b, d) = cols
    return a * d - b * c


def chart_consistency(table: Table, phi_range, phi1_range, order: int = 24):
    """``mu`` of an ``(phi, phi1)`` rectangle computed three ways.

    Returns ``(via_S12, via_incidence, via_p_phi)``: the integral of ``S12``
    over the rectangle, the integral of ``rho sin(delta)`` over its diamond
    image in ``(psi, delta)``, and the ``dp dphi`` area from the boundary
    values of ``p``.
    """
    (a, b), (c, e) = phi_range, phi1_range
    x, wx = quad.gauss_legendre(a, b, order)
    y, wy = quad.gauss_legendre(c, e, order)
    X, Y = np.meshgrid(x, y, indexing="ij")
    psi, delta = 0.5 * (X + Y), 0.5 * (Y - X)
    h, h1, h2 = table.h(psi)
    s12 = 0.5 * (h + h2) * np.sin(delta)
    via_s12 = float(wx @ s12 @ wy)

    # the image is the diamond psi - delta in [a, b], psi + delta in [c, e]
    lo_psi, hi_psi = 0.5 * (a + c), 0.5 * (b + e)
    kinks = sorted({lo_psi, 0.5 * (a + e), 0.5 * (b + c), hi_psi})
    via_inc = 0.0
    for s0, s1 in zip(kinks[:-1], kinks[1:]):
        if s1 <= s0:
            continue
        ps, wp = quad.gauss_legendre(s0, s1, order)
        dlo = np.maximum(ps - b, c - ps)
        dhi = np.minimum(ps - a, e - ps)
        via_inc += float(wp @ (table.rho(ps) * (np.cos(dlo) - np.cos(dhi))))

    def p_of(phi, phi1):
        ps, dl = 0.5 * (phi + phi1), 0.5 * (phi1 - phi)
        hh, hh1, _ = table.h(ps)
        return hh * np.cos(dl) - hh1 * np.sin(dl)

    via_p = float(wx @ (p_of(x, e) - p_of(x, c)))
    return via_s12, via_inc, abs(via_p)


@dataclass
class PreservationReport:
    boxes: list
    max_sigmas: float
    max_det_error: float
    det_points: int
    chart_residual: float

    def as_dict(self):
        return {
            "boxes": [dict(psi_range=list(b.psi_range), delta_range=list(b.delta_range),
                           mu_box=b.mu_box, mu_preimage=b.mu_preimage, stderr=b.stderr)
                      for b in self.boxes],
            "max_sigmas": self.max_sigmas,
            "max_det_error": self.max_det_error,
            "det_points": self.det_points,
            "chart_residual": self.chart_residual,
        }


def check_measure_preservation(table: Table, boxes, samples: int = 200_000, seed: int = 0,
                               det_points: int = 1000) -> PreservationReport:
    """Compare ``mu(box)`` with ``mu(T^-1 box)`` and test ``det DT = 1`` pointwise."""
    checks = []
    for i, (psi_range, delta_range) in enumerate(boxes):
        mu_box = box_measure(table, psi_range, delta_range)
        mu_pre, err = preimage_measure(table, psi_range, delta_range, samples, seed + i)
        checks.append(BoxCheck(tuple(psi_range), tuple(delta_range), mu_box, mu_pre, err))
    rng = np.random.default_rng(seed)
    psi = rng.uniform(0.0, TWO_PI, det_points)
    delta = rng.uniform(0.05, math.pi - 0.05, det_points)
    p, phi = incidence_to_chart_arrays(table, psi, delta)
    det = jacobian_determinants(table, p, phi)
    s12, inc, pp = chart_consistency(table, (0.3, 0.6), (1.5, 1.9))
    return PreservationReport(
        boxes=checks,
        max_sigmas=max((c.sigmas for c in checks), default=0.0),
        max_det_error=float(np.max(np.abs(det - 1.0))),
        det_points=det_points,
        chart_residual=max(abs(s12 - inc), abs(s12 - pp)),
    )
