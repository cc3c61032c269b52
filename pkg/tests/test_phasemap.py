import csv
import io
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from csbilliard.errors import CoincidentPoints, DegenerateChord, OrbitError
from csbilliard.geometry import SupportFunction, build_table
from csbilliard.phasemap import (PhasePoint, angle_diff, arclength, chart_to_incidence,
                                 chord_length_partials, generating_function,
                                 incidence_to_chart, incidence_to_chart_arrays, iterate,
                                 iterate_backward, psi_at_arclength, reflect, reflect_arrays,
                                 s_derivatives, wrap, write_orbit_csv)

from conftest import ELLIPSE_AXES
from oracles import ray_trace_ellipse


def test_circle_diameter(disk):
    z = reflect(disk, PhasePoint(0.0, 0.0))
    assert abs(z.p) < 1e-12
    assert abs(angle_diff(z.phi, math.pi)) < 1e-12


def test_circle_rotation_angle(disk):
    # chord at distance 1/2 from the centre subtends 2 pi / 3
    z = reflect(disk, PhasePoint(0.5, 0.0))
    assert z.p == pytest.approx(0.5, abs=1e-12)
    assert z.phi == pytest.approx(2 * math.pi / 3, abs=1e-12)


def test_reflect_matches_ray_tracing(oval, rng):
    a, b = ELLIPSE_AXES
    worst = 0.0
    for _ in range(500):
        phi = rng.uniform(0, 2 * math.pi)
        (h,) = oval.h(phi, (0,))
        p = rng.uniform(-0.99, 0.99) * float(h)
        z = reflect(oval, PhasePoint(p, phi))
        p1, phi1, psi = ray_trace_ellipse(a, b, p, phi)
        psi_k, _ = chart_to_incidence(oval, PhasePoint(p, phi))
        worst = max(worst, abs(z.p - p1), abs(angle_diff(z.phi, phi1)), abs(angle_diff(psi_k, psi)))
    assert worst < 1e-6


def test_glancing_line_rejected(disk):
    with pytest.raises(DegenerateChord):
        reflect(disk, PhasePoint(1.0 - 1e-15, 0.0))
    with pytest.raises(DegenerateChord):
        reflect(disk, PhasePoint(1.5, 0.0))


def test_time_reversal(oval, rng):
    psi = rng.uniform(0, 2 * math.pi, 1000)
    delta = rng.uniform(0.01, math.pi - 0.01, 1000)
    p, phi = incidence_to_chart_arrays(oval, psi, delta)
    p1, phi1, *_ = reflect_arrays(oval, p, phi)
    p2, phi2, *_ = reflect_arrays(oval, -p1, phi1 + math.pi)
    assert np.max(np.abs(p2 + p)) < 1e-9
    assert np.max(np.abs(angle_diff(phi2, phi + math.pi))) < 1e-9


def test_generating_function_first_derivatives(oval, rng):
    step = 1e-6
    for _ in range(50):
        phi = rng.uniform(0, 2 * math.pi)
        phi1 = phi + rng.uniform(0.2, 2 * math.pi - 0.2)
        dS0 = (generating_function(oval, phi + step, phi1) - generating_function(oval, phi - step, phi1)) / (2 * step)
        dS1 = (generating_function(oval, phi, phi1 + step) - generating_function(oval, phi, phi1 - step)) / (2 * step)
        psi, delta = 0.5 * (phi + phi1), 0.5 * (phi1 - phi)
        p = incidence_to_chart(oval, psi, delta).p
        h, h1 = oval.h(psi, (0, 1))
        assert dS0 == pytest.approx(-p, abs=1e-8)
        assert dS1 == pytest.approx(float(h * math.cos(delta) + h1 * math.sin(delta)), abs=1e-8)


def test_generating_function_second_derivatives(bumpy, rng):
    step = 1e-4

    def S(a, b):
        return float(generating_function(bumpy, a, b))

    for _ in range(30):
        phi = rng.uniform(0, 2 * math.pi)
        phi1 = phi + rng.uniform(0.3, 2 * math.pi - 0.3)
        s11 = (S(phi + step, phi1) - 2 * S(phi, phi1) + S(phi - step, phi1)) / step**2
        s22 = (S(phi, phi1 + step) - 2 * S(phi, phi1) + S(phi, phi1 - step)) / step**2
        s12 = (S(phi + step, phi1 + step) - S(phi + step, phi1 - step)
               - S(phi - step, phi1 + step) + S(phi - step, phi1 - step)) / (4 * step**2)
        got = s_derivatives(bumpy, 0.5 * (phi + phi1), 0.5 * (phi1 - phi))
        assert got.S11 == pytest.approx(s11, abs=1e-6)
        assert got.S22 == pytest.approx(s22, abs=1e-6)
        assert got.S12 == pytest.approx(s12, abs=1e-6)


def test_twist_positive(oval, rng):
    psi = rng.uniform(0, 2 * math.pi, 10_000)
    delta = rng.uniform(1e-3, math.pi - 1e-3, 10_000)
    assert np.all(s_derivatives(oval, psi, delta).S12 > 0)


def test_chord_length_partials_against_differences(oval, rng):
    P = oval.P
    step = 1e-5

    def L(a, b):
        return chord_length_partials(oval, a, b).L

    for _ in range(20):
        s = rng.uniform(0, P)
        s1 = s + rng.uniform(0.1, P - 0.1)
        cp = chord_length_partials(oval, s, s1)
        assert cp.L1 == pytest.approx((L(s + step, s1) - L(s - step, s1)) / (2 * step), abs=1e-8)
        assert cp.L2 == pytest.approx((L(s, s1 + step) - L(s, s1 - step)) / (2 * step), abs=1e-8)
        h = 1e-4
        l11 = (L(s + h, s1) - 2 * cp.L + L(s - h, s1)) / h**2
        l22 = (L(s, s1 + h) - 2 * cp.L + L(s, s1 - h)) / h**2
        l12 = (L(s + h, s1 + h) - L(s + h, s1 - h) - L(s - h, s1 + h) + L(s - h, s1 - h)) / (4 * h * h)
        assert cp.L11 == pytest.approx(l11, abs=1e-5)
        assert cp.L22 == pytest.approx(l22, abs=1e-5)
        assert cp.L12 == pytest.approx(l12, abs=1e-5)


def test_chord_twist_positive(oval, rng):
    P = oval.P
    for _ in range(2000):
        s = rng.uniform(0, P)
        assert chord_length_partials(oval, s, s + rng.uniform(1e-3, P - 1e-3)).L12 > 0


def test_coincident_points(disk):
    with pytest.raises(CoincidentPoints):
        chord_length_partials(disk, 1.0, 1.0 + disk.P)


def test_antipodal_chord(disk):
    cp = chord_length_partials(disk, 0.0, math.pi)
    assert cp.L == pytest.approx(2.0)
    assert cp.L12 == pytest.approx(0.5)
    assert cp.L1 == pytest.approx(0.0, abs=1e-12)


def test_arclength_round_trip(oval):
    assert arclength(oval, 2 * math.pi) == pytest.approx(oval.P, rel=1e-13)
    s = np.linspace(-3, 20, 57)
    assert np.max(np.abs(arclength(oval, psi_at_arclength(oval, s)) - s)) < 1e-12


def test_incidence_chart_round_trip(oval, rng):
    for _ in range(100):
        psi, delta = rng.uniform(0, 2 * math.pi), rng.uniform(0.01, math.pi - 0.01)
        back = chart_to_incidence(oval, incidence_to_chart(oval, psi, delta))
        assert abs(angle_diff(back[0], psi)) < 1e-11
        assert back[1] == pytest.approx(delta, abs=1e-11)
    with pytest.raises(DegenerateChord):
        incidence_to_chart(oval, 0.0, 0.0)


def test_backward_iteration_inverts(oval):
    z = incidence_to_chart(oval, 0.4, 1.1)
    back = iterate_backward(oval, z, 6)
    fwd = iterate(oval, back.point(0), 6)
    assert abs(fwd.p[-1] - z.p) < 1e-9
    assert abs(angle_diff(fwd.phi[-1], z.phi)) < 1e-9
    assert np.max(np.abs(fwd.delta - back.delta)) < 1e-9


def test_orbit_error_reports_step(disk):
    with pytest.raises(OrbitError) as info:
        iterate(disk, PhasePoint(1.0, 0.0), 3)
    assert info.value.step == 0


def test_orbit_csv(disk):
    seg = iterate(disk, PhasePoint(0.0, 0.0), 4)
    buf = io.StringIO()
    write_orbit_csv(buf, disk, seg)
    rows = list(csv.DictReader(io.StringIO(buf.getvalue())))
    assert len(rows) == 5
    phis = [float(r["phi"]) for r in rows]
    for k, value in enumerate(phis):
        assert abs(angle_diff(value, k * math.pi)) < 1e-12
    assert all(0 <= v < 2 * math.pi for v in phis)


coeff = st.floats(-0.04, 0.04, allow_nan=False)


@settings(max_examples=40, deadline=None)
@given(c2=coeff, s2=coeff, c4=coeff, s4=coeff,
       psi=st.floats(0, 2 * math.pi), delta=st.floats(0.05, math.pi - 0.05))
def test_reversal_property_random_tables(c2, s2, c4, s4, psi, delta):
    table = build_table(SupportFunction.from_even([1.0, c2, c4], [s2, s4]))
    z = incidence_to_chart(table, psi, delta)
    w = reflect(table, z)
    back = reflect(table, w.reversed())
    assert abs(back.p + z.p) < 1e-9
    assert abs(angle_diff(back.phi, z.phi + math.pi)) < 1e-9
    (h1,) = table.h(w.phi, (0,))
    assert abs(w.p) < h1
    assert abs(angle_diff(w.phi - z.phi, 2 * delta)) < 1e-9


@settings(max_examples=40, deadline=None)
@given(psi=st.floats(-10, 10))
def test_wrap_range(psi):
    assert 0 <= wrap(psi) < 2 * math.pi
    assert abs(angle_diff(psi + 2 * math.pi, psi)) < 1e-12
