import math

import numpy as np
import pytest

from csbilliard.measure import (backward_incidence, box_measure, chart_consistency,
                                check_measure_preservation, estimate_m_measure,
                                forward_incidence, jacobian_determinants, measure_of_B,
                                stratified_points)
from csbilliard.phasemap import incidence_to_chart_arrays

BOXES = [((0.2, 0.5), (0.8, 1.1)), ((2.0, 2.3), (1.4, 1.9)), ((4.0, 4.4), (2.2, 2.6))]


def test_measure_of_b_circle(disk, disk_profile):
    est = measure_of_B(disk, disk_profile)
    assert est.value == pytest.approx(2 * math.sqrt(2) * math.pi, abs=1e-12)
    assert est.method == "quadrature"


def test_weights_integrate_to_mu_b(oval, oval_profile):
    _, _, w = stratified_points(oval, oval_profile, 40_000, seed=3)
    assert w.mean() == pytest.approx(measure_of_B(oval, oval_profile).value, rel=2e-3)


def test_sample_set_reproducible(oval, oval_profile):
    a = stratified_points(oval, oval_profile, 1000, seed=7)
    b = stratified_points(oval, oval_profile, 1000, seed=7)
    c = stratified_points(oval, oval_profile, 1000, seed=8)
    assert all(np.array_equal(x, y) for x, y in zip(a, b))
    assert not np.array_equal(a[0], c[0])


def test_samples_lie_in_b(oval, oval_profile):
    psi, delta, _ = stratified_points(oval, oval_profile, 5000, seed=1)
    d = oval_profile(psi)
    assert np.all((delta >= d - 1e-12) & (delta <= math.pi - d + 1e-12))


def test_circle_mu_delta_zero(disk, disk_profile):
    rep = estimate_m_measure(disk, disk_profile, 100, samples=2000, seed=0)
    assert rep.mu_Delta.value == 0.0
    assert rep.undecided_mass == 0.0
    assert rep.mu_M.value == pytest.approx(rep.mu_B.value)


def test_parts_add_up(oval, oval_profile):
    rep = estimate_m_measure(oval, oval_profile, 16, samples=3000, seed=5, horizons=[4, 8])
    for mu_m, mu_d, und in rep.by_horizon.values():
        assert mu_m.value + mu_d.value + und == pytest.approx(rep.mu_B.value, rel=1e-12)
    assert rep.mu_Delta.value > 3 * rep.mu_Delta.error
    keys = {"mu_B", "mu_M", "mu_Delta", "undecided_mass", "N", "samples", "seed", "stderr"}
    assert set(rep.as_json()) == keys


def test_mu_delta_grows_with_horizon(oval, oval_profile):
    rep = estimate_m_measure(oval, oval_profile, 32, samples=3000, seed=2, horizons=[2, 4, 8, 16])
    values = [rep.by_horizon[m][1].value for m in (2, 4, 8, 16, 32)]
    assert all(y >= x for x, y in zip(values, values[1:]))


def test_workers_do_not_change_estimate(oval, oval_profile):
    a = estimate_m_measure(oval, oval_profile, 8, samples=5000, seed=9, workers=1)
    b = estimate_m_measure(oval, oval_profile, 8, samples=5000, seed=9, workers=4)
    assert a.as_json() == b.as_json()


def test_incidence_maps_inverse(oval, rng):
    psi = rng.uniform(0, 2 * math.pi, 500)
    delta = rng.uniform(0.05, math.pi - 0.05, 500)
    psi1, delta1, _ = forward_incidence(oval, psi, delta)
    psi0, delta0, _ = backward_incidence(oval, psi1, delta1)
    assert np.max(np.abs(np.angle(np.exp(1j * (psi0 - psi))))) < 1e-9
    assert np.max(np.abs(delta0 - delta)) < 1e-9


def test_circle_box_preserved_exactly(disk):
    # on the circle the map is the shear (psi, delta) -> (psi + 2 delta, delta)
    for psi_range, delta_range in BOXES:
        psi = np.linspace(*psi_range, 7)
        delta = np.linspace(*delta_range, 7)
        psi1, delta1, _ = forward_incidence(disk, psi, delta)
        assert np.allclose(delta1, delta, atol=1e-12)
        assert np.allclose(np.exp(1j * psi1), np.exp(1j * (psi + 2 * delta)), atol=1e-12)


def test_ellipse_boxes_preserved(oval):
    rep = check_measure_preservation(oval, BOXES, samples=200_000, seed=11, det_points=1000)
    assert rep.max_sigmas < 3.0
    assert rep.max_det_error < 1e-6
    assert rep.chart_residual < 1e-12


def test_box_measure_closed_form(disk):
    assert box_measure(disk, (0.0, 1.0), (0.0, math.pi)) == pytest.approx(2.0, abs=1e-14)


def test_chart_consistency(bumpy):
    s12, inc, pp = chart_consistency(bumpy, (1.0, 1.4), (2.5, 3.3))
    assert inc == pytest.approx(s12, abs=1e-12)
    assert pp == pytest.approx(s12, abs=1e-12)


def test_symplectic_determinant(bumpy, rng):
    psi = rng.uniform(0, 2 * math.pi, 1000)
    delta = rng.uniform(0.05, math.pi - 0.05, 1000)
    p, phi = incidence_to_chart_arrays(bumpy, psi, delta)
    assert np.max(np.abs(jacobian_determinants(bumpy, p, phi) - 1)) < 1e-6
