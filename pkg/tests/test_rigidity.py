import math

import numpy as np
import pytest

from csbilliard.errors import InconsistentInputs
from csbilliard.fourcurve import d_profile, perturbed_profile, table_from_d
from csbilliard.measure import MeasureEstimate
from csbilliard.rigidity import (CERTIFIED, CONSISTENT, VIOLATED, bracket_quadratic,
                                 bracket_quartic, check_integral_identities, f_value,
                                 integral_I, integrand_bundle, lemma_brackets_check,
                                 uh_chain_check, verify_main_theorem, wirtinger_check)

TABLES = ["disk", "oval", "bumpy"]


def test_circle_bundle(disk_profile):
    b = integrand_bundle(disk_profile, np.linspace(0, math.pi, 11))
    for arr in (b.U, *b.V, *b.W, *b.X, b.Y, b.Y1, b.g):
        assert np.max(np.abs(arr)) < 1e-14
    assert np.allclose(b.f, math.pi / 4 + 0.5)


def test_f_at_quarter_turn():
    d = math.pi / 4
    assert f_value(d) * bracket_quartic(d) == pytest.approx((math.pi / 4 + 0.5) ** 2, abs=1e-14)
    assert bracket_quadratic(d) == pytest.approx(3 * math.pi / 4 + 2.5, abs=1e-14)


def test_quadratic_bracket_boundary_value():
    assert bracket_quadratic(1e-9) == pytest.approx(1.5 * math.pi, abs=1e-8)


@pytest.mark.parametrize("name", TABLES)
def test_integral_identities(name, request):
    prof = request.getfixturevalue(name + "_profile")
    rep = check_integral_identities(prof)
    assert rep.max_residual() < 1e-8
    assert rep.residual_U_split < 1e-12
    assert rep.residual_U_hat < 1e-10
    assert rep.residual_pointwise_X < 1e-10


def test_bundle_relations(oval_profile):
    b = integrand_bundle(oval_profile, np.linspace(0, math.pi, 50))
    assert np.allclose(b.X[0], b.W[0])
    assert np.allclose(b.X[1], b.W[1] + b.W[3])
    assert np.allclose(b.X[2], b.W[2] + b.W[4])
    assert np.allclose(b.f3, np.sin(2 * oval_profile(b.psi)) - b.f)


@pytest.mark.parametrize("name", TABLES)
def test_dual_quadrature(name, request):
    table = request.getfixturevalue(name)
    prof = request.getfixturevalue(name + "_profile")
    one, two = integral_I(table, prof)
    assert abs(one - two) < 1e-8
    assert one >= 0.375 * table.defect - 1e-8
    assert one == pytest.approx(prof.R**2 * check_integral_identities(prof).int_U_full, abs=1e-8)


def test_circle_integral_zero(disk, disk_profile):
    assert abs(integral_I(disk, disk_profile)[0]) < 1e-12


@pytest.mark.parametrize("name", TABLES)
def test_chain(name, request):
    rep = uh_chain_check(request.getfixturevalue(name), request.getfixturevalue(name + "_profile"))
    assert rep.holds
    assert rep.cauchy_schwarz_holds


@pytest.mark.parametrize("name", TABLES)
def test_wirtinger(name, request):
    rep = wirtinger_check(request.getfixturevalue(name + "_profile"))
    assert rep.holds
    assert rep.int_g == pytest.approx(rep.functional, abs=1e-12)


def test_wirtinger_scaling():
    # a single mode k > 2 gives a quadratic functional; mode 2 is the equality case
    vals = [wirtinger_check(d_profile(table_from_d(perturbed_profile(e, "sin6"), 1.0))).functional
            for e in (0.01, 0.005)]
    assert vals[1] / vals[0] == pytest.approx(0.25, abs=1e-3)
    flat = [wirtinger_check(d_profile(table_from_d(perturbed_profile(e), 1.0))).functional
            for e in (0.05, 0.025)]
    assert flat[1] / flat[0] == pytest.approx(1 / 64, rel=0.05)


def test_lemma_grid():
    rep = lemma_brackets_check(10_000)
    assert rep.holds
    assert rep.min_quadratic_margin >= -1e-12
    assert rep.max_reduction_residual < 1e-12


def _estimate(value, error=0.0):
    return MeasureEstimate(value, error, "monte_carlo", 64, 1000, 0)


def test_main_theorem_circle(disk, disk_profile):
    rep = verify_main_theorem(disk, disk_profile, _estimate(0.0))
    assert rep.flag_a and rep.flag_b and rep.flag_d
    assert rep.flag_c == CERTIFIED
    assert rep.flag_e["equality_case"]
    assert not rep.any_violated


def test_main_theorem_flags(oval, oval_profile):
    bound = 3 * oval.beta / 16 * oval.defect
    assert verify_main_theorem(oval, oval_profile, _estimate(2 * bound, 0.01)).flag_c == CERTIFIED
    assert verify_main_theorem(oval, oval_profile, _estimate(bound, 0.01)).flag_c == CONSISTENT
    low = verify_main_theorem(oval, oval_profile, _estimate(0.0))
    assert low.flag_c == VIOLATED and not low.flag_d
    assert low.flag_a and low.flag_b


def test_profile_mismatch(oval, disk_profile):
    with pytest.raises(InconsistentInputs):
        verify_main_theorem(oval, disk_profile, _estimate(1.0))


def test_certified_horizon(oval, oval_profile):
    bound = 3 * oval.beta / 16 * oval.defect
    by_h = {4: (None, _estimate(0.5 * bound), 0.0), 8: (None, _estimate(5 * bound, 0.01), 0.0)}
    rep = verify_main_theorem(oval, oval_profile, _estimate(5 * bound, 0.01), by_horizon=by_h)
    assert rep.certified_horizon == 8
