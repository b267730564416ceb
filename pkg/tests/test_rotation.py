import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from annulab import families as fam
from annulab.core import MapSpec, inverse_map, power, shifted
from annulab.reversible import apply_R
from annulab.rotation import (IntervalUndefinedError, NotPeriodicError, Window, farey_enumerate,
                              format_rationals, return_rotation_estimate, rotation_estimate,
                              rotation_estimates, rotation_interval, rotation_of_periodic)
from annulab.suites import brute_force_farey


def _drift_up():
    # not area preserving: every orbit runs off towards y = 1
    return MapSpec("drift", (), lambda x, y: (x + 0.3, np.sqrt(y)), lambda x, y: (x - 0.3, y * y))


def test_rigid_rotation_estimate():
    est = rotation_estimate(fam.rigid_rotation(1 / 3), (0.0, 0.5), 300, 1e-12)
    assert est.converged
    assert est.value == pytest.approx(1 / 3, abs=1e-12)
    assert est.error_bound <= 1e-12
    assert est.recurrence_times == sorted(set(est.recurrence_times))


def test_identity_converges_in_first_window():
    est = rotation_estimate(fam.identity_map(), (0.4, 0.7), 50, 1e-12)
    assert est.converged and est.value == 0.0
    assert est.iterations == 3


def test_twist_estimate():
    n = 1000
    est = rotation_estimate(fam.pure_twist(0.0, 1.0), (0.0, 0.25), n, 1e-9)
    assert abs(est.value - 0.25) <= 1.0 / n


def test_non_recurrent_orbit_is_flagged():
    est = rotation_estimate(_drift_up(), (0.0, 0.01), 50, 1e-9)
    assert not est.recurrent and not est.converged
    assert est.value == pytest.approx(0.3)


def test_n_max_lower_bound():
    with pytest.raises(ValueError):
        rotation_estimate(fam.identity_map(), (0.0, 0.5), 9, 1e-9)


@pytest.mark.parametrize("k", [-2, -1, 0, 1, 2])
def test_deck_equivariance(k):
    k_map = fam.kicked_twist(0.1)
    base = rotation_estimate(k_map, (0.3, 0.4), 2000, 1e-4)
    sh = rotation_estimate(shifted(k_map, k), (0.3, 0.4), 2000, 1e-4)
    assert sh.value - k == pytest.approx(base.value, abs=base.error_bound + sh.error_bound + 1e-12)


@pytest.mark.parametrize("q", [2, 3])
def test_power_rule(q):
    k_map = fam.kicked_twist(0.1)
    base = rotation_estimate(k_map, (0.3, 0.4), 3000, 1e-5)
    pw = rotation_estimate(power(k_map, q), (0.3, 0.4), 1000, 1e-5)
    assert pw.value == pytest.approx(q * base.value, abs=q * base.error_bound + pw.error_bound + 1e-3)


def test_reflection_identities_on_reversible_map():
    # f o R = R o f^-1 lifts to f~^n(R~ z) = R~ f~^-n(z): the f~^-1 orbit of R z is the
    # mirror image of the f~ orbit of z, so its estimate is exactly the negative
    s = fam.symmetric_twist(0.2)
    seeds = [(0.13, 0.31), (0.4, 0.62), (0.77, 0.85)]
    fwd = rotation_estimates(s, seeds, 1500, 1e-5)
    mirrored = [apply_R(z) for z in seeds]
    back = rotation_estimates(inverse_map(s), mirrored, 1500, 1e-5)
    same = rotation_estimates(s, mirrored, 1500, 1e-5)
    for a, b, c in zip(fwd, back, same):
        assert b.value == pytest.approx(-a.value, abs=1e-9)
        assert b.recurrence_times == a.recurrence_times
        # f~ itself has the same rotation number at R z, up to finite-orbit error
        assert c.value == pytest.approx(a.value, abs=1e-4)


@pytest.mark.parametrize("spec,point,k,expected", [
    (fam.identity_map(), (0.3, 0.3), 1, Fraction(0)),
    (fam.pure_twist(0.0, 1.0), (0.2, 0.5), 2, Fraction(1, 2)),
    (fam.rigid_rotation(0.4), (0.7, 0.1), 5, Fraction(2, 5)),
])
def test_rotation_of_periodic(spec, point, k, expected):
    assert rotation_of_periodic(spec, (point, k)) == expected


def test_rotation_of_periodic_rejects_wrong_period():
    with pytest.raises(NotPeriodicError):
        rotation_of_periodic(fam.pure_twist(0.0, 1.0), ((0.0, 0.25), 3))
    with pytest.raises(ValueError):
        rotation_of_periodic(fam.identity_map(), ((0.0, 0.25), 0))


def test_rotation_interval_examples():
    rot = rotation_interval(fam.rigid_rotation(1 / 3), [(0.0, 0.2), (0.5, 0.8)], 300, 1e-9)
    assert rot.degenerate and rot.lower == pytest.approx(1 / 3)
    ident = rotation_interval(fam.identity_map(), [(0.0, 0.2), (0.5, 0.8)], 50, 1e-9)
    assert ident.degenerate and ident.lower == 0.0
    n = 2000
    seeds = [(0.0, y) for y in np.linspace(0.1, 0.9, 9)]
    tw = rotation_interval(fam.pure_twist(0.0, 1.0), seeds, n, 1e-9)
    assert abs(tw.lower - 0.1) <= 2 / n and abs(tw.upper - 0.9) <= 2 / n
    assert tw.lower_witness[1] == pytest.approx(0.1)
    assert tw.upper_witness[1] == pytest.approx(0.9)


def test_rotation_interval_errors():
    with pytest.raises(ValueError):
        rotation_interval(fam.identity_map(), [(0.0, 0.5)], 50, 1e-9)
    with pytest.raises(IntervalUndefinedError):
        rotation_interval(_drift_up(), [(0.0, 0.01), (0.5, 0.02)], 50, 1e-9)


def test_return_stats_rigid_rotation():
    w = Window(0.0, 0.1, 0.45, 0.55)
    rs = return_rotation_estimate(fam.rigid_rotation(1 / 3), w, 60)
    assert set(rs.tau) == {3}
    assert rs.m == pytest.approx([1.0] * len(rs.m))
    assert rs.ratio == pytest.approx(1 / 3)
    np.testing.assert_allclose(rs.tau_sums, np.cumsum(rs.tau))


def test_return_stats_identity_and_twist():
    w = Window(0.0, 0.1, 0.45, 0.55)
    ident = return_rotation_estimate(fam.identity_map(), w, 20)
    assert set(ident.tau) == {1} and ident.ratio == 0.0
    tw = return_rotation_estimate(fam.pure_twist(0.0, 1.0), w, 500)
    est = rotation_estimate(fam.pure_twist(0.0, 1.0), w.center, 500, 1e-9)
    assert abs(tw.ratio - est.value) <= tw.error_bound + est.error_bound


def test_return_stats_non_recurrent():
    rs = return_rotation_estimate(_drift_up(), Window(0.0, 0.1, 0.0, 0.05), 30)
    assert not rs.recurrent and math.isnan(rs.ratio)


@pytest.mark.parametrize("box", [(0.0, 0.5, 0.0, 1.0), (0.0, 0.1, 0.5, 0.5), (0.2, 0.1, 0.0, 1.0)])
def test_window_validation(box):
    with pytest.raises(ValueError):
        Window(*box)


@pytest.mark.parametrize("lo,hi,q_max,n0,expected", [
    (0, 1, 5, 1, "1/5 1/4 1/3 2/5 1/2 3/5 2/3 3/4 4/5"),
    (0, 1, 5, 2, "1/5 1/3 2/5 3/5 2/3 4/5"),
    (-1 / 3, 1 / 3, 1, 7, "0/1"),
])
def test_farey_examples(lo, hi, q_max, n0, expected):
    assert " ".join(format_rationals(farey_enumerate(lo, hi, q_max, n0))) == expected


def test_farey_argument_checks():
    with pytest.raises(ValueError):
        farey_enumerate(0.5, 0.5, 3, 1)
    with pytest.raises(ValueError):
        farey_enumerate(0.0, 1.0, 0, 1)


@settings(max_examples=200, deadline=None)
@given(st.floats(-3, 3, allow_nan=False), st.floats(0.001, 2.5), st.integers(1, 30), st.integers(1, 10))
def test_farey_matches_brute_force(lo, width, q_max, n0):
    hi = lo + width
    out = farey_enumerate(lo, hi, q_max, n0)
    assert out == brute_force_farey(lo, hi, q_max, n0)
    assert all(math.gcd(r.denominator, n0) == 1 for r in out)
