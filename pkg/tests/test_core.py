import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from annulab import families as fam
from annulab.core import (AnnulusPoint, DomainError, EvaluationError, LiftedPoint, MapSpec,
                          annulus_distance, as_points, check_lift_consistency, circle_distance, deck,
                          inverse_map, iterate, lift_orbit, map_from_record, orbit_arrays, power,
                          project, seed_grid, shifted, wrap)


def test_wrap_folds_into_unit_interval():
    assert wrap(1.25) == pytest.approx(0.25)
    assert wrap(-0.25) == pytest.approx(0.75)
    assert wrap(-1e-18) == 0.0
    arr = wrap(np.array([-1e-18, 2.0, 0.5]))
    assert np.all((arr >= 0) & (arr < 1))


@given(st.floats(-1e6, 1e6, allow_nan=False))
def test_wrap_range(x):
    assert 0.0 <= wrap(x) < 1.0


@pytest.mark.parametrize("x,y", [(1.0, 0.5), (-0.1, 0.5), (0.5, 1.1), (0.5, -0.01)])
def test_annulus_point_rejects_out_of_domain(x, y):
    with pytest.raises(DomainError):
        AnnulusPoint(x, y)


def test_projection_and_deck():
    z = LiftedPoint(2.3, 0.4)
    assert project(z).x == pytest.approx(0.3)
    assert deck(z, -3) == LiftedPoint(2.3 - 3, 0.4)
    with pytest.raises(DomainError):
        project(LiftedPoint(0.0, 1.5))


def test_distances():
    assert circle_distance(0.9) == pytest.approx(0.1)
    assert annulus_distance(0.95, 0.2, 0.05, 0.3) == pytest.approx(0.2)


def test_as_points_accepts_mixed_inputs():
    pts = as_points([AnnulusPoint(0.1, 0.2), LiftedPoint(3.0, 0.5), (0.4, 0.6)])
    assert pts.shape == (3, 2)
    assert pts[1, 0] == 3.0


def test_seed_grid_ordering():
    g = seed_grid(2, 3)
    assert g.shape == (6, 2)
    np.testing.assert_allclose(g[:2, 1], 0.0)
    np.testing.assert_allclose(g[:, 0], [0.0, 0.5] * 3)


@pytest.mark.parametrize("name", sorted(fam.builtin_families()))
def test_lift_axioms_builtin(name):
    rep = check_lift_consistency(fam.builtin_families()[name], 500, 1e-9)
    assert rep.passed, rep


def test_lift_report_flags_a_broken_lift():
    # a "lift" that is not deck-equivariant
    bad = MapSpec("bad", (), lambda x, y: (x + 0.1 * x * x, y), lambda x, y: (x, y))
    rep = check_lift_consistency(bad, 200, 1e-9)
    assert not rep.passed
    assert rep.deck_deviation > 1e-3


def test_twist_lift_closed_form():
    tw = fam.pure_twist(0.0, 1.0)
    orbit = lift_orbit(tw, LiftedPoint(0.2, 0.3), 4)
    assert [p.xt for p in orbit] == pytest.approx([0.2, 0.5, 0.8, 1.1, 1.4])


def test_combinators():
    rot = fam.rigid_rotation(0.25)
    s = shifted(rot, 2)
    assert s.lift(np.array([0.0]), np.array([0.5]))[0][0] == pytest.approx(2.25)
    assert s.lift_inv(*s.lift(np.array([0.3]), np.array([0.5])))[0][0] == pytest.approx(0.3)
    p4 = power(rot, 4)
    assert p4.lift(np.array([0.1]), np.array([0.5]))[0][0] == pytest.approx(1.1)
    inv = inverse_map(rot)
    assert inv.lift(np.array([0.1]), np.array([0.5]))[0][0] == pytest.approx(-0.15)
    with pytest.raises(ValueError):
        power(rot, 0)


def test_orbit_arrays_raise_on_non_finite():
    boom = MapSpec("boom", (), lambda x, y: (x * 1e300, y), lambda x, y: (x, y))
    with np.errstate(over="ignore"), pytest.raises(EvaluationError) as exc:
        orbit_arrays(boom, np.array([1e10]), np.array([0.5]), 5)
    assert exc.value.step >= 1


def test_iterate_matches_orbit_arrays():
    k = fam.kicked_twist(0.1)
    x, y = np.array([0.1, 0.7]), np.array([0.3, 0.6])
    X, Y = orbit_arrays(k, x, y, 5)
    a, b = iterate(k, x, y, 5)
    np.testing.assert_array_equal(X[5], a)
    np.testing.assert_array_equal(Y[5], b)


@pytest.mark.parametrize("name", sorted(fam.builtin_families()))
def test_record_round_trip(name):
    spec = fam.builtin_families()[name]
    again = map_from_record(spec.to_record())
    x, y = np.array([0.1, 0.8]), np.array([0.2, 0.9])
    np.testing.assert_array_equal(spec.lift(x, y)[0], again.lift(x, y)[0])
    assert again.to_record() == spec.to_record()


def test_unknown_family_record():
    with pytest.raises(ValueError):
        map_from_record({"family": "nope", "params": []})


@settings(max_examples=30, deadline=None)
@given(st.floats(-5, 5), st.floats(0, 1), st.integers(-4, 4))
def test_deck_commutes_with_kicked_lift(xt, y, k):
    m = fam.kicked_twist(0.1, substeps=8)
    a = m.lift(np.array([xt + k]), np.array([y]))
    b = m.lift(np.array([xt]), np.array([y]))
    assert a[0][0] - k == pytest.approx(b[0][0], abs=1e-12)
    assert a[1][0] == pytest.approx(b[1][0], abs=1e-12)
    assert math.isfinite(a[0][0])
