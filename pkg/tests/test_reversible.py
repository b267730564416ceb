from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from annulab import families as fam
from annulab.core import AnnulusPoint, LiftedPoint, deck
from annulab.periodic import OrbitRecord, find_pq_orbit, orbit_closes
from annulab.reversible import (Y1, Y2, apply_R, check_reversible, is_symmetric_orbit, lift_R,
                                line_by_id, on_lines, symmetric_fixed_points,
                                symmetric_orbit_search, symmetric_period_scan)
from annulab.suites import sign_scan_oracle


@pytest.mark.parametrize("z,expected", [
    ((0.25, 0.5), (0.75, 0.5)),
    ((0.0, 0.3), (0.0, 0.3)),
    ((0.5, 0.9), (0.5, 0.9)),
])
def test_apply_R_examples(z, expected):
    out = apply_R(AnnulusPoint(*z))
    assert (out.x, out.y) == expected


@settings(max_examples=100)
@given(st.floats(0, 1, exclude_max=True), st.floats(0, 1))
def test_R_is_an_involution(x, y):
    # exact on dyadic inputs, otherwise up to one rounding of 1 - x
    rx, ry = apply_R(apply_R((x, y)))
    assert min(abs(rx - x), 1 - abs(rx - x)) < 1e-15 and ry == y


@settings(max_examples=100)
@given(st.floats(-5, 5), st.floats(0, 1), st.integers(-3, 3), st.sampled_from([0.0, 0.5]))
def test_lifted_reflection_conjugates_deck(xt, y, k, axis):
    # R~ o T^k = T^-k o R~ and R~ o R~ = id on the cover
    a = lift_R(xt + k, y, axis)[0]
    b = lift_R(xt, y, axis)[0] - k
    assert a == pytest.approx(b, abs=1e-12)
    assert lift_R(*lift_R(xt, y, axis), axis)[0] == pytest.approx(xt, abs=1e-12)
    assert deck(LiftedPoint(float(b), y), k).xt == pytest.approx(float(lift_R(xt, y, axis)[0]), abs=1e-12)


def test_line_lookup():
    assert line_by_id("Y2") is Y2
    with pytest.raises(ValueError):
        line_by_id("Y3")


@pytest.mark.parametrize("spec", [fam.pure_twist(0.0, 1.0), fam.rigid_rotation(0.5),
                                  fam.symmetric_twist(0.05), fam.identity_map()])
def test_reversible_families_pass(spec):
    rep = check_reversible(spec, 1000, 1e-9)
    assert rep.passed, rep


def test_asymmetric_kick_fails():
    rep = check_reversible(fam.asymmetric_twist(0.1), 1000, 1e-9)
    assert not rep.passed and rep.deviation > 1e-3


def test_half_rotation_has_no_symmetric_fixed_point():
    res = symmetric_fixed_points(fam.rigid_rotation(0.5), Y1, 256)
    assert len(res) == 0 and res.crossings == [] and not res.degenerate


def test_shifted_twist_fixed_point():
    res = symmetric_fixed_points(fam.pure_twist(-0.5, 1.0), Y1, 257)
    assert len(res) == 1
    assert res.fixed_points[0].y == pytest.approx(0.5, abs=1e-12)
    assert res.fixed_points[0].x == 0.0


def test_identity_line_is_degenerate():
    res = symmetric_fixed_points(fam.identity_map(), Y2, 64)
    assert res.degenerate and len(res) == 1


@pytest.mark.parametrize("eps", [0.05, 0.2])
@pytest.mark.parametrize("line", [Y1, Y2])
def test_fixed_point_roots_match_sign_scan(eps, line):
    spec = fam.symmetric_twist(eps)
    res = symmetric_fixed_points(spec, line, 512)
    brackets = sign_scan_oracle(spec, line.x, 4096)
    assert len(res.crossings) == len(brackets)
    for y, (a, b) in zip(res.crossings, brackets):
        assert a - 1e-9 <= y <= b + 1e-9
    for z in res:
        fx, fy = spec.forward(z.x, z.y)
        assert abs(fx - z.x) < 1e-9 and abs(fy - z.y) < 1e-9


def test_twist_symmetric_orbits():
    recs = symmetric_orbit_search(fam.pure_twist(0.0, 1.0), 3, 256)
    rots = {r.rotation for r in recs}
    assert {Fraction(1, 3), Fraction(1, 2), Fraction(2, 3)} <= rots
    # the 1/3 circle carries one symmetric orbit through each line
    thirds = [sorted(r.orbit.points) for r in recs if r.rotation == Fraction(1, 3)]
    assert all(r.period == 3 for r in recs if r.rotation == Fraction(1, 3))
    expected = [(0, 1 / 3), (1 / 3, 1 / 3), (2 / 3, 1 / 3)]
    assert any(np.allclose(pts, expected, atol=1e-9) for pts in thirds)
    for r in recs:
        ok, _ = is_symmetric_orbit(None, r.orbit, 1e-8)
        assert ok and r.crossings


def test_half_rotation_orbits_cross_both_lines():
    recs = symmetric_orbit_search(fam.rigid_rotation(0.5), 2, 64)
    assert recs and all(r.period == 2 for r in recs)
    assert all({line for _, line in r.crossings} == {"Y1", "Y2"} for r in recs)


def test_identity_search_is_degenerate():
    recs = symmetric_orbit_search(fam.identity_map(), 2, 32)
    assert recs and all(r.degenerate and r.period == 1 for r in recs)


def test_search_rejects_bad_m():
    with pytest.raises(ValueError):
        symmetric_orbit_search(fam.identity_map(), 0)


def test_is_symmetric_orbit_permutation():
    rec = OrbitRecord(((0.0, 1 / 3), (1 / 3, 1 / 3), (2 / 3, 1 / 3)), 3, Fraction(1, 3), 0.0, True)
    ok, perm = is_symmetric_orbit(None, rec, 1e-12)
    assert ok and perm == [0, 2, 1]
    fixed = OrbitRecord(((0.0, 0.5),), 1, Fraction(0), 0.0, True)
    assert is_symmetric_orbit(None, fixed, 1e-12) == (True, [0])
    assert on_lines(fixed.points, 1e-12) == [(0, "Y1")]


def test_asymmetric_family_has_asymmetric_orbit():
    spec = fam.asymmetric_twist(0.1)
    seeds = [(x, 0.5) for x in np.linspace(0, 0.5, 6, endpoint=False)]
    orbits = find_pq_orbit(spec, Fraction(1, 2), seeds)
    assert orbits
    flags = [is_symmetric_orbit(spec, o, 1e-6)[0] for o in orbits]
    assert not all(flags)
    assert all(orbit_closes(spec, o, 1e-9) for o in orbits)


def test_twist_scan_periods():
    rep = symmetric_period_scan(fam.pure_twist(0.0, 1.0), 3, 5, resolution=256)
    assert set(rep.periods) == {1, 2, 4, 5}


def test_half_rotation_scan():
    rep = symmetric_period_scan(fam.rigid_rotation(0.5), 3, 4, resolution=64)
    assert rep.records and set(rep.periods) == {2}


def test_reversible_scan_is_odd_and_symmetric():
    spec = fam.symmetric_twist(0.05)
    rep = symmetric_period_scan(spec, 2, 7)
    assert rep.records
    for r in rep.records:
        assert r.period % 2 == 1
        assert is_symmetric_orbit(spec, r.orbit, 1e-8)[0]
        assert orbit_closes(spec, r.orbit, 1e-8)
