import math

import numpy as np
import pytest

from annulab.core import check_lift_consistency, map_from_record
from annulab.henon_heiles import (EscapeError, HHState, NoCrossingError, apply_rho, apply_sigma,
                                  critical_levels, critical_values, hh_chart, hh_energy, hh_flow,
                                  hh_gradient, hh_symmetric_orbits, poincare_return,
                                  random_on_shell, return_map, rho_segment, section_p1_squared,
                                  section_point)

C = 0.125
SQ3 = math.sqrt(3.0) / 2.0


@pytest.fixture(scope="module")
def rng():
    return np.random.default_rng(7)


@pytest.mark.parametrize("s,h", [((0, 0, 0, 0), 0.0), ((0, 1, 0, 0), 1 / 6), ((0, 0, 1, 0), 0.5)])
def test_energy_examples(s, h):
    assert hh_energy(HHState(*s)) == pytest.approx(h, abs=1e-15)


def test_equilibria_are_fixed():
    assert np.all(hh_flow(np.zeros(4), 5.0) == 0.0)
    for s, _v in critical_levels():
        assert np.max(np.abs(hh_gradient(s))) < 1e-12
        out = hh_flow(s, 0.5)
        assert np.max(np.abs(out.as_array() - s.as_array())) < 1e-10


def test_saddle_energy_stays_put():
    s = HHState(0.0, 1.0, 0.0, 0.0)
    out = hh_flow(s, 1.0)
    assert hh_energy(out) == pytest.approx(1 / 6, abs=1e-12)


def test_energy_drift_bound(rng):
    for s in random_on_shell(C, 5, rng):
        out = hh_flow(s, 100.0, 1e-3)
        assert abs(hh_energy(out) - C) < 1e-8


def test_backward_flow_inverts(rng):
    s = random_on_shell(C, 1, rng)[0]
    back = hh_flow(hh_flow(s, 7.3), -7.3)
    assert np.max(np.abs(back - s)) < 1e-10


def test_flow_validation_and_escape():
    with pytest.raises(ValueError):
        hh_flow(np.zeros(4), 1.0, dt=0.0)
    with pytest.raises(EscapeError) as exc:
        hh_flow(np.array([0.0, 1.2, 0.0, 0.5]), 50.0)
    assert exc.value.time > 0


def test_critical_levels():
    levels = critical_levels()
    assert len(levels) == 4
    assert critical_values(levels) == pytest.approx([0.0, 1 / 6], abs=1e-14)
    pts = {(round(s.q1, 9), round(s.q2, 9)) for s, _ in levels}
    assert pts == {(0.0, 0.0), (0.0, 1.0), (round(SQ3, 9), -0.5), (round(-SQ3, 9), -0.5)}


def test_involutions(rng):
    s = rng.normal(size=(50, 4))
    np.testing.assert_array_equal(apply_rho(apply_rho(s)), s)
    np.testing.assert_allclose(apply_sigma(apply_sigma(apply_sigma(s))), s, atol=1e-14)
    np.testing.assert_allclose(apply_sigma(apply_rho(apply_sigma(s))), apply_rho(s), atol=1e-14)
    np.testing.assert_allclose(hh_energy(apply_rho(s)), hh_energy(s), atol=1e-14)
    np.testing.assert_allclose(hh_energy(apply_sigma(s)), hh_energy(s), atol=1e-13)
    assert isinstance(apply_rho(HHState(1, 2, 3, 4)), HHState)


def test_flow_reversal_and_equivariance(rng):
    for s in random_on_shell(C, 3, rng):
        a = hh_flow(apply_rho(s), 3.0)
        b = apply_rho(hh_flow(s, -3.0))
        assert np.max(np.abs(a - b)) < 1e-10
        a = hh_flow(apply_sigma(s), 3.0)
        b = apply_sigma(hh_flow(s, 3.0))
        assert np.max(np.abs(a - b)) < 1e-9


def test_section_point_on_rho_fixed_set():
    sp = section_point(C, 0.1, 0.0)
    assert sp.energy_residual < 1e-14
    st = sp.state(C)
    assert st.q1 == 0.0 and st.p1 > 0
    ret = poincare_return(C, sp, 3)
    assert len(ret) == 3
    for r in ret:
        assert r.energy_residual < 1e-8
        assert section_p1_squared(C, r.q2, r.p2) > 0
    assert ret[0].time < ret[1].time < ret[2].time


def test_section_domain_checks():
    with pytest.raises(ValueError):
        section_point(C, 0.0, 0.6)
    with pytest.raises(ValueError):
        poincare_return(0.2, section_point(C, 0.1, 0.0))
    with pytest.raises(NoCrossingError):
        poincare_return(C, section_point(C, 0.1, 0.0), 5, tmax=1.0)


def test_return_map_reversal():
    # P(rho(P(x))) = rho(x): one crossing forward then mirrored returns to the mirror of x
    q, p = 0.05, 0.1
    fq, fp = return_map(C, [q], [p])
    gq, gp = return_map(C, fq, -fp)
    assert gq[0] == pytest.approx(q, abs=1e-10)
    assert -gp[0] == pytest.approx(p, abs=1e-10)
    bq, bp = return_map(C, fq, fp, backward=True)
    assert (bq[0], bp[0]) == pytest.approx((q, p), abs=1e-10)


def test_return_time_is_reversal_invariant():
    x = section_point(C, 0.05, 0.1)
    fwd = poincare_return(C, x, 1)[0]
    mirrored = section_point(C, fwd.q2, -fwd.p2)
    back = poincare_return(C, mirrored, 1)[0]
    assert back.time == pytest.approx(fwd.time, abs=1e-10)


def test_rho_segment_endpoints():
    lo, hi = rho_segment(C, 0.0)
    assert section_p1_squared(C, lo, 0.0) == pytest.approx(0.0, abs=1e-12)
    assert section_p1_squared(C, hi, 0.0) == pytest.approx(0.0, abs=1e-12)
    assert lo < 0 < hi


def test_symmetric_orbit_search():
    rep = hh_symmetric_orbits(C, m_max=4)
    assert len(rep.orbits) >= 2
    for o in rep.orbits:
        assert o.rho_symmetric and o.closure_residual < 1e-7 and o.energy_residual < 1e-8
    assert any(o.sigma_symmetric for o in rep.orbits)
    assert rep.orbits[0].to_dict()["family"] == "hh"
    with pytest.raises(ValueError):
        hh_symmetric_orbits(0.2)


def test_annulus_chart_lift_axioms():
    chart = hh_chart(C)
    rep = check_lift_consistency(chart, 40, 1e-6)
    assert rep.passed, rep
    again = map_from_record(chart.to_record())
    assert again.params == chart.params
