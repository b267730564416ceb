import numpy as np
import pytest

from annulab import families as fam
from annulab.families import FamilyError, FamilySpec, area_check, build
from annulab.reversible import apply_R


@pytest.mark.parametrize("spec", [
    FamilySpec("rotation", alpha=0.3),
    FamilySpec("twist", omega=(0.1, 1.0, -0.5)),
    FamilySpec("kicked", eps=0.1),
    FamilySpec("symmetric", eps=0.2, cos_coeffs=(0.0, 1.0, 0.3), sin_coeffs=(0.5,)),
])
def test_params_round_trip(spec):
    again = FamilySpec.from_params(spec.kind, spec.to_params())
    assert again.to_params() == spec.to_params()


@pytest.mark.parametrize("kwargs", [
    {"kind": "nope"},
    {"kind": "kicked", "eps": -1.0},
    {"kind": "kicked", "eps": 0.1, "substeps": 0},
    {"kind": "kicked", "eps": 0.1, "V": (1.0, 1.0)},
    {"kind": "twist", "omega": ()},
])
def test_invalid_specs(kwargs):
    with pytest.raises(FamilyError):
        build(FamilySpec(**kwargs))


def test_twist_closed_form():
    tw = fam.pure_twist(0.25, 2.0)
    x, y = tw.lift(np.array([0.1]), np.array([0.3]))
    assert x[0] == pytest.approx(0.1 + 0.25 + 0.6)
    assert y[0] == 0.3


def test_zero_kick_reduces_to_twist():
    k = fam.kicked_twist(0.0)
    x, y = k.lift(np.array([0.2, 0.7]), np.array([0.3, 0.8]))
    np.testing.assert_allclose(x, [0.5, 1.5])
    np.testing.assert_allclose(y, [0.3, 0.8])


def test_kick_preserves_boundaries_and_inverts():
    k = fam.kicked_twist(0.1)
    xs = np.linspace(0, 1, 11)
    for level in (0.0, 1.0):
        _, y = k.lift(xs, np.full_like(xs, level))
        np.testing.assert_array_equal(y, level)
    rng = np.random.default_rng(1)
    x, y = rng.uniform(0, 1, 50), rng.uniform(0, 1, 50)
    bx, by = k.lift_inv(*k.lift(x, y))
    assert np.max(np.abs(bx - x) + np.abs(by - y)) < 1e-12


def test_even_kick_flags_reversibility():
    assert fam.symmetric_twist(0.1).reversible
    assert not fam.asymmetric_twist(0.1).reversible
    assert not fam.kicked_twist(0.1).reversible


def test_symmetric_splitting_is_reversible_pointwise():
    s = fam.symmetric_twist(0.2)
    rng = np.random.default_rng(2)
    x, y = rng.uniform(0, 1, 100), rng.uniform(0, 1, 100)
    a = s.forward(*apply_R((x, y)))
    b = apply_R(s.inverse(x, y))
    d = np.minimum(np.abs(a[0] - b[0]), 1 - np.abs(a[0] - b[0])) + np.abs(a[1] - b[1])
    assert d.max() < 1e-12


@pytest.mark.parametrize("name", ["twist-y", "kicked-0.1", "symmetric-0.2", "asymmetric-0.1"])
def test_area_preserved(name):
    rep = area_check(fam.builtin_families()[name], 5, 20_000, seed=3)
    assert rep.within(), rep


def test_area_check_detects_contraction():
    from annulab.core import MapSpec

    squeeze = MapSpec("squeeze", (), lambda x, y: (x, 0.5 * y), lambda x, y: (x, 2.0 * y))
    rep = area_check(squeeze, 3, 20_000, seed=0)
    assert not rep.within()
