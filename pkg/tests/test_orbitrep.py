import numpy as np
import pytest

from pps4bp import orbitrep as orp
from pps4bp.errors import DegenerateInput
from pps4bp.orbitrep import TrigOrbit
from pps4bp.symmetry import S_F, S_G


def small_orbit():
    return TrigOrbit(0.8, -2.0, np.array([1.0, 0.1]), np.array([0.4, -0.05]), np.array([2.0, 0.3]), np.array([-1.0, 0.2]))


def test_eval_at_zero():
    orb = small_orbit()
    g = orp.eval(orb, 0.0)
    # u1 = u2 = 0 and v3 = v4 = 0 are forced by the form of the series.
    assert g[0] == 0.0 and g[1] == 0.0
    assert g[4] == pytest.approx(2.3)
    assert g[5] == pytest.approx(0.8)
    assert g[6] == pytest.approx(0.0, abs=1e-15) and g[7] == pytest.approx(0.0, abs=1e-15)


def test_eval_shapes():
    orb = small_orbit()
    assert orp.eval(orb, 0.3).shape == (8,)
    assert orp.eval(orb, np.linspace(0, 1, 7)).shape == (8, 7)


def test_derivative_matches_fd():
    orb = small_orbit()
    s = np.linspace(0, 2 * np.pi, 17)
    fd = (orp.eval(orb, s + 1e-6) - orp.eval(orb, s - 1e-6)) / 2e-6
    assert np.max(np.abs(orp.eval_deriv(orb, s) - fd)) < 1e-8


def test_odd_harmonics_antiperiodic():
    orb = small_orbit()
    s = np.linspace(0, 2 * np.pi, 11)
    assert np.allclose(orp.eval(orb, s + np.pi), -orp.eval(orb, s), atol=1e-14)


def test_symmetry_holds_by_construction():
    assert orp.symmetry_check(small_orbit())
    g = orp.eval(small_orbit(), 0.7)
    assert np.allclose(S_F @ g, orp.eval(small_orbit(), 0.7 + np.pi / 2), atol=1e-14)
    assert np.allclose(S_G @ g, orp.eval(small_orbit(), -0.7), atol=1e-14)


def test_symmetry_check_detects_even_frequency(monkeypatch):
    orb = small_orbit()
    real = orp.eval

    def polluted(o, s):
        out = real(o, s)
        return out + 1e-6 * np.cos(2 * np.asarray(s, dtype=float))

    monkeypatch.setattr(orp, "eval", polluted)
    assert not orp.symmetry_check(orb)


def test_design_matrix_reproduces_eval():
    orb = small_orbit()
    s = np.linspace(0, 2, 5)
    M = orp.design_matrix(orb.n, s)
    assert np.allclose(M @ orb.coeffs, orp.eval(orb, s))


def test_zero_orbit_is_degenerate():
    z = TrigOrbit(1.0, -2.0, np.zeros(3), np.zeros(3), np.zeros(3), np.zeros(3))
    with pytest.raises(DegenerateInput):
        orp.check_grid_regular(z)


def test_constructor_validation():
    with pytest.raises(ValueError):
        TrigOrbit(1.0, -2.0, np.zeros(2), np.zeros(3), np.zeros(3), np.zeros(3))
    with pytest.raises(ValueError):
        TrigOrbit(1.0, -2.0, [], [], [], [])
    with pytest.raises(ValueError):
        small_orbit().padded(1)


def test_padded_and_with_coeffs():
    orb = small_orbit()
    p = orb.padded(5)
    assert p.n == 5
    assert np.allclose(orp.eval(p, 0.4), orp.eval(orb, 0.4))
    q = orb.with_coeffs(orb.coeffs * 2, e_hat=-1.0, m=0.5)
    assert q.e_hat == -1.0 and q.m == 0.5
    assert np.allclose(orp.eval(q, 0.4), 2 * orp.eval(orb, 0.4))


def test_json_roundtrip(tmp_path, baseline):
    path = tmp_path / "orbit.json"
    baseline.save(path)
    back = TrigOrbit.load(path)
    assert np.array_equal(back.coeffs, baseline.coeffs)
    assert back.e_hat == baseline.e_hat and back.m == baseline.m
    bad = baseline.to_dict()
    bad["n"] = 3
    with pytest.raises(ValueError):
        TrigOrbit.from_dict(bad)


def test_perturbation_increases_L(baseline, rng):
    L0 = orp.residual_L(baseline)
    for _ in range(5):
        x = baseline.coeffs + 1e-4 * rng.normal(size=baseline.coeffs.size)
        assert orp.residual_L(baseline.with_coeffs(x)) > L0


def test_quadrature_resolution(baseline):
    assert orp.residual_L(baseline, 512) == pytest.approx(orp.residual_L(baseline, 1024), rel=1e-2)


def test_gamma_and_sbc_on_baseline(baseline):
    assert abs(orp.gamma_at(baseline, np.pi / 4)) < 1e-6
    assert orp.sbc_momentum(baseline) == pytest.approx(16.0, abs=1e-6)
