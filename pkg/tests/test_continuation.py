import numpy as np
import pytest

from pps4bp import continuation as ct
from pps4bp import orbitrep as orp
from pps4bp.errors import SeedFailure
from pps4bp.orbitrep import TrigOrbit

CFG = ct.ContinuationConfig()


def test_config_validation():
    for bad in ({"n_start": 0}, {"n_start": 50}, {"dm": 0.0}, {"L_target": -1.0}, {"gamma_tol": 0.0},
                {"e_halfwidth_max": 0.01}):
        with pytest.raises(ValueError):
            ct.ContinuationConfig(**bad)


def test_mass_grid():
    g = ct.mass_grid(1.0, 0.5, 0.01)
    assert len(g) == 51 and g[0] == 1.0 and g[-1] == 0.5
    assert g[46] == 0.54
    assert list(ct.mass_grid(1.0, 1.0, 0.01)) == [1.0]


def test_minimize_keeps_a_converged_orbit(baseline):
    res = ct.minimize_L_detailed(baseline, CFG)
    assert res.L <= orp.residual_L(baseline) + 1e-12
    assert np.max(np.abs(res.orbit.coeffs - baseline.coeffs)) < 1e-6


def test_minimize_recovers_from_noise(baseline, rng):
    noisy = baseline.with_coeffs(baseline.coeffs + 1e-4 * rng.normal(size=baseline.coeffs.size))
    assert orp.residual_L(noisy) > 1e-3
    assert orp.residual_L(ct.minimize_L(noisy, CFG)) < 1e-6


def test_minimize_rejects_degenerate_start():
    z = TrigOrbit(1.0, -2.0, np.zeros(3), np.zeros(3), np.zeros(3), np.zeros(3))
    with pytest.raises(Exception):
        ct.minimize_L(z, CFG)


def test_escalate_terms(baseline):
    grown = ct.escalate_terms(baseline, CFG)
    assert grown.n == baseline.n + 1
    assert orp.residual_L(grown) <= orp.residual_L(baseline) * 1.01
    with pytest.raises(ValueError):
        ct.escalate_terms(baseline, ct.ContinuationConfig(n_end=baseline.n))


def test_tune_energy_noop_when_tuned(sweep_by_mass):
    rec = sweep_by_mass[1.0]
    orb, e = ct.tune_energy(rec.orbit, rec.e_hat, CFG)
    assert orb is rec.orbit and e == rec.e_hat


def test_tune_energy_from_offset_guess(baseline):
    orb, e = ct.tune_energy(baseline, -2.81, CFG)
    assert e == pytest.approx(-2.818584789, abs=1e-6)
    assert abs(orp.gamma_at(orb, np.pi / 4)) < CFG.gamma_tol


def test_single_mass_sweep(baseline):
    recs = ct.sweep(1.0, 1.0, CFG, seed=baseline)
    assert len(recs) == 1 and recs[0].m == 1.0 and recs[0].converged
    assert recs[0].final_L < 1e-6


def test_bad_seed_is_seed_failure():
    z = TrigOrbit(1.0, -2.0, np.zeros(3), np.zeros(3), np.zeros(3), np.zeros(3))
    with pytest.raises(SeedFailure):
        ct.sweep(1.0, 0.99, CFG, seed=z)


def test_sweep_records_continuity(sweep_records):
    assert [r.m for r in sweep_records][:3] == [1.0, 0.99, 0.98]
    assert all(r.converged for r in sweep_records)
    for a, b in zip(sweep_records, sweep_records[1:]):
        n = max(a.orbit.n, b.orbit.n)
        assert np.max(np.abs(a.orbit.padded(n).coeffs - b.orbit.padded(n).coeffs)) < 0.5
        assert b.orbit.n >= a.orbit.n


def test_sweep_csv(tmp_path, sweep_records):
    path = tmp_path / "sweep.csv"
    ct.write_sweep_csv(sweep_records[:3], path, header=["x"])
    lines = path.read_text().splitlines()
    assert lines[0] == "# x"
    assert lines[1] == ",".join(ct.SWEEP_COLUMNS + ["converged"])
    assert len(lines) == 5
    first = lines[2].split(",")
    assert float(first[0]) == 1.0 and first[-1] == "1"
