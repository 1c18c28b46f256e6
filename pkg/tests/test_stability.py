import numpy as np
import pytest
from scipy.integrate import solve_ivp

from pps4bp import dynamics as dy
from pps4bp import equalmass as em
from pps4bp import stability as st
from pps4bp.stability import Verdict

PAPER_M1 = [
    -0.9888731375 + 0.1487612779j, -0.9888731375 - 0.1487612779j,
    -0.9973584383 + 0.07263708002j, -0.9973584383 - 0.07263708002j,
    0.9999060579 + 0.01370676220j, 0.9999060579 - 0.01370676220j,
    1.0000000000, 1.0000000000,
]


def rotation(theta):
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


def test_eigensolver_rotation_blocks(rng):
    for _ in range(20):
        angles = rng.uniform(0.1, 3.0, 4)
        radii = rng.uniform(0.5, 2.0, 4)
        A = np.zeros((8, 8))
        for k in range(4):
            A[2 * k : 2 * k + 2, 2 * k : 2 * k + 2] = radii[k] * rotation(angles[k])
        Q, _ = np.linalg.qr(rng.normal(size=(8, 8)))
        ev = st.eigenvalues8(Q @ A @ Q.T)
        exact = np.concatenate([radii * np.exp(1j * angles), radii * np.exp(-1j * angles)])
        assert st.match_multisets(ev, exact) < 1e-12


def test_eigensolver_companion_vs_roots(rng):
    for _ in range(50):
        coef = rng.normal(size=9)
        coef[0] = 1.0
        C = np.zeros((8, 8))
        C[0, :] = -coef[1:]
        C[1:, :-1] = np.eye(7)
        assert st.match_multisets(st.eigenvalues8(C), np.roots(coef)) < 1e-9


def test_eigensolver_random_vs_numpy(rng):
    for _ in range(100):
        A = rng.normal(size=(8, 8))
        assert st.match_multisets(st.eigenvalues8(A), np.linalg.eigvals(A)) < 1e-10


def test_eigensolver_input_validation():
    with pytest.raises(ValueError):
        st.eigenvalues8(np.ones((3, 4)))
    with pytest.raises(ValueError):
        st.eigenvalues8(np.full((8, 8), np.nan))


def test_sort_order():
    out = st.sort_eigenvalues([0.5, 2.0, 1j, -1j, -1.0])
    assert out[0] == 2.0
    assert out[-1] == 0.5
    assert out[1].real == 0 and out[1].imag == 1  # positive imaginary part first


def test_classify_examples():
    assert st.classify(PAPER_M1) is Verdict.LINEARLY_STABLE
    assert st.classify(np.ones(8)) is Verdict.INDETERMINATE
    assert st.classify([1.8, 1 / 1.8, 1, 1, 1, 1, 1j, -1j]) is Verdict.UNSTABLE


def test_classify_edge_cases():
    # Nontrivial pair at -1 is a boundary case.
    assert st.classify([1, 1, 1, 1, -1, -1, 1j, -1j]) is Verdict.INDETERMINATE
    # Inside the unit disk beyond tolerance (not symplectic) is indeterminate.
    assert st.classify([1, 1, 1, 1, 0.9j, -0.9j, 0.5 + 0.5j, 0.5 - 0.5j]) is Verdict.INDETERMINATE
    # Coincident nontrivial pairs (Krein collision) are not certified.
    z = np.exp(2j)
    assert st.classify([1, 1, 1, 1, z, np.conj(z), z, np.conj(z)]) is Verdict.INDETERMINATE


def test_max_modulus_and_reciprocal_residual():
    eigs = [1.8, 1 / 1.8, 1, 1, 1, 1, 1j, -1j]
    assert st.max_modulus_excl_trivial(eigs) == pytest.approx(1.8)
    assert st.reciprocal_pair_residual(eigs) < 1e-15
    assert st.reciprocal_pair_residual([2.0, 2.0]) == pytest.approx(3.0)


@pytest.fixture(scope="module")
def m1_report(baseline_start):
    start, e_hat = baseline_start
    return st.analyze(start, 1.0, e_hat)


def test_monodromy_symplectic(m1_report):
    X = m1_report.monodromy
    assert m1_report.symplectic_defect < 1e-10
    assert np.linalg.det(X) == pytest.approx(1.0, abs=1e-9)
    assert st.reciprocal_pair_residual(m1_report.eigenvalues) < 1e-8


def test_four_multipliers_at_one(m1_report):
    near = np.sort(np.abs(m1_report.eigenvalues - 1.0))
    assert near[3] < 1e-4 and near[4] > 0.5


def test_m1_verdict(m1_report):
    assert m1_report.verdict is Verdict.LINEARLY_STABLE
    assert m1_report.max_modulus == pytest.approx(1.0, abs=1e-8)


def reduced_oracle_multipliers(shooting):
    """Independent oracle: reduced 4-dim system, DOP853 plus complex-step variations."""
    E = shooting.energy_E

    def jac(y):
        J = np.empty((4, 4))
        for j in range(4):
            z = y.astype(complex)
            z[j] += 1e-30j
            J[:, j] = np.array(dy._reduced_components(*z, E)).imag / 1e-30
        return J

    def rhs(_, z):
        y, X = z[:4], z[4:].reshape(4, 4)
        return np.concatenate([dy._reduced_components(*y, E), (jac(y) @ X).ravel()])

    z0 = np.concatenate([em.reduced_start(shooting.theta), np.eye(4).ravel()])
    sol = solve_ivp(rhs, (0, 8 * shooting.sigma0), z0, method="DOP853", rtol=1e-13, atol=1e-13)
    return np.linalg.eigvals(sol.y[4:, -1].reshape(4, 4))


def test_reduced_oracle_agrees_with_full_monodromy(shooting, m1_report):
    ref = reduced_oracle_multipliers(shooting)
    pair = ref[np.argsort(np.abs(ref - 1.0))[2:]]
    full = st.nontrivial(m1_report.eigenvalues)
    for lam in pair:
        assert np.min(np.abs(full - lam)) < 1e-6
    # Frozen value from the oracle.
    assert np.max(np.abs(np.sort_complex(pair) - np.array([-0.98888669 - 0.14867117j, -0.98888669 + 0.14867117j]))) < 5e-8


def test_scaling_invariance(baseline_start):
    start, e_hat = baseline_start
    rep = st.verify_scaling_invariance(start, 1.0, e_hat, nsteps=20000)
    assert rep.max_eigen_mismatch < 1e-6
    assert rep.max_conjugation_residual < 1e-5


def test_y_eps_is_conformal_symplectic():
    Y = st.y_eps(2.0)
    assert np.allclose(Y.T @ st.J8 @ Y, st.J8)


def test_divergence_probe_threshold_zero(baseline_start):
    start, e_hat = baseline_start
    assert st.divergence_probe(start, 1.0, e_hat, max_periods=3, threshold=0.0) == 0


def test_divergence_probe_stays_bounded_briefly(baseline_start):
    start, e_hat = baseline_start
    assert st.divergence_probe(start, 1.0, e_hat, max_periods=3, step=2 * np.pi / 5000) is None


def test_stability_csv(tmp_path, m1_report):
    path = tmp_path / "stab.csv"
    st.write_stability_csv([m1_report], path, header=["hello"])
    lines = path.read_text().splitlines()
    assert lines[0] == "# hello"
    assert lines[1].split(",") == st.STABILITY_COLUMNS
    assert lines[2].split(",")[-2] == "LinearlyStable"
    assert len(lines[2].split(",")) == len(st.STABILITY_COLUMNS)


def test_analyze_many_parallel_matches_serial(sweep_by_mass):
    orbits = [sweep_by_mass[m].orbit for m in (1.0, 0.53)]
    serial = st.analyze_many(orbits, jobs=1)
    par = st.analyze_many(orbits, jobs=2)
    for a, b in zip(serial, par):
        assert np.array_equal(a.eigenvalues, b.eigenvalues)
    assert [str(r.verdict) for r in serial] == ["LinearlyStable", "Unstable"]
