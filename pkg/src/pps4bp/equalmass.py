"""Equal-mass seed orbit: shooting on the reduced system and the baseline trig orbit."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .coords import SQRT2
from .dynamics import make_field, reduced_vf
from .errors import BracketFailure, NoEvent
from .integrate import IntegrationConfig, Trajectory, integrate, locate_event
from .orbitrep import TrigOrbit, design_matrix
from .symmetry import extend_orbit, scale_orbit

MU = 1.0 / (2.0 ** 1.25 * np.sqrt(SQRT2 - 1.0))
TAN_PI_8 = SQRT2 - 1.0
P1_END = -4.0 * 2.0 ** 0.25
BRACKET = (2.0, 3.0)
SIGMA_MAX = 10.0
SHOOT_CFG = IntegrationConfig(mode="rkf45", step=1e-3, atol=1e-13, rtol=1e-13)
SEGMENT_SAMPLES = 128  # per eighth of the period; 8 * 128 = 1024 grid points
BASELINE_TERMS = 20


@dataclass(frozen=True)
class ShootingResult:
    theta: float
    sigma0: float
    energy_E: float
    endpoint: np.ndarray
    full_s0: float

    @property
    def e_hat(self) -> float:
        return e_hat_from_E(self.energy_E)

    @property
    def period(self) -> float:
        """Period ``8 s0`` of the full regularized orbit."""
        return 8.0 * self.full_s0


def energy_from_theta(theta: float) -> float:
    return (theta**2 - 16.0 * SQRT2 - 8.0) / 8.0


def e_hat_from_E(E: float) -> float:
    return 2.0 * E / (4.0 - 2.0 * SQRT2)


def reduced_start(theta: float) -> np.ndarray:
    return np.array([1.0, 1.0, -theta, theta])


def _shoot(theta: float, cfg: IntegrationConfig = SHOOT_CFG):
    if not theta > 0:
        raise ValueError("theta must be positive")
    E = energy_from_theta(theta)
    sigma, qp = locate_event(
        lambda y: reduced_vf(y, E),
        reduced_start(theta),
        cfg,
        event=lambda y: y[0],
        direction=-1,
        s_max=SIGMA_MAX,
        tol=1e-15,
    )
    return sigma, qp


def shoot_residual(theta: float) -> float:
    """``P2`` at the first downward crossing of ``Q1 = 0``."""
    return float(_shoot(theta)[1][3])


def solve_equal_mass(bracket=BRACKET, tol: float = 1e-10, max_iter: int = 200) -> ShootingResult:
    """Find the shooting parameter for which the first collision is symmetric.

    Bisection narrows the bracket, after which secant steps (kept inside the
    bracket, falling back to bisection) polish the root.
    """
    lo, hi = map(float, bracket)
    try:
        f_lo = shoot_residual(lo)
        f_hi = shoot_residual(hi)
    except NoEvent as exc:
        raise BracketFailure(f"shooting failed at a bracket end: {exc}") from exc
    if np.sign(f_lo) == np.sign(f_hi):
        raise BracketFailure(f"no sign change on [{lo}, {hi}]: {f_lo:.3e}, {f_hi:.3e}")
    theta, f = (lo, f_lo) if abs(f_lo) < abs(f_hi) else (hi, f_hi)
    for it in range(max_iter):
        if abs(f) < tol:
            break
        if hi - lo > 1e-3 or it % 4 == 3:
            cand = 0.5 * (lo + hi)
        else:
            cand = hi - f_hi * (hi - lo) / (f_hi - f_lo)
            if not lo < cand < hi:
                cand = 0.5 * (lo + hi)
        f_c = shoot_residual(cand)
        if np.sign(f_c) == np.sign(f_lo):
            lo, f_lo = cand, f_c
        else:
            hi, f_hi = cand, f_c
        theta, f = cand, f_c
        if hi - lo < 1e-15:
            break
    if abs(f) >= tol:
        raise BracketFailure(f"shooting did not converge: |P2| = {abs(f):.3e}")
    sigma0, qp = _shoot(theta)
    return ShootingResult(theta, float(sigma0), energy_from_theta(theta), qp, MU * float(sigma0))


def reduced_to_full(qp) -> np.ndarray:
    """Embed a reduced state ``(Q1, Q2, P1, P2)`` into the regularized chart."""
    q1, q2, p1, p2 = np.asarray(qp, dtype=float)
    cu = 2.0 ** -0.25
    cv = 1.0 / (2.0 * np.sqrt(TAN_PI_8))
    u1, u3, v1, v3 = cu * q1, cu * q2, cv * p1, cv * p2
    return np.array(
        [u1, -TAN_PI_8 * u1, u3, TAN_PI_8 * u3, v1, -TAN_PI_8 * v1, v3, TAN_PI_8 * v3]
    )


def full_segment(res: ShootingResult, samples: int = SEGMENT_SAMPLES) -> Trajectory:
    """Full-chart segment on ``[0, s0]`` sampled at ``samples + 1`` uniform points."""
    E = res.energy_E
    field = lambda y: reduced_vf(y, E)  # noqa: E731
    sig = np.linspace(0.0, res.sigma0, samples + 1)
    y = reduced_start(res.theta)
    states = [reduced_to_full(y)]
    for a, b in zip(sig[:-1], sig[1:]):
        y = integrate(field, y, (a, b), SHOOT_CFG).end
        states.append(reduced_to_full(y))
    return Trajectory(MU * sig, np.array(states))


def baseline_trajectory(res: ShootingResult | None = None, samples: int = SEGMENT_SAMPLES):
    """Full period of the equal-mass orbit scaled to period ``2 pi``, with ``s = 0`` at
    the first collision.  Returns ``(trajectory, e_hat, eps)``; the last sample
    repeats the first."""
    res = solve_equal_mass() if res is None else res
    full = extend_orbit(full_segment(res, samples))
    eps = res.period / (2.0 * np.pi)
    scaled = scale_orbit(full, eps)
    states = scaled.states[:-1]
    shifted = np.roll(states, -samples, axis=0)
    shifted = np.vstack([shifted, shifted[:1]])
    s = np.linspace(0.0, 2.0 * np.pi, 8 * samples + 1)
    return Trajectory(s, shifted), res.e_hat / eps**2, eps


def project(states: np.ndarray, s: np.ndarray, n: int, m: float, e_hat: float) -> TrigOrbit:
    """Discrete least-squares fit of samples ``states`` (rows) onto the ``n``-term basis."""
    A = design_matrix(n, s).reshape(-1, 4 * n)
    coef, *_ = np.linalg.lstsq(A, np.asarray(states, dtype=float).T.ravel(), rcond=None)
    dummy = TrigOrbit(m, e_hat, np.zeros(n), np.zeros(n), np.zeros(n), np.zeros(n))
    return dummy.with_coeffs(coef)


def baseline_orbit(res: ShootingResult | None = None, n: int = BASELINE_TERMS) -> TrigOrbit:
    """The equal-mass orbit of period ``2 pi`` as an ``n``-term trig orbit at ``m = 1``."""
    traj, e_hat, _ = baseline_trajectory(res)
    return project(traj.states[:-1], traj.s[:-1], n, 1.0, e_hat)


def physical_normalization_eps() -> float:
    """Scale factor placing the lead body at ``x1(0) = 1`` in the orbit's initial state."""
    return 1.0 / np.sqrt(2.0 - SQRT2)


def make_full_field(E: float):
    """Regularized field at ``m = 1`` matching reduced energy ``E`` (for consistency checks)."""
    return make_field(1.0, e_hat_from_E(E))
