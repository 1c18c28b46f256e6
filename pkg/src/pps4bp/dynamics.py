"""Vector fields of the regularized flow and of the reduced equal-mass flow.

The component formulas live in plain arithmetic functions so the same code
serves three callers: scalar numba kernels (integration hot loops), numpy
arrays of shape ``(8, N)`` (trigonometric orbit residuals) and ordinary
Python floats.
"""

from __future__ import annotations

import numba
import numpy as np

from .coords import SQRT2, gamma_hat
from .errors import DegenerateInput, TotalCollapse


def _field_components(u1, u2, u3, u4, v1, v2, v3, v4, m, e):
    """``(u1', ..., u4', v1', ..., v4')`` of the regularized Hamiltonian flow."""
    kp = (1.0 + 1.0 / m) / 8.0
    km = (1.0 - 1.0 / m) / 8.0
    c12 = u1 * u1 + u2 * u2
    c34 = u3 * u3 + u4 * u4
    vv12 = v1 * v1 + v2 * v2
    vv34 = v3 * v3 + v4 * v4
    M1 = v1 * u1 - v2 * u2
    M2 = v1 * u2 + v2 * u1
    M3 = v3 * u3 - v4 * u4
    M4 = v3 * u4 + v4 * u3
    M5 = u1 * u1 - u2 * u2 + u3 * u3 - u4 * u4
    M6 = 2.0 * u1 * u2 + 2.0 * u3 * u4
    M7 = u1 * u1 - u2 * u2 - u3 * u3 + u4 * u4
    M8 = 2.0 * u1 * u2 - 2.0 * u3 * u4
    d56 = M5 * M5 + M6 * M6
    d78 = M7 * M7 + M8 * M8
    s56 = np.sqrt(d56)
    s78 = np.sqrt(d78)
    w56 = 2.0 * c12 * c34 / (d56 * s56)
    w78 = 2.0 * m * m * c12 * c34 / (d78 * s78)
    a34 = 2.0 * c34 / s56 + 2.0 * m * m * c34 / s78 + 4.0 * m + 2.0 * e * c34
    a12 = 2.0 * c12 / s56 + 2.0 * m * m * c12 / s78 + 4.0 * m + 2.0 * e * c12

    du1 = kp * v1 * c34 + km * (M3 * u1 + M4 * u2)
    du2 = kp * v2 * c34 + km * (-M3 * u2 + M4 * u1)
    du3 = kp * v3 * c12 + km * (M1 * u3 + M2 * u4)
    du4 = kp * v4 * c12 + km * (-M1 * u4 + M2 * u3)
    dv1 = (
        -kp * u1 * vv34
        - km * (M3 * v1 + M4 * v2)
        + a34 * u1
        - w56 * (M5 * u1 + M6 * u2)
        - w78 * (M7 * u1 + M8 * u2)
    )
    dv2 = (
        -kp * u2 * vv34
        - km * (-M3 * v2 + M4 * v1)
        + a34 * u2
        - w56 * (-M5 * u2 + M6 * u1)
        - w78 * (-M7 * u2 + M8 * u1)
    )
    dv3 = (
        -kp * u3 * vv12
        - km * (M1 * v3 + M2 * v4)
        + a12 * u3
        - w56 * (M5 * u3 + M6 * u4)
        - w78 * (-M7 * u3 - M8 * u4)
    )
    dv4 = (
        -kp * u4 * vv12
        - km * (-M1 * v4 + M2 * v3)
        + a12 * u4
        - w56 * (-M5 * u4 + M6 * u3)
        - w78 * (M7 * u4 - M8 * u3)
    )
    return du1, du2, du3, du4, dv1, dv2, dv3, dv4


_field_components_nb = numba.njit(cache=True)(_field_components)


@numba.njit(cache=True)
def vf_kernel(r, m, e, out):
    """Scalar vector field into ``out``; returns False at an unregularized singularity."""
    u1, u2, u3, u4 = r[0], r[1], r[2], r[3]
    m5 = u1 * u1 - u2 * u2 + u3 * u3 - u4 * u4
    m6 = 2.0 * u1 * u2 + 2.0 * u3 * u4
    m7 = u1 * u1 - u2 * u2 - u3 * u3 + u4 * u4
    m8 = 2.0 * u1 * u2 - 2.0 * u3 * u4
    if m5 * m5 + m6 * m6 == 0.0 or m7 * m7 + m8 * m8 == 0.0:
        return False
    res = _field_components_nb(u1, u2, u3, u4, r[4], r[5], r[6], r[7], m, e)
    for i in range(8):
        out[i] = res[i]
    return True


@numba.njit(cache=True)
def jac_kernel(r, m, e, out):
    """Complex-step Jacobian of the vector field into the 8x8 ``out``.

    The field is real-analytic away from collisions, so the imaginary part of
    ``f(r + i h e_j) / h`` gives column ``j`` to rounding accuracy.
    """
    tmp = np.empty(8)
    if not vf_kernel(r, m, e, tmp):
        return False
    z = np.empty(8, dtype=np.complex128)
    for i in range(8):
        z[i] = r[i]
    h = 1e-30
    for j in range(8):
        z[j] = complex(r[j], h)
        res = _field_components_nb(z[0], z[1], z[2], z[3], z[4], z[5], z[6], z[7], m, e)
        for i in range(8):
            out[i, j] = res[i].imag / h
        z[j] = r[j]
    return True


def _check_regular(r) -> None:
    u1, u2, u3, u4 = np.asarray(r, dtype=float)[:4]
    d56 = (u1**2 - u2**2 + u3**2 - u4**2) ** 2 + (2 * u1 * u2 + 2 * u3 * u4) ** 2
    d78 = (u1**2 - u2**2 - u3**2 + u4**2) ** 2 + (2 * u1 * u2 - 2 * u3 * u4) ** 2
    if np.any(d56 == 0) or np.any(d78 == 0):
        raise DegenerateInput("unregularized binary collision")


def vector_field(r, m: float, e_hat: float) -> np.ndarray:
    """``J grad Gamma^`` at a state (shape ``(8,)``) or a stack of states (``(8, N)``)."""
    r = np.asarray(r, dtype=float)
    _check_regular(r)
    return np.array(_field_components(*r, m, e_hat))


def grad_gamma_hat(r, m: float, e_hat: float) -> np.ndarray:
    """Gradient ``(dG/du1..du4, dG/dv1..dv4)`` of the regularized Hamiltonian."""
    f = vector_field(r, m, e_hat)
    return np.concatenate([-f[4:], f[:4]])


def jacobian_vf(r, m: float, e_hat: float) -> np.ndarray:
    """Jacobian ``J Hess Gamma^`` of the vector field (complex-step differentiation)."""
    r = np.ascontiguousarray(r, dtype=float)
    _check_regular(r)
    out = np.empty((8, 8))
    if not jac_kernel(r, float(m), float(e_hat), out):
        raise DegenerateInput("unregularized binary collision")
    return out


def time_rate(r):
    """``dt/ds`` of the regularizing time change; zero at a simultaneous binary collision."""
    u1, u2, u3, u4 = np.asarray(r, dtype=float)[:4]
    return (u1**2 + u2**2) * (u3**2 + u4**2)


def hamiltonian_residual_along(states, m: float, e_hat: float) -> np.ndarray:
    """``Gamma^`` evaluated along an ``(N, 8)`` array of states."""
    return np.asarray(gamma_hat(np.asarray(states).T, m, e_hat))


# -- reduced equal-mass system -----------------------------------------------


def _reduced_components(q1, q2, p1, p2, E):
    s2 = q1**4 + q2**4
    s = np.sqrt(s2)
    c = 2.0 * SQRT2
    dq1 = p1 * q2 * q2 / 8.0
    dq2 = p2 * q1 * q1 / 8.0
    dp1 = (
        -p2 * p2 * q1 / 8.0
        + c * q1
        + c * q1 * q2 * q2 / s
        - c * q1**5 * q2 * q2 / (s2 * s)
        + 2.0 * E * q1 * q2 * q2
    )
    dp2 = (
        -p1 * p1 * q2 / 8.0
        + c * q2
        + c * q2 * q1 * q1 / s
        - c * q2**5 * q1 * q1 / (s2 * s)
        + 2.0 * E * q2 * q1 * q1
    )
    return dq1, dq2, dp1, dp2


def _check_collapse(q1, q2) -> None:
    if np.any(q1**4 + q2**4 == 0):
        raise TotalCollapse("total collapse Q1 = Q2 = 0")


def reduced_vf(qp, E: float) -> np.ndarray:
    """Vector field of the reduced Hamiltonian in ``(Q1, Q2, P1, P2)``."""
    q1, q2, p1, p2 = np.asarray(qp, dtype=float)
    _check_collapse(q1, q2)
    return np.array(_reduced_components(q1, q2, p1, p2, E))


def gamma_reduced(qp, E: float):
    """Reduced regularized Hamiltonian of the fully symmetric equal-mass problem."""
    q1, q2, p1, p2 = np.asarray(qp, dtype=float)
    _check_collapse(q1, q2)
    return (
        (p1**2 * q2**2 + p2**2 * q1**2) / 16
        - SQRT2 * (q1**2 + q2**2)
        - SQRT2 * q1**2 * q2**2 / np.sqrt(q1**4 + q2**4)
        - E * q1**2 * q2**2
    )


def reduced_time_rate(qp):
    q1, q2 = np.asarray(qp, dtype=float)[:2]
    return q1**2 * q2**2


def make_field(m: float, e_hat: float):
    """Fast scalar field closure for the integrators (raises at singularities)."""
    m = float(m)
    e_hat = float(e_hat)

    def field(r):
        out = np.empty(8)
        if not vf_kernel(np.ascontiguousarray(r, dtype=float), m, e_hat, out):
            raise DegenerateInput("unregularized binary collision")
        return out

    return field


def make_jacobian(m: float, e_hat: float):
    m = float(m)
    e_hat = float(e_hat)

    def jac(r):
        out = np.empty((8, 8))
        if not jac_kernel(np.ascontiguousarray(r, dtype=float), m, e_hat, out):
            raise DegenerateInput("unregularized binary collision")
        return out

    return jac


@numba.njit(cache=True)
def _batch_jacobian(states, m, e, out):
    ok = True
    for k in range(states.shape[0]):
        if not jac_kernel(states[k], m, e, out[k]):
            ok = False
    return ok


def jacobian_vf_batch(states, m: float, e_hat: float) -> np.ndarray:
    """Field Jacobians at each row of an ``(N, 8)`` array; returns ``(N, 8, 8)``."""
    states = np.ascontiguousarray(states, dtype=float)
    _check_regular(states.T)
    out = np.empty((states.shape[0], 8, 8))
    if not _batch_jacobian(states, float(m), float(e_hat), out):
        raise DegenerateInput("unregularized binary collision")
    return out
