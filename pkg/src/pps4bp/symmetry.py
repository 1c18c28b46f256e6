"""Dihedral symmetries of the regularized Hamiltonian and orbit scaling."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BoundaryMismatch
from .integrate import Trajectory

_F = np.diag([-1.0, 1.0])
_G = np.eye(2)
_Z = np.zeros((2, 2))

S_F = np.block(
    [
        [_Z, _F, _Z, _Z],
        [-_F, _Z, _Z, _Z],
        [_Z, _Z, _Z, _F],
        [_Z, _Z, -_F, _Z],
    ]
)
S_G = np.block(
    [
        [-_G, _Z, _Z, _Z],
        [_Z, _G, _Z, _Z],
        [_Z, _Z, _G, _Z],
        [_Z, _Z, _Z, -_G],
    ]
)

TAN_PI_8 = np.sqrt(2.0) - 1.0
BOUNDARY_TOL = 1e-8


@dataclass(frozen=True)
class SymmetryOp:
    kind: str
    matrix: np.ndarray


SYMMETRIES = {
    "identity": SymmetryOp("identity", np.eye(8)),
    "SF": SymmetryOp("SF", S_F),
    "SF2": SymmetryOp("SF2", S_F @ S_F),
    "SF3": SymmetryOp("SF3", S_F @ S_F @ S_F),
    "SG": SymmetryOp("SG", S_G),
    "SFSG": SymmetryOp("SFSG", S_F @ S_G),
}


def apply_symmetry(op, r) -> np.ndarray:
    """Apply a symmetry (a :class:`SymmetryOp`, its name, or an 8x8 matrix)."""
    if isinstance(op, str):
        op = SYMMETRIES[op]
    mat = op.matrix if isinstance(op, SymmetryOp) else np.asarray(op)
    return mat @ np.asarray(r, dtype=float)


def check_segment_boundaries(states: np.ndarray, tol: float = BOUNDARY_TOL) -> None:
    """Raise ``BoundaryMismatch`` unless the segment has the start/end patterns
    required for the eightfold symmetric extension."""
    u1, u2, u3, u4, v1, v2, v3, v4 = states[0]
    start = np.array([u3 - u1, u4 + u2, v3 + v1, v4 - v2])
    if np.max(np.abs(start)) > tol:
        raise BoundaryMismatch(f"start pattern violated by {np.max(np.abs(start)):.3e}")
    end = states[-1][[0, 1, 6, 7]]
    if np.max(np.abs(end)) > tol:
        raise BoundaryMismatch(f"end pattern (collision) violated by {np.max(np.abs(end)):.3e}")


def extend_orbit(segment: Trajectory, tol: float = BOUNDARY_TOL) -> Trajectory:
    """Extend a uniformly sampled segment on ``[0, s0]`` to the full period ``8 s0``.

    Uses ``gamma(2 s0 - s) = S_G gamma(s)``, ``gamma(s + 2 s0) = S_F gamma(s)`` and
    ``gamma(s + 4 s0) = -gamma(s)``.  Junction samples are shared, so a segment
    with ``K + 1`` samples yields ``8 K + 1`` samples.
    """
    states = np.asarray(segment.states, dtype=float)
    s = np.asarray(segment.s, dtype=float)
    k = len(s) - 1
    if k < 1:
        raise ValueError("segment needs at least two samples")
    if not np.allclose(np.diff(s), s[1] - s[0], rtol=1e-9, atol=1e-12):
        raise ValueError("segment must be sampled on a uniform grid")
    check_segment_boundaries(states, tol)
    s0 = s[-1] - s[0]
    quarter = np.vstack([states, (S_G @ states[::-1].T).T[1:]])  # [0, 2 s0]
    half = np.vstack([quarter, (S_F @ quarter.T).T[1:]])  # [0, 4 s0]
    full = np.vstack([half, -half[1:]])  # [0, 8 s0]
    grid = s[0] + np.linspace(0.0, 8 * s0, 8 * k + 1)
    t = None
    if segment.t is not None:
        seg_t = np.asarray(segment.t, dtype=float) - segment.t[0]
        d = seg_t[-1]
        q = np.concatenate([seg_t, 2 * d - seg_t[::-1][1:]])
        h = np.concatenate([q, 2 * d + q[1:]])
        t = np.concatenate([h, 4 * d + h[1:]])
    return Trajectory(grid, full, t)


def scale_state(r, eps: float) -> np.ndarray:
    """Scale a single state: positions times ``eps``, momenta unchanged."""
    r = np.array(r, dtype=float)
    r[..., :4] *= eps
    return r


def scale_orbit(traj: Trajectory, eps: float) -> Trajectory:
    """The orbit ``(eps u(eps s), v(eps s))``: period ``T / eps``, energy ``E / eps^2``.

    Physical time rescales as ``eps^3 theta(eps s)``.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    states = np.array(traj.states, dtype=float)
    states[:, :4] *= eps
    t = None if traj.t is None else eps**3 * np.asarray(traj.t)
    return Trajectory(np.asarray(traj.s) / eps, states, t)


def scale_energy(e_hat: float, eps: float) -> float:
    return e_hat / eps**2


def check_initial_family(r, tol: float = 1e-9) -> bool:
    """Whether a regularized state is an admissible initial condition.

    Accepts either sign branch (``u3 = u1`` or ``u3 = -u1``).
    """
    u1, u2, u3, u4, v1, v2, v3, v4 = np.asarray(r, dtype=float)
    if not (u1 * u2 < 0):
        return False
    if abs(u2) > TAN_PI_8 * abs(u1) + tol:
        return False
    lhs = v1 * u2 + v2 * u1
    rhs = v2 * u2 - v1 * u1
    if not (lhs > 0 and lhs <= rhs + tol):
        return False
    for sign in (1.0, -1.0):
        if (
            abs(u3 - sign * u1) <= tol
            and abs(u4 + sign * u2) <= tol
            and abs(v3 + sign * v1) <= tol
            and abs(v4 - sign * v2) <= tol
        ):
            return True
    return False
