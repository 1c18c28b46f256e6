"""Coordinate charts of the pairwise symmetric four-body problem.

Three charts are used throughout the package:

* physical ``(x1, x2, x3, x4, w1, w2, w3, w4)`` -- positions of the mass-1 body
  and the mass-m body together with their momenta;
* intermediate ``(g1..g4, h1..h4)`` -- relative/cluster coordinates;
* regularized ``(u1..u4, v1..v4)`` -- the Levi-Civita type chart in which the
  simultaneous binary collisions are regular points.

States are plain length-8 float arrays.  Functions that only do arithmetic on
components also accept arrays of shape ``(8, N)`` so that a whole grid of
states can be evaluated at once.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import DegenerateInput, SbcPoint

SQRT2 = np.sqrt(2.0)


def check_mass(m: float) -> float:
    m = float(m)
    if not (0.0 < m <= 1.0):
        raise ValueError(f"mass ratio must satisfy 0 < m <= 1, got {m}")
    return m


class MTerms(NamedTuple):
    m1: np.ndarray
    m2: np.ndarray
    m3: np.ndarray
    m4: np.ndarray
    m5: np.ndarray
    m6: np.ndarray
    m7: np.ndarray
    m8: np.ndarray


def m_terms(r) -> MTerms:
    """The eight bilinear/quadratic combinations M1..M8 of a regularized state."""
    u1, u2, u3, u4, v1, v2, v3, v4 = np.asarray(r, dtype=float)
    return MTerms(
        v1 * u1 - v2 * u2,
        v1 * u2 + v2 * u1,
        v3 * u3 - v4 * u4,
        v3 * u4 + v4 * u3,
        u1**2 - u2**2 + u3**2 - u4**2,
        2 * u1 * u2 + 2 * u3 * u4,
        u1**2 - u2**2 - u3**2 + u4**2,
        2 * u1 * u2 - 2 * u3 * u4,
    )


def is_nonsingular(r) -> bool:
    """True when the state avoids unregularized binary collisions and total collapse."""
    u = np.asarray(r, dtype=float)[:4]
    mt = m_terms(r)
    return bool(
        np.all(mt.m5**2 + mt.m6**2 > 0)
        and np.all(mt.m7**2 + mt.m8**2 > 0)
        and np.all(np.any(u != 0, axis=0))
    )


# -- physical <-> intermediate <-> regularized --------------------------------


def phys_to_intermediate(p) -> np.ndarray:
    x1, x2, x3, x4, w1, w2, w3, w4 = np.asarray(p, dtype=float)
    return np.array(
        [
            x1 - x3,
            x2 - x4,
            x1 + x3,
            x2 + x4,
            (w1 - w3) / 2,
            (w2 - w4) / 2,
            (w1 + w3) / 2,
            (w2 + w4) / 2,
        ]
    )


def intermediate_to_phys(q) -> np.ndarray:
    g1, g2, g3, g4, h1, h2, h3, h4 = np.asarray(q, dtype=float)
    return np.array(
        [
            (g1 + g3) / 2,
            (g2 + g4) / 2,
            (g3 - g1) / 2,
            (g4 - g2) / 2,
            h1 + h3,
            h2 + h4,
            -h1 + h3,
            -h2 + h4,
        ]
    )


def _sqrt_branch(ga: float, gb: float) -> tuple[float, float]:
    """Solve ga = a^2 - b^2, gb = 2ab with a >= 0 and sign(b) = sign(gb).

    Whichever of a, b has the larger magnitude is taken from the closed form;
    the other follows from gb = 2ab, avoiding cancellation in ga + |g|.
    """
    rho = np.hypot(ga, gb)
    if ga >= 0.0:
        a = np.sqrt((ga + rho) / 2)
        return a, gb / (2 * a)
    b = np.sqrt((rho - ga) / 2)
    if gb < 0.0:
        b = -b
    return gb / (2 * b), b


def phys_to_reg(p) -> np.ndarray:
    """Map a physical state to the regularized chart (branch u1 >= 0, u3 >= 0).

    Raises ``DegenerateInput`` when either cluster separation vanishes.
    """
    g1, g2, g3, g4, h1, h2, h3, h4 = phys_to_intermediate(p)
    if g1 == 0.0 and g2 == 0.0 or g3 == 0.0 and g4 == 0.0:
        raise DegenerateInput("simultaneous binary collision: regularized branch undefined")
    u1, u2 = _sqrt_branch(g1, g2)
    u3, u4 = _sqrt_branch(g3, g4)
    return np.array(
        [
            u1,
            u2,
            u3,
            u4,
            2 * (h1 * u1 + h2 * u2),
            2 * (-h1 * u2 + h2 * u1),
            2 * (h3 * u3 + h4 * u4),
            2 * (-h3 * u4 + h4 * u3),
        ]
    )


def reg_to_positions(r) -> np.ndarray:
    """Physical positions ``(x1, x2, x3, x4)``; defined everywhere, SBC included."""
    u1, u2, u3, u4 = np.asarray(r, dtype=float)[:4]
    g1 = u1**2 - u2**2
    g2 = 2 * u1 * u2
    g3 = u3**2 - u4**2
    g4 = 2 * u3 * u4
    return np.array([(g1 + g3) / 2, (g2 + g4) / 2, (g3 - g1) / 2, (g4 - g2) / 2])


def reg_to_phys(r) -> np.ndarray:
    """Map a regularized state back to ``(x1..x4, w1..w4)``.

    Momenta are undefined at a simultaneous binary collision, where
    ``SbcPoint`` is raised; use :func:`reg_to_positions` there instead.
    """
    r = np.asarray(r, dtype=float)
    u1, u2, u3, u4, v1, v2, v3, v4 = r
    c12 = u1**2 + u2**2
    c34 = u3**2 + u4**2
    if np.any(c12 == 0) or np.any(c34 == 0):
        raise SbcPoint("momenta are undefined at a simultaneous binary collision")
    h1 = (v1 * u1 - v2 * u2) / (2 * c12)
    h2 = (v1 * u2 + v2 * u1) / (2 * c12)
    h3 = (v3 * u3 - v4 * u4) / (2 * c34)
    h4 = (v3 * u4 + v4 * u3) / (2 * c34)
    x = reg_to_positions(r)
    return np.concatenate([x, np.array([h1 + h3, h2 + h4, -h1 + h3, -h2 + h4])])


# -- Hamiltonians and invariants ----------------------------------------------


def kinetic_phys(p, m: float) -> float:
    w1, w2, w3, w4 = np.asarray(p, dtype=float)[4:]
    return (w1**2 + w2**2) / 4 + (w3**2 + w4**2) / (4 * m)


def potential_phys(p, m: float) -> float:
    x1, x2, x3, x4 = np.asarray(p, dtype=float)[:4]
    r1 = np.hypot(x1, x2)
    r13m = np.hypot(x3 - x1, x4 - x2)
    r13p = np.hypot(x1 + x3, x2 + x4)
    r3 = np.hypot(x3, x4)
    if r1 == 0 or r13m == 0 or r13p == 0 or r3 == 0:
        raise DegenerateInput("collision: potential is singular")
    return 1 / (2 * r1) + 2 * m / r13m + 2 * m / r13p + m**2 / (2 * r3)


def hamiltonian_phys(p, m: float) -> float:
    """Energy ``K - U`` of a physical state."""
    m = check_mass(m)
    return float(kinetic_phys(p, m) - potential_phys(p, m))


def angular_momentum_phys(p) -> float:
    x1, x2, x3, x4, w1, w2, w3, w4 = np.asarray(p, dtype=float)
    return float(x1 * w2 - x2 * w1 + x3 * w4 - x4 * w3)


def hamiltonian_reg(r, m: float):
    """Energy ``K^ - U^`` written in the regularized chart (undefined at SBC)."""
    u1, u2, u3, u4, v1, v2, v3, v4 = np.asarray(r, dtype=float)
    mt = m_terms(r)
    c12 = u1**2 + u2**2
    c34 = u3**2 + u4**2
    if np.any(c12 * c34 == 0):
        raise SbcPoint("Hamiltonian is singular at a simultaneous binary collision")
    kin = (1 + 1 / m) / 16 * ((v1**2 + v2**2) * c34 + (v3**2 + v4**2) * c12) / (c12 * c34)
    kin = kin + (1 - 1 / m) / 8 * (mt.m3 * mt.m1 + mt.m4 * mt.m2) / (c12 * c34)
    pot = (
        1 / np.hypot(mt.m5, mt.m6)
        + 2 * m / c12
        + 2 * m / c34
        + m**2 / np.hypot(mt.m7, mt.m8)
    )
    return kin - pot


def gamma_hat(r, m: float, e_hat: float):
    """Regularized extended-phase-space Hamiltonian.

    Regular at simultaneous binary collisions; raises ``DegenerateInput`` at
    the unregularized binary collisions ``M5^2 + M6^2 = 0`` or ``M7^2 + M8^2 = 0``.
    Accepts a single state or an ``(8, N)`` stack.
    """
    u1, u2, u3, u4, v1, v2, v3, v4 = np.asarray(r, dtype=float)
    mt = m_terms(r)
    d56 = mt.m5**2 + mt.m6**2
    d78 = mt.m7**2 + mt.m8**2
    if np.any(d56 == 0) or np.any(d78 == 0):
        raise DegenerateInput("unregularized binary collision")
    c12 = u1**2 + u2**2
    c34 = u3**2 + u4**2
    return (
        (1 + 1 / m) / 16 * ((v1**2 + v2**2) * c34 + (v3**2 + v4**2) * c12)
        + (1 - 1 / m) / 8 * (mt.m3 * mt.m1 + mt.m4 * mt.m2)
        - c12 * c34 / np.sqrt(d56)
        - 2 * m * (c12 + c34)
        - m**2 * c12 * c34 / np.sqrt(d78)
        - e_hat * c12 * c34
    )


def angular_momentum_reg(r):
    u1, u2, u3, u4, v1, v2, v3, v4 = np.asarray(r, dtype=float)
    return 0.5 * (-v1 * u2 + v2 * u1 - v3 * u4 + v4 * u3)


def sbc_momentum_target(m: float) -> float:
    """Value of ``v1^2 + v2^2`` forced at a regularized simultaneous binary collision."""
    return 32 * m**2 / (m + 1)
