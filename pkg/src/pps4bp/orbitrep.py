"""Symmetry-constrained trigonometric polynomial orbits and the residual functional L.

A :class:`TrigOrbit` of ``n`` terms represents

    u1(s) =  sum a_i sin((2i-1) s)      v1(s) =  sum c_i cos((2i-1) s)
    u2(s) = -sum b_i sin((2i-1) s)      v2(s) = -sum d_i cos((2i-1) s)

with ``u3(s) = u1(s - pi/2)``, ``u4(s) = u2(s + pi/2)``, ``v3(s) = v1(s - pi/2)``
and ``v4(s) = v2(s + pi/2)``.  Every such curve is ``2 pi``-periodic, starts at a
simultaneous binary collision and carries the dihedral symmetry of the
regularized flow.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .coords import check_mass, gamma_hat
from .dynamics import vector_field
from .errors import DegenerateInput
from .symmetry import S_F, S_G

HALF_PI = 0.5 * np.pi
DEFAULT_GRID = 512


@dataclass
class TrigOrbit:
    m: float
    e_hat: float
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    d: np.ndarray
    n: int = field(init=False)

    def __post_init__(self):
        check_mass(self.m)
        self.m = float(self.m)
        self.e_hat = float(self.e_hat)
        arrs = [np.array(x, dtype=float).ravel() for x in (self.a, self.b, self.c, self.d)]
        n = len(arrs[0])
        if n < 1 or any(len(x) != n for x in arrs):
            raise ValueError("coefficient lists must be nonempty and of equal length")
        self.a, self.b, self.c, self.d = arrs
        self.n = n

    # -- coefficient vector view ------------------------------------------

    @property
    def coeffs(self) -> np.ndarray:
        """Flat vector ``(a, b, c, d)`` of length ``4 n``."""
        return np.concatenate([self.a, self.b, self.c, self.d])

    def with_coeffs(self, x, e_hat: float | None = None, m: float | None = None) -> "TrigOrbit":
        x = np.asarray(x, dtype=float)
        n = len(x) // 4
        return TrigOrbit(
            self.m if m is None else m,
            self.e_hat if e_hat is None else e_hat,
            x[:n], x[n : 2 * n], x[2 * n : 3 * n], x[3 * n :],
        )

    def padded(self, n: int) -> "TrigOrbit":
        """Same curve with zero coefficients appended up to ``n`` terms."""
        if n < self.n:
            raise ValueError("cannot pad to fewer terms")
        pad = lambda x: np.concatenate([x, np.zeros(n - self.n)])  # noqa: E731
        return TrigOrbit(self.m, self.e_hat, pad(self.a), pad(self.b), pad(self.c), pad(self.d))

    # -- persistence ----------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "m": self.m,
            "n": self.n,
            "e_hat": self.e_hat,
            "a": self.a.tolist(),
            "b": self.b.tolist(),
            "c": self.c.tolist(),
            "d": self.d.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TrigOrbit":
        orb = cls(data["m"], data["e_hat"], data["a"], data["b"], data["c"], data["d"])
        if "n" in data and int(data["n"]) != orb.n:
            raise ValueError("field n disagrees with coefficient length")
        return orb

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    @classmethod
    def load(cls, path) -> "TrigOrbit":
        return cls.from_dict(json.loads(Path(path).read_text()))


def _freqs(n: int) -> np.ndarray:
    return 2.0 * np.arange(1, n + 1) - 1.0


def _series(coef, s, kind: str, deriv: bool):
    k = _freqs(len(coef))
    arg = np.multiply.outer(np.asarray(s, dtype=float), k)
    if kind == "sin":
        basis = k * np.cos(arg) if deriv else np.sin(arg)
    else:
        basis = -k * np.sin(arg) if deriv else np.cos(arg)
    return basis @ coef


def _components(orb: TrigOrbit, s, deriv: bool) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    sm = s - HALF_PI
    sp = s + HALF_PI
    return np.array(
        [
            _series(orb.a, s, "sin", deriv),
            -_series(orb.b, s, "sin", deriv),
            _series(orb.a, sm, "sin", deriv),
            -_series(orb.b, sp, "sin", deriv),
            _series(orb.c, s, "cos", deriv),
            -_series(orb.d, s, "cos", deriv),
            _series(orb.c, sm, "cos", deriv),
            -_series(orb.d, sp, "cos", deriv),
        ]
    )


def eval(orb: TrigOrbit, s) -> np.ndarray:  # noqa: A001 - public name of the operation
    """State at phase ``s``: shape ``(8,)`` for scalar ``s``, ``(8, N)`` for an array."""
    return _components(orb, s, deriv=False)


def eval_deriv(orb: TrigOrbit, s) -> np.ndarray:
    """Termwise derivative ``d gamma / ds``."""
    return _components(orb, s, deriv=True)


def design_matrix(n: int, s) -> np.ndarray:
    """Linear map from the coefficient vector to stacked samples.

    Returns an array of shape ``(8, N, 4 n)`` with ``eval(orb, s) = M @ orb.coeffs``.
    """
    s = np.atleast_1d(np.asarray(s, dtype=float))
    out = np.empty((8, len(s), 4 * n))
    dummy = TrigOrbit(1.0, 0.0, np.zeros(n), np.zeros(n), np.zeros(n), np.zeros(n))
    for j in range(4 * n):
        e = np.zeros(4 * n)
        e[j] = 1.0
        out[:, :, j] = eval(dummy.with_coeffs(e), s)
    return out


def grid(n_points: int = DEFAULT_GRID) -> np.ndarray:
    return np.arange(n_points) * (2.0 * np.pi / n_points)


def residual_field(orb: TrigOrbit, n_points: int = DEFAULT_GRID, e_hat: float | None = None):
    """``gamma'(s) - J grad Gamma^(gamma(s))`` on the uniform grid, shape ``(8, N)``."""
    s = grid(n_points)
    e = orb.e_hat if e_hat is None else e_hat
    return eval_deriv(orb, s) - vector_field(eval(orb, s), orb.m, e)


def residual_L(orb: TrigOrbit, n_points: int = DEFAULT_GRID) -> float:
    """Trapezoid approximation of ``int_0^{2 pi} |gamma' - J grad Gamma^(gamma)| ds``.

    On a periodic uniform grid the trapezoid rule is the plain mean times ``2 pi``.
    """
    res = residual_field(orb, n_points)
    return float(np.mean(np.linalg.norm(res, axis=0)) * 2.0 * np.pi)


def gamma_at(orb: TrigOrbit, s: float) -> float:
    """Regularized Hamiltonian at phase ``s`` (zero along an exact orbit)."""
    return float(gamma_hat(eval(orb, s), orb.m, orb.e_hat))


def symmetry_check(orb: TrigOrbit, n_samples: int = 64, tol: float = 1e-10) -> bool:
    """Verify ``S_F gamma(s) = gamma(s + pi/2)`` and ``S_G gamma(s) = gamma(-s)``.

    With ``s = 0`` at a collision the reversing symmetry appears as reflection
    about ``s = 0``; its companion ``S_F S_G gamma(s) = gamma(pi/2 - s)`` is
    checked as well.
    """
    s = np.linspace(0.0, 2.0 * np.pi, n_samples, endpoint=False) + 0.1234
    g = eval(orb, s)
    checks = [
        S_F @ g - eval(orb, s + HALF_PI),
        S_G @ g - eval(orb, -s),
        S_F @ S_G @ g - eval(orb, HALF_PI - s),
    ]
    return bool(max(np.max(np.abs(c)) for c in checks) <= tol)


def sbc_momentum(orb: TrigOrbit) -> float:
    """``v1(0)^2 + v2(0)^2`` (should equal ``32 m^2/(m+1)`` on an exact orbit)."""
    g = eval(orb, 0.0)
    return float(g[4] ** 2 + g[5] ** 2)


def check_grid_regular(orb: TrigOrbit, n_points: int = DEFAULT_GRID) -> None:
    """Raise ``DegenerateInput`` when the grid touches an unregularized collision."""
    vector_field(eval(orb, grid(n_points)), orb.m, orb.e_hat)


__all__ = [
    "TrigOrbit",
    "eval",
    "eval_deriv",
    "design_matrix",
    "residual_field",
    "residual_L",
    "gamma_at",
    "symmetry_check",
    "sbc_momentum",
    "check_grid_regular",
]
