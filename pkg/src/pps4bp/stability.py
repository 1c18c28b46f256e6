"""Monodromy matrices, characteristic multipliers and linear stability verdicts."""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import NoConvergence, SingularityHit
from .integrate import MONODROMY_STEP, TWO_PI, rk4_escape, rk4_variational
from .symmetry import scale_state

N_TRIVIAL = 4
J8 = np.block([[np.zeros((4, 4)), np.eye(4)], [-np.eye(4), np.zeros((4, 4))]])
STABILITY_COLUMNS = (
    ["m", "max_modulus_excl_trivial"]
    + [f"{p}{k}" for k in range(1, 9) for p in ("re", "im")]
    + ["verdict", "symplectic_defect"]
)


class Verdict(str, Enum):
    LINEARLY_STABLE = "LinearlyStable"
    UNSTABLE = "Unstable"
    INDETERMINATE = "Indeterminate"

    def __str__(self) -> str:
        return self.value


@dataclass
class StabilityReport:
    m: float
    monodromy: np.ndarray
    eigenvalues: np.ndarray
    max_modulus: float
    verdict: Verdict
    symplectic_defect: float

    def csv_row(self) -> list:
        row = [repr(float(self.m)), repr(float(self.max_modulus))]
        for lam in self.eigenvalues:
            row += [repr(float(lam.real)), repr(float(lam.imag))]
        return row + [str(self.verdict), repr(float(self.symplectic_defect))]


# -- monodromy -------------------------------------------------------------------


def monodromy(
    start,
    m: float,
    e_hat: float,
    period: float = TWO_PI,
    step: float = MONODROMY_STEP,
    nsteps: int | None = None,
) -> np.ndarray:
    """Fixed-step RK4 variational matrix ``X(period)`` with ``X(0) = I``."""
    if nsteps is None:
        nsteps = max(1, round(period / step))
    h = period / nsteps
    r0 = np.ascontiguousarray(start, dtype=float)
    _, X, status = rk4_variational(r0, float(m), float(e_hat), h, int(nsteps))
    if status != 0:
        raise SingularityHit("monodromy integration hit an unregularized collision")
    return X


def symplectic_defect(X) -> float:
    X = np.asarray(X)
    return float(np.max(np.abs(X.T @ J8 @ X - J8)))


# -- dense eigensolver -----------------------------------------------------------


def _hessenberg(a: np.ndarray) -> np.ndarray:
    """Householder reduction to upper Hessenberg form (similarity transform)."""
    a = np.array(a, dtype=float)
    n = a.shape[0]
    for k in range(n - 2):
        x = a[k + 1 :, k]
        alpha = math.copysign(np.linalg.norm(x), x[0] if x[0] != 0 else 1.0)
        v = x.copy()
        v[0] += alpha
        nv = np.linalg.norm(v)
        if nv == 0.0:
            continue
        v /= nv
        a[k + 1 :, :] -= 2.0 * np.outer(v, v @ a[k + 1 :, :])
        a[:, k + 1 :] -= 2.0 * np.outer(a[:, k + 1 :] @ v, v)
        a[k + 2 :, k] = 0.0
    return a


def _hqr(a: np.ndarray, max_sweeps: int) -> np.ndarray:
    """Eigenvalues of an upper Hessenberg matrix by Francis double-shift QR."""
    n = a.shape[0]
    wr = np.zeros(n)
    wi = np.zeros(n)
    anorm = sum(abs(a[i, j]) for i in range(n) for j in range(max(i - 1, 0), n))
    nn = n - 1
    t = 0.0
    sweeps = 0
    while nn >= 0:
        its = 0
        while True:
            l = nn
            while l >= 1:
                s = abs(a[l - 1, l - 1]) + abs(a[l, l])
                if s == 0.0:
                    s = anorm
                if abs(a[l, l - 1]) + s == s:
                    a[l, l - 1] = 0.0
                    break
                l -= 1
            x = a[nn, nn]
            if l == nn:
                wr[nn] = x + t
                wi[nn] = 0.0
                nn -= 1
                break
            y = a[nn - 1, nn - 1]
            w = a[nn, nn - 1] * a[nn - 1, nn]
            if l == nn - 1:
                p = 0.5 * (y - x)
                q = p * p + w
                z = math.sqrt(abs(q))
                x += t
                if q >= 0.0:
                    z = p + math.copysign(z, p)
                    wr[nn - 1] = wr[nn] = x + z
                    if z != 0.0:
                        wr[nn] = x - w / z
                    wi[nn - 1] = wi[nn] = 0.0
                else:
                    wr[nn - 1] = wr[nn] = x + p
                    wi[nn - 1] = -z
                    wi[nn] = z
                nn -= 2
                break
            sweeps += 1
            if sweeps > max_sweeps:
                raise NoConvergence(f"QR iteration did not converge in {max_sweeps} sweeps")
            if its in (10, 20):
                # Exceptional shift to break cycles.
                t += x
                for i in range(nn + 1):
                    a[i, i] -= x
                s = abs(a[nn, nn - 1]) + abs(a[nn - 1, nn - 2])
                x = y = 0.75 * s
                w = -0.4375 * s * s
            its += 1
            mm = nn - 2
            while mm >= l:
                z = a[mm, mm]
                r = x - z
                s = y - z
                p = (r * s - w) / a[mm + 1, mm] + a[mm, mm + 1]
                q = a[mm + 1, mm + 1] - z - r - s
                r = a[mm + 2, mm + 1]
                s = abs(p) + abs(q) + abs(r)
                p /= s
                q /= s
                r /= s
                if mm == l:
                    break
                u = abs(a[mm, mm - 1]) * (abs(q) + abs(r))
                v = abs(p) * (abs(a[mm - 1, mm - 1]) + abs(z) + abs(a[mm + 1, mm + 1]))
                if u + v == v:
                    break
                mm -= 1
            for i in range(mm + 2, nn + 1):
                a[i, i - 2] = 0.0
                if i != mm + 2:
                    a[i, i - 3] = 0.0
            for k in range(mm, nn):
                if k != mm:
                    p = a[k, k - 1]
                    q = a[k + 1, k - 1]
                    r = a[k + 2, k - 1] if k != nn - 1 else 0.0
                    x = abs(p) + abs(q) + abs(r)
                    if x != 0.0:
                        p /= x
                        q /= x
                        r /= x
                s = math.copysign(math.sqrt(p * p + q * q + r * r), p)
                if s == 0.0:
                    continue
                if k == mm:
                    if l != mm:
                        a[k, k - 1] = -a[k, k - 1]
                else:
                    a[k, k - 1] = -s * x
                p += s
                x = p / s
                y = q / s
                z = r / s
                q /= p
                r /= p
                for j in range(k, nn + 1):
                    p = a[k, j] + q * a[k + 1, j]
                    if k != nn - 1:
                        p += r * a[k + 2, j]
                        a[k + 2, j] -= p * z
                    a[k + 1, j] -= p * y
                    a[k, j] -= p * x
                for i in range(l, min(nn, k + 3) + 1):
                    p = x * a[i, k] + y * a[i, k + 1]
                    if k != nn - 1:
                        p += z * a[i, k + 2]
                        a[i, k + 2] -= p * r
                    a[i, k + 1] -= p * q
                    a[i, k] -= p
    return wr + 1j * wi


def sort_eigenvalues(eigs) -> np.ndarray:
    """Modulus descending; ties by real part, then positive imaginary part first."""
    eigs = np.asarray(eigs, dtype=complex)
    order = np.lexsort((-eigs.imag, -eigs.real, -np.round(np.abs(eigs), 12)))
    return eigs[order]


def eigenvalues8(mat) -> np.ndarray:
    """Eigenvalues of a real square matrix (Hessenberg reduction + shifted QR)."""
    a = np.asarray(mat, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("expected a square matrix")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    n = a.shape[0]
    eigs = _hqr(_hessenberg(a), max_sweeps=30 * n * n)
    return sort_eigenvalues(eigs)


def reciprocal_pair_residual(eigs) -> float:
    """``max_k min_j |lambda_k lambda_j - 1|`` (zero for a symplectic spectrum)."""
    eigs = np.asarray(eigs, dtype=complex)
    return float(np.max(np.min(np.abs(np.outer(eigs, eigs) - 1.0), axis=1)))


def match_multisets(a, b) -> float:
    """Largest distance under the optimal one-to-one matching of two eigenvalue lists."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    cost = np.abs(a[:, None] - b[None, :])
    i, j = linear_sum_assignment(cost)
    return float(np.max(cost[i, j]))


# -- classification ----------------------------------------------------------------


def nontrivial(eigs, n_trivial: int = N_TRIVIAL) -> np.ndarray:
    """Drop the ``n_trivial`` multipliers nearest 1.

    Energy conservation and rotational invariance (angular momentum) each
    contribute a trivial pair at 1, so four multipliers are dropped by default.
    """
    eigs = np.asarray(eigs, dtype=complex)
    idx = np.argsort(np.abs(eigs - 1.0), kind="stable")[:n_trivial]
    return np.delete(eigs, idx)


def classify(eigs, tol_unit: float = 1e-4, n_trivial: int = N_TRIVIAL) -> Verdict:
    """Linear stability verdict from the eight multipliers.

    After removing the trivial multipliers: Unstable if any remaining modulus
    exceeds ``1 + tol_unit``; LinearlyStable if all remaining ones lie within
    ``tol_unit`` of the unit circle as distinct conjugate pairs separated from
    each other and from +-1 by more than ``10 tol_unit``; else Indeterminate.
    """
    rest = nontrivial(eigs, n_trivial)
    mod = np.abs(rest)
    if np.any(mod > 1.0 + tol_unit):
        return Verdict.UNSTABLE
    if np.any(np.abs(mod - 1.0) > tol_unit):
        return Verdict.INDETERMINATE
    sep = 10.0 * tol_unit
    upper = rest[rest.imag > 0]
    lower = rest[rest.imag < 0]
    if len(upper) != len(rest) // 2 or len(lower) != len(upper) or len(upper) == 0:
        return Verdict.INDETERMINATE
    if match_multisets(upper, np.conj(lower)) > tol_unit:
        return Verdict.INDETERMINATE
    if np.min(np.abs(upper - 1.0)) <= sep or np.min(np.abs(upper + 1.0)) <= sep:
        return Verdict.INDETERMINATE
    for i in range(len(upper)):
        for j in range(i + 1, len(upper)):
            if abs(upper[i] - upper[j]) <= sep:
                return Verdict.INDETERMINATE
    return Verdict.LINEARLY_STABLE


def max_modulus_excl_trivial(eigs, n_trivial: int = N_TRIVIAL) -> float:
    return float(np.max(np.abs(nontrivial(eigs, n_trivial))))


def analyze(start, m: float, e_hat: float, period: float = TWO_PI, tol_unit: float = 1e-4) -> StabilityReport:
    X = monodromy(start, m, e_hat, period)
    eigs = eigenvalues8(X)
    return StabilityReport(
        float(m), X, eigs, max_modulus_excl_trivial(eigs), classify(eigs, tol_unit), symplectic_defect(X)
    )


def analyze_orbit(orbit, tol_unit: float = 1e-4) -> StabilityReport:
    """Stability of a trig orbit, integrated from its collision point ``s = 0``."""
    from .orbitrep import eval as orbit_eval

    return analyze(orbit_eval(orbit, 0.0), orbit.m, orbit.e_hat, TWO_PI, tol_unit)


def analyze_many(orbits: Sequence, jobs: int = 1) -> list[StabilityReport]:
    """Independent analyses, optionally in worker processes (order preserved)."""
    if jobs <= 1 or len(orbits) <= 1:
        return [analyze_orbit(o) for o in orbits]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(analyze_orbit, orbits))


# -- scaling invariance ------------------------------------------------------------


@dataclass
class ScalingReport:
    eps: list
    eigenvalues: list
    max_eigen_mismatch: float
    max_conjugation_residual: float


def y_eps(eps: float) -> np.ndarray:
    return np.diag(np.concatenate([np.full(4, eps**-0.5), np.full(4, eps**0.5)]))


def verify_scaling_invariance(
    start, m: float, e_hat: float, eps_list: Iterable[float] = (0.5, 1.0, 2.0),
    period: float = TWO_PI, nsteps: int | None = None,
) -> ScalingReport:
    """Monodromy of the scaled orbits ``(eps u(eps s), v(eps s))``.

    Each scaled orbit is integrated with the same number of steps, so step
    sizes scale with the period.  Compares the spectra with the reference
    ``eps = 1`` and checks ``X_eps = Y_eps^-1 X_1 Y_eps``.
    """
    if nsteps is None:
        nsteps = round(period / MONODROMY_STEP)
    X1 = monodromy(start, m, e_hat, period, nsteps=nsteps)
    ev1 = eigenvalues8(X1)
    eps_list = list(eps_list)
    eig_all, mism, resid = [], 0.0, 0.0
    for eps in eps_list:
        if eps == 1.0:
            Xe = X1
        else:
            Xe = monodromy(scale_state(start, eps), m, e_hat / eps**2, period / eps, nsteps=nsteps)
        eve = eigenvalues8(Xe)
        eig_all.append(eve)
        mism = max(mism, match_multisets(eve, ev1))
        Y = y_eps(eps)
        resid = max(resid, float(np.max(np.abs(Xe - np.linalg.inv(Y) @ X1 @ Y))))
    return ScalingReport(eps_list, eig_all, mism, resid)


# -- long-run probe ----------------------------------------------------------------


def divergence_probe(
    start, m: float, e_hat: float, max_periods: int = 10_000, threshold: float = 100.0,
    period: float = TWO_PI, step: float = MONODROMY_STEP,
) -> int | None:
    """First period count at which ``|state| > threshold``; ``None`` if it never does."""
    nsteps = max(1, round(period / step))
    p, status = rk4_escape(
        np.ascontiguousarray(start, dtype=float), float(m), float(e_hat),
        period / nsteps, nsteps, int(max_periods), float(threshold),
    )
    if status != 0:
        raise SingularityHit("probe integration hit an unregularized collision")
    return None if p < 0 else int(p)


def write_stability_csv(reports: Iterable[StabilityReport], path, header: Iterable[str] = ()) -> None:
    with open(path, "w", newline="") as fh:
        for line in header:
            fh.write(f"# {line}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(STABILITY_COLUMNS)
        for rep in reports:
            w.writerow(rep.csv_row())
