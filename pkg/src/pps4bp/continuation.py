"""Continuation of the equal-mass orbit in the mass ratio.

Each mass step minimizes the residual functional L over the trig coefficients,
adjusts the energy until the regularized Hamiltonian vanishes at the quarter
phase ``s = pi/4`` and seeds the next step with the result.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, replace
from typing import Callable, Iterable

import numpy as np
from scipy.optimize import brentq, least_squares, minimize

from . import orbitrep as orp
from .dynamics import jacobian_vf_batch, vector_field
from .errors import (
    BracketFailure,
    DegenerateInput,
    LineSearchFailure,
    PPS4BPError,
    SeedFailure,
)
from .orbitrep import TrigOrbit

log = logging.getLogger(__name__)

QUARTER = 0.25 * np.pi
SWEEP_COLUMNS = ["m", "e_hat", "final_L", "gamma_at_quarter", "u3_0", "u4_0", "v1_0", "v2_0"]


@dataclass(frozen=True)
class ContinuationConfig:
    """Knobs of the sweep.

    ``lsq_prepass`` runs a Levenberg-Marquardt minimization of the squared
    residual before the quasi-Newton descent on L itself; ``bfgs_polish``
    controls that second stage.  Orbits seeded with fewer than ``n_start``
    terms are first grown to ``n_start``; after each mass step one term per
    series is added (and the energy re-tuned) while L exceeds ``L_target``,
    up to ``n_end`` terms.
    """

    n_start: int = 5
    n_end: int = 40
    L_target: float | None = 1e-7
    dm: float = 0.01
    gamma_tol: float = 5e-10
    opt_tol: float = 1e-10
    max_iter: int = 400
    grid: int = orp.DEFAULT_GRID
    fd_step: float = 1e-7
    e_halfwidth: float = 0.05
    e_halfwidth_max: float = 0.2
    abort_L: float = 1e-3
    lsq_prepass: bool = True
    bfgs_polish: bool = False

    def __post_init__(self):
        if self.L_target is not None and self.L_target <= 0:
            raise ValueError("L_target must be positive")
        if not 1 <= self.n_start <= self.n_end:
            raise ValueError("need 1 <= n_start <= n_end")
        if self.dm <= 0:
            raise ValueError("dm must be positive")
        if min(self.gamma_tol, self.opt_tol, self.fd_step, self.e_halfwidth) <= 0:
            raise ValueError("tolerances must be positive")
        if self.e_halfwidth_max < self.e_halfwidth:
            raise ValueError("e_halfwidth_max must be at least e_halfwidth")


@dataclass
class SweepRecord:
    m: float
    orbit: TrigOrbit
    e_hat: float
    final_L: float
    gamma_at_quarter: float
    converged: bool = True
    message: str = ""

    def csv_row(self) -> list:
        g0 = orp.eval(self.orbit, 0.0)
        return [
            repr(float(self.m)),
            repr(float(self.e_hat)),
            repr(float(self.final_L)),
            repr(float(self.gamma_at_quarter)),
            repr(float(g0[2])),
            repr(float(g0[3])),
            repr(float(g0[4])),
            repr(float(g0[5])),
        ]


@dataclass
class MinimizeResult:
    orbit: TrigOrbit
    L: float
    iterations: int
    success: bool
    method: str
    message: str = ""


# -- residual and its derivatives ------------------------------------------------


class _Residual:
    """Residual ``gamma' - J grad Gamma^(gamma)`` as a function of coefficients."""

    def __init__(self, template: TrigOrbit, n_points: int):
        self.template = template
        self.s = orp.grid(n_points)
        n = template.n
        self.D = orp.design_matrix(n, self.s)  # (8, N, 4n)
        dummy = template.with_coeffs(np.zeros(4 * n))
        dd = np.empty_like(self.D)
        for j in range(4 * n):
            e = np.zeros(4 * n)
            e[j] = 1.0
            dd[:, :, j] = orp.eval_deriv(dummy.with_coeffs(e), self.s)
        self.Dp = dd
        self.n_points = n_points

    def states(self, x):
        return self.D @ x

    def vector(self, x):
        g = self.D @ x
        return (self.Dp @ x - vector_field(g, self.template.m, self.template.e_hat)).ravel()

    def jac(self, x):
        g = self.D @ x
        jf = jacobian_vf_batch(g.T, self.template.m, self.template.e_hat)  # (N, 8, 8)
        jd = np.einsum("kij,jkc->ikc", jf, self.D)
        return (self.Dp - jd).reshape(-1, self.D.shape[2])

    def L(self, x) -> float:
        try:
            r = self.vector(x).reshape(8, -1)
        except DegenerateInput:
            return np.inf
        return float(np.mean(np.linalg.norm(r, axis=0)) * 2.0 * np.pi)


def _fd_gradient(fun: Callable, x: np.ndarray, h: float) -> np.ndarray:
    g = np.empty_like(x)
    xp = x.copy()
    for j in range(len(x)):
        xp[j] = x[j] + h
        fp = fun(xp)
        xp[j] = x[j] - h
        fm = fun(xp)
        xp[j] = x[j]
        g[j] = (fp - fm) / (2.0 * h)
    return g


def minimize_L_detailed(orb0: TrigOrbit, cfg: ContinuationConfig | None = None) -> MinimizeResult:
    """Minimize L over the coefficients with energy and mass held fixed."""
    cfg = ContinuationConfig() if cfg is None else cfg
    res = _Residual(orb0, cfg.grid)
    x0 = orb0.coeffs
    L0 = res.L(x0)
    if not np.isfinite(L0):
        raise DegenerateInput("starting orbit touches an unregularized collision on the grid")
    best_x, best_L, iters, method = x0, L0, 0, "none"
    if cfg.lsq_prepass:
        try:
            lsq = least_squares(
                res.vector, x0, jac=res.jac, method="lm",
                xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=cfg.max_iter,
            )
            L1 = res.L(lsq.x)
            iters += lsq.nfev
            if L1 <= best_L:
                best_x, best_L, method = lsq.x, L1, "lm"
        except DegenerateInput:
            pass
    success = True
    message = ""
    if cfg.bfgs_polish:
        out = minimize(
            res.L, best_x, method="BFGS",
            jac=lambda x: _fd_gradient(res.L, x, cfg.fd_step),
            options={"gtol": cfg.opt_tol, "xrtol": cfg.opt_tol, "maxiter": cfg.max_iter},
        )
        iters += out.nit
        if out.fun < best_L:
            best_x, best_L, method = out.x, float(out.fun), method + "+bfgs"
        if not out.success and out.status != 2:
            # Status 2 is precision loss at the noise floor of the FD gradient,
            # the normal way this descent ends; anything else gets a retry.
            nm = minimize(res.L, best_x, method="Nelder-Mead",
                          options={"maxfev": 20 * len(x0), "xatol": cfg.opt_tol, "fatol": 1e-14})
            if nm.fun < best_L:
                best_x, best_L, method = nm.x, float(nm.fun), method + "+nm"
            success = False
            message = str(out.message)
    return MinimizeResult(orb0.with_coeffs(best_x), best_L, iters, success, method, message)


def minimize_L(orb0: TrigOrbit, cfg: ContinuationConfig | None = None) -> TrigOrbit:
    """Best orbit found by the minimizer (see :func:`minimize_L_detailed`)."""
    return minimize_L_detailed(orb0, cfg).orbit


def escalate_terms(orb: TrigOrbit, cfg: ContinuationConfig | None = None, init: float = 1e-6) -> TrigOrbit:
    """Add one nonzero term to each series and re-minimize."""
    cfg = ContinuationConfig() if cfg is None else cfg
    if orb.n >= cfg.n_end:
        raise ValueError(f"orbit already has n_end={cfg.n_end} terms")
    grown = TrigOrbit(
        orb.m, orb.e_hat,
        np.append(orb.a, init), np.append(orb.b, init),
        np.append(orb.c, init), np.append(orb.d, init),
    )
    return minimize_L(grown, cfg)


def escalate_to(orb: TrigOrbit, cfg: ContinuationConfig) -> TrigOrbit:
    while orb.n < cfg.n_end:
        orb = escalate_terms(orb, cfg)
    return orb


# -- energy adjustment -----------------------------------------------------------


class _Converged(Exception):
    def __init__(self, e, orb):
        self.e = e
        self.orb = orb


def tune_energy(orb: TrigOrbit, e_guess: float, cfg: ContinuationConfig | None = None):
    """Adjust the energy so that the minimized orbit has ``Gamma^ = 0`` at ``s = pi/4``.

    The sign change is searched in ``e_guess +- e_halfwidth`` (doubling up to
    ``e_halfwidth_max``) and then located with a bracketing root finder,
    re-minimizing L at every trial energy.  Returns ``(orbit, e_hat)``.
    """
    cfg = ContinuationConfig() if cfg is None else cfg
    e_guess = float(e_guess)
    if orb.e_hat == e_guess and abs(orp.gamma_at(orb, QUARTER)) < cfg.gamma_tol:
        return orb, e_guess
    cache: dict[float, TrigOrbit] = {}

    def solve_at(e):
        if e in cache:
            return cache[e]
        seed_e = min(cache, key=lambda k: abs(k - e)) if cache else None
        seed = orb if seed_e is None else cache[seed_e]
        cache[e] = minimize_L(seed.with_coeffs(seed.coeffs, e_hat=e), cfg)
        return cache[e]

    def g(e):
        o = solve_at(e)
        val = orp.gamma_at(o, QUARTER)
        if abs(val) < cfg.gamma_tol:
            raise _Converged(e, o)
        return val

    try:
        g0 = g(e_guess)
        w = cfg.e_halfwidth
        while True:
            lo, hi = e_guess - w, e_guess + w
            g_lo, g_hi = g(lo), g(hi)
            if np.sign(g_lo) != np.sign(g_hi):
                break
            if w >= cfg.e_halfwidth_max:
                raise BracketFailure(
                    f"no sign change of Gamma^(pi/4) within +-{w} of {e_guess} (m={orb.m})"
                )
            w = min(2 * w, cfg.e_halfwidth_max)
        # Use the guess to tighten the bracket before refining.
        if np.sign(g0) == np.sign(g_lo):
            lo = e_guess
        else:
            hi = e_guess
        brentq(g, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
    except _Converged as done:
        return done.orb, done.e
    best_e = min(cache, key=lambda k: abs(orp.gamma_at(cache[k], QUARTER)))
    raise BracketFailure(
        f"energy refinement stalled at |Gamma^(pi/4)| = "
        f"{abs(orp.gamma_at(cache[best_e], QUARTER)):.3e} (m={orb.m})"
    )


# -- the sweep -------------------------------------------------------------------


def mass_grid(m_from: float, m_to: float, dm: float) -> np.ndarray:
    k = int(np.floor((m_from - m_to) / dm + 1e-9))
    return np.round(m_from - dm * np.arange(k + 1), 12)


def solve_step(seed: TrigOrbit, m: float, e_guess: float, cfg: ContinuationConfig) -> SweepRecord:
    """One continuation step at mass ``m`` from ``seed``."""
    orb = seed.with_coeffs(seed.coeffs, e_hat=e_guess, m=m)
    while orb.n < cfg.n_start:
        orb = escalate_terms(orb, replace(cfg, n_end=cfg.n_start))
    orb, e = tune_energy(orb, e_guess, cfg)
    L = orp.residual_L(orb, cfg.grid)
    while cfg.L_target is not None and L > cfg.L_target and orb.n < cfg.n_end:
        grown, e_new = tune_energy(escalate_terms(orb, cfg), e, cfg)
        L_new = orp.residual_L(grown, cfg.grid)
        if L_new >= L:
            break
        orb, e, L = grown, e_new, L_new
    return SweepRecord(m, orb, e, L, orp.gamma_at(orb, QUARTER))


def sweep(
    m_from: float = 1.0,
    m_to: float = 0.01,
    cfg: ContinuationConfig | None = None,
    seed: TrigOrbit | None = None,
    progress: Callable[[SweepRecord], None] | None = None,
) -> list[SweepRecord]:
    """Continue the orbit from ``m_from`` down to ``m_to`` in steps of ``cfg.dm``.

    A failed step (exception or ``L > abort_L``) is recorded with
    ``converged=False`` and the sweep continues from the last good orbit.
    """
    cfg = ContinuationConfig() if cfg is None else cfg
    if seed is None:
        from .equalmass import baseline_orbit

        seed = baseline_orbit()
    records: list[SweepRecord] = []
    good: list[SweepRecord] = []
    for k, m in enumerate(mass_grid(m_from, m_to, cfg.dm)):
        if good:
            base = good[-1].orbit
            e_guess = good[-1].e_hat
            if len(good) >= 2:
                e_guess = 2 * good[-1].e_hat - good[-2].e_hat
        else:
            base, e_guess = seed, seed.e_hat
        try:
            rec = solve_step(base, float(m), e_guess, cfg)
            if not rec.final_L <= cfg.abort_L:
                rec.converged = False
                rec.message = f"L = {rec.final_L:.3e} exceeds {cfg.abort_L:.1e}"
        except (PPS4BPError, DegenerateInput) as exc:
            if k == 0:
                raise SeedFailure(f"first continuation step failed at m={m}: {exc}") from exc
            rec = SweepRecord(float(m), base, float("nan"), float("nan"), float("nan"), False, str(exc))
        if k == 0 and not rec.converged:
            raise SeedFailure(f"first continuation step failed at m={m}: {rec.message}")
        records.append(rec)
        if rec.converged:
            good.append(rec)
        else:
            log.warning("m=%.4f flagged: %s", m, rec.message)
        if progress is not None:
            progress(rec)
    return records


def write_sweep_csv(records: Iterable[SweepRecord], path, header: Iterable[str] = ()) -> None:
    """Sweep table with ``#``-prefixed header lines followed by CSV rows."""
    with open(path, "w", newline="") as fh:
        for line in header:
            fh.write(f"# {line}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SWEEP_COLUMNS + ["converged"])
        for rec in records:
            w.writerow(rec.csv_row() + [int(rec.converged)])


__all__ = [
    "ContinuationConfig",
    "SweepRecord",
    "MinimizeResult",
    "minimize_L",
    "minimize_L_detailed",
    "escalate_terms",
    "tune_energy",
    "sweep",
    "solve_step",
    "mass_grid",
    "write_sweep_csv",
    "LineSearchFailure",
]
