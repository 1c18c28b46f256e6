"""Explicit Runge-Kutta integrators, event location and variational integration.

Two layers live here.  The generic layer (:func:`integrate`,
:func:`locate_event`, :func:`integrate_variational`) takes arbitrary Python
callables and is used for the reduced shooting problem, adaptive runs and
tests.  The numba layer (``rk4_*``) hard-wires the regularized vector field
for the long fixed-step runs (monodromy matrices, divergence probes).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numba
import numpy as np

from .dynamics import jac_kernel, vf_kernel
from .errors import DegenerateInput, NoEvent, SingularityHit, StepLimit

TWO_PI = 2.0 * math.pi
MONODROMY_STEP = TWO_PI / 50000

# Fehlberg 4(5) tableau
_C = np.array([0.0, 1 / 4, 3 / 8, 12 / 13, 1.0, 1 / 2])
_A = [
    [],
    [1 / 4],
    [3 / 32, 9 / 32],
    [1932 / 2197, -7200 / 2197, 7296 / 2197],
    [439 / 216, -8.0, 3680 / 513, -845 / 4104],
    [-8 / 27, 2.0, -3544 / 2565, 1859 / 4104, -11 / 40],
]
_B4 = np.array([25 / 216, 0.0, 1408 / 2565, 2197 / 4104, -1 / 5, 0.0])
_B5 = np.array([16 / 135, 0.0, 6656 / 12825, 28561 / 56430, -9 / 50, 2 / 55])


@dataclass(frozen=True)
class IntegrationConfig:
    """Stepper selection.

    ``mode`` is ``"rk4"`` (fixed step ``step``) or ``"rkf45"`` (adaptive with
    ``atol``/``rtol``; ``step`` is then the initial trial step).
    """

    mode: str = "rkf45"
    step: float = 1e-3
    atol: float = 1e-12
    rtol: float = 1e-12
    max_steps: int = 10_000_000

    def __post_init__(self):
        if self.mode not in ("rk4", "rkf45"):
            raise ValueError(f"unknown integration mode {self.mode!r}")
        if not (self.step > 0 and self.atol > 0 and self.rtol > 0):
            raise ValueError("step and tolerances must be positive")


RK4_MONODROMY = IntegrationConfig(mode="rk4", step=MONODROMY_STEP)


@dataclass
class Trajectory:
    """Accepted steps of an integration.

    ``s`` is monotone in the direction of integration, ``states`` has one row
    per sample and ``t`` (when requested) holds the accumulated physical time.
    """

    s: np.ndarray
    states: np.ndarray
    t: np.ndarray | None = None

    @property
    def end(self) -> np.ndarray:
        return self.states[-1]

    def __len__(self) -> int:
        return len(self.s)


# -- single steps --------------------------------------------------------------


def rk4_step(f: Callable, y: np.ndarray, h: float) -> np.ndarray:
    k1 = f(y)
    k2 = f(y + 0.5 * h * k1)
    k3 = f(y + 0.5 * h * k2)
    k4 = f(y + h * k3)
    return y + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


def rkf45_step(f: Callable, y: np.ndarray, h: float):
    """One Fehlberg step; returns the order-4 update and the 4/5 difference."""
    k = []
    for i in range(6):
        yi = y
        for j, a in enumerate(_A[i]):
            yi = yi + h * a * k[j]
        k.append(f(yi))
    k = np.array(k)
    y4 = y + h * (_B4 @ k)
    err = h * ((_B5 - _B4) @ k)
    return y4, err


def _wrap(field: Callable) -> Callable:
    def f(y):
        try:
            return np.asarray(field(y), dtype=float)
        except DegenerateInput as exc:
            raise SingularityHit(str(exc)) from exc

    return f


def _augment(field: Callable, time_rate: Callable | None) -> Callable:
    if time_rate is None:
        return field

    def f(y):
        d = np.empty_like(y)
        d[:-1] = field(y[:-1])
        d[-1] = time_rate(y[:-1])
        return d

    return f


class _Stepper:
    """Iterates accepted steps of either method for a given field."""

    def __init__(self, f, cfg: IntegrationConfig, err_dim: int | None = None):
        self.f = f
        self.cfg = cfg
        self.err_dim = err_dim

    def run(self, y0, s0, s1):
        """Yield ``(s, y)`` after each accepted step until ``s1`` is reached."""
        cfg = self.cfg
        span = s1 - s0
        if span == 0:
            return
        direction = 1.0 if span > 0 else -1.0
        if cfg.mode == "rk4":
            n = max(1, math.ceil(abs(span) / cfg.step - 1e-9))
            if n > cfg.max_steps:
                raise StepLimit(f"{n} fixed steps exceed max_steps={cfg.max_steps}")
            h = span / n
            y = y0
            for i in range(1, n + 1):
                y = rk4_step(self.f, y, h)
                yield (s0 + i * h if i < n else s1), y, h
            return
        s = s0
        y = y0
        h = direction * min(cfg.step, abs(span))
        nsteps = 0
        while direction * (s1 - s) > 0:
            if direction * (s + h - s1) > 0:
                h = s1 - s
            y_new, err = rkf45_step(self.f, y, h)
            ne = slice(None, self.err_dim)
            scale = cfg.atol + cfg.rtol * np.maximum(np.abs(y[ne]), np.abs(y_new[ne]))
            enorm = float(np.max(np.abs(err[ne]) / scale))
            if enorm <= 1.0:
                s_next = s + h
                if abs(s1 - s_next) <= 1e-14 * max(1.0, abs(s1)):
                    s_next = s1
                s = s_next
                y = y_new
                nsteps += 1
                yield s, y, h
                if nsteps >= cfg.max_steps:
                    raise StepLimit(f"exceeded max_steps={cfg.max_steps}")
            fac = 5.0 if enorm == 0 else min(5.0, max(0.2, 0.9 * enorm ** -0.2))
            h = h * fac
            if abs(h) < 1e-14 * max(1.0, abs(s)):
                raise StepLimit("step size underflow")

    def single(self, y, h):
        if self.cfg.mode == "rk4":
            return rk4_step(self.f, y, h)
        return rkf45_step(self.f, y, h)[0]


# -- generic drivers ----------------------------------------------------------


def integrate(
    field: Callable,
    state0,
    s_span,
    cfg: IntegrationConfig,
    time_rate: Callable | None = None,
) -> Trajectory:
    """Integrate ``y' = field(y)`` over ``s_span = (s0, s1)``.

    Every accepted step is recorded.  With ``time_rate`` the physical time
    ``t' = time_rate(y)`` is integrated alongside (``t(s0) = 0``).
    """
    s0, s1 = map(float, s_span)
    y0 = np.asarray(state0, dtype=float)
    n = y0.size
    f = _wrap(_augment(field, time_rate))
    y = np.append(y0, 0.0) if time_rate is not None else y0.copy()
    ss = [s0]
    ys = [y]
    for s, y, _ in _Stepper(f, cfg, err_dim=n).run(y, s0, s1):
        ss.append(s)
        ys.append(y)
    ys = np.array(ys)
    if time_rate is not None:
        return Trajectory(np.array(ss), ys[:, :n], ys[:, n])
    return Trajectory(np.array(ss), ys)


def locate_event(
    field: Callable,
    state0,
    cfg: IntegrationConfig,
    event: Callable,
    direction: int = 0,
    s_max: float = 10.0,
    s0: float = 0.0,
    tol: float = 1e-12,
):
    """First zero of ``event(y)`` along the flow started at ``state0``.

    ``direction`` = -1 keeps only downward crossings, +1 upward, 0 either.
    The bracketing accepted step is refined by bisection on a re-integrated
    partial step (at most 60 halvings).  Returns ``(s*, y*)``.
    """
    y0 = np.asarray(state0, dtype=float)
    g0 = event(y0)
    if g0 == 0.0:
        return s0, y0.copy()
    f = _wrap(field)
    stepper = _Stepper(f, cfg)
    s_prev, y_prev, g_prev = s0, y0, g0
    for s, y, h in stepper.run(y0, s0, s0 + s_max):
        g = event(y)
        crossed = (g_prev < 0 <= g) if direction > 0 else (g_prev > 0 >= g)
        if direction == 0:
            crossed = g_prev * g <= 0
        if crossed:
            return _refine(stepper, event, s_prev, y_prev, g_prev, s - s_prev, s, y, g, tol)
        s_prev, y_prev, g_prev = s, y, g
    raise NoEvent(f"no event within s in [{s0}, {s0 + s_max}]")


def _refine(stepper, event, s_a, y_a, g_a, h, s_b, y_b, g_b, tol):
    if g_b == 0.0:
        return s_b, y_b
    lo, hi = 0.0, h
    g_lo = g_a
    best = (s_b, y_b, abs(g_b))
    scale = max(1.0, abs(g_a))
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        y_mid = stepper.single(y_a, mid)
        g_mid = event(y_mid)
        if abs(g_mid) < best[2]:
            best = (s_a + mid, y_mid, abs(g_mid))
        if abs(g_mid) < tol * scale or mid in (lo, hi):
            break
        if (g_mid > 0) == (g_lo > 0):
            lo, g_lo = mid, g_mid
        else:
            hi = mid
    return best[0], best[1]


def integrate_variational(
    field: Callable,
    jacobian: Callable,
    state0,
    s_span,
    cfg: IntegrationConfig,
):
    """Co-integrate ``X' = jacobian(y) X`` with ``X(s0) = I`` along the base flow.

    The matrix shares the stepper and accepted steps of the base state; error
    control (adaptive mode) only looks at the base state.
    """
    s0, s1 = map(float, s_span)
    y0 = np.asarray(state0, dtype=float)
    n = y0.size

    def aug(z):
        y = z[:n]
        x = z[n:].reshape(n, n)
        d = np.empty_like(z)
        d[:n] = field(y)
        d[n:] = (np.asarray(jacobian(y)) @ x).ravel()
        return d

    z = np.concatenate([y0, np.eye(n).ravel()])
    ss = [s0]
    ys = [y0.copy()]
    for s, z, _ in _Stepper(_wrap(aug), cfg, err_dim=n).run(z, s0, s1):
        ss.append(s)
        ys.append(z[:n].copy())
    return Trajectory(np.array(ss), np.array(ys)), z[n:].reshape(n, n)


# -- numba fast paths for the regularized flow ----------------------------------


@numba.njit(cache=True)
def _rk4_var_step(r, X, m, e, h, k, kx, rt, J):
    """One RK4 step of the state and its variational matrix (in place)."""
    acc = np.zeros(8)
    accx = np.zeros((8, 8))
    weights = (1.0, 2.0, 2.0, 1.0)
    for stage in range(4):
        if stage == 0:
            for i in range(8):
                rt[i] = r[i]
            xt = X.copy()
        else:
            c = 0.5 * h if stage < 3 else h
            for i in range(8):
                rt[i] = r[i] + c * k[i]
            xt = X + c * kx
        if not vf_kernel(rt, m, e, k):
            return False
        if not jac_kernel(rt, m, e, J):
            return False
        kx[:, :] = J @ xt
        w = weights[stage]
        for i in range(8):
            acc[i] += w * k[i]
        accx += w * kx
    for i in range(8):
        r[i] += h / 6.0 * acc[i]
    X += (h / 6.0) * accx
    return True


@numba.njit(cache=True)
def rk4_variational(r0, m, e, h, nsteps):
    """Fixed-step RK4 for state and variational matrix; status 0 on success."""
    r = r0.copy()
    X = np.eye(8)
    k = np.empty(8)
    kx = np.empty((8, 8))
    rt = np.empty(8)
    J = np.empty((8, 8))
    for _ in range(nsteps):
        if not _rk4_var_step(r, X, m, e, h, k, kx, rt, J):
            return r, X, 1
    return r, X, 0


@numba.njit(cache=True)
def _rate(r):
    return (r[0] * r[0] + r[1] * r[1]) * (r[2] * r[2] + r[3] * r[3])


@numba.njit(cache=True)
def _rk4_state_step(r, m, e, h, k1, k2, k3, k4, rt):
    """One RK4 step in place; returns (ok, dt) with dt the physical-time increment."""
    q1 = _rate(r)
    if not vf_kernel(r, m, e, k1):
        return False, 0.0
    for i in range(8):
        rt[i] = r[i] + 0.5 * h * k1[i]
    q2 = _rate(rt)
    if not vf_kernel(rt, m, e, k2):
        return False, 0.0
    for i in range(8):
        rt[i] = r[i] + 0.5 * h * k2[i]
    q3 = _rate(rt)
    if not vf_kernel(rt, m, e, k3):
        return False, 0.0
    for i in range(8):
        rt[i] = r[i] + h * k3[i]
    q4 = _rate(rt)
    if not vf_kernel(rt, m, e, k4):
        return False, 0.0
    for i in range(8):
        r[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
    return True, h / 6.0 * (q1 + 2.0 * q2 + 2.0 * q3 + q4)


@numba.njit(cache=True)
def rk4_path(r0, m, e, h, nsteps, stride):
    """Fixed-step RK4 keeping every ``stride``-th state and the accumulated time.

    The time change is integrated as an extra RK4 component.  Returns
    ``(states, t, status)``.
    """
    nout = nsteps // stride + 1
    states = np.empty((nout, 8))
    times = np.empty(nout)
    r = r0.copy()
    k1 = np.empty(8)
    k2 = np.empty(8)
    k3 = np.empty(8)
    k4 = np.empty(8)
    rt = np.empty(8)
    states[0] = r
    times[0] = 0.0
    t = 0.0
    j = 1
    for n in range(1, nsteps + 1):
        ok, dt = _rk4_state_step(r, m, e, h, k1, k2, k3, k4, rt)
        if not ok:
            return states[:j], times[:j], 1
        t += dt
        if n % stride == 0:
            states[j] = r
            times[j] = t
            j += 1
    return states[:j], times[:j], 0


@numba.njit(cache=True)
def rk4_escape(r0, m, e, h, steps_per_period, max_periods, threshold):
    """Periods completed before the Euclidean norm first exceeds ``threshold``.

    Returns ``(period, status)`` where ``period = -1`` means no escape.
    """
    r = r0.copy()
    k1 = np.empty(8)
    k2 = np.empty(8)
    k3 = np.empty(8)
    k4 = np.empty(8)
    rt = np.empty(8)
    if np.sqrt(np.sum(r * r)) > threshold:
        return 0, 0
    for p in range(max_periods):
        for _ in range(steps_per_period):
            ok, _ = _rk4_state_step(r, m, e, h, k1, k2, k3, k4, rt)
            if not ok:
                return p, 1
            if np.sqrt(np.sum(r * r)) > threshold:
                return p, 0
    return -1, 0
