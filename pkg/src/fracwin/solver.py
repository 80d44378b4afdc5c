"""Fractional Adams-Bashforth-Moulton integrators.

``solve_caputo`` integrates a Caputo system, ``solve_caputo_delay`` a scalar
linear system with one constant delay, and ``solve_short_memory`` a
short-memory system by integrating its equivalent Caputo system, whose
right-hand side carries the delayed value ``x(t - omega)`` and a history tail
over ``[t0, t - omega]``.

All three share one stepping core, so degenerate cases (no delay, a window
longer than the horizon) reproduce the plain solver bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np

from fracwin.core import (
    Order,
    OrderLike,
    Trajectory,
    UniformGrid,
    Window,
    aligned_steps,
    as_order,
    gamma,
    short_memory_l1,
)
from fracwin.errors import DomainError, GridError


@dataclass(frozen=True)
class VectorField:
    """Right-hand side ``f(x, t)`` of an ``dim``-dimensional system."""

    dim: int
    fn: Callable[[np.ndarray, float], np.ndarray]
    name: str = ""

    def __post_init__(self) -> None:
        if int(self.dim) != self.dim or self.dim < 1:
            raise DomainError(f"dimension must be a positive integer, got {self.dim!r}")

    def __call__(self, x: np.ndarray, t: float) -> np.ndarray:
        out = np.asarray(self.fn(np.asarray(x, dtype=float), float(t)), dtype=float).reshape(-1)
        if out.shape[0] != self.dim:
            raise DomainError(f"vector field returned {out.shape[0]} components, expected {self.dim}")
        return out


@dataclass(frozen=True)
class SolveConfig:
    h: float
    t_end: float
    corrector_sweeps: int = 1
    blowup_bound: float = 1e8

    def __post_init__(self) -> None:
        if not (math.isfinite(self.h) and self.h > 0.0):
            raise DomainError(f"step must be positive, got {self.h!r}")
        if self.corrector_sweeps < 1:
            raise DomainError("corrector_sweeps must be at least 1")
        if not self.blowup_bound > 0.0:
            raise DomainError("blowup_bound must be positive")

    def grid(self, t0: float) -> UniformGrid:
        return UniformGrid.spanning(t0, self.t_end, self.h)


History = Union[float, Callable[[float], float]]


@dataclass(frozen=True)
class DelayLinearSystem:
    """``D^a x(t) = -a x(t) + b x(t - q)`` with ``x = history`` on ``[t0 - q, t0]``."""

    a: float
    b: float
    q: float
    history: History
    t0: float = 0.0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.q) and self.q > 0.0):
            raise DomainError(f"delay must be positive, got {self.q!r}")

    def history_at(self, t: float) -> float:
        if callable(self.history):
            if t < self.t0 - self.q or t > self.t0:
                raise DomainError(f"history queried at {t}, outside [{self.t0 - self.q}, {self.t0}]")
            return float(self.history(t))
        return float(self.history)


@dataclass(frozen=True)
class ShortMemorySystem:
    field: VectorField
    order: Order
    window: Window
    x0: tuple[float, ...]

    def __post_init__(self) -> None:
        x0 = tuple(float(v) for v in np.atleast_1d(self.x0))
        if len(x0) != self.field.dim:
            raise DomainError(f"initial state has {len(x0)} entries, field has dim {self.field.dim}")
        object.__setattr__(self, "x0", x0)
        object.__setattr__(self, "order", as_order(self.order))

    @property
    def t0(self) -> float:
        return self.window.t0


# rhs(n, x, t, past) -> f at node n for state x; past holds the accepted nodes 0..n-1
_StepRhs = Callable[[int, np.ndarray, float, np.ndarray], np.ndarray]


class _Abort(Exception):
    def __init__(self, node: int, reason: str) -> None:
        super().__init__(reason)
        self.node = node
        self.reason = reason


def _abm(
    rhs: _StepRhs,
    x0: np.ndarray,
    alpha: float,
    grid: UniformGrid,
    sweeps: int,
    bound: float,
) -> Trajectory:
    n_total = grid.n_steps
    dim = x0.shape[0]
    x = np.empty((n_total + 1, dim))
    fx = np.empty((n_total + 1, dim))
    x[0] = x0
    k = np.arange(n_total + 2, dtype=float)
    # predictor: b_{j,n+1} = B[n-j]; corrector interior: a_{j,n+1} = A[n-j]
    pred_w = (k[1:] ** alpha - k[:-1] ** alpha)[: n_total + 1]
    corr_w = k[2:] ** (alpha + 1.0) + k[:-2] ** (alpha + 1.0) - 2.0 * k[1:-1] ** (alpha + 1.0)
    c_pred = grid.h**alpha / gamma(alpha + 1.0)
    c_corr = grid.h**alpha / gamma(alpha + 2.0)

    def check(v: np.ndarray, node: int, what: str) -> None:
        if not np.all(np.isfinite(v)):
            raise _Abort(node, f"non-finite {what} at node {node}")
        if what == "state" and np.max(np.abs(v)) > bound:
            raise _Abort(node, f"state magnitude exceeded blow-up bound {bound:g} at node {node}")

    fx[0] = rhs(0, x[0], grid.node(0), x[:0])
    if not np.all(np.isfinite(fx[0])):
        raise DomainError("right-hand side is non-finite at the initial state")
    try:
        for n in range(n_total):
            t_next = grid.node(n + 1)
            past = x[: n + 1]
            pred = x0 + c_pred * (pred_w[n::-1] @ fx[: n + 1])
            tail = (n ** (alpha + 1.0) - (n - alpha) * (n + 1.0) ** alpha) * fx[0]
            if n >= 1:
                tail = tail + corr_w[n - 1 :: -1] @ fx[1 : n + 1]
            xn = pred
            for _ in range(sweeps):
                f_new = rhs(n + 1, xn, t_next, past)
                check(f_new, n + 1, "right-hand side")
                xn = x0 + c_corr * (f_new + tail)
            check(xn, n + 1, "state")
            x[n + 1] = xn
            fx[n + 1] = rhs(n + 1, xn, t_next, past)
            check(fx[n + 1], n + 1, "right-hand side")
    except _Abort as exc:
        return Trajectory(
            grid.truncated(exc.node - 1),
            x[: exc.node],
            blowup_index=exc.node,
            reason=exc.reason,
        )
    return Trajectory(grid, x)


def solve_caputo(
    field: VectorField, order: OrderLike, x0: Sequence[float], cfg: SolveConfig, t0: float = 0.0
) -> Trajectory:
    """Integrate ``D^alpha x = f(x, t)``, ``x(t0) = x0`` with the PECE scheme."""
    alpha = as_order(order).alpha
    x0 = _initial(x0, field.dim)
    grid = cfg.grid(t0)

    def rhs(n: int, x: np.ndarray, t: float, past: np.ndarray) -> np.ndarray:
        return field(x, t)

    return _abm(rhs, x0, alpha, grid, cfg.corrector_sweeps, cfg.blowup_bound)


def solve_caputo_delay(sys: DelayLinearSystem, order: OrderLike, cfg: SolveConfig) -> Trajectory:
    """Integrate the scalar delayed system; lagged values come from history or the grid."""
    alpha = as_order(order).alpha
    grid = cfg.grid(sys.t0)
    n_lag = aligned_steps(sys.q, cfg.h, what="delay")
    x0 = np.array([sys.history_at(sys.t0)])

    def rhs(n: int, x: np.ndarray, t: float, past: np.ndarray) -> np.ndarray:
        if n <= n_lag:
            lagged = sys.history_at(sys.t0 + (n - n_lag) * cfg.h)
        else:
            lagged = past[n - n_lag, 0]
        return -sys.a * x + sys.b * lagged

    return _abm(rhs, x0, alpha, grid, cfg.corrector_sweeps, cfg.blowup_bound)


def solve_short_memory(sys: ShortMemorySystem, cfg: SolveConfig) -> Trajectory:
    """Integrate a short-memory system through its equivalent Caputo system.

    For ``t > t0 + omega`` the right-hand side gains

        (x(t-w)/w^a - x(t0)/(t-t0)^a - a * int_{t0}^{t-w} (t-s)^(-a-1) x(s) ds) / Gamma(1-a)

    The ``x(t0)`` terms cancel analytically against the constant part of the
    integral, so only ``x - x(t0)`` is integrated, with the kernel weighted
    exactly against its piecewise-linear interpolant. Constant solutions
    therefore stay exactly constant and linear history is integrated exactly.
    The node exactly at ``t0 + omega`` takes the plain branch.
    """
    alpha = sys.order.alpha
    h = cfg.h
    grid = cfg.grid(sys.t0)
    n_win = sys.window.steps(h)
    omega = sys.window.omega
    x0 = np.array(sys.x0)
    field = sys.field
    inv_g = 1.0 / gamma(1.0 - alpha)
    lag_coef = omega ** (-alpha)
    # Product-trapezoid weights for int (t-s)^(-a-1) y(s) ds with y piecewise linear.
    # The panel whose ends lie k-1 and k steps behind t contributes
    # P[k] * y(t - k h) + Q[k] * y(t - (k-1) h).
    k = np.arange(grid.n_steps + 1, dtype=float)
    k[: n_win + 1] = np.nan  # only panels with k > n_win are ever used
    A = (k ** (1.0 - alpha) - (k - 1.0) ** (1.0 - alpha)) / (1.0 - alpha)
    B = ((k - 1.0) ** (-alpha) - k ** (-alpha)) / alpha
    P = h ** (-alpha) * (A - (k - 1.0) * B)
    Q = h ** (-alpha) * (k * B - A)

    def rhs(n: int, x: np.ndarray, t: float, past: np.ndarray) -> np.ndarray:
        f = field(x, t)
        if n <= n_win:
            return f
        m = n - n_win
        elapsed = n * h
        assert elapsed >= omega, "memory term evaluated inside the first window"
        # x0/w^a - x0/(t-t0)^a equals a * int (t-s)^(-a-1) x0 ds, so only x - x0 is integrated
        y = past[: m + 1] - x0
        ks = slice(n, n_win, -1)  # k = n .. n_win+1, i.e. panels from t0 up to t - w
        tail = P[ks] @ y[:m] + Q[ks] @ y[1 : m + 1]
        memory = inv_g * (y[m] * lag_coef - alpha * tail)
        return f + memory

    return _abm(rhs, x0, alpha, grid, cfg.corrector_sweeps, cfg.blowup_bound)


def residual_check(sys: ShortMemorySystem, traj: Trajectory) -> np.ndarray:
    """Per-node residual of the short-memory equation, shape ``(n_steps + 1, dim)``.

    ``r_j = D~(x_i)_j - f_i(x_j, t_j)`` with the derivative taken by the L1
    scheme directly on the trajectory, independently of the stepping route.
    """
    if traj.dim != sys.field.dim:
        raise GridError(f"trajectory has dim {traj.dim}, system has dim {sys.field.dim}")
    if abs(traj.grid.t0 - sys.t0) > 0.0:
        raise GridError(f"trajectory starts at {traj.grid.t0}, system at {sys.t0}")
    sys.window.steps(traj.grid.h)
    times = traj.times()
    out = np.empty_like(traj.values)
    comps = [traj.component(i) for i in range(traj.dim)]
    for j in range(traj.grid.n_steps + 1):
        f = sys.field(traj.values[j], times[j])
        for i, c in enumerate(comps):
            out[j, i] = short_memory_l1(c, sys.order, sys.window, j) - f[i]
    return out


def _initial(x0: Sequence[float], dim: int) -> np.ndarray:
    v = np.atleast_1d(np.asarray(x0, dtype=float))
    if v.shape != (dim,):
        raise DomainError(f"initial state has shape {v.shape}, expected ({dim},)")
    return v.copy()
