r"""Grids, trajectories and quadrature evaluators for the fractional operators.

Three operators of order :math:`0 < \alpha < 1` are discretised on uniform grids:

* the Caputo derivative, by the L1 scheme;
* the Riemann-Liouville integral, by the product-trapezoidal rule, with the
  weakly singular kernel integrated exactly against piecewise-linear data;
* the short-memory derivative, i.e. the Caputo derivative whose lower limit
  follows the window clock :math:`s_\omega(t) = \max(t_0, t - \omega)`.

All evaluators return exactly zero at the initial node.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np

from fracwin.errors import AlignmentError, DomainError, GridError

#: relative slack used when deciding whether a length is a multiple of a step
ALIGN_RTOL = 1e-9


def gamma(z: float) -> float:
    """Gamma function on the positive real axis."""
    z = float(z)
    if not math.isfinite(z) or z <= 0.0:
        raise DomainError(f"gamma is only defined here for finite z > 0, got {z!r}")
    return math.gamma(z)


@dataclass(frozen=True)
class Order:
    """Fractional order, restricted to the open interval (0, 1)."""

    alpha: float

    def __post_init__(self) -> None:
        a = float(self.alpha)
        if not (0.0 < a < 1.0):
            raise DomainError(f"order must satisfy 0 < alpha < 1, got {self.alpha!r}")
        object.__setattr__(self, "alpha", a)


@dataclass(frozen=True)
class Window:
    """Memory window of length ``omega`` anchored at the initial time ``t0``."""

    omega: float
    t0: float = 0.0

    def __post_init__(self) -> None:
        w = float(self.omega)
        if not (math.isfinite(w) and w > 0.0):
            raise DomainError(f"window length must be a finite positive number, got {self.omega!r}")
        object.__setattr__(self, "omega", w)
        object.__setattr__(self, "t0", float(self.t0))

    def start(self, t: float) -> float:
        """Lower integration limit of the windowed operator at time ``t``."""
        if t <= self.t0 + self.omega:
            return self.t0
        return t - self.omega

    def steps(self, h: float) -> int:
        """Number of grid steps spanned by the window; rejects misalignment."""
        return aligned_steps(self.omega, h, what="window length")


OrderLike = Union[Order, float]


def as_order(order: OrderLike) -> Order:
    return order if isinstance(order, Order) else Order(order)


def aligned_steps(length: float, h: float, what: str = "length") -> int:
    """Return ``n`` with ``length == n * h``, or raise :class:`AlignmentError`."""
    if h <= 0.0:
        raise DomainError(f"step must be positive, got {h!r}")
    n = round(length / h)
    if n < 1 or abs(n * h - length) > ALIGN_RTOL * max(abs(length), h):
        raise AlignmentError(
            f"{what} {length!r} is not an integer multiple of the step {h!r}; "
            f"choose a step that divides it exactly (e.g. {length}/N for integer N)"
        )
    return n


@dataclass(frozen=True)
class UniformGrid:
    """Nodes ``t0 + k*h`` for ``k = 0, ..., n_steps``."""

    t0: float
    h: float
    n_steps: int

    def __post_init__(self) -> None:
        if not (math.isfinite(self.h) and self.h > 0.0):
            raise DomainError(f"grid step must be positive, got {self.h!r}")
        if int(self.n_steps) != self.n_steps or self.n_steps < 0:
            raise DomainError(f"n_steps must be a non-negative integer, got {self.n_steps!r}")
        object.__setattr__(self, "n_steps", int(self.n_steps))
        object.__setattr__(self, "t0", float(self.t0))
        object.__setattr__(self, "h", float(self.h))

    @classmethod
    def spanning(cls, t0: float, t_end: float, h: float) -> "UniformGrid":
        if t_end <= t0:
            raise DomainError(f"t_end must exceed t0 (t0={t0}, t_end={t_end})")
        return cls(t0, h, aligned_steps(t_end - t0, h, what="horizon"))

    def node(self, k: int) -> float:
        return self.t0 + k * self.h

    @property
    def t_end(self) -> float:
        return self.node(self.n_steps)

    def nodes(self) -> np.ndarray:
        return self.t0 + np.arange(self.n_steps + 1) * self.h

    def truncated(self, n_steps: int) -> "UniformGrid":
        return UniformGrid(self.t0, self.h, n_steps)


@dataclass(frozen=True)
class Trajectory:
    """Samples of an ``dim``-dimensional signal on a uniform grid.

    ``values`` has shape ``(n_steps + 1, dim)``. A solver that aborted keeps
    only the finite prefix and records the first bad node in ``blowup_index``.
    """

    grid: UniformGrid
    values: np.ndarray
    blowup_index: int | None = None
    reason: str = ""
    #: free-form labels, e.g. the names of the columns
    labels: tuple[str, ...] = field(default=())

    def __post_init__(self) -> None:
        v = np.array(self.values, dtype=float)
        if v.ndim == 1:
            v = v.reshape(-1, 1)
        if v.ndim != 2 or v.shape[0] != self.grid.n_steps + 1 or v.shape[1] < 1:
            raise GridError(
                f"values of shape {np.shape(self.values)} do not match a grid "
                f"with {self.grid.n_steps + 1} nodes"
            )
        if not np.all(np.isfinite(v)):
            bad = int(np.argmax(~np.all(np.isfinite(v), axis=1)))
            raise DomainError(f"trajectory has a non-finite entry at node {bad}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def sample(cls, grid: UniformGrid, fn: Callable[[np.ndarray], np.ndarray]) -> "Trajectory":
        """Sample a vectorised scalar or vector function at the grid nodes."""
        return cls(grid, np.asarray(fn(grid.nodes()), dtype=float).reshape(grid.n_steps + 1, -1))

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    @property
    def aborted(self) -> bool:
        return self.blowup_index is not None

    def times(self) -> np.ndarray:
        return self.grid.nodes()

    def component(self, i: int) -> "Trajectory":
        return Trajectory(self.grid, self.values[:, i])

    def scalar(self) -> np.ndarray:
        if self.dim != 1:
            raise DomainError(f"expected a scalar trajectory, got dim={self.dim}")
        return self.values[:, 0]


def _check_index(traj: Trajectory, j: int) -> int:
    if int(j) != j or not (0 <= j <= traj.grid.n_steps):
        raise GridError(f"node index {j!r} outside 0..{traj.grid.n_steps}")
    return int(j)


def l1_weights(alpha: float, n: int) -> np.ndarray:
    """``w_k = (k+1)^(1-alpha) - k^(1-alpha)`` for ``k = 0..n-1``."""
    k = np.arange(n, dtype=float)
    return (k + 1.0) ** (1.0 - alpha) - k ** (1.0 - alpha)


def _l1(x: np.ndarray, alpha: float, h: float, lo: int, j: int) -> float:
    # L1 sum over the nodes lo..j; both derivative evaluators share this path
    if j <= lo:
        return 0.0
    diffs = np.diff(x[lo : j + 1])[::-1]
    w = l1_weights(alpha, j - lo)
    return float(h ** (-alpha) / gamma(2.0 - alpha) * np.dot(w, diffs))


def caputo_l1(x: Trajectory, alpha: OrderLike, at_index: int) -> float:
    """L1 approximation of the Caputo derivative at node ``at_index``."""
    a = as_order(alpha).alpha
    j = _check_index(x, at_index)
    return _l1(x.scalar(), a, x.grid.h, 0, j)


def short_memory_l1(x: Trajectory, alpha: OrderLike, win: Window, at_index: int) -> float:
    """L1 approximation of the short-memory derivative at node ``at_index``.

    Only differences inside ``[s(t_j), t_j]`` contribute. The window must be
    an integer number of steps long.
    """
    a = as_order(alpha).alpha
    j = _check_index(x, at_index)
    n_win = win.steps(x.grid.h)
    lo = _window_lo(x.grid, win, n_win, j)
    return _l1(x.scalar(), a, x.grid.h, lo, j)


def _window_lo(grid: UniformGrid, win: Window, n_win: int, j: int) -> int:
    # the window clock is measured from win.t0, which need not be the grid origin
    offset = win.t0 - grid.t0
    k0 = round(offset / grid.h)
    if abs(k0 * grid.h - offset) > ALIGN_RTOL * max(abs(offset), grid.h) or k0 < 0:
        raise AlignmentError(f"window origin {win.t0} does not sit on the grid starting at {grid.t0}")
    return max(k0, j - n_win)


def rl_integral(x: Trajectory, alpha: OrderLike, at_index: int) -> float:
    """Product-trapezoidal Riemann-Liouville integral at node ``at_index``.

    The kernel ``(t_j - tau)^(alpha-1)`` is integrated exactly against the
    piecewise-linear interpolant of ``x``, so the rule is exact for linear data.
    """
    a = as_order(alpha).alpha
    j = _check_index(x, at_index)
    if j == 0:
        return 0.0
    v = x.scalar()[: j + 1]
    return float(x.grid.h**a / gamma(a + 2.0) * np.dot(rl_weights(a, j), v))


def rl_weights(alpha: float, j: int) -> np.ndarray:
    """Product-trapezoidal weights for nodes ``0..j`` (without ``h^a/Gamma(a+2)``)."""
    w = np.empty(j + 1)
    w[0] = (j - 1.0) ** (alpha + 1.0) - (j - 1.0 - alpha) * float(j) ** alpha
    if j > 1:
        m = j - np.arange(1, j, dtype=float)
        w[1:j] = (m + 1.0) ** (alpha + 1.0) - 2.0 * m ** (alpha + 1.0) + (m - 1.0) ** (alpha + 1.0)
    w[j] = 1.0
    return w


def memory_threshold(alpha: OrderLike, win: Window) -> float:
    """Decay rate a Lyapunov certificate must exceed: ``1 / (omega^alpha Gamma(1-alpha))``."""
    a = as_order(alpha).alpha
    return 1.0 / (win.omega**a * gamma(1.0 - a))


def caputo_sequence(x: Trajectory, alpha: OrderLike) -> np.ndarray:
    return np.array([caputo_l1(x, alpha, j) for j in range(x.grid.n_steps + 1)])


def short_memory_sequence(x: Trajectory, alpha: OrderLike, win: Window) -> np.ndarray:
    return np.array([short_memory_l1(x, alpha, win, j) for j in range(x.grid.n_steps + 1)])


def rl_sequence(x: Trajectory, alpha: OrderLike) -> np.ndarray:
    return np.array([rl_integral(x, alpha, j) for j in range(x.grid.n_steps + 1)])
