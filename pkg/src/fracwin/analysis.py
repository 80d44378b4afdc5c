"""Checkers for the comparison and stability criteria of short-memory systems.

Each checker returns a report instead of raising on a failed condition:

* :func:`compare_theorem3` solves the delayed linear bound and tests
  ``x(t) <= y(t)`` grid-wise;
* :func:`check_theorem4` tests a Lyapunov candidate: the decay rate must beat
  the memory threshold, and ``D~V <= -lambda V`` must hold along a trajectory;
* :func:`check_theorem5` tests the structural condition
  ``zeta^T f <= -phi * sum x_i^(2^m_i)`` on sampled points;
* :func:`lemma5_condition` tests ``a > b > 0`` for a delayed linear system;
* :func:`shift_equilibrium` moves an equilibrium to the origin.

Strict inequalities of the continuous theory are relaxed by the allowances
in :mod:`fracwin.tolerances`; every report says so.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from fracwin.core import (
    OrderLike,
    Trajectory,
    Window,
    as_order,
    memory_threshold,
    short_memory_sequence,
)
from fracwin.errors import DomainError, EquilibriumError, GridError, SampleOverflowError
from fracwin.solver import (
    DelayLinearSystem,
    ShortMemorySystem,
    SolveConfig,
    VectorField,
    solve_caputo_delay,
)
from fracwin.sysdsl import Expr, evaluate, pretty
from fracwin.tolerances import ROUNDING_RTOL, discrete_allowance

TOLERANCE_NOTE = (
    "strict inequalities are checked up to a discrete allowance "
    "C*h^(1-alpha)*max(1, scale); the allowance is a numerical convention"
)

HOLDS = "holds"
VIOLATED = "violated"
INAPPLICABLE = "inapplicable"
CERTIFIED = "certified"
NOT_CERTIFIED = "not-certified"


@dataclass(frozen=True)
class Check:
    """One condition of a criterion; ``passed`` iff ``margin`` clears ``-slack``."""

    name: str
    margin: float
    passed: bool
    detail: str = ""


@dataclass(frozen=True)
class StabilityReport:
    criterion: str
    threshold: float
    margin: float
    checks: tuple[Check, ...]
    worst_case: dict = field(default_factory=dict)
    notes: tuple[str, ...] = ()
    seed: int | None = None

    @property
    def certified(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def verdict(self) -> str:
        return CERTIFIED if self.certified else NOT_CERTIFIED

    @property
    def reasons(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.checks if not c.passed)

    def describe(self) -> str:
        if self.certified:
            return CERTIFIED
        return f"{NOT_CERTIFIED}({', '.join(self.reasons)})"


@dataclass(frozen=True)
class ComparisonReport:
    """Grid-wise comparison of a short-memory run (``lhs``) with its bound (``rhs``)."""

    grid: object
    lhs: np.ndarray
    rhs: np.ndarray
    max_violation: float
    tolerance: float
    verdict: str
    first_violation: int | None = None
    reason: str = ""
    notes: tuple[str, ...] = ()

    @property
    def holds(self) -> bool:
        return self.verdict == HOLDS

    def describe(self) -> str:
        if self.verdict == VIOLATED:
            return f"{VIOLATED}(first index {self.first_violation})"
        if self.verdict == INAPPLICABLE:
            return f"{INAPPLICABLE}({self.reason})"
        return HOLDS


@dataclass(frozen=True)
class LyapunovCandidate:
    """Candidate ``V(x, t)`` with claimed decay rate ``lam``."""

    V: Callable[[np.ndarray, float], float]
    lam: float
    text: str = ""

    def __post_init__(self) -> None:
        if not (math.isfinite(self.lam) and self.lam > 0.0):
            raise DomainError(f"decay rate must be positive, got {self.lam!r}")

    @classmethod
    def from_expr(cls, expr: Expr, lam: float) -> "LyapunovCandidate":
        return cls(lambda x, t: evaluate(expr, x, t), lam, pretty(expr))


@dataclass(frozen=True)
class StructuralSpec:
    exponents: tuple[int, ...]
    phi: float

    def __post_init__(self) -> None:
        ms = tuple(int(m) for m in self.exponents)
        if any(m != m_raw or m < 1 for m, m_raw in zip(ms, self.exponents)):
            raise DomainError(f"exponents must be positive integers, got {self.exponents!r}")
        if not (math.isfinite(self.phi) and self.phi > 0.0):
            raise DomainError(f"phi must be positive, got {self.phi!r}")
        object.__setattr__(self, "exponents", ms)

    @property
    def m_hat(self) -> int:
        return min(self.exponents)


Box = Sequence[tuple[float, float]]


def compare_theorem3(
    short_run: Trajectory,
    order: OrderLike,
    win: Window,
    a: float,
    cfg: SolveConfig,
) -> ComparisonReport:
    """Compare a short-memory run against the delayed linear bound.

    The bound solves ``D^alpha y = -a y + b y(t - omega)`` with
    ``b = memory_threshold(order, win)`` and constant history equal to the
    run's initial value.
    """
    if not a > 0.0:
        raise DomainError(f"decay coefficient must be positive, got {a!r}")
    alpha = as_order(order).alpha
    x = short_run.scalar()
    bound_sys = DelayLinearSystem(a, memory_threshold(alpha, win), win.omega, float(x[0]), t0=win.t0)
    bound = solve_caputo_delay(bound_sys, alpha, cfg)
    g_short, g_bound = short_run.grid, cfg.grid(win.t0)
    if (g_short.t0, g_short.h) != (g_bound.t0, g_bound.h) or (
        not short_run.aborted and g_short.n_steps != g_bound.n_steps
    ):
        raise GridError(f"short-memory run grid {g_short} does not match the comparison grid {g_bound}")
    y = bound.scalar()
    scale = max(float(np.max(np.abs(x))), float(np.max(np.abs(y))))
    tol = discrete_allowance(cfg.h, alpha, scale)
    n = min(len(x), len(y))
    diff = x[:n] - y[:n]
    max_violation = float(np.max(diff))
    common = dict(grid=g_short, lhs=x, rhs=y, max_violation=max_violation, tolerance=tol, notes=(TOLERANCE_NOTE,))
    if short_run.aborted or bound.aborted:
        which = "short-memory run" if short_run.aborted else "bound"
        return ComparisonReport(verdict=INAPPLICABLE, reason=f"{which} aborted", **common)
    if min(float(np.min(x)), float(np.min(y))) < -tol:
        return ComparisonReport(
            verdict=INAPPLICABLE, reason="a trajectory became negative (nonnegativity hypothesis fails)", **common
        )
    if max_violation <= tol:
        return ComparisonReport(verdict=HOLDS, **common)
    first = int(np.argmax(diff > tol))
    return ComparisonReport(verdict=VIOLATED, first_violation=first, **common)


def check_theorem4(
    sys: ShortMemorySystem,
    cand: LyapunovCandidate,
    traj: Trajectory,
    box: Box | None = None,
) -> StabilityReport:
    """Check a Lyapunov certificate for the zero equilibrium of a short-memory system.

    Condition (i) compares ``lambda`` with the memory threshold exactly.
    Condition (ii) applies the short-memory L1 operator to ``V_j = V(x_j, t_j)``
    and requires ``D~V_j <= -lambda V_j`` (up to the allowance) at every node
    after the first; the operator is zero at the initial node by convention, so
    that node carries no derivative information.
    """
    alpha = sys.order.alpha
    thr = memory_threshold(alpha, sys.window)
    thr_margin = cand.lam - thr
    checks = [Check("threshold", thr_margin, thr_margin > 0.0, f"lambda={cand.lam:.12g} vs {thr:.12g}")]
    notes = [
        "the decay inequality is checked along the computed trajectory only (necessary-condition evidence)",
        "the class-K sandwich on V is taken as an assertion, not verified",
        "global stability would also need a radially unbounded lower bound; not verified",
        TOLERANCE_NOTE,
    ]
    worst: dict = {}
    times = traj.times()
    V = np.array([cand.V(traj.values[j], times[j]) for j in range(traj.grid.n_steps + 1)], dtype=float)
    if not np.all(np.isfinite(V)):
        bad = int(np.argmax(~np.isfinite(V)))
        raise DomainError(f"Lyapunov candidate is non-finite along the trajectory at node {bad}")
    if traj.aborted:
        checks.append(Check("decay", -math.inf, False, f"trajectory aborted at node {traj.blowup_index}: {traj.reason}"))
    else:
        D = short_memory_sequence(Trajectory(traj.grid, V), alpha, sys.window)
        margins = -cand.lam * V[1:] - D[1:]
        tol = discrete_allowance(traj.grid.h, alpha, float(np.max(np.abs(V))))
        if margins.size:
            k = int(np.argmin(margins))
            m = float(margins[k])
            worst = {"index": k + 1, "t": float(times[k + 1]), "margin": m, "V": float(V[k + 1])}
        else:
            m = 0.0
        checks.append(Check("decay", m, m >= -tol, f"allowance {tol:.3g}"))
        notes.append(f"V(t_end)/V(t0) = {V[-1] / V[0]:.6g}" if V[0] != 0.0 else "V(t0) = 0")
    if box is not None:
        pts = _lattice(box, 11)
        vmin = min(cand.V(p, float(times[0])) for p in pts)
        notes.append(f"minimum of V over an 11-point lattice of the box: {vmin:.6g} (informational)")
    return StabilityReport("lyapunov", thr, thr_margin, tuple(checks), worst, tuple(notes))


def structural_terms(
    field: VectorField, spec: StructuralSpec, x: np.ndarray, t: float
) -> tuple[float, float, float]:
    """Return ``(zeta^T f, phi * sum x_i^(2^m_i), magnitude)`` at one sample."""
    x = np.asarray(x, dtype=float)
    if len(spec.exponents) != field.dim or x.shape != (field.dim,):
        raise DomainError(f"structural spec has {len(spec.exponents)} exponents, field has dim {field.dim}")
    f = field(x, t)
    lhs = 0.0
    power_sum = 0.0
    mag = 0.0
    for xi, fi, m in zip(x.tolist(), f.tolist(), spec.exponents):
        # zeta_i = x_i^(2^m - 1) by repeated multiplication, then one more factor
        zeta = 1.0
        for _ in range(2**m - 1):
            zeta *= xi
        p = zeta * xi
        term = zeta * fi
        if not (math.isfinite(p) and math.isfinite(term)):
            raise SampleOverflowError(f"x_i^(2^{m}) overflows at sample x={x.tolist()}, t={t}")
        lhs += term
        power_sum += p
        mag += abs(term) + abs(p)
    return lhs, spec.phi * power_sum, mag


def check_theorem5(
    field: VectorField,
    spec: StructuralSpec,
    order: OrderLike,
    win: Window,
    box: Box,
    times: Sequence[float] = (0.0,),
    seed: int = 0,
    n_random: int = 1000,
    lattice: int = 11,
) -> StabilityReport:
    """Check the structural stability criterion on a sampled box.

    Samples are an ``lattice``-point grid per axis plus ``n_random`` uniform
    points drawn with ``seed``; every sample is paired with every time in
    ``times``. The inequality is non-strict, so each sample may miss by a
    rounding allowance relative to the magnitude of its terms.
    """
    alpha = as_order(order).alpha
    if len(box) != field.dim:
        raise DomainError(f"box has {len(box)} intervals, field has dim {field.dim}")
    for lo, hi in box:
        if not lo <= 0.0 <= hi:
            raise DomainError("the sample box must contain the origin")
    thr = memory_threshold(alpha, win)
    rate = spec.phi * 2.0**spec.m_hat
    thr_margin = rate - thr
    checks = [Check("threshold", thr_margin, thr_margin > 0.0, f"phi*2^m_hat={rate:.12g} vs {thr:.12g}")]
    rng = np.random.default_rng(seed)
    lows = np.array([b[0] for b in box])
    highs = np.array([b[1] for b in box])
    pts = np.vstack([_lattice(box, lattice), lows + (highs - lows) * rng.random((n_random, field.dim))])
    worst_margin = math.inf
    worst: dict = {}
    all_ok = True
    for i, x in enumerate(pts):
        for t in times:
            lhs, rhs, mag = structural_terms(field, spec, x, t)
            margin = -rhs - lhs
            if margin < -ROUNDING_RTOL * mag:
                all_ok = False
            if margin < worst_margin:
                worst_margin = margin
                worst = {"sample": i, "x": x.tolist(), "t": float(t), "margin": margin}
    checks.append(Check("structural", worst_margin, all_ok, f"{len(pts)} points x {len(times)} times"))
    notes = (
        f"samples: {lattice}-point lattice per axis plus {n_random} uniform points, seed {seed}",
        "the sampled inequality is evidence on the box, not a proof over the state space",
    )
    return StabilityReport("structural", thr, thr_margin, tuple(checks), worst, notes, seed=seed)


def lemma5_condition(sys: DelayLinearSystem) -> StabilityReport:
    """Report whether ``a > b > 0`` holds for a delayed linear system."""
    checks = (
        Check("b>0", sys.b, sys.b > 0.0),
        Check("a>b", sys.a - sys.b, sys.a > sys.b),
    )
    return StabilityReport("delay-linear", sys.b, min(sys.a - sys.b, sys.b), checks)


def shift_equilibrium(
    field: VectorField,
    x_star: Sequence[float],
    times: Sequence[float] = (0.0,),
    tol: float = 1e-10,
) -> VectorField:
    """Return ``g(z, t) = f(z + x_star, t)`` after verifying ``f(x_star, t) = 0``."""
    xs = np.asarray(x_star, dtype=float)
    if xs.shape != (field.dim,):
        raise DomainError(f"x_star has shape {xs.shape}, field has dim {field.dim}")
    for t in times:
        r = float(np.max(np.abs(field(xs, t))))
        if not r <= tol:
            raise EquilibriumError(f"|f(x_star, {t})| = {r:.3g} exceeds {tol:g}")
    return VectorField(field.dim, lambda z, t: field(np.asarray(z, dtype=float) + xs, t), field.name)


def _lattice(box: Box, per_axis: int) -> np.ndarray:
    axes = [np.linspace(lo, hi, per_axis) for lo, hi in box]
    return np.array(list(itertools.product(*axes)), dtype=float)
