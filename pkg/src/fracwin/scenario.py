"""Scenario configuration, the built-in examples, and the scenario runner."""

from __future__ import annotations

import dataclasses
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from fracwin.analysis import (
    ComparisonReport,
    LyapunovCandidate,
    StabilityReport,
    StructuralSpec,
    check_theorem4,
    check_theorem5,
    compare_theorem3,
    shift_equilibrium,
)
from fracwin.core import ALIGN_RTOL, Order, Trajectory, Window, memory_threshold
from fracwin.errors import ConfigError
from fracwin.solver import (
    ShortMemorySystem,
    SolveConfig,
    VectorField,
    residual_check,
    solve_short_memory,
)
from fracwin.sysdsl import Expr, ParseError, evaluate, parse, pretty

#: the figures' horizon and step are not published; these are conventions
DEFAULT_HORIZON = 50.0
DEFAULT_STEP = 0.01
#: residuals are summarised away from the weakly singular initial layer
RESIDUAL_SKIP = 1.0

EXAMPLE1 = """\
# short-memory decay compared with its delayed linear bound
name = example1
alpha = 0.95
omega = 5
t0 = 0
x0 = 3
f1 = -x1
compare_a = 1
"""

EXAMPLE2 = """\
# linear oscillator with a quadratic Lyapunov candidate
name = example2
alpha = 0.95
omega = 5
t0 = 0
x0 = 7, -3
f1 = x2
f2 = -x1 - x2
V = 3*x1^2 + 2*x1*x2 + 2*x2^2
lambda = 0.5
"""

EXAMPLE3 = """\
# nonlinear system certified by the structural criterion
name = example3
alpha = 0.95
omega = 5
t0 = 0
x0 = 3, -5
f1 = -x1 + x2^3
f2 = -x1 - x2
m = 1, 2
phi = 1
box = -5:5, -5:5
seed = 0
"""

BUILTIN = {"example1": EXAMPLE1, "example2": EXAMPLE2, "example3": EXAMPLE3}


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    alpha: float
    omega: float
    t0: float
    x0: tuple[float, ...]
    horizon: float
    step: float
    components: tuple[Expr, ...]
    V: Expr | None = None
    lam: float | None = None
    exponents: tuple[int, ...] | None = None
    phi: float | None = None
    compare_a: float | None = None
    box: tuple[tuple[float, float], ...] | None = None
    times: tuple[float, ...] | None = None
    x_star: tuple[float, ...] | None = None
    seed: int = 0
    corrector_sweeps: int = 1
    blowup_bound: float = 1e8

    def __post_init__(self) -> None:
        validate(self)

    @property
    def dim(self) -> int:
        return len(self.components)

    def replace(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)

    def vector_field(self) -> VectorField:
        comps = self.components

        def fn(x: np.ndarray, t: float) -> np.ndarray:
            return np.array([evaluate(c, x, t) for c in comps])

        return VectorField(self.dim, fn, self.name)

    def system(self) -> ShortMemorySystem:
        return ShortMemorySystem(self.vector_field(), Order(self.alpha), Window(self.omega, self.t0), self.x0)

    def solve_config(self) -> SolveConfig:
        return SolveConfig(self.step, self.t0 + self.horizon, self.corrector_sweeps, self.blowup_bound)

    def sample_box(self) -> tuple[tuple[float, float], ...]:
        if self.box is not None:
            return self.box
        r = max(1.0, max(abs(v) for v in self.x0))
        return tuple((-r, r) for _ in range(self.dim))


def _multiple(length: float, h: float) -> bool:
    n = round(length / h)
    return n >= 1 and abs(n * h - length) <= ALIGN_RTOL * max(abs(length), h)


def validate(cfg: ScenarioConfig) -> None:
    """Raise :class:`ConfigError` with an actionable message on invalid settings."""
    where = f"scenario {cfg.name!r}"
    if not (0.0 < cfg.alpha < 1.0):
        raise ConfigError(f"{where}: alpha must lie in (0, 1), got {cfg.alpha}")
    if not (math.isfinite(cfg.omega) and cfg.omega > 0.0):
        raise ConfigError(f"{where}: omega must be positive, got {cfg.omega}")
    if not (math.isfinite(cfg.step) and cfg.step > 0.0):
        raise ConfigError(f"{where}: step must be positive, got {cfg.step}")
    if not (math.isfinite(cfg.horizon) and cfg.horizon > 0.0):
        raise ConfigError(f"{where}: horizon must be positive, got {cfg.horizon}")
    if not _multiple(cfg.omega, cfg.step):
        raise ConfigError(
            f"{where}: omega={cfg.omega} is not an integer multiple of step={cfg.step}; "
            f"pick step = omega/N, e.g. {cfg.omega / max(1, round(cfg.omega / cfg.step))}"
        )
    if not _multiple(cfg.horizon, cfg.step):
        raise ConfigError(f"{where}: horizon={cfg.horizon} is not an integer multiple of step={cfg.step}")
    if len(cfg.x0) != cfg.dim:
        raise ConfigError(f"{where}: x0 has {len(cfg.x0)} entries but {cfg.dim} components are defined")
    if cfg.x_star is not None and len(cfg.x_star) != cfg.dim:
        raise ConfigError(f"{where}: x_star has {len(cfg.x_star)} entries but {cfg.dim} components are defined")
    if (cfg.V is None) != (cfg.lam is None):
        raise ConfigError(f"{where}: a Lyapunov check needs both V and lambda")
    if cfg.lam is not None and not cfg.lam > 0.0:
        raise ConfigError(f"{where}: lambda must be positive, got {cfg.lam}")
    if (cfg.exponents is None) != (cfg.phi is None):
        raise ConfigError(f"{where}: a structural check needs both m and phi")
    if cfg.exponents is not None:
        if len(cfg.exponents) != cfg.dim or any(m < 1 or m != int(m) for m in cfg.exponents):
            raise ConfigError(f"{where}: m needs {cfg.dim} positive integers, got {cfg.exponents}")
        if not cfg.phi > 0.0:
            raise ConfigError(f"{where}: phi must be positive, got {cfg.phi}")
    if cfg.compare_a is not None:
        if cfg.dim != 1:
            raise ConfigError(f"{where}: the comparison check needs a scalar system, got dim {cfg.dim}")
        if not cfg.compare_a > 0.0:
            raise ConfigError(f"{where}: compare_a must be positive, got {cfg.compare_a}")
        if cfg.x0[0] < 0.0:
            raise ConfigError(f"{where}: the comparison check needs a nonnegative initial value")
    if cfg.box is not None:
        if len(cfg.box) != cfg.dim:
            raise ConfigError(f"{where}: box needs {cfg.dim} intervals")
        if any(not lo <= 0.0 <= hi for lo, hi in cfg.box):
            raise ConfigError(f"{where}: every box interval must contain 0")
    if cfg.corrector_sweeps < 1:
        raise ConfigError(f"{where}: corrector_sweeps must be at least 1")


def load_config(source: str, name: str | None = None) -> ScenarioConfig:
    """Build a :class:`ScenarioConfig` from a system document."""
    try:
        ps = parse(source)
    except ParseError as exc:
        raise ConfigError(f"{name or 'config'}:{exc}") from exc
    meta = ps.metadata
    required = [k for k in ("alpha", "omega", "x0") if k not in meta]
    if required:
        raise ConfigError(f"{name or 'config'}: missing required keys: {', '.join(required)}")
    m = meta.get("m")
    return ScenarioConfig(
        name=meta.get("name", name or "scenario"),
        alpha=meta["alpha"],
        omega=meta["omega"],
        t0=meta.get("t0", 0.0),
        x0=tuple(meta["x0"]),
        horizon=meta.get("horizon", DEFAULT_HORIZON),
        step=meta.get("step", DEFAULT_STEP),
        components=ps.components,
        V=ps.V,
        lam=meta.get("lambda"),
        exponents=_exponents(m, name) if m is not None else None,
        phi=meta.get("phi"),
        compare_a=meta.get("compare_a"),
        box=meta.get("box"),
        times=meta.get("times"),
        x_star=meta.get("x_star"),
        seed=meta.get("seed", 0),
        corrector_sweeps=meta.get("corrector_sweeps", 1),
        blowup_bound=meta.get("blowup_bound", 1e8),
    )


def _exponents(values: tuple[float, ...], name: str | None) -> tuple[int, ...]:
    if any(v != int(v) for v in values):
        raise ConfigError(f"{name or 'config'}: m must list integers, got {values}")
    return tuple(int(v) for v in values)


def resolve(name_or_path: str) -> ScenarioConfig:
    """Return a built-in scenario by name, or load a config file."""
    if name_or_path in BUILTIN:
        return load_config(BUILTIN[name_or_path], name_or_path)
    path = Path(name_or_path)
    if not path.is_file():
        raise ConfigError(
            f"{name_or_path!r} is neither a built-in scenario ({', '.join(BUILTIN)}) nor a readable file"
        )
    return load_config(path.read_text(encoding="utf-8", errors="replace"), path.stem)


@dataclass
class ScenarioResult:
    config: ScenarioConfig
    trajectory: Trajectory
    threshold: float
    comparison: ComparisonReport | None = None
    lyapunov: StabilityReport | None = None
    structural: StabilityReport | None = None
    max_residual: float | None = None
    notes: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        if self.trajectory.aborted:
            return False
        ok = True
        if self.comparison is not None:
            ok &= self.comparison.holds
        for r in (self.lyapunov, self.structural):
            if r is not None:
                ok &= r.certified
        return ok

    @property
    def exit_status(self) -> int:
        return 0 if self.passed else 1


def run(
    cfg: ScenarioConfig,
    comparison: bool = True,
    lyapunov: bool = True,
    structural: bool = True,
    residual: bool = True,
) -> ScenarioResult:
    """Solve a scenario and run every check it configures (and the caller enables)."""
    sys = cfg.system()
    scfg = cfg.solve_config()
    traj = solve_short_memory(sys, scfg)
    res = ScenarioResult(cfg, traj, memory_threshold(cfg.alpha, sys.window))
    if traj.aborted:
        res.notes.append(f"solver aborted at node {traj.blowup_index}: {traj.reason} (unstable evidence)")
    # the stability criteria are stated about the origin; move x_star there first
    field_c, traj_c = sys.field, traj
    if cfg.x_star is not None and ((lyapunov and cfg.V is not None) or (structural and cfg.exponents is not None)):
        field_c = shift_equilibrium(sys.field, cfg.x_star, times=cfg.times or (cfg.t0,))
        traj_c = Trajectory(traj.grid, traj.values - np.asarray(cfg.x_star), traj.blowup_index, traj.reason)
        res.notes.append(f"checks run in shifted coordinates x - x_star, x_star = {cfg.x_star}")
    if comparison and cfg.compare_a is not None:
        res.comparison = compare_theorem3(traj, cfg.alpha, sys.window, cfg.compare_a, scfg)
    if lyapunov and cfg.V is not None:
        cand = LyapunovCandidate.from_expr(cfg.V, cfg.lam)
        res.lyapunov = check_theorem4(sys, cand, traj_c)
    if structural and cfg.exponents is not None:
        spec = StructuralSpec(cfg.exponents, cfg.phi)
        res.structural = check_theorem5(
            field_c,
            spec,
            cfg.alpha,
            sys.window,
            cfg.sample_box(),
            times=cfg.times or (cfg.t0,),
            seed=cfg.seed,
        )
    if residual and not traj.aborted:
        r = residual_check(sys, traj)
        keep = traj.times() >= cfg.t0 + RESIDUAL_SKIP
        if np.any(keep):
            res.max_residual = float(np.max(np.abs(r[keep])))
    return res


def describe_inputs(cfg: ScenarioConfig) -> dict[str, str]:
    out = {
        "name": cfg.name,
        "alpha": f"{cfg.alpha:.12g}",
        "omega": f"{cfg.omega:.12g}",
        "t0": f"{cfg.t0:.12g}",
        "x0": ", ".join(f"{v:.12g}" for v in cfg.x0),
        "horizon": f"{cfg.horizon:.12g}",
        "step": f"{cfg.step:.12g}",
    }
    for i, c in enumerate(cfg.components, start=1):
        out[f"f{i}"] = pretty(c)
    if cfg.V is not None:
        out["V"] = pretty(cfg.V)
        out["lambda"] = f"{cfg.lam:.12g}"
    if cfg.exponents is not None:
        out["m"] = ", ".join(str(m) for m in cfg.exponents)
        out["phi"] = f"{cfg.phi:.12g}"
        out["box"] = ", ".join(f"{lo:g}:{hi:g}" for lo, hi in cfg.sample_box())
        out["seed"] = str(cfg.seed)
    if cfg.x_star is not None:
        out["x_star"] = ", ".join(f"{v:.12g}" for v in cfg.x_star)
    if cfg.compare_a is not None:
        out["compare_a"] = f"{cfg.compare_a:.12g}"
    return out


SWEEP_AXES = {"alpha": "alpha", "omega": "omega", "lambda": "lam"}
SWEEP_COLUMNS = ("value", "alpha", "omega", "lambda", "threshold", "lyapunov", "structural", "comparison", "final_norm", "error")


def _sweep_cell(cfg: ScenarioConfig, axis: str, value: float) -> dict:
    row: dict = {c: "" for c in SWEEP_COLUMNS}
    row["value"] = value
    try:
        cell = cfg.replace(**{SWEEP_AXES[axis]: value})
        row.update(alpha=cell.alpha, omega=cell.omega)
        if cell.lam is not None:
            row["lambda"] = cell.lam
        res = run(cell, residual=False)
        row["threshold"] = res.threshold
        if res.lyapunov is not None:
            row["lyapunov"] = res.lyapunov.describe()
        if res.structural is not None:
            row["structural"] = res.structural.describe()
        if res.comparison is not None:
            row["comparison"] = res.comparison.describe()
        row["final_norm"] = float(np.linalg.norm(res.trajectory.values[-1]))
        if res.trajectory.aborted:
            row["error"] = f"aborted at node {res.trajectory.blowup_index}"
    except Exception as exc:  # per-cell failures are recorded, the sweep continues
        row["error"] = f"{type(exc).__name__}: {exc}"
    return row


def run_sweep(cfg: ScenarioConfig, axis: str, values: list[float], workers: int = 4) -> list[dict]:
    """Re-run a scenario for each value along ``axis``; rows follow input order."""
    if axis not in SWEEP_AXES:
        raise ConfigError(f"sweep axis must be one of {', '.join(SWEEP_AXES)}, got {axis!r}")
    with ThreadPoolExecutor(max_workers=max(1, min(workers, len(values)))) as pool:
        return list(pool.map(lambda v: _sweep_cell(cfg, axis, v), values))
