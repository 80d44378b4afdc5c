"""Command-line front end.

Exit status: 0 when every requested check is certified or holds, 1 when a
verdict fails (including solver blow-up), 2 on configuration or runtime errors.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from fracwin.core import Order, Trajectory, UniformGrid, Window, aligned_steps
from fracwin.core import caputo_l1, memory_threshold, rl_integral, short_memory_l1
from fracwin.errors import ConfigError, FracwinError
from fracwin.output import (
    comparison_sections,
    render_report,
    stability_sections,
    write_csv,
    write_trajectory_csv,
)
from fracwin.scenario import (
    BUILTIN,
    SWEEP_AXES,
    SWEEP_COLUMNS,
    ScenarioConfig,
    ScenarioResult,
    describe_inputs,
    resolve,
    run,
    run_sweep,
)
from fracwin.sysdsl import EvaluationError, evaluate, parse_expr

OUT_ENV = "FRACWIN_OUT_DIR"
DEFAULT_OUT = "fracwin-out"


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--out", metavar="DIR", help=f"output root (default: ${OUT_ENV} or ./{DEFAULT_OUT})")
    p.add_argument("--step", type=float, metavar="H", help="override the time step")
    p.add_argument("--horizon", type=float, metavar="T", help="override the integration horizon")
    p.add_argument("--seed", type=int, metavar="N", help="override the sampling seed")
    p.add_argument("--quiet", action="store_true", help="suppress the report on stdout")
    return p


def _scenario_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("scenario", nargs="?", help=f"built-in name ({', '.join(BUILTIN)}) or config path")
    p.add_argument("--config", metavar="PATH", help="scenario config file")


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="fracwin", description="Short-memory fractional systems toolkit.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("scenario", parents=[common], help="solve a scenario and run its configured checks")
    _scenario_args(p)

    p = sub.add_parser("compare", parents=[common], help="compare a scalar run with its delayed linear bound")
    _scenario_args(p)

    p = sub.add_parser("lyapunov", parents=[common], help="check a Lyapunov certificate")
    _scenario_args(p)
    p.add_argument("--lambda", dest="lam", type=float, help="override the decay rate")

    p = sub.add_parser("theorem5", parents=[common], help="check the structural criterion on a sampled box")
    _scenario_args(p)
    p.add_argument("--phi", type=float, help="override phi")

    p = sub.add_parser("sweep", parents=[common], help="re-run a scenario across parameter values")
    _scenario_args(p)
    p.add_argument("--axis", required=True, choices=sorted(SWEEP_AXES))
    p.add_argument("--values", required=True, help="comma-separated values")
    p.add_argument("--workers", type=int, default=4)

    p = sub.add_parser("operator", parents=[common], help="apply a fractional operator to a sampled expression")
    p.add_argument("--kind", required=True, choices=["caputo", "rlint", "short"])
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--omega", type=float, help="window length (kind=short)")
    p.add_argument("--expr", required=True, help="scalar expression in t")
    p.add_argument("--t0", type=float, default=0.0)
    p.add_argument("--at", type=float, required=True, help="evaluation time")
    p.add_argument("--sequence", action="store_true", help="also write the per-node values to operator.csv")
    return parser


def _out_root(args: argparse.Namespace) -> Path:
    return Path(args.out or os.environ.get(OUT_ENV) or DEFAULT_OUT)


def _load(args: argparse.Namespace) -> ScenarioConfig:
    target = args.config or args.scenario
    if not target:
        raise ConfigError("name a built-in scenario or pass --config PATH")
    cfg = resolve(target)
    changes = {}
    if args.step is not None:
        changes["step"] = args.step
    if args.horizon is not None:
        changes["horizon"] = args.horizon
    if args.seed is not None:
        changes["seed"] = args.seed
    if getattr(args, "lam", None) is not None:
        changes["lam"] = args.lam
    if getattr(args, "phi", None) is not None:
        changes["phi"] = args.phi
    return cfg.replace(**changes) if changes else cfg


def _emit(args: argparse.Namespace, text: str) -> None:
    if not args.quiet:
        sys.stdout.write(text)


def _write_result(res: ScenarioResult, out_dir: Path, title: str) -> str:
    cfg = res.config
    traj = res.trajectory
    write_trajectory_csv(out_dir / "trajectory.csv", traj)
    parts = [{"thresholds": {"memory_threshold": f"{res.threshold:.12g}"}, "margins": {}, "verdict": {}}]
    if res.comparison is not None:
        c = res.comparison
        n = traj.grid.n_steps + 1
        write_trajectory_csv(
            out_dir / "comparison.csv",
            traj,
            extra={"bound": c.rhs[:n], "violation": c.lhs[:n] - c.rhs[:n]},
            names=["short"],
        )
        parts.append(comparison_sections(c, res.threshold))
    for rep in (res.lyapunov, res.structural):
        if rep is not None:
            parts.append(stability_sections(rep))
    diag: dict[str, str] = {"final_norm": f"{float(np.linalg.norm(traj.values[-1])):.12g}"}
    if res.max_residual is not None:
        diag["max_residual(t>=t0+1)"] = f"{res.max_residual:.6g}"
    if traj.aborted:
        diag["solver"] = f"aborted at node {traj.blowup_index}: {traj.reason}"
    for i, note in enumerate(res.notes, start=1):
        diag[f"note{i}"] = note
    parts.append({"margins": diag, "verdict": {"overall": "pass" if res.passed else "fail"}})
    text = render_report(title, describe_inputs(cfg), parts)
    (out_dir / "report.txt").write_text(text, encoding="utf-8")
    return text


def cmd_scenario(args: argparse.Namespace, **checks: bool) -> int:
    cfg = _load(args)
    need = {"comparison": cfg.compare_a, "lyapunov": cfg.V, "structural": cfg.exponents}
    for key, present in need.items():
        if checks.get(key) and len(checks) == 1 and present is None:
            raise ConfigError(f"scenario {cfg.name!r} does not configure a {key} check")
    flags = {k: checks.get(k, not checks) for k in need}
    res = run(cfg, **flags)
    out_dir = _out_root(args) / cfg.name
    out_dir.mkdir(parents=True, exist_ok=True)
    text = _write_result(res, out_dir, f"{args.command}: {cfg.name}")
    _emit(args, text)
    return res.exit_status


def cmd_operator(args: argparse.Namespace) -> int:
    order = Order(args.alpha)
    h = args.step if args.step is not None else 0.01
    expr = parse_expr(args.expr, dim=0)
    n = 0 if args.at == args.t0 else aligned_steps(args.at - args.t0, h, what="evaluation span")
    grid = UniformGrid(args.t0, h, n)
    try:
        x = Trajectory(grid, [evaluate(expr, (), t) for t in grid.nodes()])
    except EvaluationError as exc:
        raise ConfigError(str(exc)) from exc
    if args.kind == "caputo":
        op = lambda j: caputo_l1(x, order, j)  # noqa: E731
    elif args.kind == "rlint":
        op = lambda j: rl_integral(x, order, j)  # noqa: E731
    else:
        if args.omega is None:
            raise ConfigError("kind=short needs --omega")
        win = Window(args.omega, args.t0)
        op = lambda j: short_memory_l1(x, order, win, j)  # noqa: E731
    value = op(n)
    if args.sequence:
        out = _out_root(args) / "operator.csv"
        write_csv(out, ["t", args.kind], ((float(t), float(op(j))) for j, t in enumerate(grid.nodes())))
    sys.stdout.write(f"{value:.12g}\n")
    if args.kind == "short" and not args.quiet:
        sys.stderr.write(f"memory threshold 1/(omega^alpha Gamma(1-alpha)) = {memory_threshold(order, win):.12g}\n")
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    cfg = _load(args)
    try:
        values = [float(v) for v in args.values.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"--values must be comma-separated numbers, got {args.values!r}") from None
    rows = run_sweep(cfg, args.axis, values, workers=args.workers)
    out = _out_root(args) / cfg.name / f"sweep_{args.axis}.csv"
    write_csv(out, SWEEP_COLUMNS, ([r[c] for c in SWEEP_COLUMNS] for r in rows))
    if not args.quiet:
        for r in rows:
            sys.stdout.write(", ".join(f"{c}={r[c]}" for c in SWEEP_COLUMNS if r[c] != "") + "\n")
    return 0


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "scenario":
            return cmd_scenario(args)
        if args.command == "compare":
            return cmd_scenario(args, comparison=True)
        if args.command == "lyapunov":
            return cmd_scenario(args, lyapunov=True)
        if args.command == "theorem5":
            return cmd_scenario(args, structural=True)
        if args.command == "sweep":
            return cmd_sweep(args)
        return cmd_operator(args)
    except (FracwinError, OSError) as exc:
        sys.stderr.write(f"fracwin: error: {exc}\n")
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
