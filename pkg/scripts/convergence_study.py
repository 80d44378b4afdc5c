"""Empirical orders of the operators and of the short-memory solver.

Prints a table and writes it to ``<out>/convergence.csv``. Residual orders
are measured on ``t >= t0 + 1``, away from the start layer.
"""

import argparse
import math
from pathlib import Path

import numpy as np

from fracwin.core import Trajectory, UniformGrid, caputo_l1, caputo_sequence, gamma, rl_sequence
from fracwin.output import write_csv
from fracwin.scenario import resolve
from fracwin.solver import residual_check, solve_short_memory


def sample(fn, h, t_end):
    grid = UniformGrid.spanning(0.0, t_end, h)
    return Trajectory(grid, np.array([fn(t) for t in grid.nodes()]))


def orders(errs):
    return [math.log2(a / b) for a, b in zip(errs, errs[1:])]


def caputo_t2(alpha, steps):
    exact = 2.0 / gamma(3 - alpha)
    return [abs(caputo_l1(x, alpha, x.grid.n_steps) - exact) for x in (sample(lambda t: t * t, h, 1.0) for h in steps)]


def round_trip(fn, alpha, steps):
    out = []
    for h in steps:
        x = sample(fn, h, 2.0)
        back = rl_sequence(Trajectory(x.grid, caputo_sequence(x, alpha)), alpha)
        out.append(float(np.max(np.abs(back - (x.scalar() - x.scalar()[0])))))
    return out


def residual(name, steps, horizon=20.0):
    out = []
    for h in steps:
        cfg = resolve(name).replace(step=h, horizon=horizon)
        sys_ = cfg.system()
        tr = solve_short_memory(sys_, cfg.solve_config())
        r = np.abs(residual_check(sys_, tr))
        out.append(float(r[tr.times() >= 1.0].max()))
    return out


def main() -> None:
    ap = argparse.ArgumentParser(description="convergence study")
    ap.add_argument("--out", type=Path, default=Path("runs/convergence"))
    args = ap.parse_args()

    rows = []
    fine = (1e-2, 5e-3, 2.5e-3)
    coarse = (0.02, 0.01, 0.005)
    for alpha in (0.3, 0.5, 0.95):
        rows.append(("caputo t^2", alpha, fine, caputo_t2(alpha, fine)))
        rows.append(("rl(caputo) t^2", alpha, coarse, round_trip(lambda t: t * t, alpha, coarse)))
        rows.append(("rl(caputo) sin", alpha, coarse, round_trip(math.sin, alpha, coarse)))
    for name in ("example1", "example3"):
        rows.append((f"residual {name}", 0.95, coarse, residual(name, coarse)))

    table = []
    for label, alpha, steps, errs in rows:
        ps = orders(errs)
        print(f"{label:<20} alpha={alpha:<5} errors={['%.3e' % e for e in errs]} orders={['%.4f' % p for p in ps]}")
        for h, e, p in zip(steps, errs, [math.nan, *ps]):
            table.append((label, alpha, h, e, p))
    args.out.mkdir(parents=True, exist_ok=True)
    write_csv(args.out / "convergence.csv", ("quantity", "alpha", "h", "error", "order"), table)


if __name__ == "__main__":
    main()
