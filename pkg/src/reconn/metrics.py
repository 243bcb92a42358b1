"""Relative L2 errors of a field and its gradient on midpoint grids."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .problems import Problem

DEFAULT_N_1D = 10_000
DEFAULT_N_2D = 256
CHUNK = 8192
DUMP_HEADER = ("x1", "x2", "u_nn", "u_exact", "gnorm_nn", "gnorm_exact", "err_u", "err_grad")


@dataclass
class ErrorReport:
    rel_l2_u: float
    rel_l2_grad: float
    grid: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"rel_l2_u": self.rel_l2_u, "rel_l2_grad": self.rel_l2_grad, "grid": self.grid}


@dataclass
class GridValues:
    x: np.ndarray
    u_nn: np.ndarray
    u_exact: np.ndarray
    g_nn: np.ndarray
    g_exact: np.ndarray


def midpoint_grid(problem: Problem, n: int | None = None) -> tuple[np.ndarray, dict]:
    """Cell midpoints of a uniform grid, restricted to the domain.

    With an even ``n`` the axes and the origin are cell edges, so no midpoint
    lands on an axis-aligned interface or at the corner.
    """
    lo, hi = problem.domain.bounds()
    if problem.dim == 1:
        n = n or DEFAULT_N_1D
        h = (hi - lo) / n
        x = (lo + (np.arange(n) + 0.5) * h)[:, None]
        return x, {"kind": "midpoint-1d", "n": n, "cell_measure": h}
    n = n or DEFAULT_N_2D
    h = (hi - lo) / n
    c = lo + (np.arange(n) + 0.5) * h
    X1, X2 = np.meshgrid(c, c, indexing="ij")
    x = np.column_stack([X1.ravel(), X2.ravel()])
    x = x[problem.domain.contains(x)]
    return x, {"kind": "midpoint-2d", "n": n, "cell_measure": h * h, "points": int(x.shape[0])}


def evaluate_on(field_, problem: Problem, x: np.ndarray) -> GridValues:
    d = problem.dim
    u_nn = np.empty(x.shape[0])
    g_nn = np.empty((x.shape[0], d))
    u_ex = np.empty_like(u_nn)
    g_ex = np.empty_like(g_nn)
    for s in range(0, x.shape[0], CHUNK):
        sl = slice(s, s + CHUNK)
        J = field_.jet(x[sl], None, 1).value_array
        E = problem.exact_jet(x[sl], 1).value_array
        u_nn[sl], g_nn[sl] = J[0], J[1:1 + d].T
        u_ex[sl], g_ex[sl] = E[0], E[1:1 + d].T
    return GridValues(x, u_nn, u_ex, g_nn, g_ex)


def report_from_values(v: GridValues, grid: dict) -> ErrorReport:
    eu = np.sum((v.u_nn - v.u_exact) ** 2)
    nu = np.sum(v.u_exact**2)
    eg = np.sum((v.g_nn - v.g_exact) ** 2)
    ng = np.sum(v.g_exact**2)
    return ErrorReport(100.0 * float(np.sqrt(eu / nu)), 100.0 * float(np.sqrt(eg / ng)), grid)


def relative_l2(field_, problem: Problem, n: int | None = None) -> ErrorReport:
    """Percent errors ``||u - u*|| / ||u*||`` and the same for the gradient."""
    x, grid = midpoint_grid(problem, n)
    return report_from_values(evaluate_on(field_, problem, x), grid)


def grid_dump(field_, problem: Problem, path, n: int | None = None) -> int:
    """Write per-point values and errors as CSV in row-major grid order; returns row count."""
    x, _ = midpoint_grid(problem, n)
    v = evaluate_on(field_, problem, x)
    return write_dump(v, path)


def write_dump(v: GridValues, path) -> int:
    gn = np.linalg.norm(v.g_nn, axis=1)
    ge = np.linalg.norm(v.g_exact, axis=1)
    eu = np.abs(v.u_nn - v.u_exact)
    eg = np.linalg.norm(v.g_nn - v.g_exact, axis=1)
    x2 = v.x[:, 1] if v.x.shape[1] > 1 else np.zeros(v.x.shape[0])
    cols = np.column_stack([v.x[:, 0], x2, v.u_nn, v.u_exact, gn, ge, eu, eg])
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(DUMP_HEADER)
        for row in cols:
            w.writerow([repr(float(a)) for a in row])
    return cols.shape[0]
