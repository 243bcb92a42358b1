"""Invariant suites that run without training; each returns a JSON-able report."""
from __future__ import annotations

import time

import numpy as np

from . import architectures as arch
from . import sturm_liouville as slv
from .autodiff import fd_check
from .geometry import Cutoff, LevelSet, make_rng, sample, sample_interface
from .network import mlp_new
from .problems import MATERIAL_A1, MATERIAL_SIGMA, PROBLEMS

REFERENCE_LAMBDA = 0.8599
REFERENCE_A = (3.584, 3.285, 2.474, 2.115)
REFERENCE_B = (-2.003, -0.6678, -1.0495, -0.5861)


def _check(name, value, threshold, passed=None, **extra):
    ok = bool(value < threshold) if passed is None else bool(passed)
    return {"name": name, "value": float(value), "threshold": float(threshold), "passed": ok, **extra}


def random_fields(seed: int = 0):
    """A small zoo of architectures with random weights and exponents."""
    rng = make_rng(seed)
    cut = Cutoff(0.5, 0.9)
    yield "classical-1d", arch.ClassicalField(mlp_new((1, 6, 6, 1), init_seed=seed))
    yield "classical-2d", arch.ClassicalField(mlp_new((2, 8, 8, 1), init_seed=seed + 1))
    yield "interface-2d", arch.InterfaceField(mlp_new((2, 8, 8, 2), init_seed=seed + 2),
                                              [LevelSet("circle", c=0.25)])
    ang = arch.ClassicalField(mlp_new((2, 5, 5, 1), init_seed=seed + 3))
    unit = arch.SingularUnit((0.0, 0.0), ang, cut, float(rng.uniform(0.3, 0.9)))
    yield "corner", arch.CornerField(mlp_new((2, 8, 8, 2), init_seed=seed + 4), [unit], cut)
    lsets = (LevelSet("line-x1"), LevelSet("line-x2"))
    ang2 = arch.InterfaceField(mlp_new((2, 5, 5, 3), init_seed=seed + 5), lsets)
    unit2 = arch.SingularUnit((0.0, 0.0), ang2, cut, float(rng.uniform(0.3, 0.9)))
    yield "material", arch.MaterialVertexField(mlp_new((2, 8, 8, 6), init_seed=seed + 6), lsets, [unit2], cut)


def suite_autodiff(n_cases: int = 100, step: float = 1e-5, threshold: float = 1e-5) -> dict:
    rng = make_rng(11)
    worst = {"grad": 0.0, "laplacian": 0.0, "param": 0.0}
    cases = 0
    seed = 0
    while cases < n_cases:
        for name, fld in random_fields(seed):
            if cases >= n_cases:
                break
            while True:
                x = rng.uniform(-1, 1, size=(1, fld.dim))
                if fld.singular_distance(x)[0] > 0.05:
                    break
            rep = fd_check(fld, x, step, max_params=12, seed=cases)
            worst["grad"] = max(worst["grad"], rep.grad_dev)
            worst["laplacian"] = max(worst["laplacian"], rep.laplacian_dev)
            worst["param"] = max(worst["param"], rep.param_dev)
            cases += 1
        seed += 10
    checks = [_check(f"max_fd_deviation_{k}", v, threshold, cases=cases) for k, v in worst.items()]
    return {"suite": "autodiff", "checks": checks}


def one_sided_fd_derivative(field, x, nu, side: int, h: float = 1e-6) -> np.ndarray:
    """Normal derivative at ``x`` seen from ``side``, from probes at ``x + side k h nu`` (k=1,2,3).

    Second-order one-sided stencil; the probes never touch the interface.
    """
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    nu = np.atleast_2d(np.asarray(nu, dtype=np.float64))
    f = [field.jet(x + side * k * h * nu, None, 0).value_array[0] for k in (1, 2, 3)]
    return side * (-5.0 * f[0] + 8.0 * f[1] - 3.0 * f[2]) / (2.0 * h)


def cutoff_knot_gap(cut: Cutoff, eps: float = 1e-4) -> float:
    """Largest mismatch of the one-sided limits of eta, eta', eta'' at the knots.

    Each one-sided limit is extrapolated quadratically from probes at ``eps``,
    ``2 eps`` and ``3 eps``; derivatives are scaled by ``(delta2 - delta1)^k`` so they are
    measured in the normalised variable.
    """
    L = cut.delta2 - cut.delta1
    worst = 0.0
    for knot in (cut.delta1, cut.delta2):
        side = {}
        for sgn in (-1, 1):
            p1, p2, p3 = (cut.table(knot + sgn * m * eps) for m in (1, 2, 3))
            side[sgn] = [3 * a - 3 * b + c for a, b, c in zip(p1, p2, p3)]
        left, right = side[-1], side[1]
        for k in range(3):
            worst = max(worst, abs(float(left[k] - right[k])) * L**k)
    return worst


def suite_geometry() -> dict:
    checks = [_check("cutoff_c2_continuity", cutoff_knot_gap(Cutoff(0.5, 0.9)), 1e-6)]
    x = np.array([[0.5, 0.0], [0.0, -0.5], [0.3, 0.4]])
    g = np.linalg.norm(LevelSet("circle", c=0.25).gradient(x), axis=1)
    checks.append(_check("circle_gradient_norm_on_interface", np.max(np.abs(g - 1.0)), 1e-12))
    rng = make_rng(3)
    pts = sample(PROBLEMS["interface"]().domain, "interface", 1000, rng)
    r = np.linalg.norm(pts, axis=1)
    checks.append(_check("circle_sample_radius", np.max(np.abs(r - 0.5)), 1e-12))
    th = np.sort(np.mod(np.arctan2(pts[:, 1], pts[:, 0]), 2 * np.pi) / (2 * np.pi))
    n = th.size
    ks = max(np.max(np.arange(1, n + 1) / n - th), np.max(th - np.arange(n) / n))
    checks.append(_check("circle_sample_angle_ks", ks, 0.05))
    dom = PROBLEMS["interface"]().domain
    a = sample(dom, "interior", 64, make_rng(5))
    b = sample(dom, "interior", 64, make_rng(5))
    checks.append(_check("sampler_reproducible", float(np.max(np.abs(a - b))), 1e-300, passed=np.array_equal(a, b)))
    return {"suite": "geometry", "checks": checks}


def suite_exact_solutions(n_interior: int = 1000, n_interface: int = 100, n_boundary: int = 100) -> dict:
    """Residual, flux continuity and boundary values of every closed-form solution."""
    checks = []
    rng = make_rng(17)
    for key, make in PROBLEMS.items():
        p = make()
        x = sample(p.domain, "interior", n_interior, rng)
        res = p.sigma(x) * p.laplacian(x) - p.f(x)
        if key == "1d":
            res = np.maximum(np.abs(res), np.abs(p.sigma(x) * p.laplacian(x) + 4 * np.sin(2 * x[:, 0])))
        checks.append(_check(f"{key}_residual", np.max(np.abs(res)), 1e-10))
        xb = sample(p.domain, "boundary", n_boundary, rng)
        checks.append(_check(f"{key}_boundary", np.max(np.abs(p.u(xb))), 1e-12))
        if p.level_sets:
            xi, idx = sample_interface(p.domain, n_interface, rng)
            jmax = 0.0
            for q in np.unique(idx):
                jmax = max(jmax, float(np.max(np.abs(p.flux_jump(xi[idx == q], int(q))))))
            checks.append(_check(f"{key}_flux_jump", jmax, 1e-10))
    return {"suite": "exact-solutions", "checks": checks}


def suite_eigen(h_fem: float = 2 * np.pi / 1024) -> dict:
    t0 = time.perf_counter()
    sol = slv.solve(MATERIAL_SIGMA, a1=MATERIAL_A1)
    dt = time.perf_counter() - t0
    coef = np.concatenate([sol.a, sol.b])
    ref = np.array(REFERENCE_A + REFERENCE_B)
    rel = np.max(np.abs(coef - ref) / np.abs(ref))
    lam_fem = slv.fem_eigen_exponent(MATERIAL_SIGMA, h=h_fem)
    M = slv._row_normalized(slv.assemble(sol.lam, MATERIAL_SIGMA))
    checks = [
        _check("lambda", abs(sol.lam - REFERENCE_LAMBDA), 5e-4, lam=sol.lam, seconds=dt),
        _check("coefficients_rel", rel, 1e-2, a=sol.a.tolist(), b=sol.b.tolist()),
        _check("lambda_vs_fem", abs(sol.lam - lam_fem), 1e-3, lam_fem=lam_fem),
        _check("det_at_root", abs(slv.determinant(M)), 1e-10),
        _check("single_root", sol.roots_found, 2, roots=sol.roots_found),
    ]
    return {"suite": "eigen", "checks": checks}


SUITES = {
    "autodiff": suite_autodiff,
    "geometry": suite_geometry,
    "exact-solutions": suite_exact_solutions,
    "eigen": suite_eigen,
}


def run_suite(name: str) -> dict:
    rep = SUITES[name]()
    rep["passed"] = all(c["passed"] for c in rep["checks"])
    return rep
