"""Benchmark transmission problems with closed-form solutions.

Each exact solution is written once as a jet expression; ``f`` and the
derivatives of ``u*`` come out of the same jet evaluation, so the source term
is ``sigma * laplacian(u*)`` by construction.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import autodiff as ad
from . import sturm_liouville as slv
from .autodiff import SpatialJet
from .geometry import Domain, InterfaceCurve, LevelSet, Segment, angle_jet, polar_jets

MATERIAL_SIGMA = (1.0, 2.0, 3.0, 4.0)
MATERIAL_A1 = 3.584


@dataclass
class Problem:
    """Domain, coefficient, exact solution and interfaces of one benchmark.

    ``exact_jet(x, order, signs)`` returns a constant jet of ``u*``;
    ``sigma_of_signs`` maps a sign pattern of the level sets (N, P) to the
    coefficient on that side.
    """

    name: str
    domain: Domain
    level_sets: tuple
    sigma_of_signs: Callable[[np.ndarray], np.ndarray]
    exact_expr: Callable[[np.ndarray, int, np.ndarray], SpatialJet]
    singular_centers: tuple = ()
    lambda_star: float | None = None
    singular: slv.SturmLiouvilleSolution | None = None
    extra: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.domain.dim

    def signs(self, x) -> np.ndarray:
        x = ad.as_points(x, self.dim)
        if not self.level_sets:
            return np.zeros((x.shape[0], 0))
        return np.sign(np.column_stack([ls.value(x) for ls in self.level_sets]))

    def sigma(self, x) -> np.ndarray:
        return self.sigma_of_signs(self.signs(x))

    def exact_jet(self, x, order: int = 2, signs=None) -> SpatialJet:
        x = ad.as_points(x, self.dim)
        s = self.signs(x) if signs is None else np.broadcast_to(signs, (x.shape[0], len(self.level_sets)))
        return self.exact_expr(x, order, np.asarray(s, dtype=float))

    def u(self, x) -> np.ndarray:
        return self.exact_jet(x, 0).value_array[0]

    def grad(self, x) -> np.ndarray:
        J = self.exact_jet(x, 1).value_array
        return J[1:1 + self.dim].T.copy()

    def laplacian(self, x) -> np.ndarray:
        return np.asarray(self.exact_jet(x, 2).laplacian())

    def f(self, x) -> np.ndarray:
        x = ad.as_points(x, self.dim)
        return self.sigma(x) * self.laplacian(x)

    def exact_field(self) -> "ExactField":
        return ExactField(self)

    def flux_jump(self, x, p: int) -> np.ndarray:
        """``sigma+ d_nu u*+ - sigma- d_nu u*-`` from one-sided analytic limits."""
        x = ad.as_points(x, self.dim)
        base = self.signs(x)
        nu = self.level_sets[p].normal(x)
        out = np.zeros(x.shape[0])
        for side in (1.0, -1.0):
            s = base.copy()
            s[:, p] = side
            g = self.exact_jet(x, 1, s).value_array[1:1 + self.dim]
            out += side * self.sigma_of_signs(s) * np.einsum("dn,nd->n", g, nu)
        return out


class ExactField:
    """Adapter presenting ``u*`` with the field interface (no parameters)."""

    units = ()

    def __init__(self, problem: Problem):
        self.problem = problem
        self.level_sets = problem.level_sets
        self.dim = problem.dim
        self.params = []
        self.param_count = 0

    def jet(self, x, tape=None, order: int = 2, signs=None) -> SpatialJet:
        return self.problem.exact_jet(x, order, signs)


# ------------------------------------------------------------------ 1D


def problem_1d() -> Problem:
    """``(sigma u')' = f`` on (0, pi) with a coefficient jump at pi/2.

    ``sigma = 1`` left of the interface and 3 right of it, so that
    ``u* = sin 2x`` on the left and ``sin(2x) / 3`` on the right solves
    ``sigma u'' = -4 sin 2x`` with continuous flux.
    """
    ls = LevelSet("point-1d", c=np.pi / 2, scale=0.5)

    def sigma_of_signs(s):
        return np.where(np.asarray(s)[:, 0] > 0, 3.0, 1.0)

    def expr(x, order, s):
        X = ad.coordinate_jets(x, order, 1).column(0)
        scale = np.where(s[:, 0] > 0, 1.0 / 3.0, 1.0)
        return ad.jet_scale(ad.jet_sin(ad.jet_scale(X, 2.0)), scale)

    dom = Domain("interval", (InterfaceCurve(0, "point", point=np.pi / 2),))
    return Problem("1d-transmission", dom, (ls,), sigma_of_signs, expr)


# ----------------------------------------------------- smooth interface


def problem_interface() -> Problem:
    """Circular interface ``|x| = 1/2``: sigma 1 inside, 3 outside.

    ``u* = (x1^2 - 1)(x2^2 - 1)(4|x|^2 - 1)^2 / sigma``.
    """
    ls = LevelSet("circle", c=0.25)

    def sigma_of_signs(s):
        return np.where(np.asarray(s)[:, 0] > 0, 3.0, 1.0)

    def expr(x, order, s):
        X = ad.coordinate_jets(x, order, 2)
        x1, x2 = X.column(0), X.column(1)
        b = ad.jet_mul(ad.jet_sub(ad.jet_mul(x1, x1), 1.0), ad.jet_sub(ad.jet_mul(x2, x2), 1.0))
        q = ad.jet_scale(ls.jet(X), 4.0)
        return ad.jet_scale(ad.jet_mul(b, ad.jet_mul(q, q)), 1.0 / sigma_of_signs(s))

    dom = Domain("square", (InterfaceCurve(0, "circle", radius=0.5),))
    return Problem("interface-2d", dom, (ls,), sigma_of_signs, expr)


# --------------------------------------------------------------- L-shape


def lshape_singular(x, order: int = 2) -> SpatialJet:
    """``r^(2/3) sin(2/3 (theta + pi/2))`` with theta in (-pi/2, pi)."""
    r, _ = polar_jets(x, (0.0, 0.0), order)
    th = angle_jet(x, (0.0, 0.0), reference=np.pi / 4, order=order)
    ang = ad.jet_sin(ad.jet_scale(ad.jet_add(th, np.pi / 2), 2.0 / 3.0))
    return ad.jet_mul(ad.jet_pow_const(r, 2.0 / 3.0), ang)


def problem_lshape() -> Problem:
    def sigma_of_signs(s):
        return np.ones(np.asarray(s).shape[0])

    def expr(x, order, s):
        X = ad.coordinate_jets(x, order, 2)
        x1, x2 = X.column(0), X.column(1)
        b = ad.jet_mul(ad.jet_sub(ad.jet_mul(x1, x1), 1.0), ad.jet_sub(ad.jet_mul(x2, x2), 1.0))
        return ad.jet_mul(lshape_singular(x, order), b)

    return Problem("lshape", Domain("lshape"), (), sigma_of_signs, expr,
                   singular_centers=((0.0, 0.0),), lambda_star=2.0 / 3.0)


# ------------------------------------------------------- material vertex


def quadrant_of_signs(s) -> np.ndarray:
    """0..3 for the quadrants (+,+), (-,+), (-,-), (+,-)."""
    s = np.asarray(s)
    right, up = s[:, 0] > 0, s[:, 1] > 0
    return np.where(up, np.where(right, 0, 1), np.where(right, 3, 2))


def material_sigma_of_signs(s, sigma=MATERIAL_SIGMA) -> np.ndarray:
    return np.asarray(sigma, dtype=float)[quadrant_of_signs(s)]


def material_singular(x, sol: slv.SturmLiouvilleSolution, s, order: int = 2) -> SpatialJet:
    """``r^lam (a_k sin(lam theta) + b_k cos(lam theta))`` in sector ``k``."""
    q = quadrant_of_signs(s)
    r, _ = polar_jets(x, (0.0, 0.0), order)
    th = angle_jet(x, (0.0, 0.0), reference=(2 * q + 1) * np.pi / 4, order=order)
    lt = ad.jet_scale(th, sol.lam)
    ang = ad.jet_add(ad.jet_scale(ad.jet_sin(lt), sol.a[q]), ad.jet_scale(ad.jet_cos(lt), sol.b[q]))
    return ad.jet_mul(ad.jet_pow_const(r, sol.lam), ang)


def problem_material_vertex(sigma=MATERIAL_SIGMA, a1: float = MATERIAL_A1) -> Problem:
    """Four materials meeting at the origin; ``u* = cos(pi x1/2) cos(pi x2/2) s*``."""
    sol = slv.solve(sigma, a1=a1)
    lsets = (LevelSet("line-x1"), LevelSet("line-x2"))

    def sigma_of_signs(s):
        return material_sigma_of_signs(s, sigma)

    def expr(x, order, s):
        X = ad.coordinate_jets(x, order, 2)
        c1 = ad.jet_cos(ad.jet_scale(X.column(0), np.pi / 2))
        c2 = ad.jet_cos(ad.jet_scale(X.column(1), np.pi / 2))
        return ad.jet_mul(ad.jet_mul(c1, c2), material_singular(x, sol, s, order))

    rays = (
        InterfaceCurve(0, "segments", pieces=(Segment((0.0, 0.0), (0.0, 1.0)), Segment((0.0, 0.0), (0.0, -1.0)))),
        InterfaceCurve(1, "segments", pieces=(Segment((0.0, 0.0), (1.0, 0.0)), Segment((0.0, 0.0), (-1.0, 0.0)))),
    )
    return Problem("material-vertex", Domain("square", rays), lsets, sigma_of_signs, expr,
                   singular_centers=((0.0, 0.0),), lambda_star=sol.lam, singular=sol)


PROBLEMS = {
    "1d": problem_1d,
    "interface": problem_interface,
    "lshape": problem_lshape,
    "material": problem_material_vertex,
}
