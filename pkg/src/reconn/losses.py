"""Collocation loss functionals.

Every loss returns a :class:`LossResult`: raw (pre-root) component means and
the weighted total ``sum_k alpha_k sqrt(c_k)``.  Components are tape nodes
when a tape is given and plain arrays otherwise.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .architectures import jump_normal
from .geometry import sample, sample_interface, weight_omega
from .problems import Problem

SQRT_GUARD = 1e-30

# Direction of each angular interface on the unit circle and the level set
# (x1 = 0 -> 0, x2 = 0 -> 1) it lies on.
MATERIAL_ANGLES = (
    ((1.0, 0.0), 1),
    ((0.0, 1.0), 0),
    ((-1.0, 0.0), 1),
    ((0.0, -1.0), 0),
)
LSHAPE_ANCHORS = np.array([[-1.0, 0.0], [0.0, -1.0]])


@dataclass
class LossWeights:
    alphas: tuple

    def __post_init__(self):
        a = tuple(float(x) for x in self.alphas)
        if any(x < 0 for x in a) or not any(x > 0 for x in a):
            raise ValueError("loss weights must be nonnegative with at least one positive")
        self.alphas = a

    def __getitem__(self, k):
        return self.alphas[k]


@dataclass
class Batch:
    interior: np.ndarray
    interface: np.ndarray | None = None
    interface_index: np.ndarray | None = None
    boundary: np.ndarray | None = None


@dataclass
class LossResult:
    total: object
    components: dict = field(default_factory=dict)

    def values(self) -> dict:
        return {k: float(ad.value_of(v)) for k, v in self.components.items()}

    def roots(self) -> dict:
        return {k: float(np.sqrt(ad.value_of(v))) for k, v in self.components.items()}

    @property
    def total_value(self) -> float:
        return float(ad.value_of(self.total))


def make_batch(problem: Problem, n_interior: int, n_interface: int, n_boundary: int,
               rng, stratified: bool = False) -> Batch:
    d = problem.domain
    xi = sample(d, "interior", n_interior, rng, stratified)
    xg = idx = None
    if d.interfaces and n_interface > 0:
        xg, idx = sample_interface(d, n_interface, rng, stratified)
    xb = sample(d, "boundary", n_boundary, rng, stratified) if n_boundary > 0 else None
    return Batch(xi, xg, idx, xb)


def _combine(parts: list[tuple[str, object]], weights: LossWeights) -> LossResult:
    if len(parts) > len(weights.alphas):
        raise ValueError("fewer weights than loss components")
    total = None
    for (name, c), a in zip(parts, weights.alphas):
        term = ad.mul(ad.sqrt(ad.add(c, SQRT_GUARD)), a)
        total = term if total is None else ad.add(total, term)
    return LossResult(total, dict(parts))


def _mean_sq(v, w=None, n=None):
    sq = ad.mul(v, v)
    if w is not None:
        sq = ad.mul(sq, w)
    n = np.size(ad.value_of(v)) if n is None else n
    return ad.div(ad.total(sq), float(n))


def pde_residual(field, problem: Problem, x, tape=None):
    """``sigma * laplacian(u) - f`` at interior points."""
    lap = field.jet(x, tape, 2).laplacian()
    return ad.sub(ad.mul(lap, problem.sigma(x)), problem.f(x))


def interface_sum_sq(field, problem: Problem, x, index, tape=None, w=None):
    """Sum over interface points of the squared flux jump (optionally weighted)."""
    acc = None
    for p in np.unique(index):
        sel = index == p
        j = jump_normal(field, x[sel], int(p), problem.sigma_of_signs, tape)
        sq = ad.mul(j, j)
        if w is not None:
            sq = ad.mul(sq, w[sel])
        s = ad.total(sq)
        acc = s if acc is None else ad.add(acc, s)
    return acc


def loss_h1_fit(field, problem: Problem, points, tape=None) -> LossResult:
    """Root mean square of ``|u - u*|^2 + |grad(u - u*)|^2``."""
    x = ad.as_points(points, problem.dim)
    J = field.jet(x, tape, 1)
    E = problem.exact_jet(x, 1).value_array
    diff = ad.sub(J.data, E)
    c = ad.div(ad.total(ad.mul(diff, diff)), float(x.shape[0]))
    return LossResult(ad.sqrt(ad.add(c, SQRT_GUARD)), {"h1": c})


def loss_pinns_1d(field, problem: Problem, batch: Batch, weights: LossWeights, tape=None) -> LossResult:
    pde = _mean_sq(pde_residual(field, problem, batch.interior, tape))
    xg = np.array([[problem.level_sets[0].c]])
    j = jump_normal(field, xg, 0, problem.sigma_of_signs, tape)
    interface = ad.total(ad.mul(j, j))
    ub = field.jet(problem.domain.boundary_points, tape, 0).u
    bc = ad.total(ad.mul(ub, ub))
    return _combine([("pde", pde), ("int", interface), ("bc", bc)], weights)


def loss_pinns_interface(field, problem: Problem, batch: Batch, weights: LossWeights, tape=None) -> LossResult:
    pde = _mean_sq(pde_residual(field, problem, batch.interior, tape))
    n2 = batch.interface.shape[0]
    interface = ad.div(interface_sum_sq(field, problem, batch.interface, batch.interface_index, tape), float(n2))
    bc = _mean_sq(field.jet(batch.boundary, tape, 0).u)
    return _combine([("pde", pde), ("int", interface), ("bc", bc)], weights)


def loss_pinns_lshape(field, problem: Problem, batch: Batch, weights: LossWeights, tape=None) -> LossResult:
    w = weight_omega("lshape", batch.interior)
    pde = _mean_sq(pde_residual(field, problem, batch.interior, tape), w)
    bc = _mean_sq(field.jet(batch.boundary, tape, 0).u)
    parts = [("pde", pde), ("bc", bc)]
    if field.units:
        acc = None
        for unit in field.units:
            phi = unit.angular.jet(LSHAPE_ANCHORS, tape, 0).u
            s = ad.total(ad.mul(phi, phi))
            acc = s if acc is None else ad.add(acc, s)
        parts.append(("bc_phi", acc))
    return _combine(parts, weights)


def angular_flux_sq(unit, sigma_of_signs, tape=None):
    """Mean over the four interface directions of the squared angular flux jump."""
    acc = None
    for xh, p in MATERIAL_ANGLES:
        j = jump_normal(unit.angular, np.array([xh]), p, sigma_of_signs, tape)
        s = ad.total(ad.mul(j, j))
        acc = s if acc is None else ad.add(acc, s)
    return ad.div(acc, float(len(MATERIAL_ANGLES)))


def loss_pinns_material(field, problem: Problem, batch: Batch, weights: LossWeights, tape=None) -> LossResult:
    w1 = weight_omega("mat-area", batch.interior)
    pde = _mean_sq(pde_residual(field, problem, batch.interior, tape), w1)
    w2 = weight_omega("mat-line", batch.interface)
    n2 = batch.interface.shape[0]
    interface = ad.div(
        interface_sum_sq(field, problem, batch.interface, batch.interface_index, tape, w2), float(n2)
    )
    bc = _mean_sq(field.jet(batch.boundary, tape, 0).u)
    parts = [("pde", pde), ("int", interface), ("bc", bc)]
    if field.units:
        acc = None
        for unit in field.units:
            s = angular_flux_sq(unit, problem.sigma_of_signs, tape)
            acc = s if acc is None else ad.add(acc, s)
        parts.append(("bc_phi", acc))
    return _combine(parts, weights)


__all__ = [
    "Batch",
    "LossResult",
    "LossWeights",
    "angular_flux_sq",
    "loss_h1_fit",
    "loss_pinns_1d",
    "loss_pinns_interface",
    "loss_pinns_lshape",
    "loss_pinns_material",
    "make_batch",
    "pde_residual",
]
