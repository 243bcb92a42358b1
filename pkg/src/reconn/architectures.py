"""Field architectures built from MLPs, level sets and singular units.

Every field exposes ``jet(x, tape=None, order=2, signs=None)`` returning the
scalar jet of ``u`` at a batch of points.  ``signs`` (shape ``(N, P)``)
overrides ``sign(phi_p(x))``; that is how one-sided limits on an interface
are taken.
"""
from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from . import autodiff as ad
from .autodiff import Param, SpatialJet, Tape
from .errors import NoSingularUnit, NotOnInterface, OnInterface
from .geometry import Cutoff, LevelSet, polar_jets
from .network import MLP

ON_INTERFACE_TOL = 1e-14
NOT_ON_INTERFACE_TOL = 1e-10


def _resolve_signs(level_sets, values: np.ndarray, signs) -> np.ndarray:
    """Per-point sign of every level set, shape (N, P)."""
    n, P = values.shape
    if signs is None:
        if P and np.any(np.abs(values) < ON_INTERFACE_TOL):
            raise OnInterface("point lies on an interface; use a one-sided evaluation")
        return np.sign(values)
    s = np.broadcast_to(np.asarray(signs, dtype=np.float64), (n, P))
    return np.where(s >= 0, 1.0, -1.0)


def _level_values(level_sets, X: SpatialJet) -> tuple[list[SpatialJet], np.ndarray]:
    jets = [ls.jet(X) for ls in level_sets]
    n = X.value_array.shape[1]
    vals = np.column_stack([j.value_array[0] for j in jets]) if jets else np.zeros((n, 0))
    return jets, vals


class Field:
    """Common interface; subclasses implement :meth:`apply` on an input jet."""

    dim: int = 2
    level_sets: tuple = ()
    units: tuple = ()

    @property
    def params(self) -> list[Param]:
        raise NotImplementedError

    @property
    def param_count(self) -> int:
        return sum(p.size for p in self.params)

    def apply(self, X: SpatialJet, tape: Tape | None, signs=None) -> SpatialJet:
        raise NotImplementedError

    def jet(self, x, tape: Tape | None = None, order: int = 2, signs=None) -> SpatialJet:
        return self.apply(ad.coordinate_jets(x, order, self.dim), tape, signs)

    def __call__(self, x, order: int = 0) -> np.ndarray:
        return self.jet(x, None, order).value_array

    def singular_distance(self, x) -> np.ndarray:
        """Distance-like measure to the nearest interface or singular center."""
        x = ad.as_points(x, self.dim)
        d = np.full(x.shape[0], np.inf)
        for ls in self.level_sets:
            g = np.linalg.norm(ls.gradient(x), axis=1)
            d = np.minimum(d, np.abs(ls.value(x)) / g)
        for u in self.units:
            d = np.minimum(d, np.linalg.norm(x - np.asarray(u.center), axis=1))
        return d

    def describe(self) -> dict:
        raise NotImplementedError


class ClassicalField(Field):
    """Plain network output."""

    def __init__(self, net: MLP):
        self.net = net
        self.dim = net.n_in

    @property
    def params(self):
        return self.net.params

    def apply(self, X, tape=None, signs=None):
        return self.net.forward(X, tape).column(0)

    def describe(self):
        return {"kind": "classical", "sizes": list(self.net.sizes), "activation": self.net.activation}


class InterfaceField(Field):
    """``u = w_0 + sum_p w_p |phi_p|`` with ``w`` a network of P+1 outputs."""

    def __init__(self, net: MLP, level_sets: Sequence[LevelSet]):
        if net.n_out != len(level_sets) + 1:
            raise ValueError("interface net needs one output per level set plus one")
        self.net = net
        self.level_sets = tuple(level_sets)
        self.dim = net.n_in

    @property
    def params(self):
        return self.net.params

    def apply(self, X, tape=None, signs=None):
        W = self.net.forward(X, tape)
        phis, vals = _level_values(self.level_sets, X)
        s = _resolve_signs(self.level_sets, vals, signs)
        u = W.column(0)
        for p, phi in enumerate(phis):
            u = u + W.column(p + 1) * ad.jet_scale(phi, s[:, p])
        return u

    def describe(self):
        return {
            "kind": "interface",
            "sizes": list(self.net.sizes),
            "activation": self.net.activation,
            "level_sets": [ls.to_dict() for ls in self.level_sets],
        }


class SingularUnit:
    """``s(x) = eta(r) r^lambda phi(xhat)`` around ``center``."""

    def __init__(self, center, angular: Field, cutoff: Cutoff, lam0: float = 0.5, name: str = "lambda"):
        self.center = tuple(float(c) for c in center)
        self.angular = angular
        self.cutoff = cutoff
        self.lam = Param(np.array(float(lam0)), name)

    @property
    def params(self):
        return [self.lam] + self.angular.params

    @property
    def lambda_value(self) -> float:
        return float(self.lam.value)

    def polar(self, x, order):
        r, xh = polar_jets(x, self.center, order)
        return r, xh, self.cutoff.jet(r)

    def apply(self, x, tape=None, order=2, signs=None, polar=None) -> SpatialJet:
        r, xh, eta = polar if polar is not None else self.polar(x, order)
        lam = ad.param_value(self.lam, tape)
        radial = eta * ad.jet_pow_param(r, lam)
        return radial * self.angular.apply(xh, tape, signs)

    def angular_values(self, xhat, tape=None, order=0, signs=None) -> SpatialJet:
        """The angular network at explicit unit directions."""
        return self.angular.jet(xhat, tape, order, signs)


class CornerField(Field):
    """``u = w_0 + sum_i eta(|x - x_i|) w_i + sum_i s_i``."""

    def __init__(self, net: MLP, units: Sequence[SingularUnit], cutoff: Cutoff):
        if net.n_out != len(units) + 1:
            raise ValueError("corner net needs one output per singular unit plus one")
        self.net = net
        self.units = tuple(units)
        self.cutoff = cutoff
        self.dim = 2

    @property
    def params(self):
        out = list(self.net.params)
        for u in self.units:
            out += u.params
        return out

    def jet(self, x, tape=None, order=2, signs=None):
        x = ad.as_points(x, 2)
        W = self.net.forward(ad.coordinate_jets(x, order, 2), tape)
        u = W.column(0)
        for i, unit in enumerate(self.units):
            pol = unit.polar(x, order)
            u = u + W.column(i + 1) * pol[2]
            u = u + unit.apply(x, tape, order, signs, polar=pol)
        return u

    def apply(self, X, tape=None, signs=None):
        return self.jet(X.value_array[0], tape, X.order, signs)

    def describe(self):
        return {
            "kind": "corner",
            "sizes": list(self.net.sizes),
            "activation": self.net.activation,
            "cutoff": self.cutoff.to_dict(),
            "units": [_unit_descriptor(u) for u in self.units],
        }


class MaterialVertexField(Field):
    """Interface-aware smooth part plus singular units at a material vertex.

    Network outputs are ordered ``[w_10..w_1P, w_20..w_2P]`` and assembled as
    ``w_10 + w_20 eta + sum_p (w_1p + w_2p eta) |phi_p|``; the singular units
    share the global sign pattern so one-sided limits stay consistent.
    """

    def __init__(self, net: MLP, level_sets: Sequence[LevelSet], units: Sequence[SingularUnit],
                 cutoff: Cutoff, center=(0.0, 0.0)):
        P = len(level_sets)
        if net.n_out != 2 * P + 2:
            raise ValueError("material-vertex net needs 2P+2 outputs")
        self.net = net
        self.level_sets = tuple(level_sets)
        self.units = tuple(units)
        self.cutoff = cutoff
        self.center = tuple(float(c) for c in center)
        self.dim = 2

    @property
    def params(self):
        out = list(self.net.params)
        for u in self.units:
            out += u.params
        return out

    def jet(self, x, tape=None, order=2, signs=None):
        x = ad.as_points(x, 2)
        X = ad.coordinate_jets(x, order, 2)
        W = self.net.forward(X, tape)
        phis, vals = _level_values(self.level_sets, X)
        s = _resolve_signs(self.level_sets, vals, signs)
        r, _ = polar_jets(x, self.center, order)
        eta = self.cutoff.jet(r)
        P = len(self.level_sets)
        u = W.column(0) + W.column(P + 1) * eta
        for p, phi in enumerate(phis):
            coef = W.column(1 + p) + W.column(P + 2 + p) * eta
            u = u + coef * ad.jet_scale(phi, s[:, p])
        for unit in self.units:
            u = u + unit.apply(x, tape, order, s)
        return u

    def apply(self, X, tape=None, signs=None):
        return self.jet(X.value_array[0], tape, X.order, signs)

    def describe(self):
        return {
            "kind": "material-vertex",
            "sizes": list(self.net.sizes),
            "activation": self.net.activation,
            "level_sets": [ls.to_dict() for ls in self.level_sets],
            "cutoff": self.cutoff.to_dict(),
            "center": list(self.center),
            "units": [_unit_descriptor(u) for u in self.units],
        }


def _unit_descriptor(u: SingularUnit) -> dict:
    return {"center": list(u.center), "lambda": u.lambda_value, "angular": u.angular.describe()}


# ----------------------------------------------------------------- jumps


SigmaSpec = None | float | tuple | Callable[[np.ndarray], np.ndarray]


def _sigma_values(sigma: SigmaSpec, signs: np.ndarray, p: int) -> np.ndarray:
    n = signs.shape[0]
    if sigma is None:
        return np.ones(n)
    if callable(sigma):
        return np.asarray(sigma(signs), dtype=np.float64).reshape(n)
    if isinstance(sigma, (tuple, list)):
        minus, plus = sigma
        return np.where(signs[:, p] > 0, float(plus), float(minus))
    return np.full(n, float(sigma))


def one_sided(field: Field, x, p: int, side: int, tape: Tape | None = None, order: int = 1) -> SpatialJet:
    """Limit of the field jet at points of interface ``p`` from the side ``sign(phi_p) = side``."""
    x = ad.as_points(x, field.dim)
    signs = _interface_signs(field, x, p)
    signs[:, p] = 1.0 if side > 0 else -1.0
    return field.jet(x, tape, order, signs)


def _interface_signs(field: Field, x: np.ndarray, p: int) -> np.ndarray:
    if p >= len(field.level_sets):
        raise NotOnInterface(f"field has no level set {p}")
    vals = np.column_stack([ls.value(x) for ls in field.level_sets])
    if np.any(np.abs(vals[:, p]) > NOT_ON_INTERFACE_TOL):
        raise NotOnInterface(f"points are not on interface {p}")
    others = np.delete(np.arange(vals.shape[1]), p)
    if others.size and np.any(np.abs(vals[:, others]) < ON_INTERFACE_TOL):
        raise OnInterface("point lies on two interfaces")
    return np.sign(vals)


def jump_normal(field: Field, x, p: int, sigma: SigmaSpec = None, tape: Tape | None = None):
    """``sigma+ d_nu u+ - sigma- d_nu u-`` across interface ``p``.

    ``nu`` points toward ``phi_p > 0``.  ``sigma`` may be omitted (1), a
    constant, a ``(minus, plus)`` pair, or a callable mapping a sign pattern
    of shape (N, P) to per-point coefficients.
    """
    x = ad.as_points(x, field.dim)
    base = _interface_signs(field, x, p)
    nu = field.level_sets[p].normal(x)
    out = None
    for side in (1.0, -1.0):
        signs = base.copy()
        signs[:, p] = side
        dn = field.jet(x, tape, 1, signs).directional(nu)
        term = ad.mul(dn, side * _sigma_values(sigma, signs, p))
        out = term if out is None else ad.add(out, term)
    return out


def interface_jump_closed_form(field: InterfaceField, x, p: int) -> np.ndarray:
    """``2 |grad phi_p| w_p`` evaluated directly from the network output."""
    x = ad.as_points(x, field.dim)
    W = field.net.forward(ad.coordinate_jets(x, 0, field.dim)).value_array[0]
    g = np.linalg.norm(field.level_sets[p].gradient(x), axis=1)
    return 2.0 * g * W[:, p + 1]


# --------------------------------------------------------------- reports


def param_count(field: Field) -> int:
    return field.param_count


def singular_report(field: Field, n_theta: int = 360, theta_range=(0.0, 2.0 * np.pi),
                    sigma_of_theta: Callable[[np.ndarray], np.ndarray] | None = None) -> list[dict]:
    """Exponent, angular trace and flux trace of each singular unit.

    The angle grid is the midpoint grid of ``theta_range``, which keeps it off
    axis-aligned interfaces.
    """
    if not field.units:
        raise NoSingularUnit("field has no singular units")
    a, b = theta_range
    th = a + (np.arange(n_theta) + 0.5) * (b - a) / n_theta
    xh = np.column_stack([np.cos(th), np.sin(th)])
    sig = np.ones_like(th) if sigma_of_theta is None else np.asarray(sigma_of_theta(th), dtype=float)
    out = []
    for unit in field.units:
        J = unit.angular.jet(xh, None, 1).value_array
        dphi = -np.sin(th) * J[1] + np.cos(th) * J[2]
        out.append({"lambda": unit.lambda_value, "theta": th, "phi": J[0].copy(), "flux": sig * dphi})
    return out
