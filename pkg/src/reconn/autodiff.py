"""Second-order spatial jets over a reverse-mode tape.

Every field evaluation produces a :class:`SpatialJet`: the value, spatial
gradient and spatial Hessian of a scalar field at a batch of points.  The jet
rows are stacked in one array of shape ``(K, N, ...)`` (value, ``dim`` first
derivatives, upper-triangular Hessian) and that array is a single node of a
:class:`Tape`, so each jet operation costs one tape record no matter how many
derivative rows it carries.  Reverse mode over the tape then gives exact
parameter gradients of any scalar built from jet components.

Values that are not :class:`Var` instances are tape constants; every
operation here accepts them and, when no operand lives on a tape, reduces to
plain numpy arithmetic.  That is how exact solutions and tape-free evaluation
share the same code.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import kernels
from .errors import DomainError
from .kernels import hess_pairs, layout_size

POW_PARAM_MIN_BASE = 1e-12


class Param:
    """A trainable tensor.  Identity (not value) keys gradients."""

    __slots__ = ("value", "name")

    def __init__(self, value, name: str = ""):
        self.value = np.array(value, dtype=np.float64)
        self.name = name

    @property
    def size(self) -> int:
        return int(self.value.size)

    @property
    def shape(self) -> tuple:
        return self.value.shape

    def __repr__(self) -> str:
        return f"Param({self.name!r}, shape={self.value.shape})"


class Var:
    """A value recorded on a tape."""

    __slots__ = ("tape", "node", "value")
    __array_ufunc__ = None  # make numpy defer to the reflected operators

    def __init__(self, tape: "Tape", node: int, value: np.ndarray):
        self.tape = tape
        self.node = node
        self.value = value

    shape = property(lambda self: self.value.shape)
    ndim = property(lambda self: self.value.ndim)

    def __repr__(self) -> str:
        return f"Var(node={self.node}, shape={self.value.shape})"

    def __float__(self) -> float:
        return float(self.value)

    def __add__(self, o):
        return add(self, o)

    def __radd__(self, o):
        return add(o, self)

    def __sub__(self, o):
        return sub(self, o)

    def __rsub__(self, o):
        return sub(o, self)

    def __mul__(self, o):
        return mul(self, o)

    def __rmul__(self, o):
        return mul(o, self)

    def __truediv__(self, o):
        return div(self, o)

    def __rtruediv__(self, o):
        return div(o, self)

    def __neg__(self):
        return neg(self)

    def __pow__(self, c):
        return power(self, c)

    def __matmul__(self, o):
        return matmul(self, o)

    def __rmatmul__(self, o):
        return matmul(o, self)

    def __getitem__(self, idx):
        return getitem(self, idx)

    @property
    def T(self):
        return transpose(self)

    def sum(self, axis=None):
        return total(self, axis)

    def mean(self, axis=None):
        return mean(self, axis)


class Tape:
    """Append-only record of operations, replayed backwards by :meth:`backward`.

    One tape is built per loss evaluation and dropped after ``backward``.
    """

    def __init__(self):
        self._values: list[np.ndarray] = []
        self._inputs: list[tuple] = []
        self._vjps: list[Callable | None] = []
        self._leaves: dict[Param, Var] = {}

    def __len__(self) -> int:
        return len(self._values)

    def record(self, value, inputs: tuple = (), vjp: Callable | None = None) -> Var:
        node = len(self._values)
        value = np.asarray(value, dtype=np.float64)
        self._values.append(value)
        self._inputs.append(inputs)
        self._vjps.append(vjp)
        return Var(self, node, value)

    def param(self, p: Param) -> Var:
        v = self._leaves.get(p)
        if v is None:
            v = self.record(p.value)
            self._leaves[p] = v
        return v

    @property
    def params(self) -> list[Param]:
        return list(self._leaves)

    def backward(self, loss: Var) -> dict[Param, np.ndarray]:
        """Gradient of the scalar ``loss`` with respect to every leaf param."""
        if not isinstance(loss, Var) or loss.tape is not self:
            raise ValueError("loss does not belong to this tape")
        grads: list[np.ndarray | None] = [None] * (loss.node + 1)
        grads[loss.node] = np.ones_like(loss.value)
        for k in range(loss.node, -1, -1):
            g = grads[k]
            vjp = self._vjps[k]
            if g is None or vjp is None:
                continue
            inputs = self._inputs[k]
            cts = vjp(g)
            for inp, ct in zip(inputs, cts):
                if ct is None or not isinstance(inp, Var):
                    continue
                ct = _unbroadcast(ct, inp.value.shape)
                j = inp.node
                grads[j] = ct if grads[j] is None else grads[j] + ct
        out = {}
        for p, v in self._leaves.items():
            g = grads[v.node] if v.node <= loss.node else None
            out[p] = np.zeros_like(p.value) if g is None else np.array(g)
        return out


def param_value(p: Param, tape: Tape | None):
    """The param as a tape leaf, or its raw value when evaluating tape-free."""
    return p.value if tape is None else tape.param(p)


def flat_gradient(params: Sequence[Param], grads: dict) -> np.ndarray:
    parts = [np.ravel(grads.get(p, np.zeros_like(p.value))) for p in params]
    return np.concatenate(parts) if parts else np.zeros(0)


# ----------------------------------------------------------------- tape ops


def value_of(x):
    return x.value if isinstance(x, Var) else x


_v = value_of


def _tape_of(inputs) -> Tape | None:
    tape = None
    for x in inputs:
        if isinstance(x, Var):
            if tape is None:
                tape = x.tape
            elif x.tape is not tape:
                raise ValueError("operands live on different tapes")
    return tape


def _record(out, inputs: tuple, vjp: Callable):
    tape = _tape_of(inputs)
    if tape is None:
        return out
    return tape.record(out, inputs, vjp)


def _unbroadcast(g, shape):
    g = np.asarray(g)
    if g.shape == shape:
        return g
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for ax, n in enumerate(shape):
        if n == 1 and g.shape[ax] != 1:
            g = g.sum(axis=ax, keepdims=True)
    return np.broadcast_to(g, shape)


def add(a, b):
    return _record(_v(a) + _v(b), (a, b), lambda g: (g, g))


def sub(a, b):
    return _record(_v(a) - _v(b), (a, b), lambda g: (g, -g))


def mul(a, b):
    av, bv = _v(a), _v(b)
    return _record(av * bv, (a, b), lambda g: (g * bv, g * av))


def div(a, b):
    av, bv = _v(a), _v(b)
    if np.any(np.asarray(bv) == 0):
        raise DomainError("division by zero")
    out = av / bv
    return _record(out, (a, b), lambda g: (g / bv, -g * out / bv))


def neg(a):
    return _record(-_v(a), (a,), lambda g: (-g,))


def power(a, c: float):
    av = _v(a)
    if c != int(c) and np.any(np.asarray(av) <= 0):
        raise DomainError("non-integer power of a non-positive base")
    return _record(av**c, (a,), lambda g: (g * c * av ** (c - 1),))


def matmul(a, b):
    av, bv = _v(a), _v(b)

    def vjp(g):
        ga = g @ np.swapaxes(bv, -1, -2) if isinstance(a, Var) else None
        gb = np.swapaxes(av, -1, -2) @ g if isinstance(b, Var) else None
        return ga, gb

    return _record(av @ bv, (a, b), vjp)


def transpose(a):
    return _record(_v(a).T, (a,), lambda g: (g.T,))


def getitem(a, idx):
    av = _v(a)

    def vjp(g):
        z = np.zeros_like(av)
        np.add.at(z, idx, g)
        return (z,)

    return _record(av[idx], (a,), vjp)


def total(a, axis=None):
    av = _v(a)

    def vjp(g):
        if axis is not None:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, av.shape),)

    return _record(np.sum(av, axis=axis), (a,), vjp)


def mean(a, axis=None):
    av = np.asarray(_v(a))
    n = av.size if axis is None else av.shape[axis]
    return total(a, axis) * (1.0 / n)


def _unary(a, f, df):
    av = _v(a)
    out = f(av)
    return _record(out, (a,), lambda g: (g * df(av, out),))


def sqrt(a):
    if np.any(np.asarray(_v(a)) < 0):
        raise DomainError("sqrt of a negative number")
    return _unary(a, np.sqrt, lambda x, y: 0.5 / y)


def exp(a):
    return _unary(a, np.exp, lambda x, y: y)


def log(a):
    if np.any(np.asarray(_v(a)) <= 0):
        raise DomainError("log of a non-positive number")
    return _unary(a, np.log, lambda x, y: 1.0 / x)


def tanh(a):
    return _unary(a, np.tanh, lambda x, y: 1.0 - y * y)


def sin(a):
    return _unary(a, np.sin, lambda x, y: np.cos(x))


def cos(a):
    return _unary(a, np.cos, lambda x, y: -np.sin(x))


def absolute(a):
    return _unary(a, np.abs, lambda x, y: np.sign(x))


def square(a):
    return _unary(a, np.square, lambda x, y: 2.0 * x)


# ------------------------------------------------------------------- jets


class SpatialJet:
    """Value, gradient and Hessian of a field at a batch of points.

    ``data`` has shape ``(K, N, *trailing)`` with ``K = layout_size(dim,
    order)``.  Hessian symmetry is structural: only ``i <= j`` entries exist.
    """

    __slots__ = ("data", "dim", "order")

    def __init__(self, data, dim: int, order: int):
        k = layout_size(dim, order)
        if _v(data).shape[0] != k:
            raise ValueError(f"jet data has {_v(data).shape[0]} rows, expected {k}")
        self.data = data
        self.dim = dim
        self.order = order

    def __repr__(self) -> str:
        kind = "tape" if self.is_tracked else "const"
        return f"SpatialJet(dim={self.dim}, order={self.order}, shape={_v(self.data).shape}, {kind})"

    @property
    def is_tracked(self) -> bool:
        return isinstance(self.data, Var)

    @property
    def value_array(self) -> np.ndarray:
        return _v(self.data)

    def row(self, k: int):
        return getitem(self.data, k) if self.is_tracked else self.data[k]

    def d(self, i: int):
        if self.order < 1 or i >= self.dim:
            raise IndexError(f"no first derivative {i} in this jet")
        return self.row(1 + i)

    def h(self, i: int, j: int):
        if self.order < 2:
            raise IndexError("jet carries no second derivatives")
        i, j = min(i, j), max(i, j)
        return self.row(1 + self.dim + hess_pairs(self.dim).index((i, j)))

    u = property(lambda self: self.row(0))
    ux = property(lambda self: self.d(0))
    uy = property(lambda self: self.d(1))
    uxx = property(lambda self: self.h(0, 0))
    uxy = property(lambda self: self.h(0, 1))
    uyy = property(lambda self: self.h(1, 1))

    def grad_rows(self):
        """All first-derivative rows as one ``(dim, N, ...)`` slice."""
        if self.order < 1:
            raise IndexError("jet carries no first derivatives")
        sl = slice(1, 1 + self.dim)
        return getitem(self.data, sl) if self.is_tracked else self.data[sl]

    def laplacian(self):
        rows = [1 + self.dim + hess_pairs(self.dim).index((i, i)) for i in range(self.dim)]
        if self.order < 2:
            raise IndexError("jet carries no second derivatives")
        return total(getitem(self.data, rows) if self.is_tracked else self.data[rows], 0)

    def directional(self, nu: np.ndarray):
        """``grad u . nu`` for per-point directions ``nu`` of shape (N, dim)."""
        nu = np.asarray(nu, dtype=np.float64).T  # (dim, N)
        shape = (self.dim, nu.shape[1]) + (1,) * (self.value_array.ndim - 2)
        return total(mul(self.grad_rows(), nu.reshape(shape)), 0)

    def column(self, k):
        idx = (slice(None), slice(None), k)
        return SpatialJet(getitem(self.data, idx) if self.is_tracked else self.data[idx], self.dim, self.order)

    __getitem__ = column

    def truncate(self, order: int) -> "SpatialJet":
        if order >= self.order:
            return self
        k = layout_size(self.dim, order)
        sl = slice(0, k)
        return SpatialJet(getitem(self.data, sl) if self.is_tracked else self.data[sl], self.dim, order)

    def __add__(self, o):
        return jet_add(self, o)

    __radd__ = __add__

    def __sub__(self, o):
        return jet_sub(self, o)

    def __rsub__(self, o):
        return jet_add(jet_neg(self), o)

    def __neg__(self):
        return jet_neg(self)

    def __mul__(self, o):
        return jet_mul(self, o)

    __rmul__ = __mul__

    def __truediv__(self, o):
        return jet_div(self, o)


def _as_jet_pair(a, b):
    order = min(a.order, b.order)
    if a.dim != b.dim:
        raise ValueError("jets of different spatial dimension")
    return a.truncate(order), b.truncate(order), a.dim, order


def jet_add(a, b):
    if isinstance(a, SpatialJet) and isinstance(b, SpatialJet):
        a, b, dim, order = _as_jet_pair(a, b)
        return SpatialJet(add(a.data, b.data), dim, order)
    if not isinstance(a, SpatialJet):
        a, b = b, a
    # spatially constant shift: only the value row moves
    z = np.zeros((a.value_array.shape[0],) + (1,) * (a.value_array.ndim - 1))
    z[0] = 1.0
    return SpatialJet(add(a.data, mul(b, z) if isinstance(b, Var) else np.asarray(b) * z), a.dim, a.order)


def jet_neg(a: SpatialJet) -> SpatialJet:
    return SpatialJet(neg(a.data), a.dim, a.order)


def jet_sub(a, b):
    if isinstance(b, SpatialJet):
        return jet_add(a, jet_neg(b))
    return jet_add(a, neg(b))


def jet_scale(a: SpatialJet, s) -> SpatialJet:
    """Multiply by a factor with no spatial dependence at this order.

    ``s`` may be a number, a Var (e.g. a trainable scalar), or a per-point
    array that is locally constant, such as a sign pattern or a piecewise
    constant coefficient.
    """
    return SpatialJet(mul(a.data, s), a.dim, a.order)


def _mul_raw(A, B, dim, order):
    shape = np.broadcast_shapes(A.shape, B.shape)
    out = np.empty(shape)
    out[0] = A[0] * B[0]
    if order >= 1:
        for i in range(dim):
            out[1 + i] = A[1 + i] * B[0] + A[0] * B[1 + i]
    if order >= 2:
        for h, (i, j) in enumerate(hess_pairs(dim)):
            r = 1 + dim + h
            out[r] = A[r] * B[0] + A[1 + i] * B[1 + j] + A[1 + j] * B[1 + i] + A[0] * B[r]
    return out


def _mul_transpose(G, B, dim, order):
    """Cotangent of ``A`` in ``A * B`` (product rule transposed)."""
    out = np.empty(np.broadcast_shapes(G.shape, B.shape))
    acc = G[0] * B[0]
    if order >= 1:
        for i in range(dim):
            acc = acc + G[1 + i] * B[1 + i]
            out[1 + i] = G[1 + i] * B[0]
    if order >= 2:
        for h, (i, j) in enumerate(hess_pairs(dim)):
            r = 1 + dim + h
            acc = acc + G[r] * B[r]
            out[1 + i] += G[r] * B[1 + j]
            out[1 + j] += G[r] * B[1 + i]
            out[r] = G[r] * B[0]
    out[0] = acc
    return out


def jet_mul(a, b):
    """Product rule to second order; non-jet operands scale the jet."""
    if not isinstance(b, SpatialJet):
        return jet_scale(a, b)
    if not isinstance(a, SpatialJet):
        return jet_scale(b, a)
    a, b, dim, order = _as_jet_pair(a, b)
    A, B = _v(a.data), _v(b.data)
    out = _mul_raw(A, B, dim, order)

    def vjp(g):
        ga = _mul_transpose(g, B, dim, order) if isinstance(a.data, Var) else None
        gb = _mul_transpose(g, A, dim, order) if isinstance(b.data, Var) else None
        return ga, gb

    return SpatialJet(_record(out, (a.data, b.data), vjp), dim, order)


# Derivative tables: f(z) -> (h, h', h'', h''') evaluated at the value row.

def _tab_tanh(z):
    t = np.tanh(z)
    d1 = 1.0 - t * t
    return t, d1, -2.0 * t * d1, d1 * (6.0 * t * t - 2.0)


def _tab_relu(z):
    step = (z > 0).astype(np.float64)
    zero = np.zeros_like(z)
    return z * step, step, zero, zero


def _tab_sin(z):
    s, c = np.sin(z), np.cos(z)
    return s, c, -s, -c


def _tab_cos(z):
    s, c = np.sin(z), np.cos(z)
    return c, -s, -c, s


def _tab_exp(z):
    e = np.exp(z)
    return e, e, e, e


def _tab_log(z):
    if np.any(z <= 0):
        raise DomainError("log of a non-positive jet value")
    r = 1.0 / z
    return np.log(z), r, -r * r, 2.0 * r**3


def _tab_abs(z):
    # sign(0) = 0: derivatives vanish on the (measure-zero) kink
    s = np.sign(z)
    zero = np.zeros_like(z)
    return np.abs(z), s, zero, zero


def _tab_recip(z):
    if np.any(z == 0):
        raise DomainError("division by a zero jet value")
    r = 1.0 / z
    return r, -r * r, 2.0 * r**3, -6.0 * r**4


def _tab_pow(c: float):
    def tab(z):
        if np.any(z <= 0) and (c != int(c) or c < 0):
            raise DomainError(f"power {c} of a non-positive jet value")
        return (
            z**c,
            c * z ** (c - 1),
            c * (c - 1) * z ** (c - 2),
            c * (c - 1) * (c - 2) * z ** (c - 3),
        )

    return tab


def jet_unary(a: SpatialJet, table: Callable) -> SpatialJet:
    """Apply a scalar function through its derivative table (chain rule)."""
    Z = _v(a.data)
    K = Z.shape[0]
    flat = Z.reshape(K, -1)
    h0, h1, h2, h3 = table(flat[0])
    out = kernels.chain_forward(flat, h0, h1, h2, a.dim, a.order).reshape(Z.shape)
    if not isinstance(a.data, Var):
        return SpatialJet(out, a.dim, a.order)

    def vjp(g):
        g = np.ascontiguousarray(g).reshape(K, -1)
        gz = kernels.chain_backward(flat, h1, h2, h3, g, a.dim, a.order)
        return (gz.reshape(Z.shape),)

    return SpatialJet(a.data.tape.record(out, (a.data,), vjp), a.dim, a.order)


def jet_tanh(a):
    return jet_unary(a, _tab_tanh)


def jet_relu(a):
    return jet_unary(a, _tab_relu)


def jet_sin(a):
    return jet_unary(a, _tab_sin)


def jet_cos(a):
    return jet_unary(a, _tab_cos)


def jet_exp(a):
    return jet_unary(a, _tab_exp)


def jet_log(a):
    return jet_unary(a, _tab_log)


def jet_abs(a):
    return jet_unary(a, _tab_abs)


def jet_recip(a):
    return jet_unary(a, _tab_recip)


def jet_pow_const(a, c: float):
    return jet_unary(a, _tab_pow(float(c)))


def jet_sqrt(a):
    return jet_pow_const(a, 0.5)


def jet_div(a, b):
    if isinstance(b, SpatialJet):
        return jet_mul(a, jet_recip(b))
    if np.any(np.asarray(_v(b)) == 0):
        raise DomainError("division by zero")
    return jet_scale(a, div(1.0, b))


def jet_pow_param(r: SpatialJet, lam) -> SpatialJet:
    """``r ** lam`` for a (possibly trainable) exponent, as ``exp(lam ln r)``."""
    rv = r.value_array[0]
    if np.any(rv < POW_PARAM_MIN_BASE):
        raise DomainError(f"pow_param base below {POW_PARAM_MIN_BASE}")
    return jet_exp(jet_scale(jet_log(r), lam))


ELEMENTARY = {
    "add": jet_add,
    "sub": jet_sub,
    "mul": jet_mul,
    "div": jet_div,
    "tanh": jet_tanh,
    "relu": jet_relu,
    "sin": jet_sin,
    "cos": jet_cos,
    "exp": jet_exp,
    "ln": jet_log,
    "abs": jet_abs,
    "pow_const": jet_pow_const,
    "pow_param": jet_pow_param,
}


def jet_elementary(op: str, *args):
    try:
        fn = ELEMENTARY[op]
    except KeyError:
        raise ValueError(f"unknown elementary op {op!r}") from None
    return fn(*args)


# ----------------------------------------------------------------- inputs


def as_points(x, dim: int | None = None) -> np.ndarray:
    """Coerce a point or batch of points to shape (N, dim)."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 0:
        x = x.reshape(1, 1)
    elif x.ndim == 1:
        x = x.reshape(-1, 1) if dim == 1 else x.reshape(1, -1)
    if dim is not None and x.shape[1] != dim:
        raise ValueError(f"points have dimension {x.shape[1]}, expected {dim}")
    return x


def coordinate_jets(x, order: int = 2, dim: int | None = None) -> SpatialJet:
    """Jets of the coordinate functions, stacked on a trailing axis.

    Returns a constant jet with data of shape (K, N, dim).
    """
    x = as_points(x, dim)
    n, d = x.shape
    data = np.zeros((layout_size(d, order), n, d))
    data[0] = x
    if order >= 1:
        for i in range(d):
            data[1 + i, :, i] = 1.0
    return SpatialJet(data, d, order)


def jet_input(x, dim: int, order: int = 2) -> tuple[SpatialJet, ...]:
    """One constant jet per coordinate (unit first, zero second derivatives)."""
    cj = coordinate_jets(x, order, dim)
    return tuple(cj.column(i) for i in range(dim))


def stack_columns(jets: Sequence[SpatialJet]) -> SpatialJet:
    """Stack scalar constant jets into one jet with a trailing axis."""
    if any(j.is_tracked for j in jets):
        raise ValueError("stack_columns expects constant jets")
    return SpatialJet(np.stack([j.data for j in jets], axis=-1), jets[0].dim, jets[0].order)


# --------------------------------------------------------------- FD check


@dataclass
class FDReport:
    grad_dev: float
    laplacian_dev: float
    param_dev: float
    precondition_ok: bool = True
    message: str = ""
    detail: dict = field(default_factory=dict)

    @property
    def max_dev(self) -> float:
        return max(self.grad_dev, self.laplacian_dev, self.param_dev)


REL_DEV_FLOOR = 1e-6


def _rel_dev(a, b, source=0.0) -> float:
    """Max deviation relative to the larger magnitude.

    The scale is floored by ``source``, the magnitude of the quantity the
    differences were taken of (round-off in the quotient is proportional to
    it), and by REL_DEV_FLOOR.
    """
    a, b = np.ravel(a), np.ravel(b)
    scale = max(np.max(np.abs(b)), np.max(np.abs(a)), float(np.max(np.abs(source))), REL_DEV_FLOOR)
    return float(np.max(np.abs(a - b)) / scale)


def fd_check(fld, x, step: float = 1e-5, max_params: int | None = None, seed: int = 0) -> FDReport:
    """Compare AD jets of ``fld`` at one point with central differences.

    The spatial gradient is checked against differences of the value, the
    Laplacian against differences of the AD gradient, and the parameter
    gradient of ``laplacian(u)(x)`` against differences in every parameter
    entry (or ``max_params`` randomly chosen entries).
    """
    x = as_points(x, fld.dim)[:1]
    dist = fld.singular_distance(x)[0] if hasattr(fld, "singular_distance") else np.inf
    if dist <= 10 * step:
        return FDReport(np.nan, np.nan, np.nan, False,
                        f"point within {dist:.3g} of an interface or singular point (need > {10 * step:.3g})")
    d = fld.dim

    def value(p):
        return fld.jet(p, tape=None, order=0).value_array[0, 0]

    def gradient(p):
        return fld.jet(p, tape=None, order=1).value_array[1:1 + d, 0]

    jet = fld.jet(x, tape=None, order=2)
    ad_u = jet.value_array[0, 0]
    ad_grad = jet.value_array[1:1 + d, 0]
    ad_lap = float(np.asarray(jet.laplacian())[0])
    fd_grad = np.empty(d)
    fd_lap = 0.0
    for i in range(d):
        e = np.zeros((1, d))
        e[0, i] = step
        fd_grad[i] = (value(x + e) - value(x - e)) / (2 * step)
        fd_lap += (gradient(x + e)[i] - gradient(x - e)[i]) / (2 * step)

    params = list(fld.params)
    grads = {}
    if params:
        tape = Tape()
        for p in params:
            tape.param(p)
        loss = total(fld.jet(x, tape=tape, order=2).laplacian())
        grads = tape.backward(loss) if isinstance(loss, Var) else {}
    ad_p, fd_p = [], []
    rng = np.random.default_rng(seed)
    entries = [(p, i) for p in params for i in range(p.size)]
    if max_params is not None and len(entries) > max_params:
        pick = rng.choice(len(entries), size=max_params, replace=False)
        entries = [entries[k] for k in sorted(pick)]

    def lap_value():
        return float(np.asarray(fld.jet(x, tape=None, order=2).laplacian())[0])

    for p, i in entries:
        flat = p.value.reshape(-1)
        old = flat[i]
        h = step * max(1.0, abs(old))
        flat[i] = old + h
        up = lap_value()
        flat[i] = old - h
        dn = lap_value()
        flat[i] = old
        fd_p.append((up - dn) / (2 * h))
        ad_p.append(grads[p].reshape(-1)[i] if p in grads else 0.0)
    return FDReport(
        grad_dev=_rel_dev(ad_grad, fd_grad, ad_u),
        laplacian_dev=_rel_dev(ad_lap, fd_lap, ad_grad),
        param_dev=_rel_dev(np.array(ad_p), np.array(fd_p), ad_lap) if entries else 0.0,
        detail={"ad_grad": ad_grad.tolist(), "fd_grad": fd_grad.tolist(),
                "ad_laplacian": ad_lap, "fd_laplacian": fd_lap, "n_params_checked": len(entries)},
    )
