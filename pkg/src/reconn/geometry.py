"""Level sets, cutoff and weight functions, polar jets, domains and samplers."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .autodiff import SpatialJet
from .errors import AtCenter
from .kernels import hess_pairs, layout_size

TWO_PI = 2.0 * np.pi
CENTER_EPS = 1e-12


def make_rng(seed: int) -> np.random.Generator:
    """Counter-based (Philox) generator: same seed, same stream everywhere."""
    return np.random.Generator(np.random.Philox(int(seed)))


# -------------------------------------------------------------- level sets


@dataclass(frozen=True)
class LevelSet:
    """A closed-form interface function.

    kinds: ``circle`` (|x|^2 - c), ``line-x1`` (x1), ``line-x2`` (x2) and
    ``point-1d`` (scale * (x - c)).
    """

    kind: str
    c: float = 0.0
    scale: float = 1.0

    def __post_init__(self):
        if self.kind not in ("circle", "line-x1", "line-x2", "point-1d"):
            raise ValueError(f"unknown level-set kind {self.kind!r}")

    def jet(self, X: SpatialJet) -> SpatialJet:
        """Level set composed with an input jet ``X`` of trailing size dim."""
        if self.kind == "line-x1":
            return X.column(0)
        if self.kind == "line-x2":
            return X.column(1)
        if self.kind == "point-1d":
            return ad.jet_scale(ad.jet_sub(X.column(0), self.c), self.scale)
        out = None
        for i in range(ad.value_of(X.data).shape[-1]):
            xi = X.column(i)
            sq = ad.jet_mul(xi, xi)
            out = sq if out is None else ad.jet_add(out, sq)
        return ad.jet_sub(out, self.c)

    def value(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        if self.kind == "circle":
            return np.sum(x * x, axis=1) - self.c
        if self.kind == "line-x1":
            return x[:, 0].copy()
        if self.kind == "line-x2":
            return x[:, 1].copy()
        return self.scale * (x[:, 0] - self.c)

    def gradient(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        g = np.zeros_like(x)
        if self.kind == "circle":
            g = 2.0 * x
        elif self.kind == "line-x1":
            g[:, 0] = 1.0
        elif self.kind == "line-x2":
            g[:, 1] = 1.0
        else:
            g[:, 0] = self.scale
        return g

    def normal(self, x) -> np.ndarray:
        """Unit normal pointing toward ``{phi > 0}``."""
        g = self.gradient(x)
        return g / np.linalg.norm(g, axis=1, keepdims=True)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "c": self.c, "scale": self.scale}


# ------------------------------------------------------------------ cutoff


def eta0(t):
    """Quintic smoothstep: 1 for t < 0, 0 for t > 1, C^2 at both knots."""
    t = np.asarray(t, dtype=np.float64)
    tc = np.clip(t, 0.0, 1.0)
    return 1.0 + tc**3 * (-10.0 + tc * (15.0 - 6.0 * tc))


def _eta0_table(t):
    inside = (t > 0.0) & (t < 1.0)
    tc = np.clip(t, 0.0, 1.0)
    h0 = 1.0 + tc**3 * (-10.0 + tc * (15.0 - 6.0 * tc))
    h1 = np.where(inside, -30.0 * tc**2 * (1.0 - tc) ** 2, 0.0)
    h2 = np.where(inside, -60.0 * tc * (1.0 - tc) * (1.0 - 2.0 * tc), 0.0)
    h3 = np.where(inside, -60.0 + 360.0 * tc - 360.0 * tc**2, 0.0)
    return h0, h1, h2, h3


@dataclass(frozen=True)
class Cutoff:
    """``eta(r) = eta0((r - delta1) / (delta2 - delta1))``: 1 below delta1, 0 above delta2."""

    delta1: float = 0.5
    delta2: float = 0.9

    def __post_init__(self):
        if not 0.0 < self.delta1 < self.delta2:
            raise ValueError("cutoff needs 0 < delta1 < delta2")

    def table(self, r):
        L = self.delta2 - self.delta1
        h0, h1, h2, h3 = _eta0_table((np.asarray(r, dtype=np.float64) - self.delta1) / L)
        return h0, h1 / L, h2 / L**2, h3 / L**3

    def eta(self, r):
        """(eta, eta', eta'') at radius ``r``."""
        h0, h1, h2, _ = self.table(r)
        return h0, h1, h2

    def jet(self, r: SpatialJet) -> SpatialJet:
        return ad.jet_unary(r, self.table)

    def to_dict(self) -> dict:
        return {"delta1": self.delta1, "delta2": self.delta2}


def weight_omega(kind: str, x) -> np.ndarray:
    """Singularity-damping weights: min(40|x|^2, 1) on areas, min(40|x|, 1) on lines."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    r2 = np.sum(x * x, axis=1)
    if kind in ("lshape", "mat-area"):
        return np.minimum(40.0 * r2, 1.0)
    if kind == "mat-line":
        return np.minimum(40.0 * np.sqrt(r2), 1.0)
    raise ValueError(f"unknown weight kind {kind!r}")


# ------------------------------------------------------------ polar jets


def polar_jets(x, center=(0.0, 0.0), order: int = 2) -> tuple[SpatialJet, SpatialJet]:
    """Jets of ``r = |x - c|`` and ``xhat = (x - c) / r``.

    ``xhat`` is returned stacked, with data of shape (K, N, 2).
    """
    x = ad.as_points(x, 2)
    y = x - np.asarray(center, dtype=np.float64)
    r = np.linalg.norm(y, axis=1)
    if np.any(r < CENTER_EPS):
        raise AtCenter(f"point within {CENTER_EPS} of the polar center")
    e = y / r[:, None]
    K = layout_size(2, order)
    rd = np.zeros((K, x.shape[0]))
    xd = np.zeros((K, x.shape[0], 2))
    rd[0] = r
    xd[0] = e
    if order >= 1:
        for i in range(2):
            rd[1 + i] = e[:, i]
            for k in range(2):
                xd[1 + i, :, k] = ((i == k) - e[:, i] * e[:, k]) / r
    if order >= 2:
        for h, (i, j) in enumerate(hess_pairs(2)):
            row = 3 + h
            rd[row] = ((i == j) - e[:, i] * e[:, j]) / r
            for k in range(2):
                xd[row, :, k] = -(
                    (i == k) * e[:, j] + (j == k) * e[:, i] + (i == j) * e[:, k]
                    - 3.0 * e[:, i] * e[:, j] * e[:, k]
                ) / r**2
    return SpatialJet(rd, 2, order), SpatialJet(xd, 2, order)


def angle_jet(x, center=(0.0, 0.0), reference=None, order: int = 2) -> SpatialJet:
    """Jet of the polar angle, on the branch nearest ``reference`` (per point)."""
    x = ad.as_points(x, 2)
    y = x - np.asarray(center, dtype=np.float64)
    r2 = np.sum(y * y, axis=1)
    if np.any(r2 < CENTER_EPS**2):
        raise AtCenter("angle undefined at the polar center")
    th = np.arctan2(y[:, 1], y[:, 0])
    if reference is not None:
        th = th + TWO_PI * np.round((np.asarray(reference) - th) / TWO_PI)
    K = layout_size(2, order)
    d = np.zeros((K, x.shape[0]))
    d[0] = th
    if order >= 1:
        d[1] = -y[:, 1] / r2
        d[2] = y[:, 0] / r2
    if order >= 2:
        r4 = r2 * r2
        d[3] = 2.0 * y[:, 0] * y[:, 1] / r4
        d[4] = (y[:, 1] ** 2 - y[:, 0] ** 2) / r4
        d[5] = -2.0 * y[:, 0] * y[:, 1] / r4
    return SpatialJet(d, 2, order)


# ----------------------------------------------------------------- domains


@dataclass(frozen=True)
class Segment:
    a: tuple
    b: tuple

    @property
    def length(self) -> float:
        return float(np.linalg.norm(np.subtract(self.b, self.a)))

    def at(self, t) -> np.ndarray:
        a, b = np.asarray(self.a, float), np.asarray(self.b, float)
        return a + np.asarray(t)[:, None] * (b - a)


@dataclass(frozen=True)
class InterfaceCurve:
    """An interface: a circle, a union of straight pieces, or a 1D point."""

    level_set: int
    kind: str  # circle | segments | point
    radius: float = 0.0
    pieces: tuple = ()
    point: float = 0.0

    @property
    def length(self) -> float:
        if self.kind == "circle":
            return TWO_PI * self.radius
        if self.kind == "segments":
            return sum(s.length for s in self.pieces)
        return 0.0


_SQUARE_SIDES = (
    Segment((-1.0, -1.0), (1.0, -1.0)),
    Segment((1.0, -1.0), (1.0, 1.0)),
    Segment((1.0, 1.0), (-1.0, 1.0)),
    Segment((-1.0, 1.0), (-1.0, -1.0)),
)

_LSHAPE_SIDES = (
    Segment((0.0, -1.0), (1.0, -1.0)),
    Segment((1.0, -1.0), (1.0, 1.0)),
    Segment((1.0, 1.0), (-1.0, 1.0)),
    Segment((-1.0, 1.0), (-1.0, 0.0)),
    Segment((-1.0, 0.0), (0.0, 0.0)),
    Segment((0.0, 0.0), (0.0, -1.0)),
)


@dataclass(frozen=True)
class Domain:
    """interval (0, pi), square (-1, 1)^2 or the L-shape (-1, 1)^2 minus [-1, 0]^2."""

    kind: str
    interfaces: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if self.kind not in ("interval", "square", "lshape"):
            raise ValueError(f"unknown domain kind {self.kind!r}")

    @property
    def dim(self) -> int:
        return 1 if self.kind == "interval" else 2

    @property
    def boundary_segments(self) -> tuple:
        if self.kind == "square":
            return _SQUARE_SIDES
        if self.kind == "lshape":
            return _LSHAPE_SIDES
        return ()

    @property
    def boundary_points(self) -> np.ndarray:
        return np.array([[0.0], [np.pi]]) if self.kind == "interval" else np.zeros((0, 2))

    def contains(self, x) -> np.ndarray:
        x = ad.as_points(x, self.dim)
        if self.kind == "interval":
            return (x[:, 0] > 0) & (x[:, 0] < np.pi)
        inside = np.all(np.abs(x) < 1.0, axis=1)
        if self.kind == "lshape":
            inside &= ~((x[:, 0] <= 0) & (x[:, 1] <= 0))
        return inside

    def bounds(self) -> tuple[float, float]:
        return (0.0, np.pi) if self.kind == "interval" else (-1.0, 1.0)


def _uniform_open(rng, lo, hi, size):
    u = rng.uniform(lo, hi, size=size)
    # the generator is half-open; exclude the lower endpoint as well
    return np.where(u == lo, 0.5 * (lo + hi), u)


def _sample_interior(domain: Domain, n: int, rng, stratified: bool) -> np.ndarray:
    if domain.kind == "interval":
        return _uniform_open(rng, 0.0, np.pi, (n, 1))
    if domain.kind == "square" and not stratified:
        return _uniform_open(rng, -1.0, 1.0, (n, 2))
    quads = np.array([[1, 1], [-1, 1], [-1, -1], [1, -1]], dtype=float)
    if domain.kind == "lshape":
        quads = quads[[0, 1, 3]]
    if stratified:
        q = np.repeat(np.arange(len(quads)), -(-n // len(quads)))[:n]
    else:
        q = rng.integers(0, len(quads), size=n)
    u = _uniform_open(rng, 0.0, 1.0, (n, 2))
    return u * quads[q]


def _sample_segments(segs, n: int, rng, stratified: bool) -> np.ndarray:
    lengths = np.array([s.length for s in segs])
    if stratified:
        which = np.repeat(np.arange(len(segs)), -(-n // len(segs)))[:n]
    else:
        which = rng.choice(len(segs), size=n, p=lengths / lengths.sum())
    t = _uniform_open(rng, 0.0, 1.0, n)
    out = np.empty((n, 2))
    for k, s in enumerate(segs):
        m = which == k
        out[m] = s.at(t[m])
    return out


def sample_interface(domain: Domain, n: int, rng, stratified: bool = False,
                     index: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Points on the interfaces and the level-set index each one lies on."""
    curves = [c for c in domain.interfaces if index is None or c.level_set == index]
    if not curves:
        raise ValueError("domain has no such interface")
    if curves[0].kind == "point":
        pts = np.array([[c.point] for c in curves])
        return pts, np.array([c.level_set for c in curves])
    pieces, owner = [], []
    for c in curves:
        if c.kind == "circle":
            pieces.append(c)
            owner.append(c.level_set)
        else:
            for s in c.pieces:
                pieces.append(s)
                owner.append(c.level_set)
    lengths = np.array([p.length for p in pieces])
    if stratified:
        which = np.repeat(np.arange(len(pieces)), -(-n // len(pieces)))[:n]
    else:
        which = rng.choice(len(pieces), size=n, p=lengths / lengths.sum())
    t = _uniform_open(rng, 0.0, 1.0, n)
    out = np.empty((n, 2))
    for k, p in enumerate(pieces):
        m = which == k
        if isinstance(p, InterfaceCurve):
            ang = TWO_PI * t[m]
            out[m] = p.radius * np.column_stack([np.cos(ang), np.sin(ang)])
        else:
            out[m] = p.at(t[m])
    return out, np.asarray(owner)[which]


def sample(domain: Domain, region, n: int, rng, stratified: bool = False) -> np.ndarray:
    """Random points in ``region``: 'interior', 'boundary', 'interface' or ('interface', p)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if region == "interior":
        return _sample_interior(domain, n, rng, stratified)
    if region == "boundary":
        if domain.kind == "interval":
            return domain.boundary_points.copy()
        return _sample_segments(domain.boundary_segments, n, rng, stratified)
    if region == "interface":
        return sample_interface(domain, n, rng, stratified)[0]
    if isinstance(region, tuple) and region[0] == "interface":
        return sample_interface(domain, n, rng, stratified, index=region[1])[0]
    raise ValueError(f"unknown region {region!r}")
