"""Fully-connected feed-forward networks evaluated on spatial jets."""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from . import autodiff as ad
from . import kernels
from .autodiff import Param, SpatialJet, Tape, Var
from .errors import InvalidShape

ACTIVATIONS = {"tanh": ad._tab_tanh, "relu": ad._tab_relu}


@dataclass
class MLP:
    """``L_M o ... o L_1`` with ``L_i(x) = act(A_i x + b_i)``; last layer affine."""

    sizes: tuple[int, ...]
    activation: str
    weights: list[Param]
    biases: list[Param]

    @property
    def params(self) -> list[Param]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        return out

    @property
    def param_count(self) -> int:
        return sum(p.size for p in self.params)

    @property
    def n_in(self) -> int:
        return self.sizes[0]

    @property
    def n_out(self) -> int:
        return self.sizes[-1]

    def forward(self, inputs, tape: Tape | None = None, fused: bool = True) -> SpatialJet:
        return mlp_forward(self, inputs, tape, fused)

    def __call__(self, inputs, tape: Tape | None = None) -> SpatialJet:
        return mlp_forward(self, inputs, tape)


def closed_form_count(sizes: Sequence[int]) -> int:
    return sum(a * b + b for a, b in zip(sizes[:-1], sizes[1:]))


def mlp_new(sizes: Sequence[int], activation: str = "tanh", init_seed: int = 0, name: str = "net") -> MLP:
    """Glorot-uniform weights and zero biases from a counter-based generator."""
    sizes = tuple(int(s) for s in sizes)
    if len(sizes) < 2 or min(sizes) < 1:
        raise InvalidShape(f"layer sizes {sizes} invalid: need >= 2 entries, all >= 1")
    if activation not in ACTIVATIONS:
        raise InvalidShape(f"unknown activation {activation!r}")
    rng = np.random.Generator(np.random.Philox(init_seed))
    weights, biases = [], []
    for k, (n_in, n_out) in enumerate(zip(sizes[:-1], sizes[1:])):
        lim = np.sqrt(6.0 / (n_in + n_out))
        weights.append(Param(rng.uniform(-lim, lim, size=(n_out, n_in)), f"{name}.A{k}"))
        biases.append(Param(np.zeros(n_out), f"{name}.b{k}"))
    return MLP(sizes, activation, weights, biases)


def _input_jet(inputs) -> SpatialJet:
    if isinstance(inputs, SpatialJet):
        return inputs
    jets = tuple(inputs)
    if len(jets) == 1:
        j = jets[0]
        data = ad.value_of(j.data)
        if j.is_tracked:
            raise ValueError("tuple inputs must be constant jets; pass a stacked jet instead")
        return SpatialJet(data[..., None], j.dim, j.order)
    return ad.stack_columns(jets)


def mlp_forward(net: MLP, inputs, tape: Tape | None = None, fused: bool = True) -> SpatialJet:
    """Propagate an input jet ``(K, N, n_in)`` to the output jet ``(K, N, n_out)``.

    The fused path records the whole network as one tape node whose backward
    pass calls the jet kernels; the unfused path composes elementary tape ops
    and exists as an independent cross-check.
    """
    x = _input_jet(inputs)
    if ad.value_of(x.data).shape[-1] != net.n_in:
        raise InvalidShape(f"input arity {ad.value_of(x.data).shape[-1]} != {net.n_in}")
    if not fused:
        return _forward_elementary(net, x, tape)
    Ws = [w.value for w in net.weights]
    bs = [b.value for b in net.biases]
    out, cache = _forward_raw(Ws, bs, ad.value_of(x.data), net.activation, x.dim, x.order)
    if tape is None and not x.is_tracked:
        return SpatialJet(out, x.dim, x.order)
    if tape is None:
        tape = x.data.tape
    leaves = tuple(tape.param(p) for p in net.params)

    def vjp(g):
        gW, gb, gx = _backward_raw(Ws, cache, g, net.activation, x.dim, x.order, x.is_tracked)
        cts = []
        for a, b in zip(gW, gb):
            cts += [a, b]
        return tuple(cts) + (gx,)

    node = tape.record(out, leaves + (x.data,), vjp)
    return SpatialJet(node, x.dim, x.order)


def _forward_raw(Ws, bs, X, activation, dim, order):
    table = ACTIVATIONS[activation]
    K = X.shape[0]
    lead = X.shape[:-1]
    A = X
    cache = []
    last = len(Ws) - 1
    for k, (W, b) in enumerate(zip(Ws, bs)):
        Z = (A.reshape(-1, A.shape[-1]) @ W.T).reshape(lead + (W.shape[0],))
        Z[0] += b
        if k == last:
            cache.append((A, None, None))
            A = Z
            break
        flat = Z.reshape(K, -1)
        h0, h1, h2, h3 = table(flat[0])
        A_next = kernels.chain_forward(flat, h0, h1, h2, dim, order).reshape(Z.shape)
        cache.append((A, flat, (h1, h2, h3)))
        A = A_next
    return A, cache


def _backward_raw(Ws, cache, G, activation, dim, order, need_input):
    K = G.shape[0]
    gW = [None] * len(Ws)
    gb = [None] * len(Ws)
    G = np.ascontiguousarray(G)
    gx = None
    for k in range(len(Ws) - 1, -1, -1):
        A, flat, tabs = cache[k]
        if flat is None:
            GZ = G
        else:
            h1, h2, h3 = tabs
            GZ = kernels.chain_backward(flat, h1, h2, h3, G.reshape(K, -1), dim, order).reshape(G.shape)
        n_out = Ws[k].shape[0]
        gW[k] = GZ.reshape(-1, n_out).T @ A.reshape(-1, A.shape[-1])
        gb[k] = GZ[0].reshape(-1, n_out).sum(axis=0)
        if k > 0 or need_input:
            G = (GZ.reshape(-1, n_out) @ Ws[k]).reshape(A.shape)
            if k == 0:
                gx = G
    return gW, gb, gx


def _forward_elementary(net: MLP, x: SpatialJet, tape: Tape | None) -> SpatialJet:
    act = {"tanh": ad.jet_tanh, "relu": ad.jet_relu}[net.activation]
    K = ad.value_of(x.data).shape[0]
    e0 = np.zeros((K, 1, 1))
    e0[0] = 1.0
    h = x
    last = len(net.weights) - 1
    for k, (w, b) in enumerate(zip(net.weights, net.biases)):
        W = ad.param_value(w, tape)
        B = ad.param_value(b, tape)
        Z = ad.add(ad.matmul(h.data, ad.transpose(W)), ad.mul(B, e0))
        h = SpatialJet(Z, x.dim, x.order)
        if k < last:
            h = act(h)
    return h


# ------------------------------------------------------------ checkpoints


def save_params(params: Sequence[Param], path, header: dict | None = None) -> None:
    """Write a flat little-endian float64 vector plus a JSON shape header.

    ``path`` is the binary file; the header goes next to it with suffix
    ``.json``.
    """
    path = Path(path)
    flat = np.concatenate([p.value.ravel() for p in params]) if params else np.zeros(0)
    flat.astype("<f8").tofile(path)
    meta = dict(header or {})
    meta["dtype"] = "float64-le"
    meta["params"] = [{"name": p.name, "shape": list(p.shape)} for p in params]
    meta["total"] = int(flat.size)
    path.with_suffix(".json").write_text(json.dumps(meta, indent=2))


def load_params(params: Sequence[Param], path) -> dict:
    """Fill ``params`` in place from a checkpoint written by :func:`save_params`."""
    path = Path(path)
    meta = json.loads(path.with_suffix(".json").read_text())
    flat = np.fromfile(path, dtype="<f8")
    shapes = [tuple(m["shape"]) for m in meta["params"]]
    if len(shapes) != len(params) or any(tuple(p.shape) != s for p, s in zip(params, shapes)):
        raise InvalidShape("checkpoint shapes do not match the model")
    if flat.size != meta["total"]:
        raise InvalidShape("checkpoint is truncated")
    off = 0
    for p in params:
        n = p.size
        p.value[...] = flat[off:off + n].reshape(p.shape)
        off += n
    return meta
