"""Hot kernels for the second-order jet chain rule.

A jet array has shape ``(K, M)``: row 0 is the value, rows ``1..dim`` the
first spatial derivatives and the remaining rows the upper-triangular Hessian
entries.  For a scalar map ``h`` applied to a jet ``z``::

    out_0  = h(z_0)
    out_i  = h'(z_0) z_i
    out_ij = h''(z_0) z_i z_j + h'(z_0) z_ij

``chain_backward`` is the transpose of the linearisation of that map with
respect to ``z`` and needs ``h'''``.

The compiled extension ``reconn._jetkernels`` is used when importable; set
``RECONN_KERNELS=python`` to force the numpy fallback.
"""
from __future__ import annotations

import os

import numpy as np

__all__ = [
    "BACKEND",
    "chain_forward",
    "chain_backward",
    "chain_forward_py",
    "chain_backward_py",
    "hess_pairs",
    "layout_size",
]


def hess_pairs(dim: int) -> list[tuple[int, int]]:
    return [(i, j) for i in range(dim) for j in range(i, dim)]


def layout_size(dim: int, order: int) -> int:
    """Number of jet rows for ``dim`` spatial variables up to ``order``."""
    k = 1
    if order >= 1:
        k += dim
    if order >= 2:
        k += dim * (dim + 1) // 2
    return k


def chain_forward_py(z, h0, h1, h2, dim, order):
    out = np.empty_like(z)
    out[0] = h0
    if order >= 1:
        out[1:1 + dim] = h1 * z[1:1 + dim]
    if order >= 2:
        for h, (i, j) in enumerate(hess_pairs(dim)):
            r = 1 + dim + h
            out[r] = h2 * z[1 + i] * z[1 + j] + h1 * z[r]
    return out


def chain_backward_py(z, h1, h2, h3, g, dim, order):
    out = np.empty_like(z)
    acc = g[0] * h1
    if order >= 1:
        grads = g[1:1 + dim]
        acc = acc + h2 * np.einsum("im,im->m", grads, z[1:1 + dim])
        gi = grads * h1
        if order >= 2:
            for h, (i, j) in enumerate(hess_pairs(dim)):
                r = 1 + dim + h
                gh = g[r]
                acc = acc + gh * (h3 * z[1 + i] * z[1 + j] + h2 * z[r])
                gi[i] += gh * h2 * z[1 + j]
                gi[j] += gh * h2 * z[1 + i]
                out[r] = gh * h1
        out[1:1 + dim] = gi
    out[0] = acc
    return out


try:
    if os.environ.get("RECONN_KERNELS", "auto").lower() == "python":
        raise ImportError("compiled kernels disabled by RECONN_KERNELS")
    from reconn import _jetkernels as _ext
except ImportError:
    _ext = None

BACKEND = "cython" if _ext is not None else "python"


def _prep(a):
    return np.ascontiguousarray(a, dtype=np.float64)


if _ext is not None:

    def chain_forward(z, h0, h1, h2, dim, order):
        return _ext.chain_forward(_prep(z), _prep(h0), _prep(h1), _prep(h2), dim, order)

    def chain_backward(z, h1, h2, h3, g, dim, order):
        return _ext.chain_backward(
            _prep(z), _prep(h1), _prep(h2), _prep(h3), _prep(g), dim, order
        )

else:
    chain_forward = chain_forward_py
    chain_backward = chain_backward_py
