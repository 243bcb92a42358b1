"""Adam with a constant-then-exponential learning-rate schedule."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .autodiff import Param
from .errors import ShapeMismatch


@dataclass(frozen=True)
class LrSchedule:
    """``lr0`` for the first half of ``total`` iterations, then geometric decay to ``lr_final``."""

    total: int
    lr0: float = 1e-3
    lr_final: float = 1e-6

    def __call__(self, it: int) -> float:
        return lr_at(self, it)

    def to_dict(self) -> dict:
        return {"total": self.total, "lr0": self.lr0, "lr_final": self.lr_final}


def lr_at(schedule: LrSchedule, it: int) -> float:
    T = schedule.total
    if not 0 <= it <= T:
        raise ValueError(f"iteration {it} outside [0, {T}]")
    half = T / 2.0
    if it <= half:
        return schedule.lr0
    ratio = schedule.lr_final / schedule.lr0
    return schedule.lr0 * ratio ** ((it - half) / half)


@dataclass
class AdamState:
    size: int
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: np.ndarray = field(default=None)
    v: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.m is None:
            self.m = np.zeros(self.size)
        if self.v is None:
            self.v = np.zeros(self.size)


def adam_new(params: Sequence[Param], **kw) -> AdamState:
    return AdamState(sum(p.size for p in params), **kw)


def adam_step(state: AdamState, params: Sequence[Param], gradient: np.ndarray, lr: float) -> None:
    """Bias-corrected Adam update, applied to ``params`` in place."""
    g = np.asarray(gradient, dtype=np.float64).ravel()
    if g.size != state.size or sum(p.size for p in params) != state.size:
        raise ShapeMismatch(f"gradient length {g.size} != parameter count {state.size}")
    state.step += 1
    b1, b2 = state.beta1, state.beta2
    state.m *= b1
    state.m += (1 - b1) * g
    state.v *= b2
    state.v += (1 - b2) * g * g
    mhat = state.m / (1 - b1**state.step)
    vhat = state.v / (1 - b2**state.step)
    upd = lr * mhat / (np.sqrt(vhat) + state.eps)
    off = 0
    for p in params:
        n = p.size
        p.value -= upd[off:off + n].reshape(p.shape)
        off += n
