import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from reconn.autodiff import Param
from reconn.errors import ShapeMismatch
from reconn.optimizer import LrSchedule, adam_new, adam_step, lr_at


def test_schedule_examples():
    s = LrSchedule(10_000)
    assert lr_at(s, 0) == 1e-3
    assert lr_at(s, 5000) == 1e-3
    assert lr_at(s, 10_000) == pytest.approx(1e-6, rel=1e-12)
    assert lr_at(s, 7500) == pytest.approx(np.sqrt(1e-3 * 1e-6), rel=1e-12)
    assert lr_at(s, 7500) == pytest.approx(3.162e-5, rel=1e-3)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 100_000))
def test_schedule_shape(T):
    s = LrSchedule(T)
    its = np.unique(np.linspace(0, T, min(T + 1, 200)).astype(int))
    lr = np.array([lr_at(s, i) for i in its])
    assert np.all(np.diff(lr) <= 0)
    assert np.all(lr[its <= T / 2] == 1e-3)
    assert np.all(np.diff(lr[its > T / 2]) < 0)


def test_schedule_continuous_at_half():
    s = LrSchedule(1000)
    assert lr_at(s, 501) == pytest.approx(1e-3, rel=2e-2)


def test_schedule_range_check():
    with pytest.raises(ValueError):
        lr_at(LrSchedule(10), 11)


def test_zero_gradient_keeps_params():
    p = Param(np.array([1.0, -2.0]))
    st_ = adam_new([p])
    adam_step(st_, [p], np.zeros(2), 1e-3)
    assert p.value.tolist() == [1.0, -2.0] and st_.step == 1


@settings(max_examples=30, deadline=None)
@given(st.floats(-1e3, 1e3).filter(lambda g: abs(g) > 1e-3), st.floats(1e-6, 1e-1))
def test_first_step_is_lr_times_sign(g, lr):
    p = Param(np.array(0.0))
    adam_step(adam_new([p]), [p], np.array([g]), lr)
    assert float(p.value) == pytest.approx(-lr * np.sign(g), rel=1e-4)


def test_shape_mismatch():
    p = Param(np.zeros(3))
    with pytest.raises(ShapeMismatch):
        adam_step(adam_new([p]), [p], np.zeros(2), 1e-3)


def test_trajectory_is_deterministic():
    def run():
        rng = np.random.Generator(np.random.Philox(4))
        p = Param(rng.normal(size=5))
        s = adam_new([p])
        for _ in range(50):
            adam_step(s, [p], 2 * p.value + rng.normal(size=5) * 0.01, 1e-2)
        return p.value.copy()

    assert np.array_equal(run(), run())


def test_adam_minimises_quadratic():
    p = Param(np.array([3.0, -4.0]))
    s = adam_new([p])
    for i in range(3000):
        adam_step(s, [p], 2 * p.value, 1e-2)
    assert np.linalg.norm(p.value) < 1e-2
