import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from reconn import architectures as A
from reconn import autodiff as ad
from reconn.errors import AtCenter, NoSingularUnit, NotOnInterface, OnInterface
from reconn.geometry import Cutoff, LevelSet
from reconn.network import mlp_new
from reconn.verify import one_sided_fd_derivative

CUT = Cutoff(0.5, 0.9)
CIRCLE = LevelSet("circle", c=0.25)
AXES = (LevelSet("line-x1"), LevelSet("line-x2"))
MID_1D = LevelSet("point-1d", c=np.pi / 2, scale=0.5)


def _const_net(sizes, values):
    net = mlp_new(sizes)
    for p in net.params:
        p.value[...] = 0.0
    net.biases[-1].value[...] = values
    return net


def _toy_1d(w0_slope, w1):
    """1D field with w0(x) = slope * x and w1 constant."""
    net = mlp_new((1, 2))
    net.weights[0].value[...] = [[w0_slope], [0.0]]
    net.biases[0].value[...] = [0.0, w1]
    return A.InterfaceField(net, [MID_1D])


def _corner(seed=0):
    ang = A.ClassicalField(mlp_new((2, 6, 6, 1), init_seed=seed + 1))
    unit = A.SingularUnit((0.0, 0.0), ang, CUT, 0.6)
    return A.CornerField(mlp_new((2, 8, 8, 2), init_seed=seed), [unit], CUT)


def _material(seed=0):
    ang = A.InterfaceField(mlp_new((2, 6, 6, 3), init_seed=seed + 1), AXES)
    unit = A.SingularUnit((0.0, 0.0), ang, CUT, 0.7)
    return A.MaterialVertexField(mlp_new((2, 8, 8, 6), init_seed=seed), AXES, [unit], CUT)


def _circle_points(n, offset=0.013):
    th = np.linspace(0, 2 * np.pi, n, endpoint=False) + offset
    return 0.5 * np.column_stack([np.cos(th), np.sin(th)])


# ---------------------------------------------------------------- examples

def test_interface_field_constant_net():
    f = A.InterfaceField(_const_net((2, 3, 2), [1.5, -2.0]), [CIRCLE])
    assert f.jet([[1.0, 0.0]]).u[0] == pytest.approx(1.5 + 0.75 * -2.0, abs=1e-15)


def test_corner_field_zero_nets():
    f = _corner()
    for p in f.params:
        p.value[...] = 0.0
    j = f.jet([[0.3, 0.2], [-0.4, 0.6]])
    assert np.all(ad.value_of(j.data) == 0.0)


def test_toy_1d_value():
    f = _toy_1d(1.0, 2.0)
    x = np.pi / 2 + 0.1
    assert f.jet([[x]]).u[0] == pytest.approx(x + 2 * 0.05, rel=1e-15)


def test_toy_1d_one_sided_limits():
    f = _toy_1d(0.0, 1.0)
    up = A.one_sided(f, [[np.pi / 2]], 0, +1).d(0)[0]
    down = A.one_sided(f, [[np.pi / 2]], 0, -1).d(0)[0]
    assert up == pytest.approx(0.5) and down == pytest.approx(-0.5)


def test_toy_1d_flux_jump():
    f = _toy_1d(1.0, 2.0)
    j = ad.value_of(A.jump_normal(f, [[np.pi / 2]], 0, sigma=(3.0, 1.0)))[0]
    # 1 * (w0' + w1/2) - 3 * (w0' - w1/2)
    assert j == pytest.approx(1 * (1 + 1) - 3 * (1 - 1))


def test_evaluation_on_interface_raises():
    f = A.InterfaceField(mlp_new((2, 3, 2)), [CIRCLE])
    with pytest.raises(OnInterface):
        f.jet([[0.5, 0.0]])


def test_one_sided_off_interface_raises():
    f = A.InterfaceField(mlp_new((2, 3, 2)), [CIRCLE])
    with pytest.raises(NotOnInterface):
        A.one_sided(f, [[0.3, 0.0]], 0, 1)
    with pytest.raises(NotOnInterface):
        A.jump_normal(f, [[0.3, 0.0]], 0)


def test_singular_unit_at_center_raises():
    with pytest.raises(AtCenter):
        _corner().jet([[0.0, 0.0]])


# ------------------------------------------------------------------ jumps

def test_jump_identity_on_circle():
    f = A.InterfaceField(mlp_new((2, 10, 10, 2), init_seed=4), [CIRCLE])
    x = _circle_points(100)
    j = ad.value_of(A.jump_normal(f, x, 0))
    np.testing.assert_allclose(j, A.interface_jump_closed_form(f, x, 0), rtol=0, atol=1e-12)


def test_jump_zero_when_kink_output_vanishes():
    net = mlp_new((2, 5, 2), init_seed=1)
    net.weights[-1].value[1] = 0.0
    f = A.InterfaceField(net, [CIRCLE])
    assert np.max(np.abs(ad.value_of(A.jump_normal(f, _circle_points(20), 0)))) < 1e-15


def test_jump_matches_one_sided_fd_on_circle():
    f = A.InterfaceField(mlp_new((2, 10, 10, 2), init_seed=5), [CIRCLE])
    x = _circle_points(100)
    nu = CIRCLE.normal(x)
    fd = one_sided_fd_derivative(f, x, nu, 1) - one_sided_fd_derivative(f, x, nu, -1)
    j = ad.value_of(A.jump_normal(f, x, 0))
    assert np.max(np.abs(fd - j)) / np.max(np.abs(j)) < 1e-4


def test_one_sided_normal_derivative_matches_fd():
    f = A.InterfaceField(mlp_new((2, 10, 10, 2), init_seed=6), [CIRCLE])
    x = _circle_points(30)
    nu = CIRCLE.normal(x)
    for side in (1, -1):
        ad_dn = A.one_sided(f, x, 0, side).directional(nu)
        fd_dn = one_sided_fd_derivative(f, x, nu, side)
        assert np.max(np.abs(ad_dn - fd_dn)) < 1e-4 * max(1.0, np.max(np.abs(ad_dn)))


def test_material_flux_jump_matches_fd():
    f = _material(3)
    x = np.column_stack([np.zeros(20), np.linspace(-0.95, 0.95, 20) + 0.011])
    nu = AXES[0].normal(x)

    def sig(signs):
        return np.where(signs[:, 0] > 0, 2.0, 5.0)

    j = ad.value_of(A.jump_normal(f, x, 0, sigma=sig))
    fd = 2.0 * one_sided_fd_derivative(f, x, nu, 1) - 5.0 * one_sided_fd_derivative(f, x, nu, -1)
    assert np.max(np.abs(fd - j)) < 1e-4 * max(1.0, np.max(np.abs(j)))


# -------------------------------------------------------------- continuity

@pytest.mark.parametrize("make", [
    lambda: A.InterfaceField(mlp_new((2, 8, 2), init_seed=7), [CIRCLE]),
    lambda: _material(8),
])
def test_continuity_across_interfaces(make):
    f = make()
    p = len(f.level_sets) - 1
    x = _circle_points(12) if p == 0 else np.column_stack([np.linspace(-0.9, 0.9, 12) + 0.017, np.zeros(12)])
    nu = f.level_sets[p].normal(x)
    gaps = []
    for t in (1e-3, 1e-4, 1e-5):
        gaps.append(np.max(np.abs(f(x + t * nu)[0] - f(x - t * nu)[0])))
    assert gaps[2] < 1e-4
    assert 5 < gaps[0] / gaps[1] < 20 and 5 < gaps[1] / gaps[2] < 20


def test_corner_field_continuous_along_circle_through_cutoff():
    f = _corner(2)
    r = np.linspace(0.3, 1.0, 701)
    x = np.column_stack([r * np.cos(0.4), r * np.sin(0.4)])
    lap = f.jet(x).laplacian()
    assert np.all(np.isfinite(lap))
    assert np.max(np.abs(np.diff(f(x)[0]))) < 0.05


# --------------------------------------------------------------- structure

def test_singular_unit_vanishes_beyond_delta2():
    unit = _corner().units[0]
    th = np.linspace(0, 2 * np.pi, 50)
    for rad in (0.9, 0.95, 1.3):
        x = rad * np.column_stack([np.cos(th), np.sin(th)])
        x = x[np.linalg.norm(x, axis=1) >= CUT.delta2]
        assert len(x) > 10
        assert np.all(ad.value_of(unit.apply(x).data) == 0.0)


def test_zero_cutoff_leaves_smooth_part():
    class Zero(Cutoff):
        def table(self, r):
            z = np.zeros_like(np.asarray(r, dtype=float))
            return z, z, z, z

    f = _corner(4)
    zero = Zero(0.5, 0.9)
    f.cutoff = zero
    for u in f.units:
        u.cutoff = zero
    x = np.random.default_rng(0).uniform(-1, 1, (40, 2))
    w0 = f.net(ad.coordinate_jets(x)).column(0)
    np.testing.assert_array_equal(ad.value_of(f.jet(x).data), ad.value_of(w0.data))


def test_param_counts():
    corner_net = mlp_new((2, 30, 30, 30, 2))
    assert corner_net.param_count == 2012
    ang = A.ClassicalField(mlp_new((2, 15, 15, 15, 1)))
    corner = A.CornerField(corner_net, [A.SingularUnit((0, 0), ang, CUT)], CUT)
    assert A.param_count(corner) == 2554
    mang = A.InterfaceField(mlp_new((2, 15, 15, 15, 3)), AXES)
    mat = A.MaterialVertexField(mlp_new((2, 30, 30, 30, 6)), AXES, [A.SingularUnit((0, 0), mang, CUT)], CUT)
    assert A.param_count(mat) == 2710
    assert A.param_count(A.ClassicalField(mlp_new((1, 20, 20, 20, 1)))) == 901


def test_singular_report():
    rep = A.singular_report(_corner(), n_theta=36)
    assert rep[0]["lambda"] == 0.6
    assert rep[0]["theta"].shape == (36,)
    fresh = A.SingularUnit((0, 0), A.ClassicalField(mlp_new((2, 3, 1))), CUT)
    f = A.CornerField(mlp_new((2, 3, 2)), [fresh], CUT)
    assert A.singular_report(f)[0]["lambda"] == 0.5
    with pytest.raises(NoSingularUnit):
        A.singular_report(A.ClassicalField(mlp_new((2, 3, 1))))


def test_singular_report_flux_is_angular_derivative():
    f = _corner(5)
    rep = A.singular_report(f, n_theta=2000, theta_range=(0.0, 2 * np.pi))[0]
    dphi = np.gradient(rep["phi"], rep["theta"])
    assert np.max(np.abs(dphi[1:-1] - rep["flux"][1:-1])) < 1e-4


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 1000), a=st.floats(-0.95, 0.95), b=st.floats(-0.95, 0.95))
def test_material_field_matches_fd(seed, a, b):
    f = _material(seed)
    if f.singular_distance([[a, b]])[0] < 0.05:
        return
    rep = ad.fd_check(f, [[a, b]], 1e-5, max_params=6, seed=seed)
    assert rep.max_dev < 1e-4
