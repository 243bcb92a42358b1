import numpy as np
import pytest

from reconn import architectures as A
from reconn import autodiff as ad
from reconn import losses as L
from reconn.autodiff import Tape
from reconn.geometry import Cutoff, LevelSet, make_rng
from reconn.network import mlp_new
from reconn.problems import PROBLEMS, problem_1d, problem_interface, problem_lshape

CUT = Cutoff(0.5, 0.9)


def _zeroed(field):
    for p in field.params:
        p.value[...] = 0.0
    return field


@pytest.fixture(scope="module")
def problems():
    return {k: make() for k, make in PROBLEMS.items()}


def _batch(p, seed=0, stratified=False):
    return L.make_batch(p, 200, 100, 100, make_rng(seed), stratified)


# ----------------------------------------------------------- zero at truth

@pytest.mark.parametrize("key,fn,weights", [
    ("1d", L.loss_pinns_1d, (1, 1, 1)),
    ("interface", L.loss_pinns_interface, (1, np.sqrt(10), 10)),
    ("lshape", L.loss_pinns_lshape, (1, 10, 1)),
    ("material", L.loss_pinns_material, (1, np.sqrt(10), 10, 1)),
])
def test_pinns_losses_vanish_at_exact_solution(problems, key, fn, weights):
    p = problems[key]
    res = fn(p.exact_field(), p, _batch(p, stratified=key == "material"), L.LossWeights(weights))
    assert all(v < 1e-16 for v in res.values().values())
    assert res.total_value < 1e-8 * sum(weights)


@pytest.mark.parametrize("key", list(PROBLEMS))
def test_h1_fit_vanishes_at_exact_solution(problems, key):
    p = problems[key]
    res = L.loss_h1_fit(p.exact_field(), p, _batch(p).interior)
    assert res.values()["h1"] < 1e-25


# --------------------------------------------------------------- examples

def test_h1_fit_constant_offset_1d():
    p = problem_1d()

    class Shifted:
        dim = 1
        params = []

        def jet(self, x, tape=None, order=2, signs=None):
            j = p.exact_jet(x, order)
            return ad.jet_add(j, 0.1)

    res = L.loss_h1_fit(Shifted(), p, np.linspace(0.1, 3.0, 50)[:, None])
    assert res.total_value == pytest.approx(0.1, rel=1e-12)


def test_h1_fit_zero_field():
    p = problem_interface()
    x = _batch(p).interior
    f = _zeroed(A.ClassicalField(mlp_new((2, 4, 1))))
    res = L.loss_h1_fit(f, p, x)
    ref = np.mean(p.u(x) ** 2 + np.sum(p.grad(x) ** 2, axis=1))
    assert res.values()["h1"] == pytest.approx(ref, rel=1e-12)


def test_pinns_1d_zero_field():
    p = problem_1d()
    f = _zeroed(A.InterfaceField(mlp_new((1, 4, 2)), p.level_sets))
    b = _batch(p)
    res = L.loss_pinns_1d(f, p, b, L.LossWeights((1, 1, 1)))
    r = res.roots()
    assert r["pde"] == pytest.approx(np.sqrt(np.mean(16 * np.sin(2 * b.interior[:, 0]) ** 2)), rel=1e-12)
    assert r["bc"] == 0.0 and r["int"] == 0.0


def test_interface_zero_field_boundary_term():
    p = problem_interface()
    f = _zeroed(A.InterfaceField(mlp_new((2, 4, 2)), p.level_sets))
    res = L.loss_pinns_interface(f, p, _batch(p), L.LossWeights((1, np.sqrt(10), 10)))
    assert res.values()["bc"] == 0.0


def test_total_is_weighted_sum_of_roots(problems):
    p = problems["interface"]
    f = A.InterfaceField(mlp_new((2, 6, 2), init_seed=3), p.level_sets)
    w = L.LossWeights((1, np.sqrt(10), 10))
    res = L.loss_pinns_interface(f, p, _batch(p), w)
    r = res.roots()
    assert all(v >= 0 for v in res.values().values())
    assert res.total_value == pytest.approx(r["pde"] + np.sqrt(10) * r["int"] + 10 * r["bc"], rel=1e-12)


def test_lshape_anchor_term_zero_for_zero_angular_net():
    p = problem_lshape()
    ang = _zeroed(A.ClassicalField(mlp_new((2, 4, 1))))
    f = A.CornerField(mlp_new((2, 4, 2), init_seed=1), [A.SingularUnit((0, 0), ang, CUT)], CUT)
    res = L.loss_pinns_lshape(f, p, _batch(p), L.LossWeights((1, 10, 1)))
    assert res.values()["bc_phi"] == 0.0


def test_lshape_weight_is_one_away_from_corner():
    from reconn.geometry import weight_omega

    assert weight_omega("lshape", [[0.16, 0.0]])[0] == 1.0
    assert weight_omega("lshape", [[0.15, 0.0]])[0] < 1.0


def test_material_angular_flux_zero_for_zero_angular_net(problems):
    p = problems["material"]
    ang = _zeroed(A.InterfaceField(mlp_new((2, 4, 3)), (LevelSet("line-x1"), LevelSet("line-x2"))))
    unit = A.SingularUnit((0, 0), ang, CUT)
    assert float(ad.value_of(L.angular_flux_sq(unit, p.sigma_of_signs))) == 0.0


def test_material_angular_flux_matches_exact_singular_function(problems):
    p = problems["material"]
    sol = p.singular

    class ExactAngular:
        level_sets = (LevelSet("line-x1"), LevelSet("line-x2"))
        dim = 2
        params = []

        def jet(self, x, tape=None, order=2, signs=None):
            from reconn.problems import material_singular

            return material_singular(np.asarray(x), sol, np.asarray(signs, dtype=float), order)

    unit = A.SingularUnit((0, 0), ExactAngular(), CUT)
    assert float(ad.value_of(L.angular_flux_sq(unit, p.sigma_of_signs))) < 1e-18


def test_loss_gradient_flows_to_all_params(problems):
    p = problems["material"]
    ang = A.InterfaceField(mlp_new((2, 4, 3), init_seed=1), (LevelSet("line-x1"), LevelSet("line-x2")))
    f = A.MaterialVertexField(mlp_new((2, 5, 6), init_seed=2), p.level_sets, [A.SingularUnit((0, 0), ang, CUT)], CUT)
    tape = Tape()
    res = L.loss_pinns_material(f, p, _batch(p, stratified=True), L.LossWeights((1, np.sqrt(10), 10, 1)), tape)
    g = tape.backward(res.total)
    assert g[f.units[0].lam] != 0.0
    assert all(np.any(g[q] != 0) for q in f.net.weights)


def test_weights_validation():
    with pytest.raises(ValueError):
        L.LossWeights((0.0, 0.0))
    with pytest.raises(ValueError):
        L.LossWeights((1.0, -1.0))


# ---------------------------------------------------------- integrability

def test_weighted_residual_is_integrable_near_corner():
    p = problem_lshape()
    ang = A.ClassicalField(mlp_new((2, 8, 8, 1), init_seed=11))
    f = A.CornerField(mlp_new((2, 6, 2), init_seed=12), [A.SingularUnit((0, 0), ang, CUT, 0.66)], CUT)
    th = np.linspace(-np.pi / 2 + 0.2, np.pi - 0.2, 9)
    radii = np.array([1e-2, 1e-3, 1e-4])
    weighted, plain = [], []
    for r in radii:
        x = r * np.column_stack([np.cos(th), np.sin(th)])
        res = ad.value_of(L.pde_residual(f, p, x)) ** 2
        w = L.weight_omega("lshape", x)
        weighted.append(np.mean(w * res))
        plain.append(np.mean(res))
    lam = 0.66
    s_w = np.polyfit(np.log(radii), np.log(weighted), 1)[0]
    s_p = np.polyfit(np.log(radii), np.log(plain), 1)[0]
    assert abs(s_w - (2 * lam - 2)) < 0.2
    assert abs(s_p - (2 * lam - 4)) < 0.2
    # in 2D, r^a is integrable near 0 iff a > -2
    assert s_w > -2 > s_p
