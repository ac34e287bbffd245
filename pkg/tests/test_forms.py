import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from loopgeom.errors import InvalidInputError
from loopgeom.forms import (Grid, LoopForm1, MatForm1, exterior_d, mc_residual, node_derivatives,
                            per_degree_residuals, sampled_family_residual, to_cells, wedge)
from loopgeom.loop import default_samples, residual_degrees
from loopgeom.systems import WaveData, build_flat_s3_family

UNIT = Grid.over((0.0, 1.0), (0.0, 1.0), 1 / 16)


def scalar_form(grid, fx, fy):
    X, Y = grid.mesh()
    return MatForm1(grid, np.asarray(fx(X, Y), float)[..., None, None],
                    np.asarray(fy(X, Y), float)[..., None, None])


def cell_centres(grid):
    X, Y = grid.mesh()
    return to_cells(X), to_cells(Y)


def test_d_of_y_dx():
    a = scalar_form(UNIT, lambda x, y: y, lambda x, y: 0 * x)
    np.testing.assert_allclose(exterior_d(a).cxy[..., 0, 0], -1.0, atol=1e-13)


def test_d_of_constant_is_zero():
    rng = np.random.default_rng(0)
    A, B = rng.standard_normal((2, 3, 3))
    assert exterior_d(MatForm1.constant(UNIT, A, B)).max_norm() == 0.0


@pytest.mark.parametrize("h", [1 / 8, 1 / 16, 1 / 32])
def test_d_of_x_squared_dy(h):
    g = Grid.over((0.0, 1.0), (0.0, 1.0), h)
    a = scalar_form(g, lambda x, y: 0 * x, lambda x, y: x ** 2)
    xc, _ = cell_centres(g)
    err = np.abs(exterior_d(a).cxy[..., 0, 0] - 2 * xc).max()
    assert err <= 1e-12  # the edge-mean difference is exact for quadratics


def test_d_second_order_on_smooth_data():
    errs = []
    for h in (1 / 16, 1 / 32):
        g = Grid.over((0.0, 1.0), (0.0, 1.0), h)
        a = scalar_form(g, lambda x, y: np.sin(x * y), lambda x, y: np.cos(x + 2 * y))
        xc, yc = cell_centres(g)
        exact = -np.sin(xc + 2 * yc) - xc * np.cos(xc * yc)
        errs.append(np.abs(exterior_d(a).cxy[..., 0, 0] - exact).max())
    assert errs[0] / errs[1] >= 3.5


def test_wedge_examples():
    rng = np.random.default_rng(1)
    A, B = rng.standard_normal((2, 3, 3))
    Z = np.zeros((3, 3))
    w = wedge(MatForm1.constant(UNIT, A, Z), MatForm1.constant(UNIT, Z, B))
    np.testing.assert_allclose(w.cxy, np.broadcast_to(A @ B, w.cxy.shape), atol=1e-14)
    s = scalar_form(UNIT, lambda x, y: np.sin(x), lambda x, y: x * y)
    assert wedge(s, s).max_norm() == 0.0
    a = MatForm1.constant(UNIT, A, B)
    np.testing.assert_allclose(wedge(a, a).cxy, np.broadcast_to(A @ B - B @ A, w.cxy.shape),
                               atol=1e-14)


def test_wedge_shape_errors():
    a = MatForm1.constant(UNIT, np.eye(3), np.eye(3))
    b = MatForm1.constant(UNIT, np.eye(2), np.eye(2))
    with pytest.raises(InvalidInputError):
        wedge(a, b)
    with pytest.raises(InvalidInputError):
        wedge(a, MatForm1.constant(UNIT.refine(), np.eye(3), np.eye(3)))


def test_mc_residual_examples():
    A, B = np.diag([1.0, 2.0, 3.0]), np.diag([-1.0, 0.5, 4.0])
    assert mc_residual(MatForm1.constant(UNIT, A, B))[1] <= 1e-14
    Bm = np.array([[0.0, 1.0], [-1.0, 0.0]])
    X, _ = UNIT.mesh()
    a = MatForm1(UNIT, np.zeros(X.shape + (2, 2)), X[..., None, None] * Bm)
    r, m = mc_residual(a)
    np.testing.assert_allclose(r.cxy, np.broadcast_to(Bm, r.cxy.shape), atol=1e-13)
    assert m == pytest.approx(np.linalg.norm(Bm), rel=1e-13)


def sum_wave_family(h):
    g = Grid.over((0.3, 1.2), (0.3, 1.2), h)
    w = WaveData.from_functions(lambda x: np.sin(x) + 0.2, lambda y: 0.5 * y ** 2 + 0.4, g)
    return build_flat_s3_family(w, g)


def test_flat_s3_mc_at_one_converges():
    r1 = mc_residual(sum_wave_family(1 / 64).eval(1.0))[1]
    r2 = mc_residual(sum_wave_family(1 / 128).eval(1.0))[1]
    assert r1 <= 5e-4
    assert r1 / r2 >= 3.5


def test_per_degree_flat_constant():
    A = np.diag([1.0, -2.0])
    a0 = MatForm1.constant(UNIT, A, 3 * A)
    fam = LoopForm1(UNIT, 0, a0.ax[None], a0.ay[None])
    assert all(v <= 1e-14 for _, v in per_degree_residuals(fam))


def test_per_degree_flat_s3_sum_wave():
    fam = sum_wave_family(1 / 64)
    res = per_degree_residuals(fam)
    assert [k for k, _ in res] == [0, 1, 2]
    assert max(v for _, v in res) <= 5e-4


def test_sampled_equivalence_triangle_bound():
    fam = sum_wave_family(1 / 64)
    eps = max(v for _, v in per_degree_residuals(fam))
    lams = default_samples(fam.lo, fam.hi)
    C = max(sum(abs(l) ** k for k in residual_degrees(fam.lo, fam.hi)) for l in lams)
    assert sampled_family_residual(fam, lams) <= C * eps * (1 + 1e-12)


def test_sampled_pure_degree_one_constant():
    A = np.array([[0.0, 1.0], [-1.0, 0.0]])
    Z = np.zeros((2, 2))
    a1 = MatForm1.constant(UNIT, A, Z)
    fam = LoopForm1(UNIT, 0, np.stack([0 * a1.ax, a1.ax]), np.stack([0 * a1.ay, a1.ay]))
    assert sampled_family_residual(fam, default_samples(0, 1)) == 0.0


def test_sampled_too_few_samples():
    fam = sum_wave_family(1 / 16)
    with pytest.raises(InvalidInputError):
        sampled_family_residual(fam, [1.0, 2.0])
    with pytest.raises(InvalidInputError):
        sampled_family_residual(fam, [1.0, 1.0, 1.0, 2.0])


def test_sampled_detects_single_node_perturbation():
    h = 1 / 64
    fam = sum_wave_family(h)
    eps = 1e-2
    a1 = fam.coeff(1)
    ay = a1.ay.copy()
    ay[20, 20, 0, 2] += eps
    bad = fam.with_coeff(1, MatForm1(fam.grid, a1.ax, ay))
    assert sampled_family_residual(bad, default_samples(0, 1)) >= eps / (4 * h)


def random_loopform(seed, lo, width, n=3, h=1 / 8):
    rng = np.random.default_rng(seed)
    g = Grid.over((0.0, 1.0), (0.0, 1.0), h)
    shape = (width + 1, g.nx, g.ny, n, n)
    return LoopForm1(g, lo, rng.standard_normal(shape) + 1j * rng.standard_normal(shape),
                     rng.standard_normal(shape))


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10**6), st.integers(-2, 2), st.integers(0, 2))
def test_equivalence_vandermonde_bounds(seed, lo, width):
    fam = random_loopform(seed, lo, width)
    hi = lo + width
    lams = default_samples(lo, hi)
    eps = max(v for _, v in per_degree_residuals(fam))
    sampled = sampled_family_residual(fam, lams)
    C = max(sum(abs(l) ** k for k in residual_degrees(lo, hi)) for l in lams)
    assert sampled <= C * eps * (1 + 1e-12)
    V = np.array([[l ** k for k in residual_degrees(lo, hi)] for l in lams])
    kappa = np.linalg.norm(np.linalg.pinv(V), np.inf)
    assert eps <= kappa * sampled * (1 + 1e-9)


def test_gradient_then_d_vanishes():
    errs = []
    for h in (1 / 16, 1 / 32):
        g = Grid.over((0.0, 1.0), (0.0, 1.0), h)
        X, Y = g.mesh()
        f = np.sin(2 * X) * np.exp(Y)
        fx, fy = node_derivatives(f, g)
        errs.append(exterior_d(MatForm1(g, fx[..., None, None], fy[..., None, None])).max_norm())
    assert errs[1] <= 1e-2
    assert errs[0] / errs[1] >= 3.0


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10**6))
def test_residuals_invariant_under_constant_conjugation(seed):
    fam = random_loopform(seed, 0, 1)
    rng = np.random.default_rng(seed + 1)
    g = np.linalg.qr(rng.standard_normal((3, 3)))[0]
    ginv = g.T
    conj = LoopForm1(fam.grid, fam.lo, ginv @ fam.ax @ g, ginv @ fam.ay @ g)
    for (_, a), (_, b) in zip(per_degree_residuals(fam), per_degree_residuals(conj)):
        assert abs(a - b) <= 1e-12 * max(1, a)
    lams = default_samples(0, 1)
    a, b = sampled_family_residual(fam, lams), sampled_family_residual(conj, lams)
    assert abs(a - b) <= 1e-12 * max(1, a)


def test_single_row_grid_has_empty_two_forms():
    g = Grid(nx=9, ny=1, x0=0.0, y0=0.0, hx=0.1, hy=0.1)
    a = MatForm1.constant(g, np.eye(2), np.eye(2))
    assert exterior_d(a).cxy.shape[1] == 0
    assert mc_residual(a)[1] == 0.0
