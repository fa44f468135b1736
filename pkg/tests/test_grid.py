"""Radial mesh, stencils, quadrature and norms."""

import math

import numpy as np
import pytest

from faddeevlab.grid import (FieldState, RadialField, RadialGrid, d_r,
                             field_to_csv, fill_ghosts, integrate_radial,
                             laplacian, quadrature_1d, sobolev_norm)

# frozen by a high-precision pre-build quadrature pass
A3_INTEGRAL_R2 = 2.6636668886261405693


def test_grid_validation():
    with pytest.raises(ValueError):
        RadialGrid(128, 8.0, dim=3)
    with pytest.raises(ValueError):
        RadialGrid(2, 8.0)
    with pytest.raises(ValueError):
        RadialGrid(128, 0.0)
    with pytest.raises(ValueError):
        RadialGrid(128, 8.0, ghost=1)


def test_grid_nodes():
    g = RadialGrid(128, 8.0)
    assert g.dr == 0.0625
    assert g.n_nodes == 129
    assert g.r[0] == 0.0 and g.r[-1] == 8.0
    assert g.with_dim(2).dim == 2 and g.with_dim(2).n_cells == 128


def test_field_validation():
    g = RadialGrid(16, 1.0)
    odd = RadialField(np.ones(g.n_nodes), "odd", g)
    assert odd.values[0] == 0.0
    with pytest.raises(ValueError):
        RadialField(np.ones(g.n_nodes), "mixed", g)
    with pytest.raises(ValueError):
        RadialField(np.ones(g.n_nodes - 1), "even", g)
    with pytest.raises(ValueError):
        FieldState(RadialField(np.ones(g.n_nodes), "even", g),
                   RadialField(np.ones(g.n_nodes), "odd", g))


def test_ghost_fill_is_exact_parity():
    g = RadialGrid(16, 2.0)
    f = np.cos(g.r)
    ext = fill_ghosts(f, "even", g)
    for k in range(1, g.ghost + 1):
        assert ext[g.ghost - k] == ext[g.ghost + k]
    s = np.sin(g.r)
    ext = fill_ghosts(s, "odd", g)
    for k in range(1, g.ghost + 1):
        assert ext[g.ghost - k] == -ext[g.ghost + k]
    with pytest.raises(ValueError):
        fill_ghosts(f, "even", g, mode="cubic")


def test_ghost_fill_order1_fixture_perturbs():
    g = RadialGrid(16, 2.0)
    f = np.cos(g.r)
    clean = fill_ghosts(f, "even", g, mode="parity")
    broken = fill_ghosts(f, "even", g, mode="order1")
    assert np.any(broken[:g.ghost] != clean[:g.ghost])
    assert np.array_equal(broken[g.ghost:], clean[g.ghost:])


def test_d_r_polynomial_exactness():
    g = RadialGrid(128, 8.0)
    const = RadialField(np.full(g.n_nodes, math.pi), "even", g)
    assert np.max(np.abs(d_r(const).values)) <= 1e-13
    quad = RadialField(g.r ** 2, "even", g)
    assert np.max(np.abs(d_r(quad).values - 2.0 * g.r)) <= 1e-12


def test_d_r_fourth_order_on_sine():
    errs = []
    for n in (128, 256):
        g = RadialGrid(n, 8.0)
        f = RadialField(np.sin(g.r), "odd", g)
        errs.append(np.max(np.abs(d_r(f).values - np.cos(g.r))))
    assert 3.8 <= math.log2(errs[0] / errs[1]) <= 4.2


def test_laplacian_exact_on_quadratic():
    g = RadialGrid(64, 8.0)
    assert np.max(np.abs(laplacian(RadialField(g.r ** 2, "even", g)).values
                         - 8.0)) <= 1e-10
    g2 = g.with_dim(2)
    assert np.max(np.abs(laplacian(RadialField(g2.r ** 2, "even", g2)).values
                         - 4.0)) <= 1e-10


def test_laplacian_fourth_order_on_gaussian():
    errs = []
    for n in (128, 256):
        g = RadialGrid(n, 8.0)
        f = RadialField(np.exp(-g.r ** 2), "even", g)
        exact = (4.0 * g.r ** 2 - 8.0) * np.exp(-g.r ** 2)
        errs.append(np.max(np.abs(laplacian(f).values - exact)))
    assert 3.7 <= math.log2(errs[0] / errs[1]) <= 4.3


def test_integrate_radial_examples():
    for n in (64, 65):  # even and odd interval counts (3/8-rule tail)
        g = RadialGrid(n, 1.0)
        one = RadialField(np.ones(g.n_nodes), "even", g)
        assert integrate_radial(one, 1) == pytest.approx(0.5, abs=1e-10)
    g = RadialGrid(4096, 12.0)
    gauss = RadialField(np.exp(-g.r ** 2), "even", g)
    assert integrate_radial(gauss, 1) == pytest.approx(0.5, abs=1e-10)
    assert integrate_radial(gauss, 3) == pytest.approx(0.5, abs=1e-10)


def test_quadrature_examples():
    assert quadrature_1d(lambda y: y, 1.0, 1.0, 8) == 0.0
    assert quadrature_1d(lambda y: y, 0.0, 1.0, 1) == pytest.approx(0.5, abs=1e-14)
    val = quadrature_1d(lambda y: (1.0 + 0.25 * np.sin(y) ** 2) ** -1.5,
                        0.0, math.pi, 8)
    assert val == pytest.approx(A3_INTEGRAL_R2, abs=1e-12)
    doubled = quadrature_1d(lambda y: (1.0 + 0.25 * np.sin(y) ** 2) ** -1.5,
                            0.0, math.pi, 16)
    assert abs(val - doubled) <= 1e-12


def test_quadrature_panel_halving_gains_an_order():
    def f(y):
        return np.exp(np.sin(3.0 * y))

    ref = quadrature_1d(f, 0.0, 2.0, 64)
    e2 = abs(quadrature_1d(f, 0.0, 2.0, 2) - ref)
    e4 = abs(quadrature_1d(f, 0.0, 2.0, 4) - ref)
    assert e2 / e4 >= 16.0


def test_quadrature_rejects_bad_input():
    with pytest.raises(ValueError):
        quadrature_1d(lambda y: y, 0.0, 1.0, 0)
    with pytest.raises(ValueError):
        quadrature_1d(lambda y: np.full_like(y, np.nan), 0.0, 1.0, 2)


def test_sobolev_norms():
    g = RadialGrid(2048, 10.0)
    zero = RadialField(np.zeros(g.n_nodes), "even", g)
    assert sobolev_norm(zero, 2) == 0.0
    f = RadialField(np.exp(-g.r ** 2), "even", g)
    l2 = math.sqrt(integrate_radial(RadialField(f.values ** 2, "even", g), 3))
    assert sobolev_norm(f, 0) == pytest.approx(l2, rel=1e-14)
    # |f|_{L2}^2 = 1/8 and |f'|_{L2}^2 = 1/2 against r^3 dr
    assert sobolev_norm(f, 1) == pytest.approx(math.sqrt(0.625), abs=1e-6)
    with pytest.raises(ValueError):
        sobolev_norm(f, 5)


def test_field_csv_roundtrip(tmp_path):
    g = RadialGrid(32, 4.0)
    f = RadialField(np.sin(g.r) * math.pi, "even", g)
    path = tmp_path / "snap.csv"
    field_to_csv(f, path)
    header = path.read_text().splitlines()[0]
    assert header == "r,value"
    table = np.loadtxt(path, delimiter=",", skiprows=1)
    assert np.array_equal(table[:, 0], g.r)
    assert np.array_equal(table[:, 1], f.values)
