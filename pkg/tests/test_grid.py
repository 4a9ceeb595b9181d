import numpy as np
import pytest
from hypothesis import given, strategies as st

from schouten_lab import grid, symfun
from schouten_lab.errors import ArgumentError
from schouten_lab.grid import Background, GridField

SYN = Background.synthetic(4, d=1)


def const_field(c, Nt=8, Nx=8, d=1):
    return GridField(np.full((Nt + 1,) + (Nx,) * d, float(c)))


def test_background_validation():
    with pytest.raises(ArgumentError):
        Background(n=4, d=2, mode="geometric")
    with pytest.raises(ArgumentError):
        Background(n=4, d=1, A0=-np.eye(4))
    with pytest.raises(ArgumentError):
        Background(mode="bogus")
    g = Background.geometric(3)
    assert g.d == 3 and np.all(g.A0 == 0)
    assert SYN.sigma2_A0 == pytest.approx(1.5)
    assert SYN.scalar_curvature == pytest.approx(12.0)
    back = Background.from_json(SYN.to_json())
    assert (back.n, back.d, back.L, back.mode) == (SYN.n, SYN.d, SYN.L, SYN.mode)
    np.testing.assert_array_equal(back.A0, SYN.A0)


def test_differentiate_constant():
    jet = grid.differentiate(const_field(0.7), SYN)
    np.testing.assert_allclose(jet.A_u, np.broadcast_to(0.5 * np.eye(4), jet.A_u.shape))
    np.testing.assert_allclose(jet.E_u, 0)


def test_differentiate_quadratic_in_t():
    beta = 0.37
    u = GridField.interpolate(np.full(8, 0.2), np.full(8, 0.2), 16, beta)
    jet = grid.differentiate(u, SYN)
    np.testing.assert_allclose(jet.u_tt, 2 * beta, rtol=1e-12)
    np.testing.assert_allclose(jet.E_u, 2 * beta * np.broadcast_to(SYN.A0, jet.E_u.shape),
                               rtol=1e-12)


def test_differentiate_errors():
    with pytest.raises(ArgumentError):
        grid.differentiate(const_field(0, Nt=1), SYN)
    with pytest.raises(ArgumentError):
        grid.differentiate(const_field(0, d=2), SYN)
    with pytest.raises(ArgumentError):
        grid.differentiate(const_field(0), SYN, stencil="fourth")


@pytest.mark.parametrize("s", [1.0, 0.5, 0.25])
def test_residual_homogeneous_exact(s):
    u = GridField.interpolate(np.full(16, 0.1), np.full(16, 0.1), 64, s / 3)
    r = grid.residual(u, SYN, s, 1.0)
    assert np.abs(r.values).max() <= 1e-12


def test_residual_linear_interpolation():
    u = GridField.interpolate(np.full(8, 0.1), np.full(8, 0.1), 16, 0.0)
    r = grid.residual(u, SYN, 0.5, 1.0)
    np.testing.assert_allclose(r.values[1:-1], -0.5)
    np.testing.assert_array_equal(r.values[[0, -1]], 0)


def test_admissibility_examples():
    u = GridField.interpolate(np.zeros(16), np.zeros(16), 64, 1 / 3)
    adm = grid.admissibility(grid.differentiate(u, SYN))
    assert adm.all_admissible and adm.cross_check
    assert adm.min_sigma2_A == pytest.approx(1.5)
    g = Background.geometric(3)
    adm = grid.admissibility(grid.differentiate(const_field(0.2, Nt=4, Nx=4, d=3), g))
    assert not np.any(adm.admissible)


@given(st.floats(0.05, 0.3), st.integers(1, 3), st.floats(0.0, 6.0))
def test_admissible_points_have_E_in_cone(amp, k, phase):
    x = SYN.coords(16)[0]
    u0 = amp * np.sin(k * x + phase)
    u = GridField.interpolate(u0, 0.5 * u0, 16, 2.0)
    adm = grid.admissibility(grid.differentiate(u, SYN))
    assert adm.cross_check


def test_stencils_exact_on_fourier_mode():
    bg = Background.synthetic(4, d=2)
    Nx = 16
    X = bg.coords(Nx)
    w = np.sin(2 * X[0]) * np.cos(X[1])
    grad, hess = grid.slice_derivatives(w, bg, "spectral")
    np.testing.assert_allclose(grad[..., 0], 2 * np.cos(2 * X[0]) * np.cos(X[1]), atol=1e-12)
    np.testing.assert_allclose(hess[..., 0, 1], 2 * np.cos(2 * X[0]) * -np.sin(X[1]), atol=1e-12)
    h = bg.spacing(Nx)
    g2, _ = grid.slice_derivatives(w, bg, "central2")
    np.testing.assert_allclose(g2[..., 0], np.sin(2 * h) / h * np.cos(2 * X[0]) * np.cos(X[1]),
                               atol=1e-12)


def test_sparse_operators_match_stencils(rng):
    bg = Background.synthetic(4, d=2)
    Nx = 8
    w = rng.standard_normal((Nx, Nx))
    grad, hess = grid.slice_derivatives(w, bg)
    D1, D2 = grid.spatial_operators(bg, Nx)
    for a in range(2):
        np.testing.assert_allclose((D1[a] @ w.ravel()).reshape(Nx, Nx), grad[..., a], atol=1e-12)
        for b in range(2):
            np.testing.assert_allclose((D2[a][b] @ w.ravel()).reshape(Nx, Nx), hess[..., a, b],
                                       atol=1e-10)


def test_binary_roundtrip(tmp_path, rng):
    bg = Background.synthetic(4, d=2)
    u = GridField(rng.standard_normal((5, 6, 6)))
    p = tmp_path / "f" / "u.bin"
    grid.save_field(p, u, bg)
    raw = p.read_bytes()
    assert len(raw) == 4 * 8 + 8 + u.values.size * 8
    v, bg2 = grid.load_field(p)
    np.testing.assert_array_equal(v.values, u.values)
    np.testing.assert_array_equal(bg2.A0, bg.A0)


def test_gridfield_ops():
    u = const_field(1.0)
    assert np.all((u + u).values == 2) and np.all((2 * u - u).values == 1)
    with pytest.raises(ArgumentError):
        GridField(np.zeros(4))


# -------------------------------------------------------------- geometry

def test_divergence_zero_field():
    g = Background.geometric(3)
    assert grid.divergence_defect(np.zeros((8, 8, 8)), g) == 0.0
    with pytest.raises(ArgumentError):
        grid.divergence_defect(np.zeros(8), SYN)


def test_divergence_refinement_order():
    g = Background.geometric(3)
    errs = []
    for N in (8, 16, 32):
        X = g.coords(N)
        errs.append(grid.divergence_defect(0.3 * np.sin(X[0]) * np.cos(X[1]), g))
    orders = np.log(np.array(errs[:-1]) / errs[1:]) / np.log(2)
    assert orders.min() >= 1.5


def test_divergence_shift_scaling():
    g = Background.geometric(3)
    X = g.coords(12)
    u = 0.3 * np.sin(X[0]) * np.cos(X[1])
    c = 0.4
    a = grid.divergence_field(u, g)
    b = grid.divergence_field(u + c, g)
    np.testing.assert_allclose(b, np.exp(2 * c) * a, rtol=1e-12, atol=1e-14)
    na, nb = np.linalg.norm(a, axis=-1), np.linalg.norm(b, axis=-1)
    # the field is x_3-invariant, so the maximum is attained on a line; the
    # shifted maximizer must be one of the original maximizers
    assert na.flat[np.argmax(nb)] == pytest.approx(na.max(), rel=1e-12)


def test_total_sigma2():
    g = Background.geometric(4)
    assert grid.total_sigma2(np.zeros((6,) * 4), g) == 0.0
    X = g.coords(8)
    u = 0.2 * np.sin(X[0]) + 0.1 * np.cos(X[1] + X[2])
    assert grid.total_sigma2(u + 0.7, g) == pytest.approx(grid.total_sigma2(u, g), abs=1e-12)
    with pytest.raises(ArgumentError):
        grid.total_sigma2(np.zeros((6,) * 3), Background.geometric(3))
