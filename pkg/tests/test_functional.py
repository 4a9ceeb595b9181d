import numpy as np
import pytest
from hypothesis import given, strategies as st

from schouten_lab import functional, solver
from schouten_lab.errors import ArgumentError
from schouten_lab.grid import Background, GridField

G4 = Background.geometric(4)
SYN = Background.synthetic(4, d=1)


def coords(N):
    return G4.coords(N)


def test_constant_geometric_is_zero():
    assert functional.evaluate_F(np.full((6,) * 4, 0.7), G4) == pytest.approx(0, abs=1e-12)


@pytest.mark.parametrize("c", [-0.4, 0.0, 0.25])
def test_constant_synthetic(c):
    val = functional.evaluate_F(np.full(16, c), SYN)
    assert val == pytest.approx(-24 * c * SYN.volume(), abs=1e-12)


def test_sine_closed_form():
    X = coords(8)
    val = functional.evaluate_F(0.2 * np.sin(X[0]), G4)
    exact = -(2 * np.pi) ** 3 * 0.2 ** 4 * 3 * np.pi / 4
    assert val == pytest.approx(exact, rel=1e-6)


def test_sine_matches_refined_quadrature():
    vals = [functional.evaluate_F(0.2 * np.sin(coords(N)[0]), G4, "central2") for N in (16, 32)]
    ref = functional.evaluate_F(0.2 * np.sin(coords(16)[0]), G4, "spectral")
    # the second-order stencil converges to the spectral value
    assert abs(vals[1] - ref) < abs(vals[0] - ref) / 3


@given(st.floats(-1, 1))
def test_shift_invariance(c):
    X = coords(8)
    u = 0.2 * np.sin(X[0]) + 0.1 * np.cos(X[1] + X[2])
    assert functional.evaluate_F(u + c, G4) == pytest.approx(functional.evaluate_F(u, G4),
                                                            abs=1e-12)


def test_requires_n4():
    with pytest.raises(ArgumentError):
        functional.evaluate_F(np.zeros((6,) * 3), Background.geometric(3))


def test_first_variation_trivial_cases():
    X = coords(8)
    u = 0.2 * np.sin(X[0]) + 0.1 * np.cos(X[1])
    fv = functional.first_variation_check(u, np.full_like(u, 0.3), G4)
    assert fv.abs_defect < 1e-10 and abs(fv.predicted) < 1e-10
    fv = functional.first_variation_check(np.zeros_like(u), np.cos(X[2]), G4)
    assert fv.abs_defect < 1e-12
    with pytest.raises(ArgumentError):
        functional.first_variation_check(np.zeros(16), np.zeros(16), SYN)


def test_first_variation_default_resolution():
    u, v, bg = functional.calibration_pair(24)
    assert functional.first_variation_check(u, v, bg).defect <= 1e-4


def test_first_variation_refinement_order():
    errs = []
    for N, eps in ((8, 4e-3), (16, 2e-3)):
        u, v, bg = functional.calibration_pair(N)
        errs.append(functional.first_variation_check(u, v, bg, eps=eps, stencil="central2").defect)
    assert np.log2(errs[0] / errs[1]) >= 1.5


def test_kappa_stability():
    k16 = functional.calibrate_kappa(Nx=16)
    assert abs(k16 - functional.KAPPA) / functional.KAPPA <= functional.KAPPA_STABILITY
    u, _, _ = functional.calibration_pair(12)
    X = coords(12)
    v = 0.2 * np.sin(X[0] + X[1] + 0.3) + 0.1 * np.cos(X[2] - 0.2) * np.sin(X[1] + X[3])
    k = functional.calibrate_kappa(u, v, G4)
    assert abs(k - functional.KAPPA) / functional.KAPPA <= functional.KAPPA_STABILITY


def test_directional_derivatives_match_fd():
    u, w, _ = functional.calibration_pair(8)
    eps = 1e-4
    Fp, F0, Fm = (functional.evaluate_F(u + e * w, G4) for e in (eps, 0.0, -eps))
    assert functional.dF(u, w, G4) == pytest.approx((Fp - Fm) / (2 * eps), rel=1e-7)
    assert functional.d2F(u, w, G4) == pytest.approx((Fp - 2 * F0 + Fm) / eps ** 2, rel=1e-5)


# ------------------------------------------------------------ diagnostic

def homogeneous_path(s, Nt=32):
    return GridField.interpolate(np.zeros(16), np.zeros(16), Nt, s / 3)


def test_diagnostic_homogeneous_bracket_vanishes():
    rep = functional.geodesic_convexity_diagnostic(homogeneous_path(1.0), SYN, 1.0)
    np.testing.assert_allclose(rep.decomposition["bracket"], 0, atol=1e-12)
    half = functional.geodesic_convexity_diagnostic(homogeneous_path(0.5), SYN, 0.5)
    for key in ("minus_s_vol", "s_mean_inv_sigma2"):
        a, b = rep.decomposition[key], half.decomposition[key]
        # the s-proportional terms halve up to the change of the path itself
        assert np.allclose(b[len(b) // 2], 0.5 * a[len(a) // 2], rtol=0.25)


def test_diagnostic_consistency_on_solver_path():
    X = SYN.coords(16)[0]
    u, _ = solver.solve_perturbed(0.05 * np.sin(X), 0.05 * np.cos(2 * X), SYN, 1.0, 0.5, Nt=64)
    rep = functional.geodesic_convexity_diagnostic(u, SYN, 0.5)
    assert rep.consistency <= 1e-6
    assert np.isfinite(rep.lower_bound_slack()).all()


def test_diagnostic_argument_errors(tmp_path):
    with pytest.raises(ArgumentError):
        functional.geodesic_convexity_diagnostic(homogeneous_path(1.0), SYN, 1.0, converged=False)
    rep = functional.geodesic_convexity_diagnostic(homogeneous_path(1.0, Nt=8), SYN, 1.0)
    rep.write_csv(tmp_path / "f.csv")
    assert len((tmp_path / "f.csv").read_text().splitlines()) == 8
