"""The four-dimensional F-functional, its first variation and geodesic diagnostics.

For a spatial slice u on the torus (metric g_u = exp(-2u) g) the functional is

    F(u) = int 2 Lap u |grad u|^2 - |grad u|^4 - 2 Ric(grad u, grad u)
               + R |grad u|^2 - 8 u sigma_2(A_g) dV
           - 2 int sigma_2(A_g) dV * log(Vol^-1 int exp(4u) dV)

with Ric, R and sigma_2(A_g) taken from the background (zero on the flat
torus).  All integrals are rectangle rules over T^d.  Derivatives default to
the spectral stencil, which makes the discrete first-variation identity hold
to FD-step accuracy.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from . import symfun
from .errors import ArgumentError
from .grid import Background, GridField, schouten, slice_derivatives

KAPPA = 8.0
KAPPA_STABILITY = 1e-6


def _require_n4(bg: Background):
    if bg.n != 4:
        raise ArgumentError("the F-functional is four-dimensional (n = 4)")


def _slice(u, bg):
    u = np.asarray(u, dtype=float)
    if u.ndim != bg.d:
        raise ArgumentError(f"expected a spatial slice with {bg.d} axes")
    return u


class _Slice:
    """Discrete derivatives of one slice, reused by the functional and its derivatives."""

    def __init__(self, u, bg, stencil):
        self.u = u
        self.bg = bg
        self.stencil = stencil
        self.grad, self.hess = slice_derivatives(u, bg, stencil)
        self.lap = np.trace(self.hess, axis1=-2, axis2=-1)
        self.g2 = np.einsum("...i,...i->...", self.grad, self.grad)
        self.dx = bg.spacing(u.shape[0]) ** bg.d

    def integrate(self, a):
        return float(np.sum(a) * self.dx)


def evaluate_F(u_slice, bg: Background, stencil="spectral") -> float:
    """Quadrature value of the F-functional at a spatial slice."""
    _require_n4(bg)
    sl = _Slice(_slice(u_slice, bg), bg, stencil)
    return _F(sl)


def _F(sl: _Slice) -> float:
    bg, u = sl.bg, sl.u
    ric = symfun.quad(bg.ricci, sl.grad)
    s2 = bg.sigma2_A0
    dens = (2 * sl.lap * sl.g2 - sl.g2 ** 2 - 2 * ric + bg.scalar_curvature * sl.g2 - 8 * s2 * u)
    out = sl.integrate(dens)
    if s2 != 0.0:
        V = bg.volume()
        out -= 2 * s2 * V * np.log(sl.integrate(np.exp(4 * u)) / V)
    return out


def dF(u_slice, w, bg: Background, stencil="spectral") -> float:
    """Directional derivative DF(u)[w] of the discrete functional."""
    _require_n4(bg)
    sl = _Slice(_slice(u_slice, bg), bg, stencil)
    return _dF(sl, _Slice(_slice(w, bg), bg, stencil))


def _dF(sl, wl):
    bg = sl.bg
    gw = np.einsum("...i,...i->...", sl.grad, wl.grad)
    ric = symfun.quad(bg.ricci, sl.grad, wl.grad)
    s2 = bg.sigma2_A0
    dens = (2 * wl.lap * sl.g2 + 4 * sl.lap * gw - 4 * sl.g2 * gw - 4 * ric
            + 2 * bg.scalar_curvature * gw - 8 * s2 * wl.u)
    out = sl.integrate(dens)
    if s2 != 0.0:
        e = np.exp(4 * sl.u)
        out -= 2 * s2 * bg.volume() * 4 * np.sum(e * wl.u) / np.sum(e)
    return out


def d2F(u_slice, w, bg: Background, stencil="spectral") -> float:
    """Second derivative D^2 F(u)[w, w] of the discrete functional."""
    _require_n4(bg)
    sl = _Slice(_slice(u_slice, bg), bg, stencil)
    return _d2F(sl, _Slice(_slice(w, bg), bg, stencil))


def _d2F(sl, wl):
    bg = sl.bg
    gw = np.einsum("...i,...i->...", sl.grad, wl.grad)
    w2 = wl.g2
    ric = symfun.quad(bg.ricci, wl.grad)
    s2 = bg.sigma2_A0
    dens = (8 * wl.lap * gw + 4 * sl.lap * w2 - 8 * gw ** 2 - 4 * sl.g2 * w2 - 4 * ric
            + 2 * bg.scalar_curvature * w2)
    out = sl.integrate(dens)
    if s2 != 0.0:
        e = np.exp(4 * sl.u)
        m1 = np.sum(e * wl.u) / np.sum(e)
        m2 = np.sum(e * wl.u ** 2) / np.sum(e)
        out -= 2 * s2 * bg.volume() * 16 * (m2 - m1 ** 2)
    return out


# ------------------------------------------------------------ first variation

def _variation_rhs(sl: _Slice):
    """Integrand pieces of int v (sigma_2(g_u^-1 A_u) - mean) dV_u in n = 4."""
    A = schouten(sl.grad, sl.hess, sl.bg.A0)
    s2 = symfun.sigma(A, 2)
    vol_u = sl.integrate(np.exp(-4 * sl.u))
    # sigma_2(g_u^-1 A_u) dV_u = sigma_2(A_u) dx, so the mean is total / Vol_u
    mean = sl.integrate(s2) / vol_u
    return s2, mean


@dataclass
class FirstVariation:
    fd: float
    predicted: float
    kappa: float
    eps: float
    atol: float = 1e-13

    @property
    def abs_defect(self):
        return abs(self.fd - self.predicted)

    @property
    def defect(self):
        """Relative defect; absolute when both sides vanish to ``atol``."""
        scale = max(abs(self.fd), abs(self.predicted))
        return self.abs_defect / scale if scale > self.atol else self.abs_defect


def variation_pair(u, v, bg: Background, eps=1e-4, stencil="spectral"):
    """(centered FD of r -> F(u + r v), -int v (sigma_2 - mean) dV_u)."""
    if bg.mode != "geometric":
        raise ArgumentError("first variation check runs on the geometric torus")
    _require_n4(bg)
    u, v = _slice(u, bg), _slice(v, bg)
    fd = (evaluate_F(u + eps * v, bg, stencil) - evaluate_F(u - eps * v, bg, stencil)) / (2 * eps)
    sl = _Slice(u, bg, stencil)
    s2, mean = _variation_rhs(sl)
    rhs = -sl.integrate(v * (s2 - mean * np.exp(-4 * u)))
    return fd, rhs


def first_variation_check(u, v, bg: Background, eps=1e-4, kappa=KAPPA,
                          stencil="spectral") -> FirstVariation:
    """Compare dF(u + r v)/dr at r = 0 with -kappa int v (sigma_2 - mean) dV_u."""
    fd, rhs = variation_pair(u, v, bg, eps, stencil)
    return FirstVariation(fd=fd, predicted=kappa * rhs, kappa=kappa, eps=eps)


def calibration_pair(Nx=16):
    """The fixed (u, v) pair used to calibrate kappa on the 4-torus."""
    bg = Background.geometric(4)
    X = bg.coords(Nx)
    u = (0.2 * np.sin(X[0]) + 0.15 * np.cos(X[0] + X[1] + 0.3) + 0.1 * np.sin(X[2] - X[3] + 0.7)
         + 0.12 * np.cos(X[1]) * np.sin(X[0] + 0.2) * np.cos(X[2]))
    v = 0.2 * np.cos(X[1] + 0.4) + 0.1 * np.sin(X[0] + X[2]) + 0.1 * np.cos(X[0] - 0.5)
    return u, v, bg


def calibrate_kappa(u=None, v=None, bg=None, Nx=16, eps=1e-4) -> float:
    """Ratio of the FD derivative to the unnormalized variation formula."""
    if u is None:
        u, v, bg = calibration_pair(Nx)
    fd, rhs = variation_pair(u, v, bg, eps)
    if abs(rhs) < 1e-12:
        raise ArgumentError("calibration pair has a vanishing variation")
    return fd / rhs


# ------------------------------------------------------------- path diagnostics

def sigma_total_path(u: GridField, bg: Background, stencil="central2"):
    """int sigma_2(g_u^-1 A_u) dV_u per time level (n = 4)."""
    _require_n4(bg)
    out = []
    for w in u.values:
        sl = _Slice(w, bg, stencil)
        out.append(sl.integrate(symfun.sigma(schouten(sl.grad, sl.hess, bg.A0), 2)))
    return np.array(out)


@dataclass
class FunctionalReport:
    t: np.ndarray
    F_values: np.ndarray
    dF_dt: np.ndarray
    d2F_fd: np.ndarray
    d2F_chain: np.ndarray
    decomposition: dict
    sigma_total: np.ndarray
    kappa: float = KAPPA
    s: float = float("nan")
    extra: dict = field(default_factory=dict)

    @property
    def consistency(self) -> float:
        """sup |FD - chain rule| / sup |FD| over interior levels."""
        scale = max(np.abs(self.d2F_fd).max(), np.abs(self.d2F_chain).max(), 1e-300)
        return float(np.abs(self.d2F_fd - self.d2F_chain).max() / scale)

    def lower_bound_slack(self):
        """Reported only: d2F/dt2 + s Vol_u (the convexity inequality)."""
        return self.d2F_fd - self.decomposition["minus_s_vol"]

    def to_json(self):
        return {
            "s": self.s, "kappa": self.kappa, "consistency": self.consistency,
            "t": self.t.tolist(), "F": self.F_values.tolist(), "dF_dt": self.dF_dt.tolist(),
            "d2F_fd": self.d2F_fd.tolist(), "d2F_chain": self.d2F_chain.tolist(),
            "decomposition": {k: np.asarray(v).tolist() for k, v in self.decomposition.items()},
            "sigma_total": self.sigma_total.tolist(), **self.extra,
        }

    def dumps(self):
        return json.dumps(self.to_json(), indent=2)

    def write_csv(self, path):
        keys = list(self.decomposition)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "F", "dF_dt", "d2F_fd", "d2F_chain"] + keys)
            for j, t in enumerate(self.t):
                w.writerow([repr(float(t)), repr(float(self.F_values[j + 1])),
                            repr(float(self.dF_dt[j])), repr(float(self.d2F_fd[j])),
                            repr(float(self.d2F_chain[j]))]
                           + [repr(float(self.decomposition[k][j])) for k in keys])


def geodesic_convexity_diagnostic(u: GridField, bg: Background, s: float, f=1.0,
                                  stencil="central2", converged=True) -> FunctionalReport:
    """Second t-derivative of F along a solver path, with its decomposition.

    The FD second difference of F(u(t_j)) is compared with the chain rule
    DF[u_tt] + D^2F[u_t, u_t] (same discrete t-derivatives); the decomposition

        -s Vol_u + s mean int sigma_2^-1 dV_u
        + mean int [sigma_2^-1 <T_1, grad u_t (x) grad u_t> - 4 (u_t - avg u_t)^2] dV_u

    is reported per interior level, never asserted.
    """
    if not converged:
        raise ArgumentError("diagnostic needs a converged path")
    if bg.mode != "synthetic":
        raise ArgumentError("geodesic diagnostic runs on a synthetic background")
    _require_n4(bg)
    Nt = u.Nt
    dt = 1.0 / Nt
    vals = u.values
    Fv = np.array([evaluate_F(w, bg, stencil) for w in vals])
    fd2 = (Fv[2:] - 2 * Fv[1:-1] + Fv[:-2]) / dt ** 2
    dF_dt = (Fv[2:] - Fv[:-2]) / (2 * dt)
    u_t = (vals[2:] - vals[:-2]) / (2 * dt)
    u_tt = (vals[2:] - 2 * vals[1:-1] + vals[:-2]) / dt ** 2
    chain = np.empty(Nt - 1)
    terms = {k: np.empty(Nt - 1) for k in ("minus_s_vol", "s_mean_inv_sigma2", "bracket")}
    fv = np.broadcast_to(np.asarray(f.values if isinstance(f, GridField) else f, dtype=float),
                         vals.shape)
    for j in range(Nt - 1):
        sl = _Slice(vals[j + 1], bg, stencil)
        chain[j] = _dF(sl, _Slice(u_tt[j], bg, stencil)) + _d2F(sl, _Slice(u_t[j], bg, stencil))
        A = schouten(sl.grad, sl.hess, bg.A0)
        s2 = symfun.sigma(A, 2)
        w = np.exp(-4 * sl.u)  # dV_u / dx
        vol_u = sl.integrate(w)
        mean = sl.integrate(s2) / vol_u
        gt, _ = slice_derivatives(u_t[j], bg, stencil)
        Hq = symfun.quad(symfun.newton_transform(A, 1), gt) / s2
        avg_t = sl.integrate(u_t[j] * w) / vol_u
        # sigma_2(g_u^-1 A_u)^-1 dV_u = exp(-8u) / sigma_2(A_u) dx
        inv = sl.integrate(np.exp(-8 * sl.u) / s2)
        sf = s * float(np.mean(fv[j + 1]))
        terms["minus_s_vol"][j] = -sf * vol_u
        terms["s_mean_inv_sigma2"][j] = sf * mean * inv
        terms["bracket"][j] = mean * sl.integrate((Hq - 4 * (u_t[j] - avg_t) ** 2) * w)
    terms["total"] = terms["minus_s_vol"] + terms["s_mean_inv_sigma2"] + terms["bracket"]
    return FunctionalReport(t=u.t[1:-1], F_values=Fv, dF_dt=dF_dt, d2F_fd=fd2, d2F_chain=chain,
                            decomposition=terms, sigma_total=sigma_total_path(u, bg, stencil),
                            s=s)
