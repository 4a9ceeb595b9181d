"""Space-time lattice [0,1] x T^d, stencils and conformal quantities.

Fields depend on the time variable and on the first ``d`` of ``n`` spatial
coordinates; the matrix algebra always runs at full size ``n`` with zero
rows/columns beyond ``d``.  Two backgrounds are supported:

* ``geometric`` -- the flat torus, A0 = 0 and d = n;
* ``synthetic`` -- a constant positive Schouten tensor A0 (default I/2)
  transplanted onto the periodic grid, used by the solver.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from . import gsop, symfun
from .errors import ArgumentError
from .gsop import ExtendedMatrix

TWO_PI = 2.0 * np.pi
STENCILS = ("central2", "spectral")


@dataclass(frozen=True)
class Background:
    n: int = 4
    d: int = 1
    L: float = TWO_PI
    A0: np.ndarray = None
    mode: str = "synthetic"

    def __post_init__(self):
        if self.mode not in ("geometric", "synthetic"):
            raise ArgumentError(f"unknown background mode {self.mode!r}")
        if not (2 <= self.n <= symfun.MAX_DIM) or not (1 <= self.d <= self.n):
            raise ArgumentError(f"need 2 <= n <= {symfun.MAX_DIM} and 1 <= d <= n")
        if not self.L > 0:
            raise ArgumentError("torus period must be positive")
        if self.A0 is None:
            A0 = np.zeros((self.n, self.n)) if self.mode == "geometric" else 0.5 * np.eye(self.n)
        else:
            A0 = symfun.as_sym(self.A0)
            if A0.shape != (self.n, self.n):
                raise ArgumentError("A0 must be n x n")
        object.__setattr__(self, "A0", A0)
        if self.mode == "geometric":
            if np.any(A0 != 0) or self.d != self.n:
                raise ArgumentError("geometric mode needs A0 = 0 and d = n")
        elif not symfun.in_cone(A0, 2):
            raise ArgumentError("synthetic mode needs A0 in Gamma_2^+")

    @classmethod
    def geometric(cls, n, L=TWO_PI):
        return cls(n=n, d=n, L=L, mode="geometric")

    @classmethod
    def synthetic(cls, n=4, d=1, L=TWO_PI, A0=None):
        return cls(n=n, d=d, L=L, A0=A0, mode="synthetic")

    # background curvature consistent with A0 (flat-metric bookkeeping)
    @property
    def ricci(self):
        return (self.n - 2) * self.A0 + symfun.sigma(self.A0, 1) * np.eye(self.n)

    @property
    def scalar_curvature(self):
        return 2.0 * (self.n - 1) * float(symfun.sigma(self.A0, 1))

    @property
    def sigma2_A0(self):
        return float(symfun.sigma(self.A0, 2))

    def volume(self):
        return self.L ** self.d

    def spacing(self, Nx):
        return self.L / Nx

    def coords(self, Nx):
        """Meshgrid (ij indexing) of the d active coordinates."""
        x = np.arange(Nx) * self.spacing(Nx)
        return np.meshgrid(*([x] * self.d), indexing="ij")

    def to_json(self):
        return {"n": self.n, "d": self.d, "L": self.L, "A0": self.A0.tolist(), "mode": self.mode}

    @classmethod
    def from_json(cls, obj):
        return cls(n=int(obj["n"]), d=int(obj["d"]), L=float(obj["L"]),
                   A0=np.array(obj["A0"], dtype=float), mode=obj["mode"])


@dataclass
class GridField:
    """Scalar field on (Nt+1) time levels x Nx^d periodic points."""

    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim < 2:
            raise ArgumentError("GridField needs a time axis and at least one spatial axis")
        if len(set(self.values.shape[1:])) != 1:
            raise ArgumentError("all spatial axes must have Nx points")

    @property
    def Nt(self):
        return self.values.shape[0] - 1

    @property
    def Nx(self):
        return self.values.shape[1]

    @property
    def d(self):
        return self.values.ndim - 1

    @property
    def t(self):
        return np.linspace(0.0, 1.0, self.Nt + 1)

    def copy(self):
        return GridField(self.values.copy())

    def __add__(self, other):
        return GridField(self.values + _vals(other))

    def __sub__(self, other):
        return GridField(self.values - _vals(other))

    def __mul__(self, c):
        return GridField(self.values * _vals(c))

    __rmul__ = __mul__

    @classmethod
    def from_function(cls, fn, bg: Background, Nt: int, Nx: int):
        """Sample fn(t, x_1, ..., x_d) (broadcasting) on the lattice."""
        t = np.linspace(0.0, 1.0, Nt + 1).reshape((-1,) + (1,) * bg.d)
        X = [x[None] for x in bg.coords(Nx)]
        vals = np.broadcast_to(fn(t, *X), (Nt + 1,) + (Nx,) * bg.d)
        return cls(np.array(vals, dtype=float))

    @classmethod
    def interpolate(cls, u0, u1, Nt: int, a: float = 0.0):
        """(1-t) u0 + t u1 + a t (t-1) for spatial slices u0, u1."""
        u0, u1 = np.asarray(u0, dtype=float), np.asarray(u1, dtype=float)
        t = np.linspace(0.0, 1.0, Nt + 1).reshape((-1,) + (1,) * u0.ndim)
        return cls((1 - t) * u0 + t * u1 + a * t * (t - 1))


def _vals(x):
    return x.values if isinstance(x, GridField) else x


@dataclass
class JetField:
    """Derivative package at the interior time levels 1..Nt-1.

    Arrays are indexed (time, x_1, ..., x_d, ...); vectors and matrices are
    embedded at full size n.
    """

    t: np.ndarray
    u_tt: np.ndarray
    u_t: np.ndarray
    grad_u_t: np.ndarray
    grad_u: np.ndarray
    hess_u: np.ndarray
    A_u: np.ndarray
    E_u: np.ndarray = field(init=False)

    def __post_init__(self):
        self.E_u = self.u_tt[..., None, None] * self.A_u - np.einsum(
            "...i,...j->...ij", self.grad_u_t, self.grad_u_t)

    def extended(self) -> ExtendedMatrix:
        """R = (u_tt, grad u_t; grad u_t, A_u), the argument of F."""
        return ExtendedMatrix(self.u_tt, self.grad_u_t, self.A_u)

    def F(self, k: int = 2):
        return gsop.F_k(self.extended(), k)


# ---------------------------------------------------------------- stencils

def _check_stencil(stencil):
    if stencil not in STENCILS:
        raise ArgumentError(f"stencil must be one of {STENCILS}")


def _wavenumbers(Nx, L):
    return TWO_PI / L * np.fft.fftfreq(Nx, 1.0 / Nx)


def spatial_d1(u, axis, h, stencil="central2"):
    """First derivative along ``axis`` (periodic)."""
    if stencil == "central2":
        return (np.roll(u, -1, axis) - np.roll(u, 1, axis)) / (2 * h)
    Nx = u.shape[axis]
    k = _wavenumbers(Nx, Nx * h)
    if Nx % 2 == 0:
        k[Nx // 2] = 0.0
    shape = [1] * u.ndim
    shape[axis] = Nx
    return np.real(np.fft.ifft(1j * k.reshape(shape) * np.fft.fft(u, axis=axis), axis=axis))


def spatial_d2(u, axis, h, stencil="central2"):
    """Second derivative along ``axis`` (periodic)."""
    if stencil == "central2":
        return (np.roll(u, -1, axis) - 2 * u + np.roll(u, 1, axis)) / h ** 2
    Nx = u.shape[axis]
    k = _wavenumbers(Nx, Nx * h)
    shape = [1] * u.ndim
    shape[axis] = Nx
    return np.real(np.fft.ifft(-(k ** 2).reshape(shape) * np.fft.fft(u, axis=axis), axis=axis))


def slice_derivatives(w, bg: Background, stencil="central2", lead=0):
    """Embedded gradient (..., n) and Hessian (..., n, n) of the spatial part of w.

    The first ``lead`` axes of ``w`` are batch axes (e.g. time).
    """
    _check_stencil(stencil)
    d, n = bg.d, bg.n
    Nx = w.shape[lead]
    h = bg.spacing(Nx)
    grad = np.zeros(w.shape + (n,))
    hess = np.zeros(w.shape + (n, n))
    for a in range(d):
        ax = lead + a
        grad[..., a] = spatial_d1(w, ax, h, stencil)
        hess[..., a, a] = spatial_d2(w, ax, h, stencil)
    for a in range(d):
        for b in range(a + 1, d):
            m = spatial_d1(grad[..., a], lead + b, h, stencil)
            hess[..., a, b] = hess[..., b, a] = m
    return grad, hess


def schouten(grad, hess, A0):
    """A_u = A0 + hess + grad (x) grad - |grad|^2 I / 2 (flat background metric)."""
    n = grad.shape[-1]
    g2 = np.einsum("...i,...i->...", grad, grad)
    return (A0 + hess + np.einsum("...i,...j->...ij", grad, grad)
            - 0.5 * g2[..., None, None] * np.eye(n))


def slice_schouten(w, bg: Background, stencil="central2"):
    """A_w for a purely spatial field w (shape Nx^d)."""
    grad, hess = slice_derivatives(np.asarray(w, dtype=float), bg, stencil)
    return schouten(grad, hess, bg.A0)


def differentiate(u: GridField, bg: Background, stencil="central2") -> JetField:
    """Jet of u at the interior time levels."""
    _check_stencil(stencil)
    if u.Nt < 2 or u.Nx < 4:
        raise ArgumentError("differentiate needs Nt >= 2 and Nx >= 4")
    if u.d != bg.d:
        raise ArgumentError(f"field has {u.d} spatial axes, background expects {bg.d}")
    v = u.values
    dt = 1.0 / u.Nt
    u_tt = (v[2:] - 2 * v[1:-1] + v[:-2]) / dt ** 2
    u_t_int = (v[2:] - v[:-2]) / (2 * dt)
    grad, hess = slice_derivatives(v[1:-1], bg, stencil, lead=1)
    grad_t, _ = _grad_only(u_t_int, bg, stencil)
    return JetField(t=u.t[1:-1], u_tt=u_tt, u_t=u_t_int, grad_u_t=grad_t, grad_u=grad,
                    hess_u=hess, A_u=schouten(grad, hess, bg.A0))


def _grad_only(w, bg, stencil):
    h = bg.spacing(w.shape[1])
    grad = np.zeros(w.shape + (bg.n,))
    for a in range(bg.d):
        grad[..., a] = spatial_d1(w, 1 + a, h, stencil)
    return grad, None


def residual(u: GridField, bg: Background, s: float, f, stencil="central2") -> GridField:
    """F_2(jet(u)) - s f at interior levels; zero on the boundary slices."""
    jet = differentiate(u, bg, stencil)
    fv = np.broadcast_to(_vals(f), u.values.shape)
    out = np.zeros_like(u.values)
    out[1:-1] = jet.F(2) - s * fv[1:-1]
    return GridField(out)


# ------------------------------------------------------------ admissibility

@dataclass
class Admissibility:
    A_cone: np.ndarray
    utt_pos: np.ndarray
    F_pos: np.ndarray
    E_cone: np.ndarray
    min_sigma1_A: float
    min_sigma2_A: float
    min_utt: float
    min_F: float
    gamma3_slack: float

    @property
    def admissible(self) -> np.ndarray:
        return self.A_cone & self.utt_pos & self.F_pos

    @property
    def all_admissible(self) -> bool:
        return bool(np.all(self.admissible))

    @property
    def cross_check(self) -> bool:
        """(A_u in Gamma_2^+, u_tt > 0, F > 0) implies E_u in Gamma_2^+."""
        return bool(np.all(self.E_cone[self.admissible]))

    def margins(self) -> dict:
        return {"sigma1_A": self.min_sigma1_A, "sigma2_A": self.min_sigma2_A,
                "u_tt": self.min_utt, "F": self.min_F, "gamma3": self.gamma3_slack}


def admissibility(jet: JetField) -> Admissibility:
    sA = symfun.sigmas_upto(jet.A_u, 2)
    sE = symfun.sigmas_upto(jet.E_u, 2)
    F = jet.F(2)
    A_cone = (sA[..., 0] > 0) & (sA[..., 1] > 0)
    ok = A_cone & (jet.u_tt > 0) & (F > 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        g3 = sE[..., 0] - F * sA[..., 0] / sA[..., 1]
    return Admissibility(
        A_cone=A_cone,
        utt_pos=jet.u_tt > 0,
        F_pos=F > 0,
        E_cone=(sE[..., 0] > 0) & (sE[..., 1] > 0),
        min_sigma1_A=float(sA[..., 0].min()),
        min_sigma2_A=float(sA[..., 1].min()),
        min_utt=float(jet.u_tt.min()),
        min_F=float(F.min()),
        gamma3_slack=float(g3[ok].min()) if np.any(ok) else float("nan"),
    )


# ------------------------------------------------------- geometric checks

def _geometric_slice(u, bg, level, stencil):
    if bg.mode != "geometric":
        raise ArgumentError("this check needs a geometric background")
    if isinstance(u, GridField):
        u = u.values[level]
    u = np.asarray(u, dtype=float)
    if u.ndim != bg.d:
        raise ArgumentError("spatial slice has the wrong number of axes")
    grad, hess = slice_derivatives(u, bg, stencil)
    return u, grad, schouten(grad, hess, bg.A0)


def divergence_field(u, bg: Background, level=0, stencil="central2"):
    """Covariant divergence of T_1(g_u^{-1} A_u) for g_u = exp(-2u) delta.

    With T^i_j = exp(2u) T_1(A_u)_ij and the flat-conformal Christoffel
    symbols the divergence reads  d_i T_ij - n (T grad u)_j + u_j tr T.
    """
    w, grad, A = _geometric_slice(u, bg, level, stencil)
    n = bg.n
    T = np.exp(2 * w)[..., None, None] * symfun.newton_transform(A, 1)
    h = bg.spacing(w.shape[0])
    div = np.zeros(w.shape + (n,))
    for i in range(bg.d):
        div += spatial_d1(T[..., i, :], i, h, stencil)
    div -= n * np.einsum("...ij,...i->...j", T, grad)
    div += grad * np.trace(T, axis1=-2, axis2=-1)[..., None]
    return div


def divergence_defect(u, bg: Background, level=0, stencil="central2") -> float:
    """Max over the slice of the Euclidean norm of the discrete divergence."""
    if bg.n not in (3, 4):
        raise ArgumentError("divergence check is set up for n = d in {3, 4}")
    div = divergence_field(u, bg, level, stencil)
    return float(np.max(np.linalg.norm(div, axis=-1)))


def total_sigma2(u, bg: Background, level=0, stencil="central2") -> float:
    """Integral of sigma_2(g_u^{-1} A_u) dV_u over the torus (rectangle rule)."""
    if bg.n != 4:
        raise ArgumentError("total sigma_2 is conformally invariant only for n = 4")
    w, _, A = _geometric_slice(u, bg, level, stencil)
    # sigma_2(e^{2u} A) e^{-4u} = sigma_2(A) when n = 4
    dens = symfun.sigma(A, 2)
    return float(np.sum(dens) * bg.spacing(w.shape[0]) ** bg.d)


# -------------------------------------------------------- sparse operators

def _d1_matrix(Nx, h):
    e = np.ones(Nx)
    D = sp.diags([-e[:-1], e[:-1]], [-1, 1], shape=(Nx, Nx), format="lil")
    D[0, Nx - 1] = -1.0
    D[Nx - 1, 0] = 1.0
    return (D.tocsr() / (2 * h))


def _d2_matrix(Nx, h):
    e = np.ones(Nx)
    D = sp.diags([e[:-1], -2 * e, e[:-1]], [-1, 0, 1], shape=(Nx, Nx), format="lil")
    D[0, Nx - 1] = 1.0
    D[Nx - 1, 0] = 1.0
    return D.tocsr() / h ** 2


def _embed(op, axis, d, Nx):
    """Kronecker-embed a 1-D operator acting on ``axis`` of an Nx^d array."""
    I = sp.identity(Nx, format="csr")
    out = None
    for a in range(d):
        m = op if a == axis else I
        out = m if out is None else sp.kron(out, m, format="csr")
    return out


def spatial_operators(bg: Background, Nx: int):
    """Sparse central-difference matrices on the flattened Nx^d grid.

    Returns (D1, D2) with D1[a] the first derivative along a and D2[a][b]
    the second (mixed) derivative; they reproduce ``slice_derivatives``.
    """
    h = bg.spacing(Nx)
    d1, d2 = _d1_matrix(Nx, h), _d2_matrix(Nx, h)
    D1 = [_embed(d1, a, bg.d, Nx) for a in range(bg.d)]
    D2 = [[None] * bg.d for _ in range(bg.d)]
    for a in range(bg.d):
        D2[a][a] = _embed(d2, a, bg.d, Nx)
        for b in range(a + 1, bg.d):
            D2[a][b] = D2[b][a] = (D1[b] @ D1[a]).tocsr()
    return D1, D2


# --------------------------------------------------------------- binary I/O

def save_field(path, u: GridField, bg: Background):
    """Binary layout: int64 Nt, Nx, d, n; float64 L; values in C (t-major) order.

    A JSON sidecar ``<path>.json`` carries the background parameters.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(np.array([u.Nt, u.Nx, u.d, bg.n], dtype="<i8").tobytes())
        fh.write(np.array([bg.L], dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(u.values, dtype="<f8").tobytes())
    Path(str(path) + ".json").write_text(json.dumps(bg.to_json(), indent=2))


def load_field(path):
    """Inverse of ``save_field``; returns (GridField, Background or None)."""
    path = Path(path)
    raw = path.read_bytes()
    Nt, Nx, d, n = np.frombuffer(raw[:32], dtype="<i8")
    L = float(np.frombuffer(raw[32:40], dtype="<f8")[0])
    vals = np.frombuffer(raw[40:], dtype="<f8").reshape((int(Nt) + 1,) + (int(Nx),) * int(d))
    side = Path(str(path) + ".json")
    bg = Background.from_json(json.loads(side.read_text())) if side.exists() else None
    if bg is not None and (bg.n != n or bg.d != d or bg.L != L):
        raise ArgumentError("sidecar does not match the binary header")
    return GridField(vals.copy()), bg
