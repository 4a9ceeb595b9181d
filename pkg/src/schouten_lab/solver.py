"""Damped-Newton continuity method for F(u_tt, A_u, grad u_t) = s f.

The unknown is a GridField with Dirichlet data at t = 0, 1.  Newton runs on
G = log F with the exact discrete Jacobian (assembled from the closed-form
coefficients of the linearized operator) and a line search that keeps every
iterate strictly admissible.
"""
from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import gsop, symfun
from .errors import (ArgumentError, LinearizationError, NonConvergenceError, SetupError,
                     SolverError, StallError)
from .grid import (Background, GridField, JetField, admissibility, differentiate, slice_schouten,
                   spatial_operators)

log = logging.getLogger(__name__)

A_MAX = 2.0 ** 30


@dataclass
class SolverConfig:
    newton_tol: float = 1e-10
    max_newton: int = 50
    damping_shrink: float = 0.5
    min_step: float = 2.0 ** -16
    cone_margin: float = 1e-3
    homotopy_steps: int = 16
    s_schedule: tuple = tuple(2.0 ** -j for j in range(9))
    linear_solver: str = "direct"
    linear_rtol: float = 1e-12
    max_substeps: int = 4

    def __post_init__(self):
        self.s_schedule = tuple(float(s) for s in self.s_schedule)
        for name in ("newton_tol", "min_step", "cone_margin", "linear_rtol"):
            if not getattr(self, name) > 0:
                raise ArgumentError(f"{name} must be positive")
        if not 0 < self.damping_shrink < 1:
            raise ArgumentError("damping_shrink must lie in (0, 1)")
        if self.max_newton < 1 or self.homotopy_steps < 1 or self.max_substeps < 0:
            raise ArgumentError("iteration counts must be positive")
        s = np.array(self.s_schedule)
        if len(s) == 0 or np.any(s <= 0) or np.any(np.diff(s) >= 0):
            raise ArgumentError("s_schedule must be positive and strictly decreasing")
        if self.linear_solver not in ("gmres", "direct"):
            raise ArgumentError("linear_solver must be 'gmres' or 'direct'")

    def to_json(self):
        return asdict(self)

    @classmethod
    def from_json(cls, obj):
        if isinstance(obj, str):
            obj = json.loads(obj)
        unknown = set(obj) - set(cls.__dataclass_fields__)
        if unknown:
            raise ArgumentError(f"unknown solver options {sorted(unknown)}")
        return cls(**obj)


@dataclass
class StageTrace:
    label: str
    residuals: list = field(default_factory=list)
    steps: list = field(default_factory=list)
    halvings: list = field(default_factory=list)
    margins: list = field(default_factory=list)
    linear_iterations: list = field(default_factory=list)
    proxies: dict = field(default_factory=dict)
    converged: bool = False

    @property
    def iterations(self):
        return len(self.steps)


@dataclass
class SolverTrace:
    s: float = float("nan")
    a: float = float("nan")
    stages: list = field(default_factory=list)

    @property
    def converged(self):
        return bool(self.stages) and self.stages[-1].converged

    @property
    def proxies(self):
        return self.stages[-1].proxies if self.stages else {}

    def max_iterations(self):
        return max((st.iterations for st in self.stages), default=0)

    def monotone(self) -> bool:
        """Accepted steps strictly decrease the residual sup-norm."""
        return all(np.all(np.diff(st.residuals) < 0) for st in self.stages)

    def to_json(self):
        return {"s": self.s, "a": self.a, "converged": self.converged,
                "stages": [asdict(st) for st in self.stages]}

    def dumps(self):
        return json.dumps(self.to_json(), indent=2)


# ----------------------------------------------------------- helpers

def _f_values(f, shape):
    v = f.values if isinstance(f, GridField) else f
    return np.broadcast_to(np.asarray(v, dtype=float), shape)


def proxies(u: GridField, bg: Background, jet: JetField = None) -> dict:
    """C^{1,1} proxies: max u_tt, |hess u|, |grad u_t|, |u_t| and osc u."""
    jet = differentiate(u, bg) if jet is None else jet
    d = bg.d
    H = jet.hess_u[..., :d, :d]
    return {
        "max_u_tt": float(jet.u_tt.max()),
        "max_hess_u": float(np.sqrt(np.sum(H * H, axis=(-2, -1))).max()),
        "max_grad_u_t": float(np.linalg.norm(jet.grad_u_t, axis=-1).max()),
        "max_u_t": float(np.abs(np.diff(u.values, axis=0)).max() * u.Nt),
        "osc_u": float(u.values.max() - u.values.min()),
    }


def _margins(jet: JetField):
    sA = symfun.sigmas_upto(jet.A_u, 2)
    F = jet.F(2)
    return {"sigma1_A": float(sA[..., 0].min()), "sigma2_A": float(sA[..., 1].min()),
            "u_tt": float(jet.u_tt.min()), "F": float(F.min())}, F


def coefficients(jet: JetField):
    """Coefficients of the linearized operator at every interior point.

    L v = F00 v_tt + 2 F0 . grad v_t + <Frr, hess v> + c . grad v with
    F00 = sigma_2(A_u), F0 = -T_1(A_u) grad u_t, Frr = T_1(E_u) and
    c = 2 Frr grad u - tr(Frr) grad u.
    """
    g = gsop.grad_F(jet.extended(), 2)
    Frr = g.r
    trF = np.trace(Frr, axis1=-2, axis2=-1)
    c = 2 * np.einsum("...ij,...j->...i", Frr, jet.grad_u) - trF[..., None] * jet.grad_u
    return g.r00, g.Y, Frr, c


def _check_admissible(jet: JetField, what="linearization"):
    adm = admissibility(jet)
    if not adm.all_admissible:
        bad = np.argwhere(~adm.admissible)[0]
        raise LinearizationError(f"{what} requested at a non-admissible point {tuple(bad)}",
                                 worst_index=tuple(int(i) for i in bad))
    return adm


def apply_linearization(u: GridField, bg: Background, v: GridField) -> GridField:
    """Discrete linearized operator at u applied to v (zero on boundary slices).

    Equals the exact derivative d/de F(jet(u + e v)) at e = 0; it depends on
    u only through its jet (at a solution F(jet u) = s f, so s and f are
    implicit).
    """
    jet = differentiate(u, bg)
    _check_admissible(jet)
    F00, F0, Frr, c = coefficients(jet)
    jv = differentiate(v, bg)
    out = np.zeros_like(u.values)
    out[1:-1] = (F00 * jv.u_tt + 2 * np.einsum("...i,...i->...", F0, jv.grad_u_t)
                 + symfun.pair(Frr, jv.hess_u) + np.einsum("...i,...i->...", c, jv.grad_u))
    return GridField(out)


def Q_form(u: GridField, bg: Background, v: GridField):
    """Pointwise quadratic form Q_u(Dv, Dv) of the principal part, Dv = (v_t, grad v)."""
    jet = differentiate(u, bg)
    _check_admissible(jet, "Q_u")
    F00, F0, Frr, _ = coefficients(jet)
    jv = differentiate(v, bg)
    X = jv.grad_u
    return (F00 * jv.u_t ** 2 + 2 * jv.u_t * np.einsum("...i,...i->...", F0, X)
            + symfun.quad(Frr, X))


class _Operators:
    """Sparse stencils on the interior unknowns (levels 1..Nt-1, all x)."""

    def __init__(self, bg: Background, Nt: int, Nx: int):
        self.shape = (Nt - 1,) + (Nx,) * bg.d
        m, ns = Nt - 1, Nx ** bg.d
        dt = 1.0 / Nt
        e = np.ones(m)
        T2 = sp.diags([e[:-1], -2 * e, e[:-1]], [-1, 0, 1], format="csr") / dt ** 2
        T1 = sp.diags([-e[:-1], e[:-1]], [-1, 1], format="csr") / (2 * dt)
        It, Is = sp.identity(m, format="csr"), sp.identity(ns, format="csr")
        D1, D2 = spatial_operators(bg, Nx)
        self.d = bg.d
        self.Dtt = sp.kron(T2, Is, format="csr")
        self.DtDx = [sp.kron(T1, D, format="csr") for D in D1]
        self.Dx = [sp.kron(It, D, format="csr") for D in D1]
        self.Dxx = [[sp.kron(It, D2[a][b], format="csr") for b in range(bg.d)]
                    for a in range(bg.d)]

    def jacobian(self, jet: JetField):
        F00, F0, Frr, c = coefficients(jet)
        diag = lambda a: sp.diags(np.ravel(a))
        J = diag(F00) @ self.Dtt
        for a in range(self.d):
            J = J + diag(2 * F0[..., a]) @ self.DtDx[a] + diag(c[..., a]) @ self.Dx[a]
            for b in range(self.d):
                J = J + diag(Frr[..., a, b]) @ self.Dxx[a][b]
        return J.tocsr()


def _linear_solve(J, rhs, cfg: SolverConfig):
    """Solve J h = rhs; GMRES with Jacobi preconditioning, direct fallback."""
    if cfg.linear_solver == "gmres":
        dinv = 1.0 / J.diagonal()
        M = spla.LinearOperator(J.shape, matvec=lambda x: dinv * x)
        count = [0]

        def cb(_):
            count[0] += 1

        n = J.shape[0]
        h, info = spla.gmres(J, rhs, rtol=cfg.linear_rtol, atol=0.0, M=M,
                             restart=min(n, 400), maxiter=20, callback=cb,
                             callback_type="pr_norm")
        if info == 0:
            return h, count[0]
        log.debug("gmres did not reach rtol (info=%s); falling back to a direct solve", info)
    return spla.spsolve(J.tocsc(), rhs), -1


# ------------------------------------------------------------ Newton

def newton_stage(u_init: GridField, bg: Background, target_rhs, cfg: SolverConfig = None,
                 label="stage", ops=None):
    """Newton iteration on log F(jet u) = log target with fixed boundary slices."""
    cfg = SolverConfig() if cfg is None else cfg
    u = u_init.copy()
    target = _f_values(target_rhs, u.values.shape)[1:-1]
    if np.any(target <= 0):
        raise ArgumentError("target right-hand side must be positive")
    log_target = np.log(target)
    ops = _Operators(bg, u.Nt, u.Nx) if ops is None else ops
    st = StageTrace(label)
    trace = SolverTrace(stages=[st])

    jet = differentiate(u, bg)
    if not admissibility(jet).all_admissible:
        raise StallError("initial iterate is not strictly admissible", trace, u)
    marg, F = _margins(jet)
    res = np.log(F) - log_target
    r = float(np.abs(res).max())
    st.residuals.append(r)
    st.margins.append(marg)
    for _ in range(cfg.max_newton):
        if r <= cfg.newton_tol:
            break
        J = sp.diags(1.0 / np.ravel(F)) @ ops.jacobian(jet)
        h, its = _linear_solve(J.tocsr(), -np.ravel(res), cfg)
        st.linear_iterations.append(its)
        h = h.reshape(ops.shape)
        alpha, halvings = 1.0, 0
        while True:
            trial = u.copy()
            trial.values[1:-1] += alpha * h
            tj = differentiate(trial, bg)
            tm, tF = _margins(tj)
            ok = all(tm[k] > 0 and tm[k] >= cfg.cone_margin * marg[k] for k in marg)
            if ok:
                tres = np.log(tF) - log_target
                tr = float(np.abs(tres).max())
                if tr < r:
                    break
            alpha *= cfg.damping_shrink
            halvings += 1
            if alpha < cfg.min_step:
                raise StallError(f"{label}: line search stalled at residual {r:.3e}", trace, u)
        u, jet, marg, F, res, r = trial, tj, tm, tF, tres, tr
        st.steps.append(alpha)
        st.halvings.append(halvings)
        st.residuals.append(r)
        st.margins.append(marg)
    if r > cfg.newton_tol:
        raise NonConvergenceError(f"{label}: no convergence in {cfg.max_newton} iterations "
                                  f"(residual {r:.3e})", trace, u)
    adm = admissibility(jet)
    if not adm.all_admissible:  # the line search should make this impossible
        raise SolverError(f"{label}: converged iterate left the admissible set", trace, u)
    st.converged = True
    st.proxies = proxies(u, bg, jet)
    return u, trace


def initial_barrier(u0, u1, bg: Background, f, s: float, Nt: int):
    """w = (1-t) u0 + t u1 + a t (t-1), doubling a from 1 until
    min F(jet w) >= 2 s max f over the interior."""
    u0, u1 = np.asarray(u0, dtype=float), np.asarray(u1, dtype=float)
    if u0.shape != u1.shape or u0.ndim != bg.d:
        raise ArgumentError("boundary slices must share the background's spatial shape")
    for name, ub in (("u0", u0), ("u1", u1)):
        if not np.all(symfun.in_cone(slice_schouten(ub, bg), 2)):
            raise SetupError(f"boundary slice {name} is not admissible")
    shape = (Nt + 1,) + u0.shape
    fmax = float(np.max(_f_values(f, shape)[1:-1]))
    a = 1.0
    while a <= A_MAX:
        w = GridField.interpolate(u0, u1, Nt, a)
        jet = differentiate(w, bg)
        adm = admissibility(jet)
        if adm.all_admissible and adm.min_F >= 2 * s * fmax:
            return w, a
        a *= 2.0
    raise SetupError("barrier parameter exceeded 2^30; boundary data incompatible at this resolution")


def solve_perturbed(u0, u1, bg: Background, f, s: float, cfg: SolverConfig = None, Nt: int = 64):
    """Continuity method from the barrier's own right-hand side to s f."""
    cfg = SolverConfig() if cfg is None else cfg
    if s <= 0:
        raise ArgumentError("s must be positive")
    w, a = initial_barrier(u0, u1, bg, f, s, Nt)
    shape = w.values.shape
    fv = _f_values(f, shape)
    if np.any(fv[1:-1] <= 0):
        raise ArgumentError("f must be positive on the interior")
    f0 = np.ones(shape)
    f0[1:-1] = differentiate(w, bg).F(2)
    ops = _Operators(bg, Nt, w.Nx)
    trace = SolverTrace(s=s, a=a)
    u = w
    M = cfg.homotopy_steps
    for m in range(1, M + 1):
        lam = m / M
        target = lam * s * fv + (1 - lam) * f0
        try:
            u, st = newton_stage(u, bg, target, cfg, label=f"homotopy {m}/{M}", ops=ops)
        except SolverError as exc:
            trace.stages.extend(exc.trace.stages if exc.trace else [])
            exc.trace = trace
            raise
        trace.stages.extend(st.stages)
    return u, trace


def approximate_geodesic(u0, u1, bg: Background, cfg: SolverConfig = None, Nt: int = 64, f=1.0):
    """Solutions u^s along cfg.s_schedule with warm starts.

    Each new s is reached by a Newton stage from the previous solution; on
    failure the gap is bisected geometrically up to cfg.max_substeps times.
    A stall at small s ends the march and returns the converged prefix.
    """
    cfg = SolverConfig() if cfg is None else cfg
    sched = cfg.s_schedule
    u, trace = solve_perturbed(u0, u1, bg, f, sched[0], cfg, Nt)
    out = [(sched[0], u, trace)]
    ops = _Operators(bg, Nt, u.Nx)
    for s_next in sched[1:]:
        s_prev = out[-1][0]
        result = _march(u, bg, f, s_prev, s_next, cfg, ops, trace.a)
        if result is None:
            log.info("geodesic march stalled before s=%g; returning %d solutions", s_next, len(out))
            break
        u, tr = result
        out.append((s_next, u, tr))
    return out


def _march(u, bg, f, s_prev, s_next, cfg, ops, a):
    for depth in range(cfg.max_substeps + 1):
        pieces = 2 ** depth
        ss = s_prev * (s_next / s_prev) ** (np.arange(1, pieces + 1) / pieces)
        tr = SolverTrace(s=s_next, a=a)
        v = u
        try:
            for sj in ss:
                v, st = newton_stage(v, bg, sj * _f_values(f, u.values.shape), cfg,
                                     label=f"s={sj:.6g}", ops=ops)
                tr.stages.extend(st.stages)
            return v, tr
        except SolverError:
            continue
    return None


# ------------------------------------------------------------ diagnostics

@dataclass
class BoundsReport:
    slacks: dict
    tol: float = 1e-8
    tols: dict = field(default_factory=lambda: {"gamma3": 1e-9})

    @property
    def passed(self):
        return {k: bool(v >= -self.tols.get(k, self.tol)) for k, v in self.slacks.items()}

    @property
    def all_passed(self):
        return all(self.passed.values())

    def to_json(self):
        return {"tol": self.tol, "tols": self.tols, "slacks": self.slacks, "passed": self.passed}


def verify_bounds(u: GridField, u0, u1, a: float, bg: Background, tol=1e-8) -> BoundsReport:
    """C^0 sandwich, u_t bounds, admissibility and the sigma_1(E_u) lower bound."""
    u0, u1 = np.asarray(u0, dtype=float), np.asarray(u1, dtype=float)
    lower = GridField.interpolate(u0, u1, u.Nt, a).values
    upper = GridField.interpolate(u0, u1, u.Nt, 0.0).values
    ut = np.diff(u.values, axis=0) * u.Nt  # cell averages of u_t
    jet = differentiate(u, bg)
    adm = admissibility(jet)
    slacks = {
        "sandwich_lower": float((u.values - lower).min()),
        "sandwich_upper": float((upper - u.values).min()),
        "u_t_lower": float((ut - (u1 - u0 - a)).min()),
        "u_t_upper": float(((u1 - u0 + a) - ut).min()),
        "gamma3": adm.gamma3_slack,
        "admissible": 0.0 if adm.all_admissible and adm.cross_check else -1.0,
    }
    return BoundsReport(slacks, tol)


def central_t(v: np.ndarray, Nt: int):
    """Second-order d/dt on all levels (one-sided at the ends)."""
    dt = 1.0 / Nt
    out = np.empty_like(v)
    out[1:-1] = (v[2:] - v[:-2]) / (2 * dt)
    out[0] = (-3 * v[0] + 4 * v[1] - v[2]) / (2 * dt)
    out[-1] = (3 * v[-1] - 4 * v[-2] + v[-3]) / (2 * dt)
    return out


def identity_defects(u: GridField, bg: Background, s: float, f, f_t=None):
    """Pointwise defects of L(t^2) = 2 sigma_2(A_u), L(u_t) = d/dt(s f) and
    L(u_t^2) = 2 u_t d/dt(s f) + 2 s f u_tt at the interior levels."""
    shape = u.values.shape
    fv = _f_values(f, shape)
    sft = s * (central_t(fv, u.Nt) if f_t is None else _f_values(f_t, shape))
    t = u.t.reshape((-1,) + (1,) * bg.d)
    jet = differentiate(u, bg)
    t2 = GridField(np.broadcast_to(t ** 2, shape).copy())
    d_t2 = apply_linearization(u, bg, t2).values[1:-1] - 2 * symfun.sigma(jet.A_u, 2)
    ut = central_t(u.values, u.Nt)
    d_ut = apply_linearization(u, bg, GridField(ut)).values[1:-1] - sft[1:-1]
    ut2 = apply_linearization(u, bg, GridField(ut ** 2)).values[1:-1]
    d_ut2 = ut2 - (2 * ut[1:-1] * sft[1:-1] + 2 * s * fv[1:-1] * jet.u_tt)
    return {"t2": d_t2, "u_t": d_ut, "u_t2": d_ut2}


def t_refinement_estimate(defect_N, defect_2N, Nt: int):
    """(|defect|, truncation estimate) at levels 2..Nt-2 from a grid and its 2x t-refinement.

    For an O(dt^2) defect the Richardson estimate of the truncation error on
    the coarse grid is |d_N - d_2N| * 4/3.  Levels 1 and Nt-1 are skipped:
    the one-sided t-derivative there is only first order.
    """
    j = np.arange(2, Nt - 1)
    a, b = defect_N[j - 1], defect_2N[2 * j - 1]
    return np.abs(a), np.abs(a - b) * 4.0 / 3.0


def directional_fd_check(u: GridField, bg: Background, v: GridField, eps=1e-6) -> float:
    """Relative sup-norm gap between apply_linearization and a central FD of F(jet)."""
    Fp = differentiate(u + eps * v, bg).F(2)
    Fm = differentiate(u - eps * v, bg).F(2)
    fd = (Fp - Fm) / (2 * eps)
    L = apply_linearization(u, bg, v).values[1:-1]
    return float(np.abs(L - fd).max() / max(np.abs(fd).max(), 1e-300))
