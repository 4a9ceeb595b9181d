"""Sampling certification of the concavity/convexity statements.

Midpoint tests report d = fn((P1 + P2)/2) - (fn(P1) + fn(P2))/2, so d >= 0 is
concavity; convexity of g is tested as concavity of -g.  Every trial draws its
points from its own generator ``default_rng([seed, trial])`` which makes a
report independent of chunking and of the number of workers.
"""
from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import gsop, symfun
from .errors import ArgumentError, DomainError, SamplingError
from .gsop import ExtendedMatrix

REJECTION_BUDGET = 10_000
CANDIDATE_THRESHOLD = -1e-7


@dataclass(frozen=True)
class SampleSpec:
    n: int
    k: int
    trials: int = 1000
    seed: int = 0
    eigen_scale: float = 1.0
    step_h: float = 1e-4
    # lower bound on symfun.cone_quality (and on the F gap of domain samples);
    # > 0 keeps FD stencils in the well-conditioned interior
    min_rel_margin: float = 0.0
    thin_fraction: float = 0.3

    def __post_init__(self):
        if not (2 <= self.n <= symfun.MAX_DIM):
            raise ArgumentError(f"n={self.n} outside 2..{symfun.MAX_DIM}")
        if not (1 <= self.k <= self.n):
            raise ArgumentError(f"k={self.k} outside 1..{self.n}")
        if self.trials < 1:
            raise ArgumentError("trials must be >= 1")
        if not self.eigen_scale > 0:
            raise ArgumentError("eigen_scale must be positive")
        if not (1e-8 <= self.step_h <= 1e-2):
            raise ArgumentError("step_h must lie in [1e-8, 1e-2]")
        if not (0 <= self.seed < 2 ** 64):
            raise ArgumentError("seed must be a 64-bit unsigned integer")


@dataclass
class CertReport:
    name: str
    trials_run: int
    worst_defect: float
    worst_witness: dict | None
    violation_count: int
    tolerance: float
    discarded: int = 0
    worst_trial: int = -1
    candidates: list = field(default_factory=list)
    defects: np.ndarray | None = field(default=None, repr=False)
    margins: np.ndarray | None = field(default=None, repr=False)

    @property
    def passed(self) -> bool:
        return self.violation_count == 0

    def to_json(self) -> dict:
        d = asdict(self)
        d.pop("defects")
        d.pop("margins")
        d["passed"] = self.passed
        return d

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True)

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["trial", "defect", "margin"])
            margins = self.margins if self.margins is not None else np.full(len(self.defects), np.nan)
            for i, (d, m) in enumerate(zip(self.defects, margins)):
                w.writerow([i, repr(float(d)), repr(float(m))])


BLOCK = 1000
CANDIDATES = 8


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    """Generator for one-off draws tied to (seed, trial)."""
    return np.random.default_rng([int(seed), int(trial)])


def block_rng(seed: int, block: int) -> np.random.Generator:
    """Stream for trials block*BLOCK ... (block+1)*BLOCK - 1."""
    return np.random.default_rng([int(seed), int(block), 0xB10C])


def random_orthogonal(rng, n, m=None):
    """Haar orthogonal matrix (or a stack of m) from orthonormalized Gaussians."""
    shape = (n, n) if m is None else (m, n, n)
    Q, R = np.linalg.qr(rng.standard_normal(shape))
    d = np.sign(np.diagonal(R, axis1=-2, axis2=-1))
    return Q * d[..., None, :]


def _esym_all(lam, k):
    """[sigma_0, ..., sigma_k] of the trailing axis."""
    e = [np.ones(lam.shape[:-1])] + [np.zeros(lam.shape[:-1]) for _ in range(k)]
    for i in range(lam.shape[-1]):
        li = lam[..., i]
        for j in range(min(i + 1, k), 0, -1):
            e[j] = e[j] + li * e[j - 1]
    return e


def _candidate_eigenvalues(spec, rng, m, K):
    """K candidate spectra per trial, mixing three families.

    thin: n-1 moderate eigenvalues and one pushed toward the cone boundary
    (the (1,1,1,-1+eps) family); shifted: N(0.5, 1) entries; positive:
    U(0.05, 1) entries.
    """
    n, k, c = spec.n, spec.k, spec.eigen_scale
    mode = rng.random((m, K))
    rest = c * rng.uniform(0.1, 1.0, (m, K, n - 1))
    eps = 10.0 ** rng.uniform(-3.0, 0.0, (m, K))
    shifted = c * rng.normal(0.5, 1.0, (m, K, n))
    positive = c * rng.uniform(0.05, 1.0, (m, K, n))
    tiny = c * rng.uniform(0.05, 1.0, (m, K))
    if k == n:
        last = eps * tiny
    else:
        e = _esym_all(rest, k)
        bound = np.min(np.stack([e[j] / e[j - 1] for j in range(1, k + 1)], -1), -1)
        last = -(1.0 - eps) * bound
    thin = np.concatenate([rest, last[..., None]], axis=-1)
    return np.where((mode < spec.thin_fraction)[..., None], thin,
                    np.where((mode < 0.5 + 0.5 * spec.thin_fraction)[..., None], shifted, positive))


def _accept(spec, lam):
    e = _esym_all(lam, spec.k)
    ok = np.all(np.stack(e[1:], -1) > 0, axis=-1)
    if spec.min_rel_margin > 0:
        rms = np.sqrt(np.sum(lam * lam, -1) / spec.n)
        with np.errstate(invalid="ignore", divide="ignore"):
            q = e[spec.k] / (math.comb(spec.n, spec.k) * rms ** spec.k)
        ok &= q >= spec.min_rel_margin
    return ok


def sample_eigenvalues(spec: SampleSpec, rng) -> np.ndarray:
    """Rejection sampler for one spectrum in Gamma_k^+."""
    for _ in range(REJECTION_BUDGET // CANDIDATES):
        lam = _candidate_eigenvalues(spec, rng, 1, CANDIDATES)[0]
        ok = _accept(spec, lam)
        if np.any(ok):
            return rng.permutation(lam[int(np.argmax(ok))])
    raise SamplingError(f"no Gamma_{spec.k}^+ sample after {REJECTION_BUDGET} attempts")


def sample_cone_batch(spec: SampleSpec, rng, m: int) -> np.ndarray:
    """m independent cone samples; row t only uses its own pre-drawn candidates."""
    n = spec.n
    lam = _candidate_eigenvalues(spec, rng, m, CANDIDATES)
    perm_keys = rng.random((m, n))
    Q = random_orthogonal(rng, n, m)
    fallback_seeds = rng.integers(0, 2 ** 63, m)
    ok = _accept(spec, lam)
    chosen = lam[np.arange(m), np.argmax(ok, axis=1)]
    chosen = np.take_along_axis(chosen, np.argsort(perm_keys, axis=1), axis=1)
    A = np.einsum("tij,tj,tkj->tik", Q, chosen, Q)
    A = 0.5 * (A + np.swapaxes(A, -1, -2))
    good = np.any(ok, axis=1) & np.all(symfun.sigmas_upto(A, spec.k) > 0, axis=-1)
    for t in np.flatnonzero(~good):
        frng = np.random.default_rng(int(fallback_seeds[t]))
        for _ in range(REJECTION_BUDGET):
            lam_t = sample_eigenvalues(spec, frng)
            Qt = random_orthogonal(frng, n)
            At = (Qt * lam_t) @ Qt.T
            At = 0.5 * (At + At.T)
            if np.all(symfun.sigmas_upto(At, spec.k) > 0):
                A[t] = At
                break
        else:
            raise SamplingError("conjugated sample left the cone")
    return A


def sample_cone(spec: SampleSpec, rng=None) -> np.ndarray:
    """Random element of the open cone Gamma_k^+ (seeded by ``spec.seed``)."""
    rng = np.random.default_rng(spec.seed) if rng is None else rng
    return sample_cone_batch(spec, rng, 1)[0]


def sample_domain_batch(spec: SampleSpec, rng, m: int) -> ExtendedMatrix:
    """m samples of R with r in Gamma_k^+ and F_k(R) > 0.

    Y is Gaussian and r00 = (T_{k-1}(r)(Y, Y) + delta) / sigma_k(r) for a
    random positive gap delta.
    """
    k = spec.k
    r = sample_cone_batch(spec, rng, m)
    Y = spec.eigen_scale * rng.standard_normal((m, spec.n))
    expo = rng.uniform(-2.0, 0.5, m)
    sig, Ts = symfun.newton_chain(r, k)
    TYY = symfun.quad(Ts[k - 1], Y)
    delta = sig[k - 1] * spec.eigen_scale * 10.0 ** expo
    if spec.min_rel_margin > 0:
        # keep F / (r00 sigma_k) = delta / (TYY + delta) above the margin
        q = min(spec.min_rel_margin, 0.5)
        delta = np.maximum(delta, TYY * q / (1.0 - q))
    R = ExtendedMatrix((TYY + delta) / sig[k - 1], Y, r)
    ok, _, _ = gsop.domain_check(R, k)
    if not np.all(ok):
        raise SamplingError("domain sample failed its post-check")
    return R


def sample_domain(spec: SampleSpec, rng=None) -> ExtendedMatrix:
    """Random R with r in Gamma_k^+ and F_k(R) > 0."""
    rng = np.random.default_rng(spec.seed) if rng is None else rng
    R = sample_domain_batch(spec, rng, 1)
    return ExtendedMatrix(R.r00[0], R.Y[0], R.r[0])


# ---------------------------------------------------------------- midpoint tests

def midpoint_concavity(fn, P1, P2) -> float:
    """fn(midpoint) - mean(fn(P1), fn(P2)); non-negative for concave fn."""
    mid = 0.5 * (P1 + P2)
    vals = []
    for P in (P1, P2, mid):
        try:
            v = float(fn(P))
        except DomainError:
            raise
        if not math.isfinite(v):
            raise DomainError("midpoint test point outside the domain")
        vals.append(v)
    return vals[2] - 0.5 * (vals[0] + vals[1])


def midpoint_defects(fn_batch, P1, P2):
    """Vectorized midpoint defects on flat point stacks; nan marks invalid trials."""
    f1 = fn_batch(P1)
    f2 = fn_batch(P2)
    fm = fn_batch(0.5 * (P1 + P2))
    return fm - 0.5 * (f1 + f2)


# ------------------------------------------------------------ FD Hessian oracle

def _stencil(dim):
    offs = [np.zeros(dim)]
    for i in range(dim):
        e = np.zeros(dim)
        e[i] = 1
        offs += [e, -e]
    for i in range(dim):
        for j in range(i + 1, dim):
            for si in (1, -1):
                for sj in (1, -1):
                    e = np.zeros(dim)
                    e[i], e[j] = si, sj
                    offs.append(e)
    return np.array(offs)


def fd_hessian_batch(fn_batch, X, h):
    """Central-difference Hessians of ``fn_batch`` at the rows of ``X``.

    ``h`` is a per-point step.  Raises DomainError when a stencil point leaves
    the domain (non-finite value).
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    P, dim = X.shape
    h = np.broadcast_to(np.asarray(h, dtype=float), (P,))
    offs = _stencil(dim)
    pts = X[:, None, :] + h[:, None, None] * offs[None, :, :]
    vals = fn_batch(pts.reshape(-1, dim)).reshape(P, len(offs))
    if not np.all(np.isfinite(vals)):
        raise DomainError("FD stencil left the domain")
    f0 = vals[:, 0]
    Hs = np.zeros((P, dim, dim))
    for i in range(dim):
        Hs[:, i, i] = (vals[:, 1 + 2 * i] - 2 * f0 + vals[:, 2 + 2 * i]) / h ** 2
    idx = 1 + 2 * dim
    for i in range(dim):
        for j in range(i + 1, dim):
            pp, pm, mp, mm = (vals[:, idx + q] for q in range(4))
            Hs[:, i, j] = Hs[:, j, i] = (pp - pm - mp + mm) / (4 * h ** 2)
            idx += 4
    return Hs


def _step(X, step_h):
    return step_h * np.maximum(1.0, np.max(np.abs(X), axis=-1))


def fd_hessian_extremal_eigs(fn_batch, X, step_h=1e-4, mode="min", tol=1e-6):
    """Extremal eigenvalue of the FD Hessian at each row of ``X``.

    Points whose eigenvalue lands within 10x ``tol`` of the acceptance
    threshold are recomputed with Richardson extrapolation at half step.
    """
    if mode not in ("min", "max"):
        raise ArgumentError("mode must be 'min' or 'max'")
    X = np.atleast_2d(np.asarray(X, dtype=float))
    h = _step(X, step_h)
    Hs = fd_hessian_batch(fn_batch, X, h)
    pick = (lambda w: w[..., 0]) if mode == "min" else (lambda w: w[..., -1])
    ev = pick(np.linalg.eigvalsh(Hs))
    near = (ev < 10 * tol) if mode == "min" else (ev > -10 * tol)
    if np.any(near):
        Hh = fd_hessian_batch(fn_batch, X[near], 0.5 * h[near])
        ev = ev.copy()
        ev[near] = pick(np.linalg.eigvalsh((4 * Hh - Hs[near]) / 3))
    return ev


def fd_hessian_extremal_eig(fn, point, step_h=1e-4, mode="min"):
    """Single-point wrapper; ``fn`` maps a flat vector to a scalar."""
    point = np.asarray(point, dtype=float)

    def batch(V):
        return np.array([fn(v) for v in V])

    return float(fd_hessian_extremal_eigs(batch, point[None, :], step_h, mode)[0])


def poly_jet(fn_batch, X, h=None):
    """(value, gradient, Hessian) of a polynomial by central differences.

    Exact up to roundoff when ``fn_batch`` has degree <= 2 in every single
    coordinate (the case for F_k, sigma_k and T_{k-1}(r)(Y, Y) on flat
    (r00, Y, upper(r)) vectors): the truncation terms of both stencils
    involve third derivatives along one coordinate.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    h = 0.1 * np.maximum(1.0, np.max(np.abs(X), axis=-1)) if h is None else h
    Hs = fd_hessian_batch(fn_batch, X, h)
    dim = X.shape[1]
    g = np.empty_like(X)
    for i in range(dim):
        e = np.zeros(dim)
        e[i] = 1.0
        g[:, i] = (fn_batch(X + h[:, None] * e) - fn_batch(X - h[:, None] * e)) / (2 * h)
    return fn_batch(X), g, Hs


def _extremal(L, mode, relative):
    w = np.linalg.eigvalsh(L)
    ev = w[:, -1] if mode == "max" else w[:, 0]
    if relative:
        # floating-point eigenvalues carry absolute error ~ eps |L|_2
        ev = ev / np.abs(w).max(axis=-1)
    return ev


def _outer(a, b):
    return np.einsum("pi,pj->pij", a, b)


def logF_hessian_chain_eigs(X, n, k=2, mode="max", relative=False):
    """Extremal eigenvalue of the Hessian of log F_k via the chain rule.

    The jet of the polynomial F_k is truncation-free (``poly_jet``), and the
    Hessian of log F_k is H_F / F - g g^T / F^2.  Unlike the FD Hessian of
    log F this stays accurate arbitrarily close to {F = 0} and to the cone
    boundary, up to roundoff; with ``relative`` the eigenvalue is divided by
    the spectral norm, which is the scale of that roundoff.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    ok = np.isfinite(logF_flat(n, k)(X))
    F, g, HF = poly_jet(F_flat(n, k), X)
    L = HF / F[:, None, None] - _outer(g, g) / (F ** 2)[:, None, None]
    return np.where(ok, _extremal(L, mode, relative), np.nan)


def H_hessian_chain_eigs(X, n, k=2, mode="min", relative=False):
    """Extremal eigenvalue of the Hessian of H_k = N / D by the quotient rule.

    N = T_{k-1}(r)(Y, Y) and D = sigma_k(r) are polynomials with
    truncation-free jets, so the Hessian
    H_N/D - (g_N g_D^T + g_D g_N^T)/D^2 - N H_D/D^2 + 2 N g_D g_D^T/D^3
    is exact up to roundoff.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    ok = np.isfinite(H_flat(n, k)(X))

    def num(V):
        Y, r = V[..., :n], sym_from_upper(V[..., n:], n)
        return symfun.quad(symfun.newton_transform(r, k - 1), Y)

    def den(V):
        return symfun.sigma(sym_from_upper(V[..., n:], n), k)

    N, gN, HN = poly_jet(num, X)
    D, gD, HD = poly_jet(den, X)
    D1, D2, D3 = (D ** p for p in (1, 2, 3))
    L = (HN / D1[:, None, None] - (_outer(gN, gD) + _outer(gD, gN)) / D2[:, None, None]
         - (N / D2)[:, None, None] * HD + (2 * N / D3)[:, None, None] * _outer(gD, gD))
    return np.where(ok, _extremal(L, mode, relative), np.nan)


# -------------------------------------------------------------- flat adapters

def n_upper(n):
    return n * (n + 1) // 2


def sym_from_upper(v, n):
    iu = np.triu_indices(n)
    r = np.zeros(v.shape[:-1] + (n, n))
    r[..., iu[0], iu[1]] = v
    r[..., iu[1], iu[0]] = v
    return r


def upper_of(r):
    n = r.shape[-1]
    iu = np.triu_indices(n)
    return r[..., iu[0], iu[1]]


def logF_flat(n, k=2):
    def fn(V):
        return gsop.log_F_unchecked(ExtendedMatrix.from_flat(V, n), k)
    return fn


def F_flat(n, k=2):
    """F_k on flat vectors, without a domain test (it is a polynomial)."""
    def fn(V):
        return gsop.F_k(ExtendedMatrix.from_flat(V, n), k)
    return fn


def H_flat(n, k=2):
    """H_k on flat (Y, upper(r)) vectors; nan outside the cone."""
    def fn(V):
        Y = V[..., :n]
        r = sym_from_upper(V[..., n:], n)
        return gsop.H_unchecked(r, Y, k)
    return fn


def neg(fn):
    return lambda V: -fn(V)


def lorentz_log(V):
    """log(x y - |z|^2) on flat (x, y, z...) vectors; nan off the domain."""
    V = np.asarray(V, dtype=float)
    x, y, z = V[..., 0], V[..., 1], V[..., 2:]
    q = x * y - np.sum(z * z, axis=-1)
    ok = (x > 0) & (q > 0)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(ok, np.log(np.where(ok, q, 1.0)), np.nan)


# ------------------------------------------------------------- point samplers

def draw_domain_points(spec, rng, m):
    return sample_domain_batch(spec, rng, m).flatten()


def draw_H_points(spec, rng, m):
    r = sample_cone_batch(spec, rng, m)
    r = r / np.linalg.norm(r, axis=(-2, -1), keepdims=True)
    Y = rng.standard_normal((m, spec.n))
    Y /= np.linalg.norm(Y, axis=-1, keepdims=True)
    return np.concatenate([Y, upper_of(r)], axis=-1)


def draw_lorentz_points(spec, rng, m):
    dz = spec.n - 2 if spec.n > 2 else 1
    z = rng.standard_normal((m, dz))
    x = np.exp(rng.uniform(-1.0, 1.0, m))
    zz = np.sum(z * z, -1)
    slack = spec.eigen_scale * 10.0 ** rng.uniform(-2.0, 0.5, m)
    if spec.min_rel_margin > 0:
        # keep (x y - |z|^2) / (x y) = slack / (zz + slack) above the margin
        q = min(spec.min_rel_margin, 0.5)
        slack = np.maximum(slack, zz * q / (1.0 - q))
    y = (zz + slack) / x
    return np.concatenate([x[:, None], y[:, None], z], axis=-1)


DRAWERS = {
    "domain": draw_domain_points,
    "H": draw_H_points,
    "lorentz": draw_lorentz_points,
}


def _draw_block(args):
    kind, spec, block, per_trial = args
    m = min(BLOCK, spec.trials - block * BLOCK)
    rng = block_rng(spec.seed, block)
    return np.concatenate([DRAWERS[kind](spec, rng, m) for _ in range(per_trial)], axis=-1)


def draw_points(kind, spec, per_trial=1, workers=1):
    """Per-trial point draws in trial order; blocks of BLOCK trials are the
    unit of parallelism, so results do not depend on ``workers``."""
    nblocks = -(-spec.trials // BLOCK)
    jobs = [(kind, spec, b, per_trial) for b in range(nblocks)]
    if workers > 1 and nblocks > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(_draw_block, jobs))
    else:
        parts = [_draw_block(j) for j in jobs]
    return np.concatenate(parts, axis=0)


def _chunked(fn, X, size=20000):
    return np.concatenate([fn(X[i:i + size]) for i in range(0, len(X), size)])


def _report(name, defects, tol, points=None, dim=None, margins=None):
    valid = np.isfinite(defects)
    discarded = int(np.count_nonzero(~valid))
    if np.any(valid):
        dv = np.where(valid, defects, np.inf)
        i = int(np.argmin(dv))  # first index wins ties
        worst = float(defects[i])
        witness = None
        if points is not None:
            row = points[i]
            witness = {"trial": i, "P1": row[:dim].tolist(), "P2": row[dim:2 * dim].tolist()}
    else:
        i, worst, witness = -1, float("nan"), None
    return CertReport(
        name=name,
        trials_run=len(defects),
        worst_defect=worst,
        worst_witness=witness,
        violation_count=int(np.count_nonzero(valid & (defects < -tol))),
        tolerance=tol,
        discarded=discarded,
        worst_trial=i,
        defects=defects,
        margins=margins,
    )


# ------------------------------------------------------------------ suites

def concavity_suite(spec: SampleSpec, tol=1e-9, workers=1) -> CertReport:
    """Midpoint concavity of log F_k on pairs of domain samples."""
    pts = draw_points("domain", spec, per_trial=2, workers=workers)
    dim = pts.shape[1] // 2
    fn = logF_flat(spec.n, spec.k)
    d = midpoint_defects(lambda V: _chunked(fn, V), pts[:, :dim], pts[:, dim:])
    return _report(f"concavity_logF{spec.k}_n{spec.n}", d, tol, pts, dim)


def convexity_suite(spec: SampleSpec, tol=1e-9, workers=1, name=None) -> CertReport:
    """Midpoint convexity of H_k (Marcus case when k = n)."""
    pts = draw_points("H", spec, per_trial=2, workers=workers)
    dim = pts.shape[1] // 2
    fn = neg(H_flat(spec.n, spec.k))
    d = midpoint_defects(lambda V: _chunked(fn, V), pts[:, :dim], pts[:, dim:])
    return _report(name or f"convexity_H{spec.k}_n{spec.n}", d, tol, pts, dim)


def lorentz_suite(spec: SampleSpec, tol=1e-10, workers=1) -> CertReport:
    pts = draw_points("lorentz", spec, per_trial=2, workers=workers)
    dim = pts.shape[1] // 2
    d = midpoint_defects(lorentz_log, pts[:, :dim], pts[:, dim:])
    return _report(f"lorentz_n{spec.n}", d, tol, pts, dim)


def hessian_suite(spec: SampleSpec, kind: str, tol=1e-6, workers=1, chunk=200) -> CertReport:
    """FD-Hessian extremal eigenvalue at random interior points.

    kind: 'logF' (max eigenvalue, must be <= tol), 'H' (min eigenvalue of H_k,
    must be >= -tol), 'lorentz' (max eigenvalue of the log), 'logF_chain'
    (max eigenvalue of log F_k from truncation-free polynomial jets, relative
    to the spectral norm), 'H_chain' (same for the min eigenvalue of H_k).
    """
    if kind == "logF":
        pts = draw_points("domain", spec, workers=workers)
        fn, mode = logF_flat(spec.n, spec.k), "max"
    elif kind == "H":
        pts = draw_points("H", spec, workers=workers)
        fn, mode = H_flat(spec.n, spec.k), "min"
    elif kind == "lorentz":
        pts = draw_points("lorentz", spec, workers=workers)
        fn, mode = lorentz_log, "max"
    elif kind in ("logF_chain", "H_chain"):
        pts = draw_points("domain" if kind == "logF_chain" else "H", spec, workers=workers)
        chain, mode = ((logF_hessian_chain_eigs, "max") if kind == "logF_chain"
                       else (H_hessian_chain_eigs, "min"))
        ev = np.concatenate([chain(pts[i:i + chunk], spec.n, spec.k, mode, relative=True)
                             for i in range(0, len(pts), chunk)])
        defects = ev if mode == "min" else -ev
        return _report(f"hessian_{kind}_n{spec.n}_k{spec.k}", defects, tol,
                       np.concatenate([pts, pts], axis=1), pts.shape[1], margins=ev)
    else:
        raise ArgumentError(f"unknown hessian suite {kind!r}")
    evs = []
    for i in range(0, len(pts), chunk):
        try:
            evs.append(fd_hessian_extremal_eigs(fn, pts[i:i + chunk], spec.step_h, mode, tol))
        except DomainError:
            # fall back point by point so a single boundary point is discarded, not the chunk
            part = []
            for p in pts[i:i + chunk]:
                try:
                    part.append(fd_hessian_extremal_eigs(fn, p[None], spec.step_h, mode, tol)[0])
                except DomainError:
                    part.append(np.nan)
            evs.append(np.array(part))
    ev = np.concatenate(evs)
    defects = ev if mode == "min" else -ev
    dim = pts.shape[1]
    return _report(f"hessian_{kind}_n{spec.n}_k{spec.k}", defects, tol,
                   np.concatenate([pts, pts], axis=1), dim, margins=ev)


def conjecture_search(spec: SampleSpec, workers=1) -> CertReport:
    """Midpoint-convexity evidence for H_k, 3 <= k <= n-1.

    Reports the worst defect; never asserts a sign.  Defects below -1e-7 are
    re-evaluated on the same segment shrunk 2x and 4x about its midpoint, and
    kept as candidate counterexamples only when the curvature-normalized
    defect d / |P2 - P1|^2 stays negative and stable.
    """
    if spec.n < 4 or not (3 <= spec.k <= spec.n - 1):
        raise ArgumentError("conjecture search needs n >= 4 and 3 <= k <= n-1")
    rep = convexity_suite(spec, tol=-CANDIDATE_THRESHOLD, workers=workers,
                          name=f"conjecture_H{spec.k}_n{spec.n}")
    pts = draw_points("H", spec, per_trial=2, workers=workers)
    dim = pts.shape[1] // 2
    fn = neg(H_flat(spec.n, spec.k))
    suspects = np.flatnonzero(np.isfinite(rep.defects) & (rep.defects < CANDIDATE_THRESHOLD))
    for t in suspects:
        P1, P2 = pts[t, :dim], pts[t, dim:]
        mid, half = 0.5 * (P1 + P2), 0.5 * (P2 - P1)
        norm = []
        for shrink in (1.0, 2.0, 4.0):
            a, b = mid - half / shrink, mid + half / shrink
            d = midpoint_defects(fn, a[None], b[None])[0]
            norm.append(d / float(np.sum((b - a) ** 2)))
        stable = (all(np.isfinite(norm)) and max(norm) < 0
                  and abs(norm[2] - norm[1]) <= 0.5 * abs(norm[1]))
        if stable:
            rep.candidates.append({"trial": int(t), "normalized_defects": [float(x) for x in norm],
                                   "P1": P1.tolist(), "P2": P2.tolist()})
    # a sign is never asserted here; the report only records evidence
    rep.violation_count = len(rep.candidates)
    return rep


# ------------------------------------------------------- identity verifiers

def _fro2(r):
    return np.einsum("...ij,...ij->...", r, r)


def verify_sigma1_product(r, rt, V):
    """Absolute defects of the two sigma_1 sigma~_1 decompositions."""
    r, rt = np.asarray(r, float), np.asarray(rt, float)
    V = np.asarray(V, float)
    s1, s2 = symfun.sigmas_upto(r, 2)[..., 0], symfun.sigmas_upto(r, 2)[..., 1]
    t1, t2 = symfun.sigmas_upto(rt, 2)[..., 0], symfun.sigmas_upto(rt, 2)[..., 1]
    if np.any(s1 <= 0) or np.any(t1 <= 0):
        raise DomainError("sigma_1 > 0 is needed for both matrices")
    lhs = s1 * t1
    rhs1 = s2 * t1 / s1 + t2 * s1 / t1 + 0.5 * (_fro2(r) * t1 / s1 + _fro2(rt) * s1 / t1)
    if np.any(s2 <= 0) or np.any(t2 <= 0):
        raise DomainError("second identity needs both matrices in Gamma_2^+")
    if np.any(np.abs(np.linalg.norm(V, axis=-1) - 1) > 1e-12):
        raise DomainError("V must be a unit vector")
    T, Tt = symfun.newton_transform(r, 1), symfun.newton_transform(rt, 1)
    r11, rt11 = symfun.quad(r, V), symfun.quad(rt, V)
    T11, Tt11 = symfun.quad(T, V), symfun.quad(Tt, V)
    rhs2 = ((s2 + 0.5 * (_fro2(r) - r11 ** 2)) * Tt11 / T11
            + (t2 + 0.5 * (_fro2(rt) - rt11 ** 2)) * T11 / Tt11 + r11 * rt11)
    return np.abs(lhs - rhs1), np.abs(lhs - rhs2)


def verify_mixed_bounds(r, rt, V1, W):
    """Slacks of the two lower bounds for Q = sigma_1 sigma~_1 - (r, r~)."""
    r, rt = np.asarray(r, float), np.asarray(rt, float)
    for M in (r, rt):
        if not np.all(symfun.in_cone(M, 2)):
            raise DomainError("both matrices must lie in Gamma_2^+")
    for v in (V1, W):
        if np.any(np.abs(np.linalg.norm(v, axis=-1) - 1) > 1e-12):
            raise DomainError("V1 and W must be unit vectors")
    s = symfun.sigmas_upto(r, 2)
    t = symfun.sigmas_upto(rt, 2)
    Q = s[..., 0] * t[..., 0] - symfun.pair(r, rt)
    T, Tt = symfun.newton_transform(r, 1), symfun.newton_transform(rt, 1)
    TVV, TtVV = symfun.quad(T, V1), symfun.quad(Tt, V1)
    TWW, TtWW = symfun.quad(T, W), symfun.quad(Tt, W)
    TVW, TtVW = symfun.quad(T, V1, W), symfun.quad(Tt, V1, W)
    bound_a = s[..., 1] * TtVV / TVV + t[..., 1] * TVW ** 2 / (TVV * TtWW)
    bound_b = t[..., 1] * TVV / TtVV + s[..., 1] * TtVW ** 2 / (TtVV * TWW)
    return Q - bound_a, Q - bound_b


def verify_parallelogram(r, rt):
    """|4 sigma_2((r + r~)/2) - (sigma_2 + sigma~_2 + sigma_1 sigma~_1 - (r, r~))|."""
    r, rt = np.asarray(r, float), np.asarray(rt, float)
    s, t = symfun.sigmas_upto(r, 2), symfun.sigmas_upto(rt, 2)
    lhs = 4 * symfun.sigma(0.5 * (r + rt), 2)
    rhs = s[..., 1] + t[..., 1] + s[..., 0] * t[..., 0] - symfun.pair(r, rt)
    return np.abs(lhs - rhs)


def positivity_form(E, v):
    """<T_1(E), -v (x) v + |v|^2 I / 2>."""
    E, v = np.asarray(E, float), np.asarray(v, float)
    T = symfun.newton_transform(E, 1)
    return 0.5 * np.trace(T, axis1=-2, axis2=-1) * np.sum(v * v, -1) - symfun.quad(T, v)


def verify_positivity(E, v, n=None):
    """Slack of the positivity bound: q for n = 4, q - 2/5 sigma_1(E)|v|^2 for n >= 5."""
    E = np.asarray(E, float)
    n = E.shape[-1] if n is None else n
    if n != E.shape[-1]:
        raise ArgumentError("n does not match the matrix dimension")
    if n < 4:
        raise ArgumentError("the positivity bound is stated for n >= 4")
    if not np.all(symfun.in_cone(E, 2)):
        raise DomainError("E must lie in Gamma_2^+")
    q = positivity_form(E, v)
    if n == 4:
        return q
    return q - 0.4 * symfun.sigma(E, 1) * np.sum(np.asarray(v, float) ** 2, -1)


def verify_lorentz(P1, P2):
    """Midpoint-concavity defect of log(x y - |z|^2) on flat (x, y, z...) points."""
    P1, P2 = np.asarray(P1, float), np.asarray(P2, float)
    d = midpoint_defects(lorentz_log, P1, P2)
    if not np.all(np.isfinite(d)):
        raise DomainError("Lorentz test point outside x > 0, xy - |z|^2 > 0")
    return d


# -------------------------------------------------------------- batch suites

def _random_sym(rng, m, n):
    G = rng.standard_normal((m, n, n))
    return 0.5 * (G + np.swapaxes(G, -1, -2))


def _cone_batch(n, k, m, seed):
    spec = SampleSpec(n=n, k=k, trials=m, seed=seed)
    return np.concatenate([sample_cone_batch(spec, block_rng(seed, b), min(BLOCK, m - b * BLOCK))
                           for b in range(-(-m // BLOCK))])


def _unit_fro(A):
    return A / np.linalg.norm(A, axis=(-2, -1), keepdims=True)


def _unit(rng, m, n):
    V = rng.standard_normal((m, n))
    return V / np.linalg.norm(V, axis=-1, keepdims=True)


def identity_suite(samples=1000, seed=0, dims=(3, 4, 5, 6)) -> dict:
    """Maximum absolute defect of every exact identity, per dimension."""
    out = {}
    for n in dims:
        rng = np.random.default_rng([seed, n])
        # the identities are homogeneous; unit-size samples make the
        # absolute tolerance scale-free
        A = _unit_fro(_random_sym(rng, samples, n))
        X = _unit(rng, samples, n)
        cone = _unit_fro(_cone_batch(n, 2, samples, seed + 17 * n))
        cone2 = _unit_fro(_cone_batch(n, 2, samples, seed + 17 * n + 1))
        rank_one = 0.0
        for k in range(1, n):
            d1, d2 = symfun.rank_one_defects(A, X, k)
            e1, e2 = symfun.rank_one_defects(cone, X, k)
            rank_one = max(rank_one, d1.max(), d2.max(), e1.max(), e2.max())
        out[f"rank_one_n{n}"] = float(rank_one)
        tilde = 0.0
        for k in range(1, n + 1):
            spec = SampleSpec(n=n, k=k, trials=samples, seed=seed + 31 * n + k)
            R = sample_domain_batch(spec, block_rng(spec.seed, 0), samples)
            tilde = max(tilde, float(gsop.tilde_identity_defect(R, k).max()))
        out[f"tilde_n{n}"] = tilde
        T1 = symfun.newton_transform(A, 1)
        out[f"Eu1_n{n}"] = float(np.max(np.abs(symfun.pair(T1, A) - 2 * symfun.sigma(A, 2))))
        s = symfun.sigmas_upto(A, 2)
        out[f"s2_trace_n{n}"] = float(np.max(np.abs(s[:, 1] - 0.5 * (s[:, 0] ** 2 - _fro2(A)))))
        d1, d2 = verify_sigma1_product(cone, cone2, _unit(rng, samples, n))
        out[f"sigma1_product_split1_n{n}"] = float(d1.max())
        out[f"sigma1_product_split2_n{n}"] = float(d2.max())
        B = _unit_fro(_random_sym(rng, samples, n))
        out[f"parallelogram_n{n}"] = float(verify_parallelogram(A, B).max())
    return out


def mixed_bounds_suite(n=4, trials=10_000, seed=0):
    cone = _cone_batch(n, 2, trials, seed)
    cone2 = _cone_batch(n, 2, trials, seed + 1)
    rng = np.random.default_rng([seed, 43])
    V1, W = _unit(rng, trials, n), _unit(rng, trials, n)
    a, b = verify_mixed_bounds(cone, cone2, V1, W)
    return a, b


def positivity_suite(n=4, trials=10_000, seed=0):
    """Slacks on random cone samples plus the diag(1,...,1,-1+eps) family."""
    E = _cone_batch(n, 2, trials, seed)
    rng = np.random.default_rng([seed, 313])
    v = rng.standard_normal((trials, n))
    slack = verify_positivity(E, v, n)
    fam = []
    for e in (1e-1, 1e-2, 1e-3, 1e-4):
        # most negative entry allowed in Gamma_2^+ with n-1 ones is -(n-2)/2
        D = np.diag(np.append(np.ones(n - 1), -(n - 2) / 2 + e))
        for vv in np.vstack([np.eye(n), rng.standard_normal((50, n))]):
            fam.append(float(verify_positivity(D, vv, n)))
    return slack, np.array(fam)


def derivative_suite(n=4, trials=1000, seed=0, step=1e-6):
    """Relative sup-norm gap between the closed-form gradient of F_2 and central FD."""
    spec = SampleSpec(n=n, k=2, trials=trials, seed=seed)
    R = sample_domain_batch(spec, block_rng(seed, 0), trials)
    g = gsop.grad_F(R, 2).to_matrix()
    fd = gsop.grad_F_fd(R, 2, step).to_matrix()
    scale = np.maximum(np.abs(g).max(axis=(-2, -1)), 1e-300)
    return np.abs(g - fd).max(axis=(-2, -1)) / scale
