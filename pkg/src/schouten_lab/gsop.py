"""The Gursky-Streets operator family on extended matrices.

An extended matrix packs a scalar ``r00``, a vector ``Y`` and a symmetric
block ``r`` into the symmetric (n+1)x(n+1) matrix

    R = [[r00, Y^T],
         [Y,   r  ]].

F_k(R) = r00 sigma_k(r) - <T_{k-1}(r), Y (x) Y>.  k = 1 is Donaldson's operator
r00 sigma_1(r) - |Y|^2, k = 2 is the operator of the perturbed geodesic
equation with (r00, Y, r) = (u_tt, grad u_t, A_u).

Derivative convention: gradients are stored per full-matrix index, so the
off-diagonal slot (i, j) holds dF/dr_ij with r_ij and r_ji counted separately.
A symmetric perturbation D therefore changes F by the full Frobenius pairing
<grad, D> over the (n+1)x(n+1) matrix, i.e. 2 * stored value per unordered
off-diagonal pair.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import symfun
from .errors import ArgumentError, DomainError


@dataclass(frozen=True)
class ExtendedMatrix:
    """Block object (r00, Y, r); fields may carry a common batch shape."""

    r00: np.ndarray
    Y: np.ndarray
    r: np.ndarray

    def __post_init__(self):
        r00 = np.asarray(self.r00, dtype=float)
        Y = np.asarray(self.Y, dtype=float)
        r = np.asarray(self.r, dtype=float)
        if r.ndim < 2 or r.shape[-1] != r.shape[-2]:
            raise ArgumentError(f"r must be square, got {r.shape}")
        if Y.shape[-1] != r.shape[-1]:
            raise ArgumentError(f"len(Y)={Y.shape[-1]} does not match n={r.shape[-1]}")
        object.__setattr__(self, "r00", r00)
        object.__setattr__(self, "Y", Y)
        object.__setattr__(self, "r", r)

    @property
    def n(self) -> int:
        return self.r.shape[-1]

    @classmethod
    def from_matrix(cls, M):
        M = np.asarray(M, dtype=float)
        return cls(M[..., 0, 0], M[..., 1:, 0], M[..., 1:, 1:])

    def to_matrix(self) -> np.ndarray:
        n = self.n
        batch = np.broadcast_shapes(self.r00.shape, self.Y.shape[:-1], self.r.shape[:-2])
        M = np.zeros(batch + (n + 1, n + 1))
        M[..., 0, 0] = self.r00
        M[..., 1:, 0] = self.Y
        M[..., 0, 1:] = self.Y
        M[..., 1:, 1:] = self.r
        return M

    def __add__(self, other):
        return ExtendedMatrix(self.r00 + other.r00, self.Y + other.Y, self.r + other.r)

    def __sub__(self, other):
        return ExtendedMatrix(self.r00 - other.r00, self.Y - other.Y, self.r - other.r)

    def __mul__(self, c):
        return ExtendedMatrix(c * self.r00, c * self.Y, c * self.r)

    __rmul__ = __mul__

    def flatten(self) -> np.ndarray:
        """Independent coordinates (r00, Y, upper triangle of r)."""
        iu = np.triu_indices(self.n)
        return np.concatenate(
            [self.r00[..., None], self.Y, self.r[..., iu[0], iu[1]]], axis=-1
        )

    @classmethod
    def from_flat(cls, v, n: int):
        v = np.asarray(v, dtype=float)
        iu = np.triu_indices(n)
        r = np.zeros(v.shape[:-1] + (n, n))
        r[..., iu[0], iu[1]] = v[..., 1 + n:]
        r[..., iu[1], iu[0]] = v[..., 1 + n:]
        return cls(v[..., 0], v[..., 1:1 + n], r)

    def to_json(self):
        return {"r00": self.r00.tolist(), "Y": self.Y.tolist(), "r": self.r.tolist()}


@dataclass(frozen=True)
class DomainCheck:
    in_domain: bool
    cone_margin: float
    F_value: float


def _order(k, n):
    if not isinstance(k, (int, np.integer)) or k < 1 or k > n:
        raise ArgumentError(f"k={k} outside 1..{n}")
    return int(k)


def F_k(R: ExtendedMatrix, k: int):
    """r00 sigma_k(r) - <T_{k-1}(r), Y (x) Y>."""
    k = _order(k, R.n)
    sig, Ts = symfun.newton_chain(R.r, k)
    return R.r00 * sig[k - 1] - symfun.quad(Ts[k - 1], R.Y)


def donaldson(R: ExtendedMatrix):
    """r00 sigma_1(r) - |Y|^2."""
    return F_k(R, 1)


def tilde_matrix(R: ExtendedMatrix):
    """r00 * r - Y (x) Y."""
    return R.r00[..., None, None] * R.r - np.einsum("...i,...j->...ij", R.Y, R.Y)


def tilde_identity_defect(R: ExtendedMatrix, k: int):
    """|r00^(1-k) sigma_k(r00 r - YY) - F_k(R)|."""
    k = _order(k, R.n)
    if np.any(R.r00 <= 0):
        raise DomainError("tilde identity needs r00 > 0", value=float(np.min(R.r00)))
    lhs = R.r00 ** (1 - k) * symfun.sigma(tilde_matrix(R), k)
    return np.abs(lhs - F_k(R, k))


def domain_check(R: ExtendedMatrix, k: int = 2, eps: float = 0.0):
    """Batched (in_domain, cone_margin, F) triple: r in Gamma_k^+ and F_k > 0."""
    k = _order(k, R.n)
    margin = symfun.cone_margin(R.r, k)
    F = F_k(R, k)
    return (margin > eps) & (F > eps), margin, F


def check_domain(R: ExtendedMatrix, k: int = 2) -> DomainCheck:
    ok, margin, F = domain_check(R, k)
    return DomainCheck(bool(np.all(ok)), float(np.min(margin)), float(np.min(F)))


def H(r, Y, k: int = 2):
    """T_{k-1}(r)(Y, Y) / sigma_k(r) on Gamma_k^+."""
    r = np.asarray(r, dtype=float)
    Y = np.asarray(Y, dtype=float)
    k = _order(k, r.shape[-1])
    sig, Ts = symfun.newton_chain(r, k)
    if np.any(np.min(np.stack(sig, -1), axis=-1) <= 0):
        raise DomainError(f"r not in the open Gamma_{k}^+ cone",
                          cone_margin=float(np.min(np.stack(sig, -1))))
    return symfun.quad(Ts[k - 1], Y) / sig[k - 1]


def H_unchecked(r, Y, k: int = 2):
    """H without the cone test; returns nan outside Gamma_k^+ (batched search use)."""
    sig, Ts = symfun.newton_chain(np.asarray(r, dtype=float), k)
    val = symfun.quad(Ts[k - 1], Y) / sig[k - 1]
    inside = np.all(np.stack(sig, -1) > 0, axis=-1)
    return np.where(inside, val, np.nan)


def grad_F(R: ExtendedMatrix, k: int = 2) -> ExtendedMatrix:
    """Closed-form gradient of F_2 in the full-index convention.

    F^00 = sigma_2(r), F^i0 = -(T_1(r) Y)_i, F^kl = T_1(r00 r - Y (x) Y)_kl.
    """
    if k != 2:
        raise ArgumentError("closed-form gradient implemented for k = 2 only")
    sig, Ts = symfun.newton_chain(R.r, 2)
    g00 = sig[1]
    gY = -np.einsum("...ij,...j->...i", Ts[1], R.Y)
    grr = symfun.newton_transform(tilde_matrix(R), 1)
    return ExtendedMatrix(g00, gY, grr)


def directional(grad: ExtendedMatrix, D: ExtendedMatrix):
    """<grad, D> over the full (n+1)x(n+1) matrix (factor 2 on off-diagonal pairs)."""
    return (grad.r00 * D.r00 + 2.0 * np.einsum("...i,...i->...", grad.Y, D.Y)
            + symfun.pair(grad.r, D.r))


def grad_F_fd(R: ExtendedMatrix, k: int = 2, step: float = 1e-6) -> ExtendedMatrix:
    """Central finite-difference gradient of F_k; same storage convention."""
    n = R.n
    M = R.to_matrix()
    G = np.zeros_like(M)
    for i in range(n + 1):
        for j in range(i, n + 1):
            E = np.zeros((n + 1, n + 1))
            E[i, j] = E[j, i] = 1.0
            fp = F_k(ExtendedMatrix.from_matrix(M + step * E), k)
            fm = F_k(ExtendedMatrix.from_matrix(M - step * E), k)
            d = (fp - fm) / (2 * step)
            if i == j:
                G[..., i, i] = d
            else:
                G[..., i, j] = G[..., j, i] = 0.5 * d
    return ExtendedMatrix.from_matrix(G)


def log_F(R: ExtendedMatrix, k: int = 2):
    """log F_k(R); raises DomainError outside {r in Gamma_k^+, F_k > 0}."""
    ok, margin, F = domain_check(R, k)
    if not np.all(ok):
        raise DomainError("log F outside its domain",
                          cone_margin=float(np.min(margin)), value=float(np.min(F)))
    return np.log(F)


def log_F_unchecked(R: ExtendedMatrix, k: int = 2):
    ok, _, F = domain_check(R, k)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(ok, np.log(np.where(ok, F, 1.0)), np.nan)


def ellipticity_form(R: ExtendedMatrix, xi, X):
    """Principal symbol Q(xi, X) of the linearized F_2.

    Q = <T_1(E), Y' (x) Y'> + r00^-1 sigma_2(E) xi^2 with E = r00 r - YY and
    Y' = sqrt(r00) X - xi Y.
    """
    if not check_domain(R, 2).in_domain or np.any(R.r00 <= 0):
        raise DomainError("ellipticity form requested outside the domain")
    E = tilde_matrix(R)
    xi = np.asarray(xi, dtype=float)
    X = np.asarray(X, dtype=float)
    Yp = np.sqrt(R.r00)[..., None] * X - xi[..., None] * R.Y
    return (symfun.quad(symfun.newton_transform(E, 1), Yp)
            + symfun.sigma(E, 2) * xi ** 2 / R.r00)
