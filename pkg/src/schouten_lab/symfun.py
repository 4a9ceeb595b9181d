"""Elementary symmetric functions, Newton transformations and Garding cones.

All routines accept a single ``(n, n)`` matrix or a stack ``(..., n, n)``;
scalar outputs then carry the leading batch shape.  sigma_k and T_k come from
the trace recursion

    T_0 = I,   sigma_j = tr(T_{j-1} A) / j,   T_j = sigma_j I - T_{j-1} A,

so the polynomial identities hold to rounding error and no eigensolver is
involved.  ``sigma_eig`` keeps the eigenvalue route as an independent check.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ArgumentError

MAX_DIM = 16
SOLVER_CONE_EPS = 1e-12


def as_sym(A, check=True) -> np.ndarray:
    """Return ``A`` as a float array of symmetric matrices.

    With ``check`` the symmetry and finiteness invariants are enforced.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim < 2 or A.shape[-1] != A.shape[-2]:
        raise ArgumentError(f"expected square matrices, got shape {A.shape}")
    n = A.shape[-1]
    if n < 1 or n > MAX_DIM:
        raise ArgumentError(f"dimension {n} outside 1..{MAX_DIM}")
    if check:
        if not np.all(np.isfinite(A)):
            raise ArgumentError("matrix has non-finite entries")
        asym = np.max(np.abs(A - np.swapaxes(A, -1, -2)), initial=0.0)
        scale = max(1.0, float(np.max(np.abs(A), initial=0.0)))
        if asym > 1e-12 * scale:
            raise ArgumentError(f"matrix not symmetric (defect {asym:.3e})")
    return A


def _check_order(k, lo, hi, what="k"):
    if not isinstance(k, (int, np.integer)) or k < lo or k > hi:
        raise ArgumentError(f"{what}={k} outside {lo}..{hi}")
    return int(k)


def newton_chain(A, kmax):
    """Run the trace recursion up to order ``kmax``.

    Returns ``(sigmas, Ts)`` with ``sigmas[j-1] = sigma_j`` for j = 1..kmax and
    ``Ts[j] = T_j`` for j = 0..kmax.
    """
    A = np.asarray(A, dtype=float)
    n = A.shape[-1]
    eye = np.broadcast_to(np.eye(n), A.shape)
    T = eye.copy()
    sigmas, Ts = [], [T]
    for j in range(1, kmax + 1):
        TA = T @ A
        s = np.trace(TA, axis1=-2, axis2=-1) / j
        T = s[..., None, None] * eye - TA
        # T_j is a polynomial in A; symmetrize away rounding drift
        T = 0.5 * (T + np.swapaxes(T, -1, -2))
        sigmas.append(s)
        Ts.append(T)
    return sigmas, Ts


def sigma(A, k: int):
    """k-th elementary symmetric function of the eigenvalues of ``A``."""
    A = as_sym(A, check=False)
    k = _check_order(k, 1, A.shape[-1])
    sigmas, _ = newton_chain(A, k)
    return sigmas[-1]


def sigmas_upto(A, k: int):
    """Stack of sigma_1..sigma_k along a new trailing axis."""
    A = as_sym(A, check=False)
    k = _check_order(k, 1, A.shape[-1])
    sigmas, _ = newton_chain(A, k)
    return np.stack(sigmas, axis=-1)


def elementary_symmetric(lam, k: int):
    """sigma_k of the vectors ``lam[..., :]`` by the product expansion."""
    lam = np.asarray(lam, dtype=float)
    n = lam.shape[-1]
    e = [np.ones(lam.shape[:-1])] + [np.zeros(lam.shape[:-1]) for _ in range(n)]
    for i in range(n):
        li = lam[..., i]
        for j in range(min(i + 1, k), 0, -1):
            e[j] = e[j] + li * e[j - 1]
    return e[k]


def sigma_eig(A, k: int):
    """sigma_k through the symmetric eigenvalue decomposition (cross-check route)."""
    A = as_sym(A, check=False)
    k = _check_order(k, 1, A.shape[-1])
    return elementary_symmetric(np.linalg.eigvalsh(A), k)


def newton_transform(A, k: int):
    """k-th Newton transformation T_k(A), 0 <= k <= n-1."""
    A = as_sym(A, check=False)
    k = _check_order(k, 0, A.shape[-1] - 1)
    _, Ts = newton_chain(A, k)
    return Ts[k]


def pair(T, B):
    """Frobenius pairing sum_ij T_ij B_ij."""
    T = np.asarray(T, dtype=float)
    B = np.asarray(B, dtype=float)
    if T.shape[-2:] != B.shape[-2:]:
        raise ArgumentError(f"dimension mismatch {T.shape[-2:]} vs {B.shape[-2:]}")
    return np.einsum("...ij,...ij->...", T, B)


def quad(T, X, Z=None):
    """Bilinear form T(X, Z); ``Z`` defaults to ``X``."""
    Z = X if Z is None else Z
    return np.einsum("...i,...ij,...j->...", X, T, Z)


@dataclass
class ConeReport:
    sigmas: list
    in_open_cone: list
    margin: float
    eps: float = 0.0
    inside: bool = field(init=False)

    def __post_init__(self):
        self.inside = all(self.in_open_cone)


def cone_membership(A, k: int, eps: float = 0.0) -> ConeReport:
    """Report sigma_1..sigma_k and strict membership sigma_j > eps."""
    A = as_sym(A)
    if A.ndim != 2:
        raise ArgumentError("cone_membership takes a single matrix; use in_cone for stacks")
    k = _check_order(k, 1, A.shape[-1])
    s = [float(v) for v in sigmas_upto(A, k)]
    return ConeReport(sigmas=s, in_open_cone=[v > eps for v in s], margin=min(s), eps=eps)


def in_cone(A, k: int, eps: float = 0.0):
    """Batched membership test: all sigma_j > eps for j <= k."""
    return np.all(sigmas_upto(A, k) > eps, axis=-1)


def cone_margin(A, k: int):
    """min_j sigma_j(A), batched."""
    return np.min(sigmas_upto(A, k), axis=-1)


def cone_quality(A, k: int):
    """Scale-free interiority sigma_k(A) / (C(n,k) (|A|_F / sqrt(n))^k); 1 at the identity."""
    A = np.asarray(A, dtype=float)
    n = A.shape[-1]
    rms = np.linalg.norm(A, axis=(-2, -1)) / np.sqrt(n)
    return sigma(A, k) / (math.comb(n, k) * rms ** k)


def rank_one_defects(A, X, k: int):
    """Defects of the two rank-one update identities for sigma_k and T_k.

    Returns ``(|sigma_k(A - XX) - sigma_k(A) + <T_{k-1}(A), XX>|,
    |<T_k(A - XX), XX> - <T_k(A), XX>|)``.
    """
    A = as_sym(A)
    X = np.asarray(X, dtype=float)
    n = A.shape[-1]
    k = _check_order(k, 1, n - 1)
    XX = np.einsum("...i,...j->...ij", X, X)
    B = A - XX
    sA, TA = newton_chain(A, k)
    sB, TB = newton_chain(B, k)
    d1 = np.abs(sB[k - 1] - sA[k - 1] + pair(TA[k - 1], XX))
    d2 = np.abs(pair(TB[k], XX) - pair(TA[k], XX))
    return d1, d2
