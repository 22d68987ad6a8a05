"""Drift-diffusion system data and structural checks.

A system is the matrix pair (D, C) of the degenerate Fokker-Planck equation

    d/dt f = div(D grad f + C x f),

with D symmetric positive semidefinite (possibly singular) and C the drift.
This module certifies the structural condition needed for convergence to a
Gaussian steady state: the finite-rank commutator condition (hypoellipticity)
plus positive stability of C.  It also computes the steady-state covariance,
the symmetric/antisymmetric operator split, and the Green-function
covariance W(t).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import linalg

STABILITY_TOL = 1e-10
RANK_TOL = 1e-10


@dataclass(frozen=True)
class SystemSpec:
    """The pair (D, C); D must be symmetric PSD."""

    D: np.ndarray
    C: np.ndarray

    def __post_init__(self):
        D = np.asarray(self.D, dtype=float)
        C = np.asarray(self.C, dtype=float)
        if D.ndim != 2 or D.shape[0] != D.shape[1] or C.shape != D.shape:
            raise ValueError("D and C must be square matrices of equal size")
        if not (np.all(np.isfinite(D)) and np.all(np.isfinite(C))):
            raise ValueError("matrix entries must be finite")
        nD = max(np.linalg.norm(D, 2), 1.0)
        if np.linalg.norm(D - D.T, 2) > 1e-12 * nD:
            raise ValueError("D must be symmetric")
        if linalg.min_sym_eigenvalue(D) < -1e-12 * nD:
            raise ValueError("D must be positive semidefinite")
        object.__setattr__(self, "D", 0.5 * (D + D.T))
        object.__setattr__(self, "C", C)

    @property
    def d(self) -> int:
        return self.D.shape[0]

    @property
    def rank_D(self) -> int:
        w = np.linalg.eigvalsh(self.D)
        return int(np.sum(w > RANK_TOL * max(w.max(initial=0.0), 1e-300)))


@dataclass(frozen=True)
class ConditionAReport:
    hypoelliptic: bool
    tau: int | None
    kappa: float | None
    positively_stable: bool
    mu: float
    minimal_eigs_defective: bool
    defective_details: tuple[tuple[complex, int], ...]

    @property
    def satisfied(self) -> bool:
        return self.hypoelliptic and self.positively_stable


@dataclass(frozen=True)
class SteadyState:
    """Gaussian steady state data: covariance K, normalization cK,
    antisymmetric part R = (CK - KC^T)/2 and Q = K C^T K^{-1}."""

    K: np.ndarray
    cK: float
    R: np.ndarray
    Q: np.ndarray

    @property
    def d(self) -> int:
        return self.K.shape[0]

    @property
    def K_inv(self) -> np.ndarray:
        Ki = np.linalg.inv(self.K)
        return 0.5 * (Ki + Ki.T)


def normalize_diffusion(spec: SystemSpec) -> tuple[SystemSpec, np.ndarray]:
    """Change of variables making D a rank-k "defect identity" diag(1..1,0..0).

    Returns (new_spec, T) with D' = T^{-1} D T^{-T}, C' = T^{-1} C T.  The
    eigenvalues of C are preserved.  If D already has the target form, T is
    the identity.
    """
    D, C = spec.D, spec.C
    d = spec.d
    k = spec.rank_D
    target = np.diag(np.concatenate([np.ones(k), np.zeros(d - k)]))
    if np.linalg.norm(D - target, 2) <= 1e-12 * max(np.linalg.norm(D, 2), 1.0):
        return spec, np.eye(d)
    w, U = np.linalg.eigh(D)
    # Descending eigenvalues: positive ones first.
    order = np.argsort(w)[::-1]
    w, U = w[order], U[:, order]
    scales = np.concatenate([np.sqrt(w[:k]), np.ones(d - k)])
    T = U * scales
    T_inv = np.linalg.inv(T)
    D_new = T_inv @ D @ T_inv.T
    # Snap to the exact defect identity (eigh roundoff only).
    D_new = np.where(np.abs(D_new - target) < 1e-12, target, D_new)
    C_new = T_inv @ C @ T
    return SystemSpec(D=D_new, C=C_new), T


def hoermander_tau(spec: SystemSpec) -> tuple[int, float] | None:
    """Minimal tau in {0,...,d-k} with sum_{j<=tau} C^j D (C^T)^j positive
    definite, together with kappa = its smallest eigenvalue.

    Returns None when even the full sum is singular (not hypoelliptic).
    """
    D, C = spec.D, spec.C
    d, k = spec.d, spec.rank_D
    acc = np.zeros_like(D)
    Cj = np.eye(d)
    for tau in range(d - k + 1):
        acc = acc + Cj @ D @ Cj.T
        kappa = linalg.min_sym_eigenvalue(acc)
        if kappa > RANK_TOL * max(np.linalg.norm(acc, 2), 1.0):
            return tau, kappa
        Cj = C @ Cj
    return None


def check_condition_A(
    spec: SystemSpec, cluster_tol: float = linalg.DEFAULT_CLUSTER_TOL
) -> ConditionAReport:
    """Hypoellipticity (rank condition) + positive stability of C, with the
    defectiveness of the minimal-real-part eigenvalues flagged (that flag
    drives the epsilon-perturbed transport-matrix construction).

    ``cluster_tol`` controls eigenvalue merging in the defect detection;
    constructed near-defective systems may need a coarser value than the
    default."""
    hr = hoermander_tau(spec)
    hypoelliptic = hr is not None
    tau, kappa = hr if hr is not None else (None, None)

    eig = linalg.eigen_structure(spec.C, tol=cluster_tol)
    mu = min(lam.real for lam in eig.eigenvalues)
    positively_stable = mu > STABILITY_TOL

    scale = max(np.linalg.norm(spec.C, 2), 1.0)
    details = []
    minimal_defective = False
    for lam, a, g in zip(eig.eigenvalues, eig.algebraic, eig.geometric):
        if g < a:
            # Longest chain length for this eigenvalue.
            block = max(ch.length for ch in eig.chains if abs(ch.eigenvalue - lam) <= 1e-12 * scale)
            details.append((lam, block))
            if abs(lam.real - mu) <= 1e-8 * scale:
                minimal_defective = True
    return ConditionAReport(
        hypoelliptic=hypoelliptic,
        tau=tau,
        kappa=kappa,
        positively_stable=positively_stable,
        mu=float(mu),
        minimal_eigs_defective=minimal_defective,
        defective_details=tuple(details),
    )


def steady_state(spec: SystemSpec) -> SteadyState:
    """Steady-state covariance K (unique SPD solution of 2D = CK + KC^T),
    normalization cK, the antisymmetric flux matrix R, and Q = K C^T K^{-1}.

    A non-SPD K signals a violated structural condition (an eigenvector of
    C^T inside ker D makes K singular).
    """
    d = spec.d
    K = linalg.solve_lyapunov(spec.C, spec.D)
    w = np.linalg.eigvalsh(K)
    if w[0] <= RANK_TOL * max(abs(w).max(), 1.0):
        raise np.linalg.LinAlgError(
            f"steady-state covariance is singular (min eigenvalue {w[0]:.3e}); "
            "an eigenvector of C^T lies in ker D"
        )
    cK = (2.0 * math.pi) ** (-d / 2.0) / math.sqrt(float(np.linalg.det(K)))
    M = spec.C @ K - K @ spec.C.T  # antisymmetric up to roundoff
    R = 0.25 * (M - M.T)  # exactly antisymmetric (CK - KC^T)/2
    K_inv = np.linalg.inv(K)
    Q = K @ spec.C.T @ K_inv
    return SteadyState(K=K, cK=float(cK), R=R, Q=Q)


def green_covariance(spec: SystemSpec, t: float) -> np.ndarray:
    """Covariance W(t) = int_0^t e^{C(s-t)} D e^{C^T(s-t)} ds of the
    fundamental solution, by composite Gauss-Legendre quadrature.

    The integrand is smooth; the panel count grows with t*||C|| so the
    8-point rule per panel stays in its superconvergent regime.  W(t) is
    symmetric PSD and positive definite for t > 0 (hypoelliptic systems).
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    d = spec.d
    if t == 0:
        return np.zeros((d, d))
    nC = np.linalg.norm(spec.C, 2)
    panels = max(16, int(math.ceil(4.0 * t * nC)))
    xg, wg = np.polynomial.legendre.leggauss(8)
    W = np.zeros((d, d))
    edges = np.linspace(0.0, t, panels + 1)
    for a, b in zip(edges[:-1], edges[1:]):
        mid, half = 0.5 * (a + b), 0.5 * (b - a)
        for xi, wi in zip(xg, wg):
            s = mid + half * xi
            E = linalg.matrix_exponential(spec.C, s - t)
            W += (wi * half) * (E @ spec.D @ E.T)
    return 0.5 * (W + W.T)
