"""Point spectrum of the Fokker-Planck generator and a brute-force check.

For condition-(A) systems the generator has pure point spectrum

    sigma(L) = { -sum_j alpha_j lambda_j(C) : alpha in N_0^d },

one eigenvalue per multi-index.  The independent cross-check represents the
conjugated operator q -> lap_D q - x.K^{-1}CK.grad q on monomials of total
degree <= m and diagonalizes that matrix; the two eigenvalue multisets must
agree.  Monomials are ordered by total degree, then reverse-lexicographic
within a degree (any order preserves eigenvalues).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import comb

import numpy as np

from . import linalg
from .entropy import GaussianComponent, GaussianMixture
from .system import SteadyState, SystemSpec

DIMENSION_CAP = 2000


@dataclass(frozen=True)
class SpectrumEntry:
    value: complex
    alpha: tuple[int, ...]

    @property
    def degree(self) -> int:
        return sum(self.alpha)


@dataclass(frozen=True)
class SpectrumSet:
    entries: tuple[SpectrumEntry, ...]

    def values(self) -> np.ndarray:
        return np.array([e.value for e in self.entries])


def _multi_indices(d: int, m_max: int):
    """All alpha in N_0^d with |alpha| <= m_max, by degree then reverse-lex."""
    for m in range(m_max + 1):
        degree = [
            alpha
            for alpha in itertools.product(range(m + 1), repeat=d)
            if sum(alpha) == m
        ]
        degree.sort(reverse=True)
        yield from degree


def enumerate_spectrum(eig: linalg.EigenStructure, m_max: int) -> SpectrumSet:
    """All nu_alpha = -sum alpha_j lambda_j for |alpha| <= m_max; duplicates
    are kept with their multi-index labels."""
    lams = eig.all_eigenvalues
    d = len(lams)
    entries = [
        SpectrumEntry(value=complex(-np.dot(alpha, lams)), alpha=alpha)
        for alpha in _multi_indices(d, m_max)
    ]
    return SpectrumSet(entries=tuple(entries))


@dataclass(frozen=True)
class PolyOperatorMatrix:
    basis: tuple[tuple[int, ...], ...]
    M: np.ndarray

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvals(self.M)


def poly_operator_matrix(spec: SystemSpec, ss: SteadyState, m: int) -> PolyOperatorMatrix:
    """Matrix of q -> div(D grad q) - x.(K^{-1} C K).grad q on monomials of
    total degree <= m (the polynomial factors of eigenfunctions q*f_inf).

    The drift term preserves total degree and the diffusion term lowers it
    by two, so the matrix is block-triangular by degree and its eigenvalues
    are exactly the nu_alpha of the enumerated spectrum.

    Assembled in whitened coordinates y = L^{-1} x with K = L L^T: the change
    of variables conjugates K^{-1} C K to L^{-1} C L (same eigenvalues) and
    keeps the basis representation well conditioned when K is not.
    """
    d = spec.d
    n = comb(d + m, m)
    if n > DIMENSION_CAP:
        raise ValueError(
            f"monomial basis dimension {n} exceeds the cap {DIMENSION_CAP}"
        )
    basis = list(_multi_indices(d, m))
    index = {alpha: i for i, alpha in enumerate(basis)}
    L = np.linalg.cholesky(ss.K)
    Linv = np.linalg.inv(L)
    G = Linv @ spec.C @ L  # drift matrix in y.G.grad
    D = Linv @ spec.D @ Linv.T
    M = np.zeros((n, n))
    for col, alpha in enumerate(basis):
        a = np.array(alpha)
        # Drift: -x.G.grad x^a = -sum_{j,l} G[j,l] a_l x^{a - e_l + e_j}
        for l in range(d):
            if a[l] == 0:
                continue
            for j in range(d):
                if G[j, l] == 0.0:
                    continue
                target = a.copy()
                target[l] -= 1
                target[j] += 1
                M[index[tuple(target)], col] -= G[j, l] * a[l]
        # Diffusion: sum_{j,l} D[j,l] d_j d_l x^a
        for l in range(d):
            if a[l] == 0:
                continue
            for j in range(d):
                al = a.copy()
                al[l] -= 1
                if al[j] == 0 or D[j, l] == 0.0:
                    continue
                coeff = D[j, l] * a[l] * al[j]
                target = al.copy()
                target[j] -= 1
                M[index[tuple(target)], col] += coeff
    return PolyOperatorMatrix(basis=tuple(basis), M=M)


@dataclass(frozen=True)
class AffineEigenfunction:
    """Descriptor of the degree-one eigenfunction (x.K^{-1}w) f_inf."""

    eigenvalue: complex
    w: np.ndarray
    state: GaussianMixture  # unit-mass carrier (1 + x.K^{-1}w) f_inf


def degree_one_eigenfunction(ss: SteadyState, w: np.ndarray) -> AffineEigenfunction:
    """For an eigenvector w of C (Cw = lam w, real), f = (x.K^{-1}w) f_inf is
    an eigenfunction of the generator with eigenvalue -lam: the perturbation
    coefficient evolves as e^{-lam t} w."""
    w = np.asarray(w, dtype=float)
    C = ss.K @ ss.Q.T @ ss.K_inv  # recover C from Q = K C^T K^{-1}
    Cw = C @ w
    nw = np.linalg.norm(w)
    lam = float(w @ Cw) / float(w @ w)
    resid = np.linalg.norm(Cw - lam * w)
    if resid > 1e-10 * max(1.0, np.linalg.norm(C, 2)) * nw:
        raise ValueError(f"w is not an eigenvector of C (residual {resid:.3e})")
    a = ss.K_inv @ w
    state = GaussianMixture(
        (GaussianComponent(1.0, np.zeros(ss.d), ss.K, affine=a),)
    )
    return AffineEigenfunction(eigenvalue=complex(-lam), w=w, state=state)
