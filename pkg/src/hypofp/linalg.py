"""Dense-matrix kernels shared across the toolkit.

Everything here is deterministic: eigenstructure with defect detection,
matrix exponentials, Lyapunov solves via Kronecker vectorization, and a
couple of SPD utilities.  Matrices are small (d <= ~10), so simplicity
wins over asymptotics throughout.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg


class ClusteringError(ValueError):
    """Eigenvalue clustering is ambiguous at the requested tolerance."""


DEFAULT_CLUSTER_TOL = 1e-8


def _scale(M: np.ndarray) -> float:
    """Scale used for relative tolerances: spectral-norm-like, floored at 1."""
    return max(float(np.linalg.norm(M, 2)), 1.0)


@dataclass(frozen=True)
class JordanChain:
    """A single chain w_1, ..., w_l with (M - lam*I) w_{k+1} = w_k and
    (M - lam*I) w_1 = 0.  ``vectors[k]`` is w_{k+1} (shape (l, d), complex)."""

    eigenvalue: complex
    vectors: np.ndarray

    @property
    def length(self) -> int:
        return self.vectors.shape[0]


@dataclass(frozen=True)
class EigenStructure:
    """Clustered eigenvalues of a real matrix with Jordan-chain data.

    ``eigenvalues`` lists each distinct (clustered) eigenvalue once;
    ``algebraic`` / ``geometric`` are the matching multiplicities.
    ``chains`` contains one JordanChain per Jordan block, so the chain
    vectors of all chains together form a basis of C^d.
    """

    eigenvalues: tuple[complex, ...]
    algebraic: tuple[int, ...]
    geometric: tuple[int, ...]
    chains: tuple[JordanChain, ...] = field(repr=False)
    cluster_tolerance: float = DEFAULT_CLUSTER_TOL

    @property
    def all_eigenvalues(self) -> np.ndarray:
        """Eigenvalues repeated with algebraic multiplicity."""
        return np.concatenate(
            [np.full(a, lam) for lam, a in zip(self.eigenvalues, self.algebraic)]
        )

    def is_defective(self, lam: complex, tol: float = 1e-10) -> bool:
        for ev, a, g in zip(self.eigenvalues, self.algebraic, self.geometric):
            if abs(ev - lam) <= tol * max(1.0, abs(lam)):
                return g < a
        raise ValueError(f"{lam} is not an eigenvalue of this structure")


def _cluster_eigenvalues(w: np.ndarray, tol_abs: float) -> list[np.ndarray]:
    """Single-linkage clustering of complex points at absolute gap tol_abs.

    Returns index arrays.  Raises ClusteringError when two distinct clusters
    end up closer than 2*tol_abs (the defective/non-defective call would be
    unstable there).
    """
    n = len(w)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if abs(w[i] - w[j]) <= tol_abs:
                parent[find(i)] = find(j)

    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    clusters = [np.array(idx) for idx in groups.values()]

    centers = [np.mean(w[idx]) for idx in clusters]
    for a in range(len(centers)):
        for b in range(a + 1, len(centers)):
            if abs(centers[a] - centers[b]) <= 2.0 * tol_abs:
                raise ClusteringError(
                    "ambiguous eigenvalue clustering: centers "
                    f"{centers[a]:.6g} and {centers[b]:.6g} are within "
                    f"2*tol = {2 * tol_abs:.3g}"
                )
    return clusters


def _nullspace(A: np.ndarray, tol_abs: float) -> np.ndarray:
    """Orthonormal basis (columns) of the numerical kernel of A."""
    U, s, Vh = np.linalg.svd(A)
    rank = int(np.sum(s > tol_abs))
    return Vh[rank:].conj().T


def eigen_structure(M: np.ndarray, tol: float = DEFAULT_CLUSTER_TOL) -> EigenStructure:
    """Eigenvalues of M clustered at relative tolerance ``tol``, with
    geometric multiplicities and Jordan chains from rank-revealing kernels
    of (M - lam*I)^k.

    Raises ClusteringError when the clustering is ambiguous (two clusters
    within 2*tol), which signals that defect detection is unreliable.
    """
    M = np.asarray(M, dtype=float)
    d = M.shape[0]
    if M.shape != (d, d) or not np.all(np.isfinite(M)):
        raise ValueError("eigen_structure expects a finite square matrix")
    if tol <= 0:
        raise ValueError("tol must be positive")

    tol_abs = tol * _scale(M)
    w = np.linalg.eigvals(M)
    clusters = _cluster_eigenvalues(w, tol_abs)
    # Deterministic order: by (real part, imaginary part) of the center.
    clusters.sort(key=lambda idx: (np.mean(w[idx]).real, np.mean(w[idx]).imag))

    eigenvalues: list[complex] = []
    algebraic: list[int] = []
    geometric: list[int] = []
    chains: list[JordanChain] = []

    Mc = M.astype(complex)
    for idx in clusters:
        lam = complex(np.mean(w[idx]))
        # Snap tiny imaginary parts so real eigenvalues stay real.
        if abs(lam.imag) <= tol_abs:
            lam = complex(lam.real, 0.0)
        alg = len(idx)
        A = Mc - lam * np.eye(d)

        # Kernel filtration N_k = ker A^k until the full generalized
        # eigenspace (dimension = alg) is captured.
        null_bases = []
        Ak = np.eye(d, dtype=complex)
        dims = [0]
        k = 0
        while dims[-1] < alg and k < d:
            k += 1
            Ak = Ak @ A
            nb = _nullspace(Ak, tol_abs * max(1.0, np.linalg.norm(Ak, 2)))
            null_bases.append(nb)
            dims.append(nb.shape[1])
        kmax = k
        if dims[-1] != alg:
            raise ClusteringError(
                f"generalized eigenspace of {lam:.6g} has numerical dimension "
                f"{dims[-1]} != algebraic multiplicity {alg}"
            )
        geo = dims[1]

        # chains_ge[k] = number of chains with length >= k.
        chains_ge = [dims[k] - dims[k - 1] for k in range(1, kmax + 1)]

        lam_chains = _build_chains(A, null_bases, chains_ge, tol_abs)
        eigenvalues.append(lam)
        algebraic.append(alg)
        geometric.append(geo)
        chains.extend(JordanChain(lam, ch) for ch in lam_chains)

    assert sum(algebraic) == d
    return EigenStructure(
        eigenvalues=tuple(eigenvalues),
        algebraic=tuple(algebraic),
        geometric=tuple(geometric),
        chains=tuple(chains),
        cluster_tolerance=tol,
    )


def _build_chains(A, null_bases, chains_ge, tol_abs):
    """Jordan chains for one eigenvalue.

    ``null_bases[k-1]`` spans ker A^k; ``chains_ge[k-1]`` is the number of
    chains of length >= k.  Chain tops of height k are picked from ker A^k
    independent modulo ker A^{k-1} plus the height-k vectors of the taller
    chains already built.
    """
    d = A.shape[0]
    kmax = len(chains_ge)
    chains: list[np.ndarray] = []  # each: array (length, d), row j = w_{j+1}

    for k in range(kmax, 0, -1):
        n_new = chains_ge[k - 1] - (chains_ge[k] if k < kmax else 0)
        if n_new == 0:
            continue
        # Subspace already "used up" at level k.
        used_cols = []
        if k >= 2:
            used_cols.append(null_bases[k - 2])  # ker A^{k-1}
        for ch in chains:
            if ch.shape[0] >= k:
                used_cols.append(ch[k - 1][:, None])  # its level-k vector
        E = np.hstack(used_cols) if used_cols else np.zeros((d, 0), dtype=complex)
        Q_used, _ = np.linalg.qr(E) if E.shape[1] else (E, None)

        cand = null_bases[k - 1]  # ker A^k
        for _ in range(n_new):
            # Residuals of candidates after projecting out span(Q_used).
            R = cand - Q_used @ (Q_used.conj().T @ cand) if Q_used.shape[1] else cand
            norms = np.linalg.norm(R, axis=0)
            best = int(np.argmax(norms))
            if norms[best] <= tol_abs:
                raise ClusteringError(
                    "failed to extend Jordan chain basis (rank deficiency "
                    "inconsistent with kernel filtration)"
                )
            top = R[:, best] / norms[best]
            chain = np.empty((k, d), dtype=complex)
            chain[k - 1] = top
            for j in range(k - 2, -1, -1):
                chain[j] = A @ chain[j + 1]
            chains.append(chain)
            Q_used, _ = np.linalg.qr(np.hstack([Q_used, top[:, None]]))
    return chains


def matrix_exponential(M: np.ndarray, t: float = 1.0) -> np.ndarray:
    """exp(t*M) by scaling-and-squaring (Pade), via scipy.linalg.expm."""
    M = np.asarray(M, dtype=float)
    out = scipy.linalg.expm(t * M)
    if not np.all(np.isfinite(out)):
        raise OverflowError("matrix exponential overflowed; ||tM|| too large")
    return out


def solve_lyapunov(C: np.ndarray, D: np.ndarray) -> np.ndarray:
    """Unique symmetric K with 2D = CK + KC^T, by Kronecker vectorization.

    The (d^2 x d^2) system (I (x) C + C (x) I) vec(K) = vec(2D) is dense-solved
    directly; d is small everywhere in this package.  A singular system means
    C has an eigenvalue pair summing to zero, i.e. C is not positively stable.
    """
    C = np.asarray(C, dtype=float)
    D = np.asarray(D, dtype=float)
    d = C.shape[0]
    eye = np.eye(d)
    A = np.kron(eye, C) + np.kron(C, eye)
    try:
        vecK = np.linalg.solve(A, (2.0 * D).reshape(-1, order="F"))
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(
            "Lyapunov system singular: C has eigenvalues summing to zero "
            "(not positively stable)"
        ) from exc
    K = vecK.reshape((d, d), order="F")
    K = 0.5 * (K + K.T)
    resid = np.linalg.norm(2.0 * D - C @ K - K @ C.T, 2)
    bound = 1e-10 * (np.linalg.norm(C, 2) * np.linalg.norm(K, 2) + np.linalg.norm(D, 2) + 1e-300)
    if resid > max(bound, 1e-300):
        raise np.linalg.LinAlgError(
            f"Lyapunov residual {resid:.3e} exceeds tolerance {bound:.3e}; "
            "C is likely not positively stable"
        )
    return K


def min_sym_eigenvalue(M: np.ndarray) -> float:
    """Smallest eigenvalue of the symmetric part (M + M^T)/2."""
    M = np.asarray(M, dtype=float)
    if not np.all(np.isfinite(M)):
        raise ValueError("non-finite input")
    S = 0.5 * (M + M.T)
    return float(np.linalg.eigvalsh(S)[0])


def sqrt_spd(M: np.ndarray) -> np.ndarray:
    """Symmetric square root of an SPD matrix by spectral decomposition."""
    M = np.asarray(M, dtype=float)
    S = 0.5 * (M + M.T)
    w, V = np.linalg.eigh(S)
    if w[0] <= 0:
        raise np.linalg.LinAlgError(
            f"matrix not SPD: min eigenvalue {w[0]:.3e}"
        )
    return (V * np.sqrt(w)) @ V.T


def sqrt_psd_pinv(M: np.ndarray, rtol: float = 1e-10) -> np.ndarray:
    """Pseudo-inverse square root of a symmetric PSD matrix.

    Eigenvalues below rtol*max(eig) are treated as exact zeros.  Used for
    restricted-range comparisons like sqrt(D)^+ P sqrt(D)^+ on im D.
    """
    M = np.asarray(M, dtype=float)
    S = 0.5 * (M + M.T)
    w, V = np.linalg.eigh(S)
    cut = rtol * max(w.max(), 0.0)
    inv_sqrt = np.where(w > cut, 1.0 / np.sqrt(np.maximum(w, 1e-300)), 0.0)
    return (V * inv_sqrt) @ V.T


def is_spd(M: np.ndarray, tol: float = 0.0) -> bool:
    return min_sym_eigenvalue(M) > tol
