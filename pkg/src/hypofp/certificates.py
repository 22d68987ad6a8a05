"""Transport-matrix construction and decay-rate certificates.

The central object is an SPD matrix P with

    Q P + P Q^T  >=  2 kappa P,        Q = K C^T K^{-1},

which turns the modified dissipation S into a Lyapunov functional decaying
at rate 2*kappa.  P is assembled from the eigenstructure of Q: a weighted
sum of eigenvector outer products when every minimal-real-part eigenvalue
is simple enough, and a Jordan-chain construction with epsilon-shifted
weights when a minimal eigenvalue is defective (in which case only the
reduced rate kappa = mu - epsilon is certifiable).

lambda_P is the best constant in K^{-1} >= lambda_P P^{-1}; together with
S-decay it yields the envelope  e(t) <= S(f0)/(2 lambda_P) e^{-2 kappa t}.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linalg
from .linalg import EigenStructure
from .system import SteadyState, SystemSpec, check_condition_A

MARGIN_TOL = 1e-8
DEFAULT_EPSILON_FACTOR = 1e-2


class CertificateError(ValueError):
    """The requested certificate cannot be built or verified."""


@dataclass(frozen=True)
class TransportMatrix:
    P: np.ndarray
    kappa: float
    epsilon: float
    weights: tuple[float, ...]
    construction: str  # "eigen-sum" | "jordan"

    @property
    def margin_tolerance(self) -> float:
        return MARGIN_TOL * float(np.linalg.norm(self.P, 2))


@dataclass(frozen=True)
class DecayCertificate:
    mu: float
    epsilon: float
    lambda_P: float | None = None
    lambda_K: float | None = None
    S0: float | None = None
    envelope: tuple[float, float] | None = None  # (amplitude, rate)
    cond_sq_bound: float | None = None

    @property
    def rate(self) -> float:
        return 2.0 * (self.mu - self.epsilon)


def _chain_weights(length: int, tau: float) -> np.ndarray:
    """Diagonal weights b^l, ..., b^1 along one Jordan chain (the eigenvector
    end carries b^l) with b^1 = 1, b^j = c_j * tau^{2(1-j)}, c_1 = 1 and
    c_j = 1 + c_{j-1}^2."""
    c = [1.0]
    for _ in range(2, length + 1):
        c.append(1.0 + c[-1] ** 2)
    b = np.array([c[j - 1] * tau ** (2.0 * (1 - j)) for j in range(1, length + 1)])
    return b[::-1]  # order along chain columns w_1 .. w_l


def build_P(
    ss: SteadyState,
    eig: EigenStructure | None = None,
    epsilon: float | None = None,
    weights: np.ndarray | None = None,
    cluster_tol: float = linalg.DEFAULT_CLUSTER_TOL,
) -> TransportMatrix:
    """Assemble the transport matrix from the eigenstructure of Q.

    ``weights`` are optional per-chain scale factors b_j > 0 (arbitrary in
    the non-defective construction; complex-conjugate chains must receive
    equal weights).  ``epsilon`` is required (and must be positive) exactly
    when a minimal-real-part eigenvalue of Q is defective; it trades rate
    (kappa = mu - epsilon) for existence of the certificate.
    """
    if eig is None:
        eig = linalg.eigen_structure(ss.Q, tol=cluster_tol)
    mu = min(lam.real for lam in eig.eigenvalues)
    scale = max(np.linalg.norm(ss.Q, 2), 1.0)
    re_tol = max(1e-8, cluster_tol) * scale

    chains = eig.chains
    minimal_defective = any(
        ch.length > 1 and abs(ch.eigenvalue.real - mu) <= re_tol for ch in chains
    )
    if minimal_defective:
        if epsilon is None:
            epsilon = DEFAULT_EPSILON_FACTOR * mu
        if epsilon <= 0:
            raise CertificateError(
                "a minimal-real-part eigenvalue of Q is defective: the rate mu "
                "is not certifiable; supply epsilon > 0 for rate mu - epsilon"
            )
    else:
        epsilon = 0.0

    if weights is None:
        w_arr = np.ones(len(chains))
    else:
        w_arr = np.asarray(weights, dtype=float)
        if w_arr.shape != (len(chains),) or np.any(w_arr <= 0):
            raise CertificateError(
                f"need one positive weight per Jordan chain ({len(chains)})"
            )
        _check_conjugate_weights(chains, w_arr, re_tol)

    d = ss.Q.shape[0]
    P = np.zeros((d, d), dtype=complex)
    any_jordan = False
    for ch, bw in zip(chains, w_arr):
        A = ch.vectors.T  # columns w_1 .. w_l
        if ch.length == 1:
            P += bw * np.outer(A[:, 0], A[:, 0].conj())
            continue
        any_jordan = True
        if abs(ch.eigenvalue.real - mu) <= re_tol:
            tau = 2.0 * epsilon
        else:
            tau = 2.0 * (ch.eigenvalue.real - mu)
        B = _chain_weights(ch.length, tau)
        P += bw * (A * B) @ A.conj().T
    P = P.real
    P = 0.5 * (P + P.T)
    if linalg.min_sym_eigenvalue(P) <= 0:
        raise CertificateError("assembled transport matrix is not SPD")
    return TransportMatrix(
        P=P,
        kappa=float(mu - epsilon),
        epsilon=float(epsilon),
        weights=tuple(float(x) for x in w_arr),
        construction="jordan" if any_jordan else "eigen-sum",
    )


def _check_conjugate_weights(chains, w_arr, tol):
    for i, ci in enumerate(chains):
        if abs(ci.eigenvalue.imag) <= tol:
            continue
        for j, cj in enumerate(chains):
            if j != i and abs(cj.eigenvalue - ci.eigenvalue.conjugate()) <= tol:
                if abs(w_arr[i] - w_arr[j]) > 1e-12 * max(1.0, abs(w_arr[i])):
                    raise CertificateError(
                        "complex-conjugate eigenvector pairs must get equal weights"
                    )
                break


def verify_P(ss: SteadyState, P: np.ndarray, kappa: float) -> float:
    """PSD margin of the certificate inequality: smallest eigenvalue of
    Q P + P Q^T - 2 kappa P.  Valid iff >= -1e-8 * ||P||."""
    P = np.asarray(P, dtype=float)
    if linalg.min_sym_eigenvalue(P) <= 0:
        raise CertificateError("P must be SPD")
    Q = ss.Q
    return linalg.min_sym_eigenvalue(Q @ P + P @ Q.T - 2.0 * kappa * P)


def lambda_P(K: np.ndarray, P: np.ndarray) -> float:
    """Largest c with K^{-1} >= c * P^{-1}, i.e. the smallest eigenvalue of
    sqrt(P) K^{-1} sqrt(P)."""
    S = linalg.sqrt_spd(P)
    Kinv = np.linalg.inv(np.asarray(K, dtype=float))
    return linalg.min_sym_eigenvalue(S @ Kinv @ S)


def lambda_K(D: np.ndarray, K: np.ndarray) -> float:
    """Classical (uniform-convexity) constant: largest lam with
    K^{-1} >= lam * D^{-1}.  Defined only for SPD D."""
    S = linalg.sqrt_spd(D)  # raises for degenerate D
    Kinv = np.linalg.inv(np.asarray(K, dtype=float))
    return linalg.min_sym_eigenvalue(S @ Kinv @ S)


def compare_rates(spec: SystemSpec, ss: SteadyState) -> DecayCertificate:
    """Sandwich comparison lam_K <= mu <= cond(A~)^2 * lam_K for SPD D,
    where A~ diagonalizes D^{-1/2} C D^{1/2}.  The upper bound is omitted
    when C is defective."""
    lamK = lambda_K(spec.D, ss.K)
    report = check_condition_A(spec)
    mu = report.mu
    if lamK > mu + 1e-10:
        raise CertificateError(f"lambda_K = {lamK} exceeds mu = {mu}")
    cond_sq_bound = None
    eig = linalg.eigen_structure(spec.C)
    if all(ch.length == 1 for ch in eig.chains):
        sqrtD = linalg.sqrt_spd(spec.D)
        Ct = np.linalg.inv(sqrtD) @ spec.C @ sqrtD
        _, V = np.linalg.eig(Ct)
        condA = np.linalg.norm(V, 2) * np.linalg.norm(np.linalg.inv(V), 2)
        cond_sq_bound = float(condA ** 2 * lamK)
        if mu > cond_sq_bound + 1e-9:
            raise CertificateError(
                f"mu = {mu} exceeds the conditioning bound {cond_sq_bound}"
            )
    return DecayCertificate(
        mu=mu, epsilon=0.0, lambda_K=float(lamK), cond_sq_bound=cond_sq_bound
    )


def entropy_envelope(
    mu: float, epsilon: float, lam_P: float, S0: float
) -> tuple[float, float]:
    """(amplitude, rate) of the dominating curve amplitude * e^{-rate t}:
    amplitude = S0 / (2 lambda_P), rate = 2 (mu - epsilon)."""
    if not np.isfinite(S0) or S0 < 0:
        raise CertificateError(
            "initial modified dissipation must be finite and nonnegative; "
            "the initial state is not compatible with this generator"
        )
    return S0 / (2.0 * lam_P), 2.0 * (mu - epsilon)


def optimize_weights(
    ss: SteadyState,
    S0_of_P,
    eig: EigenStructure | None = None,
    epsilon: float | None = None,
    grid: np.ndarray | None = None,
) -> TransportMatrix:
    """Grid search over per-chain weights minimizing amplitude = S0/(2 lam_P)
    for a caller-supplied functional S0_of_P(P) (the weights are arbitrary
    in the construction, so they are free parameters to tune per f0).

    Conjugate chains share a weight; the overall scale is fixed by leaving
    the first group at 1 (the amplitude is scale-invariant anyway).
    """
    if eig is None:
        eig = linalg.eigen_structure(ss.Q)
    chains = eig.chains
    if grid is None:
        grid = np.logspace(-2, 2, 9)
    # Group chains: conjugate pairs move together.
    scale = max(np.linalg.norm(ss.Q, 2), 1.0)
    groups: list[list[int]] = []
    assigned = set()
    for i, ch in enumerate(chains):
        if i in assigned:
            continue
        grp = [i]
        assigned.add(i)
        if abs(ch.eigenvalue.imag) > 1e-8 * scale:
            for j in range(i + 1, len(chains)):
                if j not in assigned and abs(
                    chains[j].eigenvalue - ch.eigenvalue.conjugate()
                ) <= 1e-8 * scale:
                    grp.append(j)
                    assigned.add(j)
                    break
        groups.append(grp)

    best = None
    best_amp = np.inf

    def recurse(gi, w):
        nonlocal best, best_amp
        if gi == len(groups):
            tm = build_P(ss, eig=eig, epsilon=epsilon, weights=w)
            amp = S0_of_P(tm.P) / (2.0 * lambda_P(ss.K, tm.P))
            if amp < best_amp:
                best_amp, best = amp, tm
            return
        choices = [1.0] if gi == 0 else grid
        for g in choices:
            w2 = np.array(w)
            for idx in groups[gi]:
                w2[idx] = g
            recurse(gi + 1, w2)

    recurse(0, np.ones(len(chains)))
    return best
