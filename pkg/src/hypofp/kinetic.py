"""Kinetic Fokker-Planck (one space dimension): certificates and simulator.

The equation in phase space (x, v) is

    d/dt f + v d/dx f - V'(x) d/dv f = nu d/dv(v f) + sigma d2/dv2 f,

with V(x) = omega0^2 x^2 / 2 + Vt(x).  For Vt = 0 the equation is a d = 2
linear drift-diffusion system, which feeds the generic pipeline for
cross-validation.  The explicit 2x2 transport matrices and the rate constant
kappa0 are provided in closed form, together with the perturbation bound
that extends the certificate to non-quadratic potentials with small |Vt''|.

A desk-scale finite-difference simulator (operator splitting: flux-limited
transport, Crank-Nicolson velocity friction+diffusion, zero-flux walls)
produces discrete entropy series against the discretized steady state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.linalg

from . import linalg
from .entropy import EntropyGenerator, LogEntropy
from .system import SystemSpec

BOUNDARY_TOL = 1e-12


class KineticError(ValueError):
    pass


class InfeasibleError(KineticError):
    """The perturbation is too large for any certified rate."""


@dataclass(frozen=True)
class KineticSpec:
    """Parameters of the kinetic equation.  ``potential``/``dpotential`` are
    V and V' as callables; both default to the quadratic reference
    V = omega0^2 x^2/2.  ``vtilde_dd_bound`` is sup|Vt''|."""

    nu: float
    sigma: float
    omega0: float
    vtilde_dd_bound: float = 0.0
    potential: Callable[[np.ndarray], np.ndarray] | None = None
    dpotential: Callable[[np.ndarray], np.ndarray] | None = None

    def __post_init__(self):
        if self.nu <= 0 or self.sigma <= 0:
            raise ValueError("need nu > 0 and sigma > 0")
        if self.omega0 == 0:
            raise ValueError("need omega0 != 0")
        if self.vtilde_dd_bound < 0:
            raise ValueError("vtilde_dd_bound must be >= 0")

    def V(self, x):
        if self.potential is None:
            return 0.5 * self.omega0 ** 2 * np.asarray(x) ** 2
        return self.potential(x)

    def Vp(self, x):
        if self.dpotential is None:
            return self.omega0 ** 2 * np.asarray(x)
        return self.dpotential(x)


@dataclass(frozen=True)
class KineticCertificate:
    kappa0: float
    P: np.ndarray
    lam: float
    rate: float
    regime: str  # "underdamped" | "overdamped"


def assemble_linear(ks: KineticSpec) -> SystemSpec:
    """The quadratic-potential case as a d = 2 system:
    D = [[0,0],[0,sigma]], C = [[0,-1],[omega0^2, nu]]."""
    if ks.potential is not None or ks.vtilde_dd_bound != 0.0:
        raise KineticError("assemble_linear requires the quadratic potential")
    D = np.array([[0.0, 0.0], [0.0, ks.sigma]])
    C = np.array([[0.0, -1.0], [ks.omega0 ** 2, ks.nu]])
    return SystemSpec(D=D, C=C)


def _regime(nu: float, omega0: float) -> str:
    disc = nu * nu - 4.0 * omega0 * omega0
    if abs(disc) <= BOUNDARY_TOL * max(nu * nu, 4.0 * omega0 * omega0):
        raise KineticError(
            "defective boundary 4*omega0^2 = nu^2 is excluded (no simple "
            "eigenbasis; perturb the parameters)"
        )
    return "overdamped" if disc > 0 else "underdamped"


def kappa0(nu: float, omega0: float) -> float:
    """2*kappa0 = nu - sqrt(nu^2 - 4 omega0^2) (overdamped) or nu
    (underdamped); equals the spectral gap of the assembled drift matrix."""
    if _regime(nu, omega0) == "overdamped":
        return 0.5 * (nu - math.sqrt(nu * nu - 4.0 * omega0 * omega0))
    return 0.5 * nu


def build_P_kinetic(nu: float, omega0: float) -> np.ndarray:
    """The explicit 2x2 transport matrix:
    [[2, nu], [nu, nu^2 - 2 omega0^2]] (overdamped) or
    [[2, nu], [nu, 2 omega0^2]] (underdamped)."""
    if _regime(nu, omega0) == "overdamped":
        P = np.array([[2.0, nu], [nu, nu * nu - 2.0 * omega0 ** 2]])
    else:
        P = np.array([[2.0, nu], [nu, 2.0 * omega0 ** 2]])
    if linalg.min_sym_eigenvalue(P) <= 0:
        raise KineticError("kinetic transport matrix not SPD")
    return P


def perturbation_bound(P: np.ndarray, lam: float) -> float:
    """Largest |tau| keeping P_tilde(tau) = [[2 lam, tau],[tau, p22 lam ...]]
    -type perturbed inequality PSD:  |tau| <= sqrt(det P)/p11 * lam.
    The bound is sharp (equality gives a singular matrix)."""
    P = np.asarray(P, dtype=float)
    if lam <= 0:
        raise ValueError("lam must be positive")
    det = float(np.linalg.det(P))
    if det <= 0 or P[0, 0] <= 0:
        raise ValueError("P must be SPD")
    return math.sqrt(det) / P[0, 0] * lam


def perturbed_margin_matrix(P: np.ndarray, lam: float, tau: float) -> np.ndarray:
    """The matrix whose positive semidefiniteness encodes the perturbed
    certificate: lam*P + tau*N with N = [[0, p11],[p11, 2 p12]]/p11-scaled
    off-structure; concretely [[lam p11, lam p12 + tau p11],
    [lam p12 + tau p11, lam p22 + 2 tau p12]]."""
    P = np.asarray(P, dtype=float)
    return lam * P + tau * np.array(
        [[0.0, P[0, 0]], [P[0, 0], 2.0 * P[0, 1]]]
    )


def kinetic_rate(ks: KineticSpec) -> KineticCertificate:
    """Certificate for the perturbed potential: the smallest admissible
    lam = sup|Vt''| / sqrt|omega0^2 - nu^2/4| gives rate 2*kappa0 - lam when
    lam < 2*kappa0, otherwise the certificate is infeasible.

    Also enforces the uniform-convexity condition sup|Vt''| <= omega0^2 used
    by the decay theorem."""
    k0 = kappa0(ks.nu, ks.omega0)
    regime = _regime(ks.nu, ks.omega0)
    P = build_P_kinetic(ks.nu, ks.omega0)
    s = ks.vtilde_dd_bound
    if s == 0.0:
        return KineticCertificate(kappa0=k0, P=P, lam=0.0, rate=2.0 * k0, regime=regime)
    denom = math.sqrt(abs(ks.omega0 ** 2 - ks.nu ** 2 / 4.0))
    lam = s / denom
    if lam >= 2.0 * k0:
        raise InfeasibleError(
            f"sup|Vt''| = {s} needs lam = {lam:.6g} >= 2*kappa0 = {2 * k0:.6g}: "
            "no positive certified rate"
        )
    if s > ks.omega0 ** 2:
        raise InfeasibleError(
            f"sup|Vt''| = {s} exceeds omega0^2 = {ks.omega0 ** 2}: the "
            "potential may fail uniform convexity"
        )
    return KineticCertificate(kappa0=k0, P=P, lam=lam, rate=2.0 * k0 - lam, regime=regime)


# ---------------------------------------------------------------------------
# Finite-difference simulator


@dataclass(frozen=True)
class PhaseGrid:
    x_range: tuple[float, float]
    v_range: tuple[float, float]
    nx: int
    nv: int

    @property
    def dx(self) -> float:
        return (self.x_range[1] - self.x_range[0]) / self.nx

    @property
    def dv(self) -> float:
        return (self.v_range[1] - self.v_range[0]) / self.nv

    @property
    def x(self) -> np.ndarray:
        return self.x_range[0] + (np.arange(self.nx) + 0.5) * self.dx

    @property
    def v(self) -> np.ndarray:
        return self.v_range[0] + (np.arange(self.nv) + 0.5) * self.dv

    @property
    def cell(self) -> float:
        return self.dx * self.dv


@dataclass(frozen=True)
class KineticSeries:
    times: np.ndarray
    entropy: np.ndarray
    dissipation: np.ndarray
    modified: np.ndarray
    mass: np.ndarray
    f_final: np.ndarray
    grid: PhaseGrid


def steady_state_grid(ks: KineticSpec, grid: PhaseGrid) -> np.ndarray:
    """Discretized, grid-normalized steady state
    f_inf ~ exp(-(nu/sigma) [V(x) + v^2/2]), shape (nx, nv)."""
    E = ks.V(grid.x)[:, None] + 0.5 * grid.v[None, :] ** 2
    f = np.exp(-(ks.nu / ks.sigma) * E)
    return f / (f.sum() * grid.cell)


def gaussian_on_grid(mean: np.ndarray, cov: np.ndarray, grid: PhaseGrid) -> np.ndarray:
    """Bivariate normal density evaluated at cell centers, shape (nx, nv)."""
    Pm = np.linalg.inv(cov)
    dxs = grid.x[:, None] - mean[0]
    dvs = grid.v[None, :] - mean[1]
    q = Pm[0, 0] * dxs ** 2 + 2.0 * Pm[0, 1] * dxs * dvs + Pm[1, 1] * dvs ** 2
    return np.exp(-0.5 * q) / (2.0 * math.pi * math.sqrt(np.linalg.det(cov)))


def _vanleer(r):
    return (r + np.abs(r)) / (1.0 + np.abs(r))


def _advect(f: np.ndarray, speed: np.ndarray, h: float, dt: float, axis: int) -> np.ndarray:
    """One flux-limited (van Leer / MUSCL) conservative advection step with
    speed constant along ``axis`` (it varies only across the other axis).
    Zero-flux walls: nothing enters or leaves the domain."""
    if axis == 1:
        return _advect(f.T, speed, h, dt, 0).T
    # axis == 0; speed has shape broadcastable to f[1:], constant per column.
    n = f.shape[0]
    df = np.diff(f, axis=0)  # df[i] = f[i+1] - f[i], shape (n-1, m)
    s = np.broadcast_to(np.asarray(speed), f.shape[1:])
    c = s * dt / h
    # Upwind part of the interface flux F[i] at x_{i+1/2}, i = 0..n-2.
    F = np.where(s > 0, s * f[:-1], s * f[1:])
    # Second-order limited correction.
    eps = 1e-300
    r_pos = np.empty_like(df)
    r_neg = np.empty_like(df)
    r_pos[0] = 0.0
    r_pos[1:] = df[:-1] / (df[1:] + np.where(np.abs(df[1:]) < eps, eps, 0.0))
    r_neg[-1] = 0.0
    r_neg[:-1] = df[1:] / (df[:-1] + np.where(np.abs(df[:-1]) < eps, eps, 0.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        phi = np.where(s > 0, _vanleer(r_pos), _vanleer(r_neg))
    phi = np.nan_to_num(phi, nan=0.0, posinf=0.0, neginf=0.0)
    F = F + 0.5 * np.abs(s) * (1.0 - np.abs(c)) * phi * df
    out = f.copy()
    out[:-1] -= (dt / h) * F
    out[1:] += (dt / h) * F
    return out


def _velocity_operator(ks: KineticSpec, grid: PhaseGrid) -> np.ndarray:
    """Dense (nv, nv) divergence-form matrix for
    d/dv (nu v f + sigma d/dv f) with zero-flux walls (zero column sums, so
    the implicit step conserves mass exactly)."""
    nv, dv = grid.nv, grid.dv
    v = grid.v
    A = np.zeros((nv, nv))
    for j in range(nv - 1):
        vh = 0.5 * (v[j] + v[j + 1])
        # Interface flux G_{j+1/2} = nu*vh*(f_j+f_{j+1})/2 + sigma*(f_{j+1}-f_j)/dv
        cj = 0.5 * ks.nu * vh - ks.sigma / dv
        cj1 = 0.5 * ks.nu * vh + ks.sigma / dv
        # df_j/dt += G_{j+1/2}/dv ... divergence: (G_{j+1/2} - G_{j-1/2})/dv
        A[j, j] += cj / dv
        A[j, j + 1] += cj1 / dv
        A[j + 1, j] -= cj / dv
        A[j + 1, j + 1] -= cj1 / dv
    return A


def _grid_gradients(r: np.ndarray, grid: PhaseGrid):
    gx = np.gradient(r, grid.dx, axis=0)
    gv = np.gradient(r, grid.dv, axis=1)
    return gx, gv


def _series_point(f, f_inf, ks, grid, gen, P):
    r = f / f_inf
    lo = gen.domain_min
    if lo > -np.inf:
        r = np.maximum(r, lo + 1e-14)
    e = float(np.sum(gen.psi(r, 0) * f_inf) * grid.cell)
    gx, gv = _grid_gradients(r, grid)
    psi2 = gen.psi(r, 2)
    i_val = float(np.sum(psi2 * ks.sigma * gv * gv * f_inf) * grid.cell)
    s_val = float(
        np.sum(
            psi2
            * (P[0, 0] * gx * gx + 2.0 * P[0, 1] * gx * gv + P[1, 1] * gv * gv)
            * f_inf
        )
        * grid.cell
    )
    return e, i_val, s_val


def fd_simulate(
    ks: KineticSpec,
    grid: PhaseGrid,
    f0: np.ndarray,
    t_end: float,
    dt: float,
    gen: EntropyGenerator | None = None,
    P: np.ndarray | None = None,
    n_records: int = 50,
) -> KineticSeries:
    """Operator-split integration: flux-limited transport in x and v
    (Strang-symmetrized), Crank-Nicolson velocity friction+diffusion,
    zero-flux boundaries.  Mass is conserved to roundoff; a CFL violation or
    an under-resolved steady state raises before stepping.

    Returns discrete entropy/dissipation series against the discretized
    steady state and the final field.
    """
    if gen is None:
        gen = LogEntropy()
    if P is None:
        P = build_P_kinetic(ks.nu, ks.omega0)
    f_inf = steady_state_grid(ks, grid)

    # Steady state must be resolved: negligible mass in the outermost cells.
    edge_mass = (
        f_inf[0, :].sum() + f_inf[-1, :].sum() + f_inf[:, 0].sum() + f_inf[:, -1].sum()
    ) * grid.cell
    if edge_mass > 1e-6:
        raise KineticError(
            f"steady-state mass on the domain boundary is {edge_mass:.2e} "
            "(> 1e-6): enlarge the domain"
        )
    vmax = max(abs(grid.v[0]), abs(grid.v[-1]))
    amax = float(np.max(np.abs(ks.Vp(grid.x))))
    cfl = dt * max(vmax / grid.dx, amax / grid.dv)
    if cfl > 1.0:
        raise KineticError(f"CFL number {cfl:.3f} > 1; reduce dt")

    A = _velocity_operator(ks, grid)
    eye = np.eye(grid.nv)
    lu = scipy.linalg.lu_factor(eye - 0.5 * dt * A)
    forward = eye + 0.5 * dt * A

    n_steps = int(round(t_end / dt))
    rec_every = max(1, n_steps // max(n_records - 1, 1))
    f = np.array(f0, dtype=float)
    mass0 = f.sum() * grid.cell

    times, es, iss, ss_, ms = [], [], [], [], []

    def record(t):
        e, ival, sval = _series_point(f, f_inf, ks, grid, gen, P)
        times.append(t)
        es.append(e)
        iss.append(ival)
        ss_.append(sval)
        ms.append(f.sum() * grid.cell)

    record(0.0)
    accel = -ks.Vp(grid.x)  # dv/dt along characteristics
    for n in range(1, n_steps + 1):
        f = _advect(f, grid.v, grid.dx, 0.5 * dt, axis=0)
        f = _advect(f, accel, grid.dv, 0.5 * dt, axis=1)
        f = scipy.linalg.lu_solve(lu, (forward @ f.T)).T
        f = _advect(f, accel, grid.dv, 0.5 * dt, axis=1)
        f = _advect(f, grid.v, grid.dx, 0.5 * dt, axis=0)
        if n % rec_every == 0 or n == n_steps:
            record(n * dt)

    drift = abs(ms[-1] - mass0) / max(t_end, 1.0)
    if drift > 1e-8:
        raise KineticError(f"mass drift {drift:.2e} per unit time exceeds 1e-8")
    return KineticSeries(
        times=np.array(times),
        entropy=np.array(es),
        dissipation=np.array(iss),
        modified=np.array(ss_),
        mass=np.array(ms),
        f_final=f,
        grid=grid,
    )


def fit_decay_rate(times: np.ndarray, values: np.ndarray, window: tuple[float, float] | None = None) -> float:
    """Least-squares slope of -log(values) over the time window (defaults to
    the second half, where envelope behavior is asymptotic)."""
    times = np.asarray(times, float)
    values = np.asarray(values, float)
    if window is None:
        window = (0.5 * times[-1], times[-1])
    mask = (times >= window[0]) & (times <= window[1]) & (values > 0)
    t, y = times[mask], np.log(values[mask])
    slope = np.polyfit(t, y, 1)[0]
    return -float(slope)
