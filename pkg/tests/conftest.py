"""Shared helpers: random system generation and multiset matching."""

from __future__ import annotations

import numpy as np
import pytest

import hypofp as hp
from hypofp import linalg


def make_random_system(rng, d, rank=None, stability_margin=0.2):
    """Random hypoelliptic, positively stable (D, C) pair of dimension d.

    C is a random matrix shifted to put its spectrum in the right half
    plane; D is a random PSD matrix of the requested rank.  Retries until
    the structural condition holds and the eigenstructure is unambiguous.
    """
    for _ in range(200):
        C = rng.standard_normal((d, d))
        mre = min(np.linalg.eigvals(C).real)
        C = C + (stability_margin + rng.uniform(0.0, 1.0) - mre) * np.eye(d)
        r = rank if rank is not None else int(rng.integers(1, d + 1))
        B = rng.standard_normal((d, r))
        D = B @ B.T
        try:
            spec = hp.SystemSpec(D=D, C=C)
            report = hp.check_condition_A(spec)
            if not report.satisfied:
                continue
            # Skip draws whose steady-state Q is so non-normal that its
            # eigenvalue clustering is ambiguous.
            linalg.eigen_structure(hp.steady_state(spec).Q)
        except (ValueError, np.linalg.LinAlgError, linalg.ClusteringError):
            continue
        return spec, report
    raise RuntimeError("failed to draw a valid random system")


def make_defective_minimal_system(rng, d=3):
    """System whose drift has a defective minimal eigenvalue (a 2-chain),
    built by conjugating an explicit Jordan form with a random basis."""
    for _ in range(100):
        S = rng.standard_normal((d, d)) + 2.0 * np.eye(d)
        mu = 0.5 + rng.uniform(0.0, 1.0)
        J = np.diag(np.concatenate([[mu, mu], mu + 1.0 + np.arange(d - 2)]))
        J[0, 1] = 1.0
        C = S @ J @ np.linalg.inv(S)
        spec = hp.SystemSpec(D=np.eye(d), C=C)
        try:
            report = hp.check_condition_A(spec, cluster_tol=1e-6)
        except linalg.ClusteringError:
            continue
        if report.satisfied and report.minimal_eigs_defective:
            return spec, report
    raise RuntimeError("failed to construct a defective-minimal system")


def assert_multisets_close(a, b, atol=1e-6):
    """Greedy nearest-neighbour matching of two complex multisets (robust
    against ordering flips from +-0 imaginary noise)."""
    a = sorted(np.asarray(a, complex), key=lambda z: (z.real, abs(z.imag)))
    b = list(np.asarray(b, complex))
    assert len(a) == len(b)
    for z in a:
        j = int(np.argmin([abs(z - w) for w in b]))
        assert abs(z - b[j]) <= atol, f"unmatched eigenvalue {z} (closest {b[j]})"
        b.pop(j)


@pytest.fixture
def rng():
    return np.random.default_rng(20260824)


def pytest_terminal_summary(terminalreporter):
    """Print the one-line acceptance results collected by test_acceptance."""
    import sys

    mod = sys.modules.get("test_acceptance") or sys.modules.get(
        "tests.test_acceptance"
    )
    lines = getattr(mod, "RESULT_LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
