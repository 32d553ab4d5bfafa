"""Scalar coefficient functions expanding exp(A t) in powers of A.

For a matrix with minimal-polynomial degree mu,

    exp(A t) = sum_{k < mu} beta_k(t) A^k,

with beta_k given either by the truncated power series built from the
coefficient table (the independent cross-check path) or by propagating the
companion-matrix ODE whose state is exactly (beta_0, ..., beta_{mu-1})
(the production path: exact up to matrix-exponential accuracy, no slow
convergence for large ||A|| t).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from ._series import coefficient_series
from .minpoly import MinimalExpansion, require_square

SERIES_PATH = "series"
COMPANION_PATH = "companion-ode"


@dataclass(frozen=True)
class BetaSet:
    """Values beta_k(t, p), k < p, at one time point."""

    p: int
    t: float
    values: np.ndarray
    path: str

    def __post_init__(self):
        self.values.setflags(write=False)


def companion_matrix(exp: MinimalExpansion, p: int | None = None) -> np.ndarray:
    """Companion matrix of the beta ODE: ones on the subdiagonal, the
    expansion coefficients in the last column, zeros elsewhere.

    p = mu uses the minimal row; p = n the characteristic row.  Intermediate
    orders have no canonical coefficient row and are rejected.
    """
    if p is None:
        p = exp.mu
    if p == exp.mu:
        last = exp.base_row
    elif p == exp.n:
        last = exp.a_char
    else:
        raise ValueError(f"companion order p={p} must be mu={exp.mu} or n={exp.n}")
    omega = np.zeros((p, p))
    idx = np.arange(1, p)
    omega[idx, idx - 1] = 1.0
    omega[:, p - 1] = last
    return omega


def beta_series(exp: MinimalExpansion, t: float, tol: float = 1e-14,
                max_terms: int = 20000) -> BetaSet:
    """beta_k(t, mu) by truncated series: t^k/k! + sum_{i>=mu} a_k(i) t^i/i!.

    Truncates after three consecutive sub-tol terms once past the hump index
    mu + ceil(||A|| t) + 10.  Raises SeriesDivergence when term magnitudes
    grow for 1000 consecutive steps (t too large for this path; use the
    companion evaluation instead).
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    if tol <= 0:
        raise ValueError("tol must be positive")
    hump = exp.mu + int(np.ceil(exp.op_norm * t)) + 10
    values, _ = coefficient_series(
        exp.base_row, t, alpha=1.0, offset=1.0,
        tol=tol, hump_index=hump, relative=False,
        max_terms=max_terms, divergence_limit=1000,
    )
    return BetaSet(p=exp.mu, t=t, values=values, path=SERIES_PATH)


def beta_companion(exp: MinimalExpansion, t: float, p: int | None = None) -> BetaSet:
    """beta_k(t, p) as the first column of exp(Omega t): the unique solution
    of the companion ODE with initial state e_1."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    omega = companion_matrix(exp, p)
    values = scipy.linalg.expm(omega * t)[:, 0]
    return BetaSet(p=omega.shape[0], t=t, values=values, path=COMPANION_PATH)


def expm_via_expansion(A, exp: MinimalExpansion, t: float,
                       path: str = COMPANION_PATH, tol: float = 1e-14) -> np.ndarray:
    """exp(A t) assembled as sum_k beta_k(t, mu) A^k."""
    A = require_square(A, "A")
    if path == COMPANION_PATH:
        beta = beta_companion(exp, t)
    elif path == SERIES_PATH:
        beta = beta_series(exp, t, tol=tol)
    else:
        raise ValueError(f"unknown path {path!r}")
    out = np.zeros_like(A)
    P = np.eye(A.shape[0])
    for k in range(exp.mu):
        out += beta.values[k] * P
        if k + 1 < exp.mu:
            P = P @ A
    return out
