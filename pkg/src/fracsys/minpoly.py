"""Minimal-polynomial detection and finite power-expansion coefficients.

Every power A^p of a square matrix with minimal-polynomial degree mu reduces
to a combination of I, A, ..., A^(mu-1).  This module finds mu numerically,
solves for the base coefficient row at p = mu, and tabulates the rows for
higher powers through the one-step recursion

    a_k(p+1) = a_{k-1}(p) + a_{mu-1}(p) * a_k(mu),      a_{-1}(.) = 0.

The characteristic-polynomial coefficient row (degree n) is kept alongside,
with the sign convention  char(s) = s^n - sum_k abar_k * s^k.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import HorizonExceeded, NonSquare, NumericalRankAmbiguous

DEFAULT_RANK_TOL = 1e-9
# Width of the band around the rank threshold inside which a singular-value
# gap is considered too thin to decide.
AMBIGUITY_FACTOR = 10.0


def as_real_matrix(a, name="matrix"):
    """Validate and return a 2-D float array: real entries, all finite."""
    arr = np.asarray(a, dtype=float)
    if arr.ndim != 2:
        raise ValueError(f"{name}: expected a 2-D array, got ndim={arr.ndim}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name}: contains NaN or Inf entries")
    return arr


def require_square(a, name="matrix"):
    arr = as_real_matrix(a, name)
    if arr.shape[0] != arr.shape[1]:
        raise NonSquare(f"{name}: expected square, got shape {arr.shape}")
    return arr


@dataclass(frozen=True)
class MinimalExpansion:
    """Coefficient tables expanding powers of one matrix.

    a_min[p - mu] holds the row a_k(p) for k < mu, tabulated for
    mu <= p <= horizon.  a_char holds abar_k(n) from the characteristic
    polynomial.  matrix is the (read-only) source matrix; op_norm its
    spectral norm, used by series truncation heuristics downstream.
    """

    n: int
    mu: int
    horizon: int
    a_min: np.ndarray          # shape (horizon - mu + 1, mu)
    a_char: np.ndarray         # shape (n,)
    rank_tolerance: float
    matrix: np.ndarray = field(repr=False)
    op_norm: float = 0.0
    reconstruction_residual: float = 0.0

    def __post_init__(self):
        self.a_min.setflags(write=False)
        self.a_char.setflags(write=False)
        self.matrix.setflags(write=False)

    def coefficients(self, p: int) -> np.ndarray:
        """Row a_k(p) for mu <= p <= horizon."""
        if p < self.mu:
            raise ValueError(f"p={p} below minimal degree mu={self.mu}")
        if p > self.horizon:
            raise HorizonExceeded(f"p={p} beyond tabulated horizon {self.horizon}")
        return self.a_min[p - self.mu]

    @property
    def base_row(self) -> np.ndarray:
        """a_k(mu), the base of every recursion."""
        return self.a_min[0]


def _power_stack(A, m):
    """Columns vec(I), vec(A), ..., vec(A^m)."""
    n = A.shape[0]
    cols = [np.eye(n).ravel()]
    P = np.eye(n)
    for _ in range(m):
        P = P @ A
        cols.append(P.ravel())
    return np.column_stack(cols)


def minimal_expansion(A, horizon: int | None = None, tol: float = DEFAULT_RANK_TOL,
                      ambiguity_factor: float = AMBIGUITY_FACTOR) -> MinimalExpansion:
    """Detect the minimal-polynomial degree of A and tabulate expansion rows.

    mu is the smallest m for which the stacked vectorizations of
    I, A, ..., A^m are linearly dependent under the threshold tol * sigma_max.
    The base row solves the least-squares system A^mu = sum_k a_k A^k; rows
    up to `horizon` follow from the one-step recursion.

    Raises NumericalRankAmbiguous when a singular value falls inside
    [threshold/factor, threshold*factor] at the deciding step, and fails
    loudly if the base-row solve leaves a relative residual above 1e-6.
    """
    A = require_square(A, "A")
    n = A.shape[0]
    if horizon is None:
        horizon = 2 * n
    if horizon < n:
        raise ValueError(f"horizon={horizon} must be >= n={n}")
    if tol <= 0:
        raise ValueError("tol must be positive")

    mu = None
    for m in range(1, n + 1):
        V = _power_stack(A, m)
        sv = np.linalg.svd(V, compute_uv=False)
        smax = sv[0]
        threshold = tol * smax
        near = (sv > threshold / ambiguity_factor) & (sv < threshold * ambiguity_factor)
        if np.any(near):
            raise NumericalRankAmbiguous(
                f"singular value {sv[near][0]:.3e} within a factor "
                f"{ambiguity_factor:g} of threshold {threshold:.3e} at power {m}"
            )
        if int(np.sum(sv > threshold)) < m + 1:
            mu = m
            break
    if mu is None:
        # Cayley-Hamilton guarantees dependence at m = n; reaching here means
        # the threshold logic is broken, not the matrix.
        raise NumericalRankAmbiguous("no dependent power found up to n")

    # Base row: least-squares solve of vec(A^mu) against vec powers < mu.
    V = _power_stack(A, mu)
    target = V[:, -1]
    basis = V[:, :-1]
    base, *_ = np.linalg.lstsq(basis, target, rcond=None)
    resid = np.linalg.norm(basis @ base - target)
    scale = max(np.linalg.norm(target), 1.0)
    if resid > 1e-6 * scale:
        raise NumericalRankAmbiguous(
            f"base-row least squares left relative residual {resid / scale:.3e}"
        )

    rows = np.empty((horizon - mu + 1, mu))
    rows[0] = base
    for idx in range(1, horizon - mu + 1):
        prev = rows[idx - 1]
        nxt = np.empty(mu)
        nxt[0] = prev[mu - 1] * base[0]
        nxt[1:] = prev[:-1] + prev[mu - 1] * base[1:]
        rows[idx] = nxt

    # Characteristic row via eigenvalues: char(s) = s^n - sum abar_k s^k.
    cpoly = np.poly(A)               # [1, c_{n-1}, ..., c_0]
    a_char = -cpoly[1:][::-1].real   # abar_k = -c_k, index k ascending

    return MinimalExpansion(
        n=n, mu=mu, horizon=horizon,
        a_min=rows, a_char=a_char,
        rank_tolerance=tol,
        matrix=A.copy(),
        op_norm=float(np.linalg.norm(A, 2)),
        reconstruction_residual=float(resid / scale),
    )


def power_via_expansion(exp: MinimalExpansion, A, p: int):
    """A^p through the coefficient table: sum_k a_k(p) A^k for p >= mu."""
    A = require_square(A, "A")
    if p < 0:
        raise ValueError("p must be nonnegative")
    if p < exp.mu:
        return np.linalg.matrix_power(A, p)
    row = exp.coefficients(p)
    out = np.zeros_like(A)
    P = np.eye(A.shape[0])
    for k in range(exp.mu):
        out += row[k] * P
        if k + 1 < exp.mu:
            P = P @ A
    return out


def closed_form_check(exp: MinimalExpansion, p: int) -> float:
    """Cross-check the table row at power p against the closed form.

    Writing p = mu + j, the closed form is

        a_k(mu+j) = a_{mu-1}(mu)^j a_k(mu)
                    + sum_{i<j} a_{mu-1}(mu)^i a_{k-1}(mu+j-i-1)

    which regroups the recursion; returns the max absolute deviation over k.
    Used only as a consistency diagnostic, never in the production path.
    """
    if p < exp.mu:
        raise ValueError(f"p={p} below mu={exp.mu}")
    if p > exp.horizon:
        raise HorizonExceeded(f"p={p} beyond horizon {exp.horizon}")
    mu = exp.mu
    base = exp.base_row
    j = p - mu
    lead = base[mu - 1]
    worst = 0.0
    for k in range(mu):
        val = lead ** j * base[k]
        acc = 0.0
        for i in range(j):
            if k >= 1:
                acc += lead ** i * exp.coefficients(mu + j - i - 1)[k - 1]
        val += acc
        worst = max(worst, abs(val - exp.coefficients(p)[k]))
    return worst
