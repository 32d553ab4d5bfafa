"""Caputo fractional linear systems and their evolution operators.

The state equation of order alpha > 0 (Caputo derivative, k initial vectors
with k-1 < alpha <= k) has the classical solution

    x(t) = sum_j t^j PhiJ_j(t) x0_j
           + int_0^t (t-tau)^(alpha-1) PhiK(t-tau) B u(tau) dtau

where PhiJ_j(t) is the matrix Mittag-Leffler value with Gamma offset j+1 and
PhiK the kernel operator with offset alpha (for alpha = 1 both reduce to
exp(A t)).  All operators are evaluated through the mu-term power expansion:
the scalar coefficient functions are summed once, then combined with the
cached powers I, A, ..., A^(mu-1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from ._series import coefficient_series, series_hump_index
from .errors import SeriesDivergence
from .minpoly import DEFAULT_RANK_TOL, MinimalExpansion, as_real_matrix, minimal_expansion, require_square
from .quad import QuadratureSpec, convolve_singular


def order_index(alpha: float) -> int:
    """Number of classical initial vectors: ceil(alpha), with integer alpha
    mapping to itself."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    k = math.ceil(alpha)
    return int(alpha) if float(alpha).is_integer() else k


@dataclass(frozen=True)
class CaputoSystem:
    """State-space triple (A, B, C) with fractional order alpha."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    alpha: float
    k: int = field(init=False)

    def __post_init__(self):
        A = require_square(self.A, "A")
        B = as_real_matrix(self.B, "B")
        C = as_real_matrix(self.C, "C")
        n = A.shape[0]
        if B.shape[0] != n:
            raise ValueError(f"B: expected {n} rows to match A, got {B.shape[0]}")
        if C.shape[1] != n:
            raise ValueError(f"C: expected {n} columns to match A, got {C.shape[1]}")
        for name, arr in (("A", A), ("B", B), ("C", C)):
            object.__setattr__(self, name, arr)
            arr.setflags(write=False)
        object.__setattr__(self, "k", order_index(self.alpha))

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def m(self):
        return self.B.shape[1]

    @property
    def s(self):
        return self.C.shape[0]


@dataclass(frozen=True)
class InitialData:
    """The k classical initial vectors x^(j)(0), stacked row-wise (k, n)."""

    vectors: np.ndarray

    def __post_init__(self):
        arr = np.atleast_2d(np.asarray(self.vectors, dtype=float))
        object.__setattr__(self, "vectors", arr)
        arr.setflags(write=False)

    @classmethod
    def zero(cls, k, n):
        return cls(np.zeros((k, n)))

    @classmethod
    def from_stacked(cls, stacked, k):
        stacked = np.asarray(stacked, dtype=float)
        return cls(stacked.reshape(k, -1))

    @property
    def k(self):
        return self.vectors.shape[0]

    @property
    def stacked(self):
        """Concatenation [x0_0; x0_1; ...], the unknown of the sampling schemes."""
        return self.vectors.ravel()

    def check_against(self, system: CaputoSystem):
        if self.vectors.shape != (system.k, system.n):
            raise ValueError(
                f"x0: expected {system.k} vectors of length {system.n}, "
                f"got shape {self.vectors.shape}"
            )


@dataclass(frozen=True)
class ControlSignal:
    """Bounded piecewise-continuous input; evaluator maps t >= 0 to R^m.

    breakpoints mark jump locations so quadrature can split panels there.
    batch, when given, evaluates a whole array of times at once.
    """

    evaluator: Callable[[float], np.ndarray]
    m: int
    breakpoints: tuple = ()
    batch: Callable[[np.ndarray], np.ndarray] | None = None
    description: str = ""

    def __call__(self, t):
        return np.atleast_1d(np.asarray(self.evaluator(float(t)), dtype=float))

    def sample(self, ts):
        ts = np.asarray(ts, dtype=float)
        if self.batch is not None:
            out = np.asarray(self.batch(ts), dtype=float)
            return out.reshape(ts.shape[0], self.m)
        return np.array([self(t) for t in ts], dtype=float).reshape(ts.shape[0], self.m)


def zero_control(m: int) -> ControlSignal:
    z = np.zeros(m)
    return ControlSignal(lambda t: z, m=m,
                         batch=lambda ts: np.zeros((len(ts), m)),
                         description="zero")


def constant_control(value) -> ControlSignal:
    v = np.atleast_1d(np.asarray(value, dtype=float))
    return ControlSignal(lambda t: v, m=v.size,
                         batch=lambda ts: np.tile(v, (len(ts), 1)),
                         description="step")


def sine_control(amplitude, frequency: float, phase: float = 0.0) -> ControlSignal:
    amp = np.atleast_1d(np.asarray(amplitude, dtype=float))
    return ControlSignal(
        lambda t: amp * np.sin(frequency * t + phase), m=amp.size,
        batch=lambda ts: amp[None, :] * np.sin(frequency * np.asarray(ts) + phase)[:, None],
        description="sine",
    )


def piecewise_constant_control(times: Sequence[float], values) -> ControlSignal:
    """Left-closed piecewise-constant table: u(t) = values[i] for
    times[i] <= t < times[i+1]; the first row extends to t < times[0]."""
    times = np.asarray(times, dtype=float)
    values = np.atleast_2d(np.asarray(values, dtype=float))
    if times.ndim != 1 or times.size != values.shape[0]:
        raise ValueError("breakpoint table: times and value rows must match")
    if np.any(np.diff(times) <= 0):
        raise ValueError("breakpoint table: times must be strictly increasing")

    def _batch(ts):
        idx = np.clip(np.searchsorted(times, ts, side="right") - 1, 0, len(times) - 1)
        return values[idx]

    return ControlSignal(
        lambda t: _batch(np.asarray([t]))[0], m=values.shape[1],
        breakpoints=tuple(times), batch=_batch,
        description="piecewise-constant",
    )


class EvolutionOperators:
    """Evaluator for the fractional evolution operators of one system.

    Immutable after construction: the coefficient table of A is built
    eagerly, powers of A are cached, and every evaluation is a pure
    function, so instances are safe to share across threads.
    """

    def __init__(self, system: CaputoSystem, series_tol: float = 1e-12,
                 max_terms: int = 20000,
                 rank_tol: float = DEFAULT_RANK_TOL):
        self.system = system
        self.series_tol = series_tol
        self.max_terms = max_terms
        self.expansion: MinimalExpansion = minimal_expansion(system.A, tol=rank_tol)
        mu = self.expansion.mu
        powers = np.empty((max(mu, system.n), system.n, system.n))
        P = np.eye(system.n)
        for ell in range(powers.shape[0]):
            powers[ell] = P
            if ell + 1 < powers.shape[0]:
                P = P @ system.A
        powers.setflags(write=False)
        self.powers = powers

    @property
    def mu(self):
        return self.expansion.mu

    def expansion_row(self, p: int | None) -> np.ndarray:
        """Annihilating coefficient row for order p: the minimal row at
        p = mu (default), the characteristic row at p = n."""
        if p is None or p == self.mu:
            return self.expansion.base_row
        if p == self.system.n:
            return self.expansion.a_char
        raise ValueError(
            f"expansion order p={p} must be mu={self.mu} or n={self.system.n}")

    # -- scalar coefficient functions ------------------------------------

    def _series(self, ts, offset, p=None):
        ts = np.asarray(ts, dtype=float)
        if np.any(ts < 0):
            raise ValueError("t must be nonnegative")
        alpha = self.system.alpha
        x = np.power(ts, alpha)
        hump = series_hump_index(self.expansion.op_norm, x, alpha)
        try:
            values, _ = coefficient_series(
                self.expansion_row(p), x, alpha=alpha, offset=offset,
                tol=self.series_tol, hump_index=hump,
                relative=True, max_terms=self.max_terms,
                divergence_limit=self.max_terms,
            )
        except SeriesDivergence as exc:
            raise SeriesDivergence(
                f"operator series did not converge for t up to {ts.max():.4g} "
                f"(alpha={alpha}, {exc.terms} terms attempted)",
                terms=exc.terms,
            ) from None
        return values

    def beta_j(self, j: int, t, p: int | None = None) -> np.ndarray:
        """Coefficient row of the j-th evolution operator at time(s) t."""
        if not 0 <= j <= self.system.k - 1:
            raise ValueError(f"j={j} outside 0..k-1 (k={self.system.k})")
        return self._series(t, offset=float(j + 1), p=p)

    def beta_kernel(self, t, p: int | None = None) -> np.ndarray:
        """Coefficient row of the convolution-kernel operator at time(s) t."""
        return self._series(t, offset=self.system.alpha, p=p)

    # -- matrix operators --------------------------------------------------

    def _assemble(self, coeffs):
        P = self.powers[:coeffs.shape[-1]]
        if coeffs.ndim == 1:
            return np.einsum("l,lij->ij", coeffs, P)
        return np.einsum("nl,lij->nij", coeffs, P)

    def phi_j(self, j: int, t):
        """Evolution operator for the j-th initial vector (matrix
        Mittag-Leffler value with Gamma offset j+1)."""
        return self._assemble(self.beta_j(j, t))

    def phi_kernel(self, t):
        """Forcing-kernel operator (Gamma offset alpha)."""
        return self._assemble(self.beta_kernel(t))


def phi_alpha_j(ops: EvolutionOperators, j: int, t):
    return ops.phi_j(j, t)


def phi_alpha(ops: EvolutionOperators, t):
    return ops.phi_kernel(t)


def output(system: CaputoSystem, x):
    """Measured output y = C x."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != system.n:
        raise ValueError(f"x: expected length {system.n}, got {x.shape[-1]}")
    return x @ system.C.T


def solve_homogeneous(ops: EvolutionOperators, x0: InitialData, t: float) -> np.ndarray:
    """Homogeneous trajectory value sum_j t^j PhiJ_j(t) x0_j."""
    x0.check_against(ops.system)
    if t < 0:
        raise ValueError("t must be nonnegative")
    acc = np.zeros(ops.system.n)
    for j in range(ops.system.k):
        acc += (t ** j) * (ops.phi_j(j, t) @ x0.vectors[j])
    return acc


def solve_homogeneous_batch(ops: EvolutionOperators, x0: InitialData, ts) -> np.ndarray:
    """Homogeneous trajectory on a grid; returns (len(ts), n)."""
    x0.check_against(ops.system)
    ts = np.asarray(ts, dtype=float)
    acc = np.zeros((ts.shape[0], ops.system.n))
    for j in range(ops.system.k):
        phi = ops.phi_j(j, ts)
        acc += (ts ** j)[:, None] * np.einsum("nij,j->ni", phi, x0.vectors[j])
    return acc


def forced_convolution(ops: EvolutionOperators, u: ControlSignal, t: float,
                       quad: QuadratureSpec = QuadratureSpec()) -> np.ndarray:
    """The forcing term int_0^t (t-tau)^(alpha-1) PhiK(t-tau) B u(tau) dtau."""
    if t <= 0:
        raise ValueError("t must be positive")
    system = ops.system
    if u.m != system.m:
        raise ValueError(f"control dimension {u.m} != input count {system.m}")

    def integrand(s):
        # s = t - tau; kernel s^(alpha-1) is handled by convolve_singular.
        phi = ops.phi_kernel(s)
        bu = u.sample(t - s) @ system.B.T
        return np.einsum("nij,nj->ni", phi, bu)

    s_breaks = tuple(t - tb for tb in u.breakpoints if 0.0 < tb < t)
    return convolve_singular(integrand, t, system.alpha, quad, breakpoints=s_breaks)


def solve_forced(ops: EvolutionOperators, x0: InitialData, u: ControlSignal,
                 t: float, quad: QuadratureSpec = QuadratureSpec()) -> np.ndarray:
    """Full trajectory value: homogeneous part plus the forcing convolution."""
    return solve_homogeneous(ops, x0, t) + forced_convolution(ops, u, t, quad)
