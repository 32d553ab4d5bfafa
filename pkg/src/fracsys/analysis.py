"""Structural tests and minimum-energy control synthesis.

Observability and controllability each admit three equivalent certificates:
the stacked rank test, the spectral (eigenvalue-pencil) test, and positive
definiteness of the corresponding Gramian.  The first two are order-free;
the Gramian is integrated for the system's actual fractional order, whose
verdict the equivalence theory guarantees to be order-independent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import EigenSolverFailure, GramianSingular, TestDisagreement
from .fractional import (
    CaputoSystem, ControlSignal, EvolutionOperators, InitialData,
    solve_forced, solve_homogeneous,
)
from .minpoly import DEFAULT_RANK_TOL, as_real_matrix, require_square
from .quad import GRAMIAN_QUAD, QuadratureSpec, adaptive_panels, convolve_singular

GRAMIAN_EIG_TOL = 1e-8


def observability_matrix(A, C, p: int) -> np.ndarray:
    """Rows C, CA, ..., CA^(p-1) stacked: (p*s, n)."""
    A = require_square(A, "A")
    C = as_real_matrix(C, "C")
    if C.shape[1] != A.shape[0]:
        raise ValueError(f"C: expected {A.shape[0]} columns, got {C.shape[1]}")
    if p < 1:
        raise ValueError("p must be >= 1")
    blocks = [C]
    for _ in range(p - 1):
        blocks.append(blocks[-1] @ A)
    return np.vstack(blocks)


def controllability_matrix(A, B, p: int) -> np.ndarray:
    """Columns B, AB, ..., A^(p-1)B side by side: (n, p*m)."""
    A = require_square(A, "A")
    B = as_real_matrix(B, "B")
    if B.shape[0] != A.shape[0]:
        raise ValueError(f"B: expected {A.shape[0]} rows, got {B.shape[0]}")
    if p < 1:
        raise ValueError("p must be >= 1")
    blocks = [B]
    for _ in range(p - 1):
        blocks.append(A @ blocks[-1])
    return np.hstack(blocks)


def rank_test(M, n: int, tol: float = DEFAULT_RANK_TOL) -> bool:
    """True iff the numerical rank of M (threshold tol * sigma_max) equals n."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    M = np.asarray(M, dtype=float)
    sv = np.linalg.svd(M, compute_uv=False)
    if sv.size == 0 or sv[0] == 0.0:
        return n == 0
    return int(np.sum(sv > tol * sv[0])) == n


def pbh_test(A, M, mode: str, tol: float = DEFAULT_RANK_TOL) -> bool:
    """Spectral rank test at every eigenvalue of A.

    mode='observability' checks rank [lam I - A^T : C^T] with M = C;
    mode='controllability' checks rank [lam I - A : B] with M = B.
    """
    A = require_square(A, "A")
    M = as_real_matrix(M, "M")
    n = A.shape[0]
    try:
        eigs = np.linalg.eigvals(A)
    except np.linalg.LinAlgError as exc:
        raise EigenSolverFailure(str(exc)) from None
    if mode == "observability":
        pencil_base = A.T
        side = M.T
    elif mode == "controllability":
        pencil_base = A
        side = M
    else:
        raise ValueError(f"unknown mode {mode!r}")
    eye = np.eye(n)
    for lam in eigs:
        pencil = np.hstack([lam * eye - pencil_base, side]).astype(complex)
        sv = np.linalg.svd(pencil, compute_uv=False)
        if sv[0] == 0.0 or int(np.sum(sv > tol * sv[0])) < n:
            return False
    return True


def _stacked_output_map(ops: EvolutionOperators, taus):
    """C [PhiJ_0(tau) : tau PhiJ_1(tau) : ...] batched: (N, s, k*n)."""
    system = ops.system
    taus = np.asarray(taus, dtype=float)
    blocks = []
    for j in range(system.k):
        phi = ops.phi_j(j, taus)                       # (N, n, n)
        cphi = np.einsum("si,nij->nsj", system.C, phi)  # (N, s, n)
        blocks.append((taus ** j)[:, None, None] * cphi)
    return np.concatenate(blocks, axis=2)


def observability_gramian(ops: EvolutionOperators, t: float,
                          quad: QuadratureSpec = GRAMIAN_QUAD) -> np.ndarray:
    """Energy operator of the output map on [0, t]: (k*n, k*n), symmetric PSD.

    For alpha < 1 the integration variable is transformed so the operator
    series becomes polynomial in the new variable; for alpha >= 1 the
    integrand is regular and is integrated directly.
    """
    if t <= 0:
        raise ValueError("t must be positive")
    alpha = ops.system.alpha

    if alpha < 1.0:
        inv = 1.0 / alpha

        def integrand(sig):
            taus = np.power(sig, inv)
            M = _stacked_output_map(ops, taus)
            weight = inv * np.power(sig, inv - 1.0)
            return weight[:, None, None] * np.einsum("nsk,nsl->nkl", M, M)

        G = adaptive_panels(integrand, 0.0, t ** alpha, quad)
    else:

        def integrand(taus):
            M = _stacked_output_map(ops, taus)
            return np.einsum("nsk,nsl->nkl", M, M)

        G = adaptive_panels(integrand, 0.0, t, quad)
    return 0.5 * (G + G.T)


def controllability_gramian(ops: EvolutionOperators, t: float,
                            quad: QuadratureSpec = GRAMIAN_QUAD) -> np.ndarray:
    """Steering operator int_0^t (t-tau)^(alpha-1) PhiK PhiK^T-weighted BB^T:
    (n, n), symmetric PSD; the singular kernel is absorbed exactly."""
    if t <= 0:
        raise ValueError("t must be positive")
    B = ops.system.B

    def integrand(s):
        phi = ops.phi_kernel(s)
        pb = np.einsum("nij,jm->nim", phi, B)
        return np.einsum("nim,njm->nij", pb, pb)

    G = convolve_singular(integrand, t, ops.system.alpha, quad)
    return 0.5 * (G + G.T)


@dataclass(frozen=True)
class ControlPlan:
    """Minimum-energy steering input sampled on a grid, with its replay
    certificate."""

    target: np.ndarray
    horizon: float
    gain: np.ndarray              # Gramian-solve result
    grid: np.ndarray
    values: np.ndarray            # (len(grid), m)
    terminal_state: np.ndarray
    terminal_error: float
    gramian_min_eigenvalue: float
    signal: ControlSignal = field(repr=False)


def min_energy_control(ops: EvolutionOperators, x_star, x0: InitialData,
                       t: float, quad: QuadratureSpec = QuadratureSpec(),
                       grid=None, eig_tol: float = GRAMIAN_EIG_TOL) -> ControlPlan:
    """Steer the state to x_star at time t with the Gramian-generated input.

    The input is u(tau) = B^T PhiK(t-tau)^T K with K solving W K = shifted
    target, where the target is shifted by the homogeneous response of the
    initial data.  The plan certifies itself by replaying through the forced
    solver.  Raises GramianSingular when the steering operator is not
    positive definite at the working tolerance.
    """
    system = ops.system
    x_star = np.asarray(x_star, dtype=float)
    if x_star.shape != (system.n,):
        raise ValueError(f"x_star: expected shape ({system.n},)")
    x0.check_against(system)
    if t <= 0:
        raise ValueError("t must be positive")
    if grid is None:
        grid = np.linspace(0.0, t, 101)
    grid = np.asarray(grid, dtype=float)

    W = controllability_gramian(ops, t, quad=QuadratureSpec(
        nodes=quad.nodes, tol=min(quad.tol, 1e-10), max_refinements=quad.max_refinements))
    eigs = np.linalg.eigvalsh(W)
    if eigs[-1] <= 0 or eigs[0] <= eig_tol * eigs[-1]:
        raise GramianSingular(
            f"steering operator min/max eigenvalues {eigs[0]:.3e}/{eigs[-1]:.3e} "
            f"below the positivity tolerance {eig_tol:g}"
        )
    shifted = x_star - solve_homogeneous(ops, x0, t)
    K = np.linalg.solve(W, shifted)

    B = system.B

    def u_batch(taus):
        taus = np.asarray(taus, dtype=float)
        phi = ops.phi_kernel(np.maximum(t - taus, 0.0))
        w = np.einsum("nji,j->ni", phi, K)    # PhiK^T K at each node
        return w @ B

    signal = ControlSignal(
        evaluator=lambda tau: u_batch(np.asarray([tau]))[0],
        m=system.m, batch=u_batch, description="minimum-energy",
    )
    values = signal.sample(grid)

    terminal = solve_forced(ops, x0, signal, t, quad)
    err = float(np.linalg.norm(terminal - x_star) / max(np.linalg.norm(x_star), 1.0))
    return ControlPlan(
        target=x_star, horizon=float(t), gain=K, grid=grid, values=values,
        terminal_state=terminal, terminal_error=err,
        gramian_min_eigenvalue=float(eigs[0]), signal=signal,
    )


@dataclass(frozen=True)
class StructuralReport:
    """Verdicts of all six tests plus the dimension necessary conditions."""

    observable: dict
    controllable: dict
    mu: int
    necessary_dims: dict
    gramian_min_eigenvalue: dict
    test_horizon: float
    alpha: float

    @property
    def is_observable(self):
        return all(self.observable.values())

    @property
    def is_controllable(self):
        return all(self.controllable.values())

    def to_dict(self):
        return {
            "observable": dict(self.observable),
            "controllable": dict(self.controllable),
            "mu": self.mu,
            "necessary_dims": dict(self.necessary_dims),
            "gramian_min_eigenvalue": dict(self.gramian_min_eigenvalue),
            "test_horizon": self.test_horizon,
            "alpha": self.alpha,
        }


def structural_report(system: CaputoSystem, t: float = 1.0,
                      rank_tol: float = DEFAULT_RANK_TOL,
                      eig_tol: float = GRAMIAN_EIG_TOL,
                      quad: QuadratureSpec = GRAMIAN_QUAD,
                      ops: EvolutionOperators | None = None) -> StructuralReport:
    """Run all six structural tests and cross-check their agreement.

    The rank and spectral tests are order-free; the Gramian test runs at the
    system's own alpha.  Disagreement between supposedly equivalent verdicts
    raises TestDisagreement with the raw numbers (a tolerance problem, never
    silently reconciled).
    """
    if t <= 0:
        raise ValueError("t must be positive")
    if ops is None:
        ops = EvolutionOperators(system)
    n, m, s = system.n, system.m, system.s
    mu = ops.mu

    obs_rank = rank_test(observability_matrix(system.A, system.C, mu), n, rank_tol)
    obs_pbh = pbh_test(system.A, system.C, "observability", rank_tol)
    ctr_rank = rank_test(controllability_matrix(system.A, system.B, mu), n, rank_tol)
    ctr_pbh = pbh_test(system.A, system.B, "controllability", rank_tol)

    og = observability_gramian(ops, t, quad)
    cg = controllability_gramian(ops, t, quad)
    og_eigs = np.linalg.eigvalsh(og)
    cg_eigs = np.linalg.eigvalsh(cg)
    obs_gram = bool(og_eigs[-1] > 0 and og_eigs[0] > eig_tol * og_eigs[-1])
    ctr_gram = bool(cg_eigs[-1] > 0 and cg_eigs[0] > eig_tol * cg_eigs[-1])

    observable = {"rank": obs_rank, "pbh": obs_pbh, "gramian": obs_gram}
    controllable = {"rank": ctr_rank, "pbh": ctr_pbh, "gramian": ctr_gram}
    report = StructuralReport(
        observable=observable, controllable=controllable, mu=mu,
        necessary_dims={
            "observability": mu >= math.ceil(n / s),
            "controllability": mu >= math.ceil(n / m),
        },
        gramian_min_eigenvalue={
            "observability": float(og_eigs[0]),
            "controllability": float(cg_eigs[0]),
        },
        test_horizon=float(t),
        alpha=system.alpha,
    )
    if len(set(observable.values())) > 1 or len(set(controllable.values())) > 1:
        raise TestDisagreement(
            "equivalent tests disagree; inspect tolerances",
            details={
                "observable": observable,
                "controllable": controllable,
                "gramian_eigs": {
                    "observability": og_eigs.tolist(),
                    "controllability": cg_eigs.tolist(),
                },
                "rank_tol": rank_tol,
                "eig_tol": eig_tol,
            },
        )
    return report
