"""Shared series kernel for the scalar coefficient functions.

Evaluates, for a coefficient row a(mu) annihilating the source matrix, the
family of sums

    beta_l = sum_{i>=0} a_l(i) * x^i / Gamma(alpha*i + offset),  l < mu,

where a_l(i) extends the delta rows (i < mu) through the one-step recursion
and x = t^alpha.  Terms are advanced multiplicatively with Gamma ratios from
gammaln, so neither the coefficients nor the powers nor Gamma are ever formed
on their own (each factor alone overflows long before the term does).
Summation is compensated (Kahan); the stop rule and divergence guard are
caller-configurable because the integer-order and fractional-order paths pin
different truncation contracts.
"""

from __future__ import annotations

import numpy as np
from scipy.special import gamma, gammaln

from .errors import SeriesDivergence


def coefficient_series(base_row, x, alpha, offset, *, tol, hump_index,
                       relative=True, max_terms=20000, divergence_limit=1000):
    """Sum the coefficient functions at x = t^alpha.

    base_row : (mu,) row a_k(mu).
    x        : scalar or (N,) array of t^alpha values, all >= 0.
    alpha    : series exponent step (Gamma argument advances by alpha).
    offset   : Gamma offset (j+1 for the j-th evolution operator, alpha for
               the convolution kernel, 1 for the integer-order case).
    tol      : truncation tolerance; absolute when relative=False, otherwise
               measured against the running sum's largest component.
    hump_index : index the stop rule must pass before triggering (guards
               against stopping on small terms before the series hump).
    divergence_limit : consecutive strictly-increasing term-magnitude steps
               tolerated before declaring divergence.

    Returns (values, terms_used): values has shape (mu,) or (N, mu).
    """
    base_row = np.asarray(base_row, dtype=float)
    mu = base_row.shape[0]
    scalar_in = np.ndim(x) == 0
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(xs < 0):
        raise ValueError("x = t**alpha must be nonnegative")
    nx = xs.shape[0]

    c = np.zeros((nx, mu))
    c[:, 0] = 1.0 / gamma(offset)
    total = np.zeros((nx, mu))
    comp = np.zeros((nx, mu))

    below = 0
    rising = 0
    prev_max = np.inf
    i = 0
    for i in range(max_terms):
        # Kahan step: total += c
        y = c - comp
        t_new = total + y
        comp = (t_new - total) - y
        total = t_new

        ratio = np.exp(gammaln(alpha * i + offset) - gammaln(alpha * (i + 1) + offset))
        shifted = np.zeros_like(c)
        shifted[:, 1:] = c[:, :-1]
        c = ((shifted + c[:, mu - 1:mu] * base_row) * xs[:, None]) * ratio

        cmax = float(np.abs(c).max())
        if cmax == 0.0:
            break
        scale = float(np.abs(total).max()) if relative else 1.0
        if cmax < tol * scale:
            below += 1
            if below >= 3 and i > hump_index:
                break
        else:
            below = 0
        if cmax > prev_max:
            rising += 1
            if rising >= divergence_limit:
                raise SeriesDivergence(
                    f"terms increased for {rising} consecutive steps "
                    f"(|term| = {cmax:.3e} after {i + 1} terms)",
                    terms=i + 1,
                )
        else:
            rising = 0
        prev_max = cmax
    else:
        raise SeriesDivergence(
            f"series did not settle within {max_terms} terms", terms=max_terms
        )

    return (total[0] if scalar_in else total), i + 1


def series_hump_index(op_norm, x, alpha):
    """Index past which the stop rule may fire: ceil((||A|| x)^(1/alpha)) + 10."""
    xmax = float(np.max(x)) if np.ndim(x) else float(x)
    if xmax <= 0.0 or op_norm <= 0.0:
        return 10
    return int(np.ceil((op_norm * xmax) ** (1.0 / alpha))) + 10
