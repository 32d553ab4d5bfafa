"""Independent oracles: brute-force series, closed forms, discretizations.

Nothing here touches the coefficient-table machinery under test; every
routine evaluates its defining formula directly.
"""

import numpy as np
from scipy.special import gamma, gammaln


def ml_scalar_series(a, t, alpha, offset, min_terms=200, max_terms=50000):
    """Brute-force sum of a^i t^(alpha i) / Gamma(alpha i + offset).

    Compensated (Kahan) summation; terms advance through Gamma ratios so no
    intermediate factor overflows.  Sums at least min_terms terms and stops
    only on a long run of negligible terms.
    """
    x = t ** alpha
    term = 1.0 / gamma(offset)
    total = 0.0
    comp = 0.0
    below = 0
    for i in range(max_terms):
        y = term - comp
        t_new = total + y
        comp = (t_new - total) - y
        total = t_new
        ratio = np.exp(gammaln(alpha * i + offset) - gammaln(alpha * (i + 1) + offset))
        term = ((term * a) * x) * ratio
        if abs(term) < 1e-30 * max(1.0, abs(total)):
            below += 1
            if below >= 10 and i >= min_terms:
                break
        else:
            below = 0
    return total


def expm_series_matrix(A, t, terms=120):
    """Plain truncated Taylor sum of exp(A t) (small ||A|| t only)."""
    n = A.shape[0]
    out = np.eye(n)
    term = np.eye(n)
    for i in range(1, terms):
        term = term @ (A * t) / i
        out = out + term
    return out


def caputo_l1_derivative(xs, ts, alpha):
    """L1 discretization of the Caputo derivative of order alpha in (0, 1].

    xs: (N, n) samples on the uniform grid ts.  Returns (N-1, n) values at
    ts[1:].
    """
    h = ts[1] - ts[0]
    assert np.allclose(np.diff(ts), h)
    N = len(ts) - 1
    j = np.arange(N)
    b = (j + 1) ** (1.0 - alpha) - j ** (1.0 - alpha)
    dx = np.diff(xs, axis=0)          # (N, n)
    out = np.empty_like(dx)
    for i in range(1, N + 1):
        # sum_{j=0}^{i-1} b_j * (x_{i-j} - x_{i-j-1})
        out[i - 1] = b[:i] @ dx[i - 1::-1]
    return out * h ** (-alpha) / gamma(2.0 - alpha)


def forced_response_expm(A, B, c, t):
    """x(t) for xdot = Ax + Bc, x(0)=0, constant c, via the augmented
    exponential block trick (exact up to expm accuracy)."""
    import scipy.linalg
    n = A.shape[0]
    bc = (B @ np.atleast_1d(c)).reshape(n, 1)
    M = np.zeros((n + 1, n + 1))
    M[:n, :n] = A
    M[:n, n:] = bc
    E = scipy.linalg.expm(M * t)
    return E[:n, n]
