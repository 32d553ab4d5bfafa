"""Gauss-Legendre quadrature with adaptive panel refinement.

Two entry points: `adaptive_panels` for regular integrands, and
`convolve_singular` for integrals carrying the weakly singular kernel
s^(alpha-1).  The singular kernel is absorbed exactly by the substitution
sigma = s^alpha, after which the Mittag-Leffler factors are analytic in
sigma; for alpha = 1 the substitution is the identity and the untransformed
fast path is used.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import QuadratureNonConvergence


@dataclass(frozen=True)
class QuadratureSpec:
    """Node count per panel, relative agreement target, refinement budget."""

    nodes: int = 64
    tol: float = 1e-8
    max_refinements: int = 10


# Gramian verdicts need ~1e-6, not 1e-8; one refinement check per the
# production configuration.
GRAMIAN_QUAD = QuadratureSpec(nodes=64, tol=1e-6, max_refinements=1)

_leggauss_cache: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _leggauss(n):
    if n not in _leggauss_cache:
        _leggauss_cache[n] = np.polynomial.legendre.leggauss(n)
    return _leggauss_cache[n]


def _panel_eval(f, edges, nodes):
    """Composite Gauss-Legendre over consecutive [edges[i], edges[i+1]]."""
    x, w = _leggauss(nodes)
    lo = edges[:-1]
    hi = edges[1:]
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    pts = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    wts = (half[:, None] * w[None, :]).ravel()
    vals = np.asarray(f(pts))
    return np.tensordot(wts, vals, axes=(0, 0))


def _refine(edges):
    mids = 0.5 * (edges[:-1] + edges[1:])
    out = np.empty(edges.size + mids.size)
    out[0::2] = edges
    out[1::2] = mids
    return out


def adaptive_panels(f, a, b, spec: QuadratureSpec = QuadratureSpec(), splits=()):
    """Integrate a batched integrand f over [a, b].

    f maps an (N,) array of points to an (N, ...) array of values.  Panels
    start at [a, splits..., b] and are halved until two successive levels
    agree to spec.tol relative; disagreement after the refinement budget
    raises QuadratureNonConvergence.
    """
    if spec.max_refinements < 1:
        raise ValueError("max_refinements must be >= 1")
    if b < a:
        raise ValueError("integration bounds reversed")
    if b == a:
        probe = np.asarray(f(np.asarray([a])))
        return np.zeros(probe.shape[1:])
    inner = [s for s in splits if a < s < b]
    edges = np.array(sorted({a, b, *inner}), dtype=float)
    current = _panel_eval(f, edges, spec.nodes)
    for _ in range(spec.max_refinements):
        edges = _refine(edges)
        nxt = _panel_eval(f, edges, spec.nodes)
        err = np.max(np.abs(nxt - current))
        scale = 1.0 + np.max(np.abs(nxt))
        if err <= spec.tol * scale:
            return nxt
        current = nxt
    raise QuadratureNonConvergence(
        f"panels still disagree by {err:.3e} (relative scale {scale:.3e}) "
        f"after {spec.max_refinements} refinements",
        disagreement=float(err),
    )


def convolve_singular(f, t, alpha, spec: QuadratureSpec = QuadratureSpec(),
                      breakpoints=()):
    """Integrate s^(alpha-1) f(s) over s in (0, t].

    f is batched over s.  breakpoints are locations in s where f may jump
    (control-signal discontinuities mapped through s = t - tau); panels are
    split there.  For alpha != 1 the substitution sigma = s^alpha turns the
    integral into (1/alpha) * int f(sigma^(1/alpha)) dsigma with the kernel
    absorbed exactly.
    """
    if t <= 0:
        raise ValueError("upper limit t must be positive")
    if alpha == 1.0:
        return adaptive_panels(f, 0.0, t, spec, splits=breakpoints)
    inv = 1.0 / alpha

    def g(sig):
        return f(np.power(sig, inv))

    sig_splits = [s ** alpha for s in breakpoints if 0.0 < s < t]
    return inv * adaptive_panels(g, 0.0, t ** alpha, spec, splits=sig_splits)
