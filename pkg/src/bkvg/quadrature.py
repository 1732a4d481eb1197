"""Independent numerical integration oracle on (0,1).

This module re-derives, by adaptive Gauss quadrature, every value the
monomial calculus produces in closed form.  It deliberately shares no value
computation with the closed forms (only the domain *checks* are shared, so
both routes reject the same inputs): integrands are sampled pointwise and
panel sums are accumulated with compensated summation in a fixed order, so
agreement between the two routes is a genuine cross-check and the result is
bit-reproducible for a fixed configuration.

Strategy: composite 16-point Gauss-Legendre on a panel list seeded with
dyadic panels [2^-(k+1), 2^-k] graded toward the (possibly singular)
endpoint 0, plus the stub [0, 2^-K].  The per-panel error model is
|G16(panel) - G16(left half) - G16(right half)|; the worst panel under that
model is bisected until the summed error meets max(abs_tol, rel_tol*|I|).
Gauss nodes are interior, so integrable endpoint singularities x^a with
Re(a) > -1 need no special casing beyond the grading.

The seed depth K grows with the singularity: at the default K = 60 the
unresolved mass of x^a below 2^-60 is (2^-60)^(a+1)/(a+1), which for Re(a)
near -0.9 is ~0.16 -- far above tolerance -- so K scales like 43/(1+hint)
(43 is roughly the bit count that pushes the tail under 1e-13).  The
adaptive bisection of the stub panel would find the missing mass anyway;
seeding the depth just avoids hundreds of pointless refinement rounds.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import NoConvergence, NonIntegrableHint
from .monomial import (
    FormKind,
    MonomialSum,
    boundary_trace,
    differentiate,
    integrand_hint,
    require_form_domain,
)

# Default configuration (documented knobs).
ABS_TOL = 1e-12
REL_TOL = 1e-10
GAUSS_NODES = 16          # balances cost vs the oscillation from Im(a)*ln(x)
MAX_SUBDIVISIONS = 4000
_SEED_DEPTH_BITS = 43     # -log2 of the truncated-tail target for depth seeding

# Nodes/weights on the reference panel [0,1], computed once.
_GL_X, _GL_W = np.polynomial.legendre.leggauss(GAUSS_NODES)
_GL_X = 0.5 * (_GL_X + 1.0)
_GL_W = 0.5 * _GL_W


@dataclass(frozen=True)
class QuadratureResult:
    value: complex
    error_estimate: float
    subdivisions: int


class _Panel:
    """One panel [a,b] holding the refined value and the local error model."""

    __slots__ = ("a", "b", "value", "left", "right", "err")

    def __init__(self, f, a, b, coarse=None):
        m = 0.5 * (a + b)
        if coarse is None:
            # one batched integrand call for (whole, left half, right half)
            xs = np.concatenate((a + (b - a) * _GL_X, a + (m - a) * _GL_X,
                                 m + (b - m) * _GL_X))
            vals = np.asarray(f(xs), dtype=complex)
            coarse = (b - a) * np.dot(_GL_W, vals[:GAUSS_NODES])
            left = (m - a) * np.dot(_GL_W, vals[GAUSS_NODES:2 * GAUSS_NODES])
            right = (b - m) * np.dot(_GL_W, vals[2 * GAUSS_NODES:])
        else:
            xs = np.concatenate((a + (m - a) * _GL_X, m + (b - m) * _GL_X))
            vals = np.asarray(f(xs), dtype=complex)
            left = (m - a) * np.dot(_GL_W, vals[:GAUSS_NODES])
            right = (b - m) * np.dot(_GL_W, vals[GAUSS_NODES:])
        self.a = a
        self.b = b
        self.left = complex(left)
        self.right = complex(right)
        self.value = self.left + self.right
        self.err = abs(complex(coarse) - self.value)

    def split(self, f):
        m = 0.5 * (self.a + self.b)
        # children reuse this panel's half values as their coarse estimates
        return _Panel(f, self.a, m, coarse=self.left), _Panel(f, m, self.b, coarse=self.right)


def seed_panels(singular_exponent_hint: float):
    """Dyadic panel edges [2^-(k+1), 2^-k] down to 2^-K plus the [0, 2^-K] stub."""
    if singular_exponent_hint < 0:
        depth = _SEED_DEPTH_BITS / (1.0 + singular_exponent_hint)
        k_max = max(60, min(2000, int(math.ceil(depth))))
    else:
        k_max = 8
    edges = [1.0] + [2.0 ** (-(k + 1)) for k in range(k_max)] + [0.0]
    return list(zip(edges[1:], edges[:-1]))  # (a, b) pairs, descending


def integrate(
    f: Callable[[np.ndarray], np.ndarray],
    singular_exponent_hint: float,
    abs_tol: float = ABS_TOL,
    rel_tol: float = REL_TOL,
    max_subdivisions: int = MAX_SUBDIVISIONS,
) -> QuadratureResult:
    """Adaptive integral of f over (0,1).

    ``f`` maps an array of points in (0,1) to values (complex ok).
    ``singular_exponent_hint`` is the exponent of the dominant power
    behavior at 0; it steers the initial panel grading only -- the error
    control does not trust it.  Raises NonIntegrableHint for hint <= -1 and
    NoConvergence when the subdivision cap is reached short of tolerance
    (the best result so far rides along on the exception).
    """
    if singular_exponent_hint <= -1:
        raise NonIntegrableHint(
            f"hint {singular_exponent_hint} <= -1: integrand declared non-integrable at 0")

    heap = []
    panels = {}
    counter = 0
    for a, b in seed_panels(singular_exponent_hint):
        p = _Panel(f, a, b)
        panels[counter] = p
        # worst error first; ties broken by left endpoint, then insertion order
        heapq.heappush(heap, (-p.err, p.a, counter))
        counter += 1

    def totals():
        ps = sorted(panels.values(), key=lambda p: p.a)
        re = math.fsum(p.value.real for p in ps)
        im = math.fsum(p.value.imag for p in ps)
        err = math.fsum(p.err for p in ps)
        return complex(re, im), err

    value, err = totals()
    subdivisions = 0
    while err > max(abs_tol, rel_tol * abs(value)):
        if subdivisions >= max_subdivisions:
            raise NoConvergence(
                f"quadrature cap {max_subdivisions} reached with error {err:.3e}",
                result=QuadratureResult(value, err, subdivisions))
        _, _, key = heapq.heappop(heap)
        worst = panels.pop(key)
        for child in worst.split(f):
            panels[counter] = child
            heapq.heappush(heap, (-child.err, child.a, counter))
            counter += 1
        subdivisions += 1
        value, err = totals()

    return QuadratureResult(value, err, subdivisions)


def oracle_form(kind: FormKind, f: MonomialSum, g: MonomialSum, **opts) -> complex:
    """form_value re-derived by numerical integration (same domain contract).

    Domain checks are the shared ones (violations raise the identical
    DomainViolation), but every value comes from ``integrate`` on pointwise
    samples, including the boundary correction of the Krein form.
    """
    require_form_domain(kind, f, "first")
    require_form_domain(kind, g, "second")
    name = kind.name
    if name in ("H1Semi", "FriedrichsLaplacian"):
        return oracle_form(FormKind("L2"), differentiate(f), differentiate(g), **opts)
    if name == "KreinLaplacian":
        f0, f1 = boundary_trace(f)
        g0, g1 = boundary_trace(g)
        grad = oracle_form(FormKind("L2"), differentiate(f), differentiate(g), **opts)
        return grad - (f1 - f0).conjugate() * (g1 - g0)
    if name == "HardyMultiplication":
        fs, gs = f.shift(-1), g.shift(-1)
        def integrand(xs):
            return np.conj(fs.sample(xs)) * gs.sample(xs)
        return kind.gamma * integrate(integrand, integrand_hint(fs, gs), **opts).value
    # L2
    def integrand(xs):
        return np.conj(f.sample(xs)) * g.sample(xs)
    return integrate(integrand, integrand_hint(f, g), **opts).value
