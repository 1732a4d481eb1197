"""Matrix discretizations: numerical ranges, Rayleigh infima, witnesses.

Operators are realized on the interior nodes of a graded mesh with zero
Dirichlet data and then conjugated by W^{1/2} (W = trapezoid weights) so
that the L^2 inner product becomes the plain dot product.  In those
coordinates the second-difference part is an exactly symmetric tridiagonal
matrix and every operator splits as K = H + iJ with H, J real symmetric
tridiagonal: H is the discretized real part (no Hardy term for the
imaginary family; the bare gamma/x^2 diagonal for the real family) and J
carries the rest.

The Hermitian part of e^{i theta} K is cos(theta) H - sin(theta) J, so the
support function of the numerical range needs only extreme eigenvalues of
real symmetric tridiagonal matrices (dense-banded solves up to n = 4096,
iterative extreme-eigenvalue solves beyond).  Sweeps are embarrassingly
parallel over theta; everything here is deterministic and matrices are
immutable after assembly.

Mesh depth is capped at 1e-3 relative (unlike the 1e-12 of the defect
oracles): extreme-eigenvalue solvers see absolute errors on the order of
machine-epsilon times the matrix norm, and 1/x^2 at depth 1e-12 would
drown every O(1) quantity of interest.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Optional, Tuple

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.sparse import diags
from scipy.sparse.linalg import ArpackError, eigsh

from ._grid import MeshSpec, mesh_from_spec, second_difference_coeffs
from .errors import EigenFailure, NotApplicable, NotClosable, WrongFamily
from .extensions import ExtensionSpec, extension_vector, is_closable, margin_of
from .families import (
    HARDY_IMAGINARY,
    HARDY_REAL,
    FamilyInstance,
    instantiate,
)
from .monomial import MonomialSum, differentiate
from .quadrature import integrate

ANGLE_TOL = 0.02          # radians; extremal detection cannot resolve the exact boundary
DENSE_EIG_LIMIT = 4096
_MATRIX_DEPTH = 1e-3      # relative depth cap for matrix meshes (see module docstring)
_BISECT_STEPS = 48


def _start_vector(n: int) -> np.ndarray:
    """Fixed generic ARPACK start vector: identical inputs must give
    byte-identical reports, so the iteration may not seed itself randomly."""
    return np.random.default_rng(1729).standard_normal(n)


@dataclass(frozen=True)
class DiscreteOperator:
    """K = H + iJ in weighted-orthonormal coordinates (H, J real symmetric)."""
    nodes: np.ndarray                     # interior nodes
    weights: np.ndarray
    h_diag: np.ndarray
    h_off: np.ndarray
    j_diag: np.ndarray
    j_off: np.ndarray
    instance: Optional[FamilyInstance] = None
    sign: str = ""
    dense_h: Optional[np.ndarray] = None  # general-matrix path (small tests)
    dense_j: Optional[np.ndarray] = None

    @property
    def n(self) -> int:
        if self.dense_h is not None:
            return self.dense_h.shape[0]
        return self.h_diag.size

    @classmethod
    def from_dense(cls, m: np.ndarray) -> "DiscreteOperator":
        m = np.asarray(m, dtype=complex)
        h = (m + m.conj().T) / 2
        j = (m - m.conj().T) / 2j
        empty = np.empty(0)
        return cls(nodes=empty, weights=empty, h_diag=empty, h_off=empty,
                   j_diag=empty, j_off=empty, dense_h=h, dense_j=j)

    def hermitian_part(self) -> np.ndarray:
        if self.dense_h is not None:
            return self.dense_h
        return (np.diag(self.h_diag)
                + np.diag(self.h_off, 1) + np.diag(self.h_off, -1))

    def matrix(self) -> np.ndarray:
        if self.dense_h is not None:
            return self.dense_h + 1j * self.dense_j
        skew = (np.diag(self.j_diag)
                + np.diag(self.j_off, 1) + np.diag(self.j_off, -1))
        return self.hermitian_part() + 1j * skew

    def support_value(self, theta: float) -> float:
        """sup Re(e^{i theta} <f, Kf>) over unit f = largest eig of cos*H - sin*J."""
        c, s = math.cos(theta), math.sin(theta)
        try:
            if self.dense_h is not None:
                m = c * self.dense_h - s * self.dense_j
                if self.n <= DENSE_EIG_LIMIT:
                    return float(np.linalg.eigvalsh(m)[-1])
                return float(eigsh(m, k=1, which="LA", v0=_start_vector(self.n),
                                   return_eigenvectors=False)[0])
            d = c * self.h_diag - s * self.j_diag
            e = c * self.h_off - s * self.j_off
            if self.n <= DENSE_EIG_LIMIT:
                vals = eigh_tridiagonal(d, e, select="i",
                                        select_range=(self.n - 1, self.n - 1),
                                        eigvals_only=True)
                return float(vals[0])
            m = diags([e, d, e], [-1, 0, 1], format="csr")
            return float(eigsh(m, k=1, which="LA", v0=_start_vector(self.n),
                               return_eigenvectors=False)[0])
        except (np.linalg.LinAlgError, ArpackError) as exc:
            raise EigenFailure(f"support eigenvalue at theta={theta}: {exc}") from exc


def _symmetrized_laplacian(x: np.ndarray):
    """W-conjugated negative second difference: symmetric tridiagonal (d, e).

    Row i of the raw scheme is (-cl, cl+cr, -cr) from
    second_difference_coeffs; conjugating by W^{1/2} (w_i = (h_l+h_r)/2)
    turns the off-diagonal pair (-cr, -cl') into the common value
    -1/(h sqrt(w_i w_{i+1})) -- exactly symmetric -- while the diagonal
    stays (1/h_l + 1/h_r)/w_i.
    """
    xi = x[1:-1]
    h = np.diff(x)
    w = (h[:-1] + h[1:]) / 2.0
    d = (1.0 / h[:-1] + 1.0 / h[1:]) / w
    e = -1.0 / (h[1:-1] * np.sqrt(w[:-1] * w[1:]))
    return xi, w, d, e


def discretize(inst: FamilyInstance, sign: str,
               mesh: MeshSpec = MeshSpec()) -> DiscreteOperator:
    """Matrix of the formal action on zero-Dirichlet interior grid functions.

    The split K = H + iJ mirrors the (+/-) structure: the imaginary family
    has H = discretized -d^2/dx^2 and J = +/- gamma/x^2; the real family
    has H = gamma/x^2 and J = -/+ the second-difference part.
    """
    if sign not in ("+", "-"):
        raise ValueError(f"sign must be '+' or '-', got {sign!r}")
    x = mesh_from_spec(mesh, _MATRIX_DEPTH)
    xi, w, lap_d, lap_e = _symmetrized_laplacian(x)
    hardy = inst.gamma / xi**2
    zeros = np.zeros(xi.size - 1)
    su = 1.0 if sign == "+" else -1.0
    if inst.family == HARDY_IMAGINARY:
        return DiscreteOperator(nodes=xi, weights=w,
                                h_diag=lap_d, h_off=lap_e,
                                j_diag=su * hardy, j_off=zeros,
                                instance=inst, sign=sign)
    return DiscreteOperator(nodes=xi, weights=w,
                            h_diag=hardy, h_off=zeros,
                            j_diag=-su * lap_d, j_off=-su * lap_e,
                            instance=inst, sign=sign)


@lru_cache(maxsize=4)
def certified_alpha(node_count: int = 2000) -> Tuple[float, float]:
    """(pi^2, relative error of the interior-only discretization against it).

    The ground Rayleigh quotient of the imaginary family's real part on the
    zero-Dirichlet core is the first Dirichlet-Laplacian eigenvalue; the
    discretization re-derives it so pi^2 never enters the sandwich
    uncertified.
    """
    op = discretize(instantiate(HARDY_IMAGINARY, 1.0), "-",
                    MeshSpec(node_count=node_count, grading_ratio=0.85))
    try:
        lam = eigh_tridiagonal(op.h_diag, op.h_off, select="i",
                               select_range=(0, 0), eigvals_only=True)[0]
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise EigenFailure(f"alpha certification eigensolve: {exc}") from exc
    alpha = math.pi**2
    return alpha, abs(lam - alpha) / alpha


# ---------------------------------------------------------------------------
# numerical range
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NumericalRangeReport:
    support_samples: Tuple[Tuple[float, float], ...]
    arg_inf: float
    arg_sup: float
    extremal: bool
    angle_tol: float = ANGLE_TOL


def _support_crossing(op: DiscreteOperator, direction: int) -> float:
    """First zero of the support function sweeping theta from 0 toward
    direction * pi, refined by bisection."""
    lo = 0.0
    val_lo = op.support_value(0.0)
    if val_lo <= 0.0:
        return 0.0
    hi = None
    steps = 64
    for k in range(1, steps + 1):
        theta = direction * math.pi * k / steps
        if op.support_value(theta) <= 0.0:
            hi = theta
            lo = direction * math.pi * (k - 1) / steps
            break
    if hi is None:
        # no sign change up to +/- pi: the range fills that half sweep
        return direction * math.pi
    for _ in range(_BISECT_STEPS):
        mid = (lo + hi) / 2.0
        if op.support_value(mid) <= 0.0:
            hi = mid
        else:
            lo = mid
    return (lo + hi) / 2.0


def numerical_range_sweep(op: DiscreteOperator,
                          theta_steps: int = 64) -> NumericalRangeReport:
    """Support-function sweep of the numerical range with arg bounds.

    For each theta the support value is the largest eigenvalue of the
    Hermitian part of e^{i theta} K.  The argument bounds come from the
    first support zeros on either side of theta = 0 (a point z of argument
    phi stays on the positive side exactly while |theta + phi| < pi/2):

        arg_inf = pi/2 - theta_up,    arg_sup = -pi/2 - theta_down,

    and the range is flagged extremal when either bound reaches +/- pi/2
    within angle_tol (the discretization cannot resolve the exact
    boundary, so the tolerance travels with the report).
    """
    if theta_steps < 8:
        raise ValueError(f"theta_steps must be >= 8, got {theta_steps}")
    thetas = np.linspace(-math.pi, math.pi, theta_steps)
    samples = tuple((float(t), op.support_value(float(t))) for t in thetas)
    theta_up = _support_crossing(op, +1)
    theta_down = _support_crossing(op, -1)
    arg_inf = math.pi / 2 - theta_up
    arg_sup = -math.pi / 2 - theta_down
    extremal = (arg_sup >= math.pi / 2 - ANGLE_TOL
                or arg_inf <= -math.pi / 2 + ANGLE_TOL)
    return NumericalRangeReport(support_samples=samples, arg_inf=arg_inf,
                                arg_sup=arg_sup, extremal=extremal)


# ---------------------------------------------------------------------------
# Kato-sector witness (real family)
# ---------------------------------------------------------------------------

# Bump family for the witness integrals: b(x) = (1 - (4x-3)^2)^4 supported on
# [1/2, 1], modulated by x^{i kappa}, kappa = 6 pi n.  Polynomial with integer
# coefficients, so every integral reduces to exact monomial integration over
# [1/2, 1] (the single exponent -1 contributes a logarithm).  The expanded
# coefficients reach ~6e12 while the integrals are O(0.1): the accumulation
# runs in exact rationals, because a float sum loses four digits to
# cancellation.  This family is a documented constant of the artifact: tests
# freeze values derived from it.


def _int_polymul(a, b):
    out = [0] * (len(a) + len(b) - 1)
    for i, ai in enumerate(a):
        for j, bj in enumerate(b):
            out[i + j] += ai * bj
    return out


def _int_polypow(a, n):
    out = [1]
    for _ in range(n):
        out = _int_polymul(out, a)
    return out


def _int_polyder(a):
    return [k * c for k, c in enumerate(a)][1:]


_BUMP = _int_polypow([-8, 24, -16], 4)        # (1 - (4x-3)^2)^4, exact

# ln 2 to 50 digits as a rational.  The monomial sums below pair a rational
# part ~ +3e8 against a log part ~ -3e8; converting either to float before
# the subtraction throws away eight digits, so the cancellation has to happen
# in Fraction arithmetic with a single rounding at the very end.
_LN2 = Fraction(69314718055994530941723212145817656807550013436026, 10**50)


def _interval_monomial_integral(coeffs, shift: int) -> float:
    """Exact integral over [1/2, 1] of sum c_k x^(k+shift), integer c_k."""
    rational = Fraction(0)
    log_part = 0
    for k, c in enumerate(coeffs):
        if c == 0:
            continue
        e = k + shift
        if e == -1:
            log_part += c
        else:
            rational += Fraction(c) * (1 - Fraction(2) ** (-(e + 1))) / (e + 1)
    return float(rational + log_part * _LN2)


def kato_sector_witness(inst: FamilyInstance, epsilon: float,
                        n_terms: int = 8):
    """Values Re<f_n, e^{i eps} C_+ f_n> for the modulated bump family.

    The integrand is cos(eps) gamma |f|^2/x^2 - sin(eps) |f'|^2; with
    f_n = b x^{i kappa}/||b|| the frequency kappa = 6 pi n pumps ||f_n'||
    while the Hardy term stays fixed, so for 0 < eps < pi the sequence
    decreases strictly and crosses any desk-scale threshold: no rotation of
    the real family is sectorial.  eps = 0 degenerates to the plain
    accretivity values gamma ||f_n/x||^2 >= 0 and is kept for that check.
    """
    if inst.family != HARDY_REAL:
        raise WrongFamily("the sector witness targets the HardyReal family")
    if not 0 <= epsilon < math.pi:
        raise ValueError(f"epsilon must lie in [0, pi), got {epsilon}")
    if n_terms < 1:
        raise ValueError("n_terms must be >= 1")
    b2 = _int_polymul(_BUMP, _BUMP)
    db = _int_polyder(_BUMP)
    db2 = _int_polymul(db, db)
    norm2 = _interval_monomial_integral(b2, 0)
    hardy = _interval_monomial_integral(b2, -2) / norm2   # ||f/x||^2
    bend = _interval_monomial_integral(db2, 0) / norm2    # ||b'||^2/||b||^2
    out = []
    for n in range(1, n_terms + 1):
        kappa = 6.0 * math.pi * n
        grad2 = bend + kappa**2 * hardy                              # ||f_n'||^2
        out.append(math.cos(epsilon) * inst.gamma * hardy
                   - math.sin(epsilon) * grad2)
    return out


# ---------------------------------------------------------------------------
# Rayleigh infimum for the sandwich
# ---------------------------------------------------------------------------


def rayleigh_inf_on_extension(spec: ExtensionSpec,
                              mesh: MeshSpec = MeshSpec()) -> float:
    """Ground Rayleigh quotient of the extension's real part.

    Imaginary family: P1 elements on a *uniform* mesh (the real part is the
    plain Dirichlet form; no 1/x^2 ever enters it, so endpoint grading buys
    nothing).  The form domain extends zero-trace elements by span{x}, and
    on psi with psi(0) = 0 the closed form is

        ||psi'||^2 + (margin - 1) |psi(1)|^2,

    so the matrix is the Dirichlet stiffness bordered by a free node at
    x = 1 carrying the (margin - 1) boundary term; the Friedrichs spec pins
    that node too.  Real family: the real part is multiplication by
    gamma/x^2, whose discrete ground value is its smallest diagonal entry.
    """
    clos = is_closable(spec)          # raises NotAccretive when margin < 0
    if not clos.closable:
        raise NotClosable(clos.reason)
    inst = spec.instance
    if inst.family == HARDY_REAL:
        x = mesh_from_spec(mesh, _MATRIX_DEPTH)
        return float(np.min(inst.gamma / x[1:-1] ** 2))

    n = mesh.node_count
    h = 1.0 / n
    bordered = spec.domain_dim == 1
    size = n if bordered else n - 1   # interior nodes, plus the x=1 node if free
    main = np.full(size, 2.0 / h)
    upper = np.full(size - 1, -1.0 / h)
    m_main = np.full(size, 4.0 * h / 6.0)
    m_upper = np.full(size - 1, h / 6.0)
    if bordered:
        margin = margin_of(spec)
        main[-1] = 1.0 / h + (margin - 1.0)
        m_main[-1] = 2.0 * h / 6.0
    stiff = diags([upper, main, upper], [-1, 0, 1], format="csc")
    mass = diags([m_upper, m_main, m_upper], [-1, 0, 1], format="csc")
    try:
        vals = eigsh(stiff, k=1, M=mass, sigma=-1.0, which="LM",
                     v0=_start_vector(main.size), return_eigenvectors=False)
    except (np.linalg.LinAlgError, ArpackError, RuntimeError) as exc:
        raise EigenFailure(f"bordered Rayleigh eigensolve: {exc}") from exc
    return float(vals[0])


# ---------------------------------------------------------------------------
# non-closability witness (real family)
# ---------------------------------------------------------------------------

_WITNESS_POWERS = tuple(4**j for j in range(1, 10))   # 4 .. 262144


def _plateau(xs: np.ndarray, p: int):
    """1 - m_p with first and second derivatives, m_p the plateau mollifier
    (1 - (1-w)^p)(1 - w^p), w = 3x^2 - 2x^3.  Factored evaluation: the
    expanded polynomial would need degree-3p coefficients."""
    w = 3 * xs**2 - 2 * xs**3
    w1 = 6 * xs - 6 * xs**2
    w2 = 6 - 12 * xs
    a = (1 - w) ** p
    b = w**p
    a1 = -p * (1 - w) ** (p - 1) * w1
    b1 = p * w ** (p - 1) * w1
    a2 = p * (p - 1) * (1 - w) ** (p - 2) * w1**2 - p * (1 - w) ** (p - 1) * w2
    b2 = p * (p - 1) * w ** (p - 2) * w1**2 + p * w ** (p - 1) * w2
    one_m = a + b - a * b
    d1 = a1 + b1 - a1 * b - a * b1
    d2 = a2 + b2 - a2 * b - 2 * a1 * b1 - a * b2
    return one_m, d1, d2


def nonclosability_witness(spec: ExtensionSpec, mollification: float = 262144.0):
    """(norms, form_values) along g_p = v_d (1 - m_p) for a HardyReal spec.

    The cutoffs concentrate g_p in shrinking endpoint layers, so the norms
    decay like p^{-1/4}; the form values Re<g_p, C_-* g_p> converge to the
    boundary form value q(v_d) = margin > 0.  A vanishing sequence with
    form values bounded away from zero is exactly what non-closability of
    the real part means, so this is the concrete certificate behind the
    margin-off-zero verdict of is_closable.

    ``mollification`` caps the mollifier powers (powers 4^j up to the cap).
    Raises NotApplicable below margin 0.1: near the closable boundary the
    form limit is too small to separate from the mollification error at
    desk scale.
    """
    inst = spec.instance
    if inst.family != HARDY_REAL:
        raise NotApplicable("the witness construction targets the HardyReal family")
    margin = margin_of(spec)
    if not margin >= 0.1:
        raise NotApplicable(
            f"margin {margin:.6g} < 0.1: too close to the closable boundary "
            f"for a desk-scale witness")
    powers = [p for p in _WITNESS_POWERS if p <= mollification]
    if not powers:
        raise NotApplicable(f"mollification cap {mollification} admits no powers")
    v = extension_vector(spec)
    v1 = differentiate(v)
    v2 = differentiate(v1)
    gamma = inst.gamma
    norms, forms = [], []
    for p in powers:
        def norm_integrand(xs, _p=p):
            one_m, _, _ = _plateau(xs, _p)
            return np.abs(v.sample(xs) * one_m) ** 2

        def form_integrand(xs, _p=p):
            one_m, d1, d2 = _plateau(xs, _p)
            vx = v.sample(xs)
            g = vx * one_m
            g2 = v2.sample(xs) * one_m + 2 * v1.sample(xs) * d1 + vx * d2
            return np.conj(g) * (1j * g2 + gamma / xs**2 * g)

        norms.append(math.sqrt(integrate(norm_integrand, 0.0,
                                         abs_tol=1e-12, rel_tol=1e-8).value.real))
        forms.append(integrate(form_integrand, 0.0,
                               abs_tol=1e-10, rel_tol=1e-8).value.real)
    return norms, forms
