"""Exact calculus for finite sums of complex-exponent monomials on (0,1).

Everything the extension theory needs to evaluate lives in the class

    f(x) = sum_k  c_k * x**(a_k),        c_k, a_k complex,  0 < x < 1,

which is closed under differentiation and under multiplication by powers of
x, and on which every required quadratic form has a closed form via

    <x^a, x^b>_{L2} = 1 / (conj(a) + b + 1)      (antilinear first slot).

The forms are the L2 inner product, the H1 seminorm <f', g'>, the Krein and
Friedrichs realizations of -d^2/dx^2, and the Hardy multiplication form
gamma * <f/x, g/x>.

Membership tests (square integrability, H1, ...) are decided *exactly* from
the real parts of the exponents, with no tolerance band: a caller that wants
leniency near a threshold must perturb its parameters instead.  The only
tolerance in this module is the canonicalization merge: exponents closer
than 1e-12 are treated as equal, because downstream code produces exponents
like ``(2 + w) - 2`` that should collapse onto ``w``.
"""

from __future__ import annotations

import math
from typing import Callable, Iterable, Sequence, Tuple

import numpy as np

from .errors import DomainViolation, NonIntegrable

MERGE_TOL = 1e-12


class _UndefinedType:
    """Singleton marking a divergent boundary value f(0+)."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "Undefined"

    def __bool__(self):
        return False


Undefined = _UndefinedType()


def _canonicalize(terms: Iterable[Tuple[complex, complex]]):
    """Merge terms whose exponents coincide within MERGE_TOL, drop zeros.

    Terms are ordered by (Re a, Im a); the representative exponent of a
    merged group is the first one encountered in that order, which makes the
    result deterministic.
    """
    items = sorted(
        ((complex(c), complex(a)) for c, a in terms),
        key=lambda t: (t[1].real, t[1].imag),
    )
    merged = []
    for c, a in items:
        if merged and abs(a - merged[-1][1]) <= MERGE_TOL:
            merged[-1][0] += c
        else:
            merged.append([c, a])
    return tuple((c, a) for c, a in merged if c != 0)


class MonomialSum:
    """A finite sum  sum_k c_k x^{a_k}  on the fixed interval (0,1).

    Immutable; all arithmetic returns new instances.  ``terms`` is a tuple of
    (coefficient, exponent) pairs, canonicalized on construction.
    """

    __slots__ = ("terms",)

    def __init__(self, terms: Iterable[Tuple[complex, complex]] = ()):
        object.__setattr__(self, "terms", _canonicalize(terms))

    def __setattr__(self, name, value):
        raise AttributeError("MonomialSum is immutable")

    # ---- constructors -------------------------------------------------

    @staticmethod
    def monomial(coefficient: complex, exponent: complex) -> "MonomialSum":
        return MonomialSum([(coefficient, exponent)])

    @staticmethod
    def zero() -> "MonomialSum":
        return MonomialSum()

    @staticmethod
    def from_polynomial(coeffs: Sequence[complex]) -> "MonomialSum":
        """coeffs[k] is the coefficient of x^k."""
        return MonomialSum([(c, k) for k, c in enumerate(coeffs)])

    # ---- arithmetic ---------------------------------------------------

    def __add__(self, other: "MonomialSum") -> "MonomialSum":
        return MonomialSum(self.terms + other.terms)

    def __sub__(self, other: "MonomialSum") -> "MonomialSum":
        return MonomialSum(self.terms + tuple((-c, a) for c, a in other.terms))

    def __neg__(self) -> "MonomialSum":
        return MonomialSum(tuple((-c, a) for c, a in self.terms))

    def __mul__(self, scalar: complex) -> "MonomialSum":
        return MonomialSum(tuple((c * scalar, a) for c, a in self.terms))

    __rmul__ = __mul__

    def shift(self, power: complex) -> "MonomialSum":
        """Multiply by x^power (termwise exponent shift)."""
        return MonomialSum(tuple((c, a + power) for c, a in self.terms))

    def map_terms(self, fn: Callable[[complex, complex], Tuple[complex, complex]]) -> "MonomialSum":
        """Apply (c, a) -> (c', a') termwise; used by the formal operators."""
        return MonomialSum(tuple(fn(c, a) for c, a in self.terms))

    def conjugate(self) -> "MonomialSum":
        """The sum whose values are the complex conjugates: conj(c) x^{conj(a)}."""
        return MonomialSum(tuple((c.conjugate(), a.conjugate()) for c, a in self.terms))

    # ---- membership (exact thresholds, no tolerance) ------------------

    def is_zero(self) -> bool:
        return not self.terms

    def is_square_integrable(self) -> bool:
        """Every exponent has Re(a) > -1/2."""
        return all(a.real > -0.5 for _, a in self.terms)

    def is_h1(self) -> bool:
        """f and f' both square integrable: Re(a) > 1/2, or the term is constant."""
        return all(a == 0 or a.real > 0.5 for _, a in self.terms)

    # ---- evaluation ---------------------------------------------------

    def __call__(self, x: float) -> complex:
        return evaluate(self, x)

    def sample(self, xs: np.ndarray) -> np.ndarray:
        """Vectorized evaluation on an array of points in (0,1].

        Points must be strictly positive: 0**complex is nan in IEEE terms,
        and the x -> 0 limit is the business of boundary_trace.
        """
        xs = np.asarray(xs, dtype=float)
        if xs.size and xs.min() <= 0.0:
            raise ValueError("sample() requires points in (0,1]; use boundary_trace for x=0")
        logx = np.log(xs)
        out = np.zeros(xs.shape, dtype=complex)
        for c, a in self.terms:
            out += c * np.exp(a * logx)
        return out

    def __repr__(self):
        if not self.terms:
            return "MonomialSum(0)"
        bits = [f"({c:.6g})*x^({a:.6g})" for c, a in self.terms]
        return "MonomialSum(" + " + ".join(bits) + ")"

    def __eq__(self, other):
        return isinstance(other, MonomialSum) and self.terms == other.terms

    def __hash__(self):
        return hash(self.terms)


# ---------------------------------------------------------------------------
# Form kinds
# ---------------------------------------------------------------------------


class FormKind:
    """Marker for which quadratic form to evaluate.

    The Hardy multiplication form carries its coupling gamma; the other four
    kinds are parameterless singletons.
    """

    __slots__ = ("name", "gamma")

    def __init__(self, name: str, gamma: float | None = None):
        object.__setattr__(self, "name", name)
        object.__setattr__(self, "gamma", gamma)

    def __setattr__(self, name, value):
        raise AttributeError("FormKind is immutable")

    def __repr__(self):
        if self.gamma is None:
            return self.name
        return f"{self.name}(gamma={self.gamma})"

    def __eq__(self, other):
        return (
            isinstance(other, FormKind)
            and self.name == other.name
            and self.gamma == other.gamma
        )

    def __hash__(self):
        return hash((self.name, self.gamma))


L2 = FormKind("L2")
H1Semi = FormKind("H1Semi")
KreinLaplacian = FormKind("KreinLaplacian")
FriedrichsLaplacian = FormKind("FriedrichsLaplacian")


def HardyMultiplication(gamma: float) -> FormKind:
    """Quadratic form of the maximal multiplication operator by gamma/x^2."""
    return FormKind("HardyMultiplication", float(gamma))


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------


def differentiate(f: MonomialSum) -> MonomialSum:
    """Termwise power rule; constant terms vanish."""
    return MonomialSum(tuple((c * a, a - 1) for c, a in f.terms if a != 0))


def l2_inner(f: MonomialSum, g: MonomialSum) -> complex:
    """<f, g> on L2(0,1), antilinear in the first slot.

    Exact value sum_{i,j} conj(c_i) d_j / (conj(a_i) + b_j + 1).  Raises
    NonIntegrable if either factor fails square integrability or some
    exponent pair has Re(conj(a) + b) <= -1.
    """
    if not f.is_square_integrable() or not g.is_square_integrable():
        raise NonIntegrable("l2_inner requires square-integrable arguments "
                            "(every exponent must have Re(a) > -1/2)")
    parts = []
    for c, a in f.terms:
        ac = a.conjugate()
        cc = c.conjugate()
        for d, b in g.terms:
            s = ac + b
            if s.real <= -1:
                raise NonIntegrable(
                    f"exponent pair conj({a}) + {b} has Re <= -1; product not integrable")
            parts.append(cc * d / (s + 1))
    # correctly-rounded summation: order-independent, so conjugate symmetry
    # l2_inner(f,g) == conj(l2_inner(g,f)) holds exactly
    return complex(math.fsum(z.real for z in parts), math.fsum(z.imag for z in parts))


def evaluate(f: MonomialSum, x: float) -> complex:
    """Pointwise value at x in (0,1]."""
    if not (0.0 < x <= 1.0):
        raise ValueError(f"evaluate: x={x} outside (0,1]")
    xc = complex(x)
    return sum((c * xc**a for c, a in f.terms), 0j)


def boundary_trace(f: MonomialSum):
    """(f(0+) or Undefined, f(1)).

    f(0+) is finite iff every exponent has Re(a) > 0 or a = 0 exactly;
    exponents on the imaginary axis oscillate without a limit and count as
    divergent too.
    """
    at_one = sum((c for c, _ in f.terms), 0j)
    at_zero: complex | _UndefinedType = 0j
    for c, a in f.terms:
        if a == 0:
            at_zero += c
        elif a.real <= 0:
            return (Undefined, at_one)
    return (at_zero, at_one)


def _require_h1(kind_name: str, f: MonomialSum, slot: str):
    for _, a in f.terms:
        if not (a == 0 or a.real > 0.5):
            raise DomainViolation(
                f"{kind_name}: {slot} argument is not H^1 on (0,1): "
                f"exponent {a} has Re(a) <= 1/2 and is not constant")


def require_form_domain(kind: FormKind, f: MonomialSum, slot: str = "first"):
    """Raise DomainViolation (naming the failing test) if f is outside the
    form domain of ``kind``.  Shared by the closed forms and the quadrature
    oracle so both routes enforce the identical domain contract."""
    name = kind.name
    if name == "L2":
        if not f.is_square_integrable():
            raise DomainViolation(
                f"L2: {slot} argument is not square integrable "
                f"(needs Re(a) > -1/2 for every exponent)")
    elif name in ("H1Semi", "KreinLaplacian"):
        _require_h1(name, f, slot)
    elif name == "FriedrichsLaplacian":
        _require_h1(name, f, slot)
        f0, f1 = boundary_trace(f)
        scale = max(1.0, sum(abs(c) for c, _ in f.terms))
        if f0 is Undefined or abs(f0) > MERGE_TOL * scale or abs(f1) > MERGE_TOL * scale:
            raise DomainViolation(
                f"FriedrichsLaplacian: {slot} argument has nonzero boundary "
                f"values ({f0}, {f1}); form domain is H^1 with zero trace")
    elif name == "HardyMultiplication":
        for _, a in f.terms:
            if not a.real > 0.5:
                raise DomainViolation(
                    f"HardyMultiplication: x^-1 * ({slot} argument) is not "
                    f"square integrable: exponent {a} has Re(a) - 1 <= -1/2")
    else:
        raise ValueError(f"unknown form kind {kind!r}")


def form_value(kind: FormKind, f: MonomialSum, g: MonomialSum) -> complex:
    """Sesquilinear form of the given kind, antilinear in f.

    KreinLaplacian    <f',g'> - conj(f(1)-f(0)) * (g(1)-g(0))   on H^1
    FriedrichsLaplacian  <f',g'>       on H^1 with zero boundary values
    HardyMultiplication  gamma <f/x, g/x>   for x^{-1}f, x^{-1}g in L2
    L2 / H1Semi      the plain inner products.

    The Krein expression is the polarization of the quadratic form
    ||f'||^2 - |f(1)-f(0)|^2; on H^1 monomial sums both traces are finite.
    """
    require_form_domain(kind, f, "first")
    require_form_domain(kind, g, "second")
    name = kind.name
    if name == "L2":
        return l2_inner(f, g)
    if name in ("H1Semi", "FriedrichsLaplacian"):
        return l2_inner(differentiate(f), differentiate(g))
    if name == "KreinLaplacian":
        f0, f1 = boundary_trace(f)
        g0, g1 = boundary_trace(g)
        return (l2_inner(differentiate(f), differentiate(g))
                - (f1 - f0).conjugate() * (g1 - g0))
    # HardyMultiplication
    return kind.gamma * l2_inner(f.shift(-1), g.shift(-1))


def integrand_hint(f: MonomialSum, g: MonomialSum) -> float:
    """Smallest Re(conj(a) + b) over exponent pairs: the x->0 behavior of conj(f)*g.

    Used to seed the quadrature oracle's endpoint grading.  Returns 0.0 for
    empty sums (the integrand is identically zero).
    """
    if not f.terms or not g.terms:
        return 0.0
    return min((a.conjugate() + b).real for _, a in f.terms for _, b in g.terms)
