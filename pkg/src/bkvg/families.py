"""The two model operator families on L2(0,1) and their adjoint calculus.

For a coupling gamma > 0 the families are

    HardyImaginary ("A"):   A+- f = +-i*gamma*x^-2 f - f''
    HardyReal      ("C"):   C+- f = +-i f'' + gamma*x^-2 f     (C+- = -+ i A+-)

both defined minimally on smooth compactly supported functions.  The two
roots of omega*(omega-1) = i*gamma,

    omega+- = (1 +- sqrt(1 + 4i*gamma)) / 2      (principal branch),

control everything: ker A-* = span{x^{omega+}} (plus x^{omega-} when that
is square integrable, i.e. gamma < sqrt(3)), and ker A+* is the conjugate
pair.  ``apply_formal_maximal(inst, sign, f)`` is the formal action of the
maximal operator A_sign* (for HardyImaginary: A-* f = i*gamma*x^-2 f - f'',
A+* f = -i*gamma*x^-2 f - f''; for HardyReal: C-* f = +i f'' + gamma*x^-2 f,
C+* f = -i f'' + gamma*x^-2 f; in each case the minus-adjoint annihilates
x^{omega+}).

On monomials the actions are termwise multipliers x^a -> m(a) x^{a-2}; the
multipliers are kept in *factored* form, e.g. -(a - omega+)(a - omega-) for
A-*, so that applying the operator to a stored kernel exponent cancels to
exactly zero rather than to roundoff dust.

The Friedrichs extension of A+ acts by the A-* action (it is the adjoint of
the Friedrichs extension of A-), which fixes the proportionality constants
in ``friedrichs_inverse_kernel``; those constants are derived by applying
the formal operator, never copied, and an independent finite-difference
boundary-value oracle re-derives the inverse on a graded mesh.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from ._grid import MeshSpec, mesh_from_spec, solve_dirichlet
from .errors import InvalidGamma, NotInKernel, SolveFailure, WrongRegime
from .monomial import MERGE_TOL, MonomialSum

HARDY_IMAGINARY = "HardyImaginary"
HARDY_REAL = "HardyReal"

ONE_DIM_KERNEL = "OneDimKernel"
TWO_DIM_KERNEL = "TwoDimKernel"

_FAMILY_ALIASES = {
    "A": HARDY_IMAGINARY,
    "C": HARDY_REAL,
    HARDY_IMAGINARY: HARDY_IMAGINARY,
    HARDY_REAL: HARDY_REAL,
}


@dataclass(frozen=True)
class FamilyInstance:
    family: str
    gamma: float
    omega_plus: complex
    omega_minus: complex
    regime: str

    @property
    def is_imaginary_family(self) -> bool:
        return self.family == HARDY_IMAGINARY


@dataclass(frozen=True)
class KernelBasis:
    minus_kernel: Tuple[MonomialSum, ...]   # basis of ker A-*
    plus_kernel: Tuple[MonomialSum, ...]    # basis of ker A+*


def instantiate(family: str, gamma: float) -> FamilyInstance:
    """Build a FamilyInstance; gamma must be > 0.

    The regime is OneDimKernel iff gamma >= sqrt(3) iff Re(omega-) <= -1/2
    (the borderline gamma = sqrt(3) counts as OneDimKernel; x^{omega-} sits
    exactly on the L2 threshold there and is excluded by the strict
    membership rule).
    """
    try:
        gamma = float(gamma)
    except (TypeError, ValueError) as exc:
        raise InvalidGamma(f"gamma {gamma!r} is not a real number") from exc
    if not (gamma > 0) or not math.isfinite(gamma):
        raise InvalidGamma(f"gamma must be a finite positive real, got {gamma}")
    name = _FAMILY_ALIASES.get(family)
    if name is None:
        raise ValueError(f"unknown family {family!r}; expected one of "
                         f"{sorted(set(_FAMILY_ALIASES))}")
    root = cmath.sqrt(1 + 4j * gamma)   # principal branch: Re >= 0
    omega_plus = (1 + root) / 2
    omega_minus = (1 - root) / 2
    if abs(omega_plus * (omega_plus - 1) - 1j * gamma) > 1e-13 * max(1.0, gamma):
        raise InvalidGamma(f"root check failed for gamma {gamma}")
    regime = ONE_DIM_KERNEL if gamma >= math.sqrt(3.0) else TWO_DIM_KERNEL
    return FamilyInstance(name, gamma, omega_plus, omega_minus, regime)


def kernel_basis(inst: FamilyInstance) -> KernelBasis:
    """Adjoint kernel bases as monomials.

    ker A-* = span{x^{omega+}} (+ x^{omega-} in the two-dimensional regime);
    ker A+* is spanned by the conjugated exponents.
    """
    minus = [MonomialSum.monomial(1, inst.omega_plus)]
    plus = [MonomialSum.monomial(1, inst.omega_plus.conjugate())]
    if inst.regime == TWO_DIM_KERNEL:
        minus.append(MonomialSum.monomial(1, inst.omega_minus))
        plus.append(MonomialSum.monomial(1, inst.omega_minus.conjugate()))
    return KernelBasis(tuple(minus), tuple(plus))


def _multiplier(inst: FamilyInstance, sign: str, a: complex) -> complex:
    """Factored termwise multiplier of the formal action on x^a.

    HardyImaginary:  A-*: -(a-omega+)(a-omega-)      [= i*gamma - a(a-1)]
                     A+*: -(a-conj(omega+))(a-conj(omega-))
    HardyReal:       C-*:  i(a-omega+)(a-omega-)     [= gamma + i*a(a-1)]
                     C+*: -i(a-conj(omega+))(a-conj(omega-))
    """
    wp, wm = inst.omega_plus, inst.omega_minus
    if sign == "-":
        quad = (a - wp) * (a - wm)
        return -quad if inst.is_imaginary_family else 1j * quad
    if sign == "+":
        quad = (a - wp.conjugate()) * (a - wm.conjugate())
        return -quad if inst.is_imaginary_family else -1j * quad
    raise ValueError(f"sign must be '+' or '-', got {sign!r}")


def apply_formal_maximal(inst: FamilyInstance, sign: str, f: MonomialSum) -> MonomialSum:
    """Formal action of the maximal operator A_sign* on a monomial sum."""
    return f.map_terms(lambda c, a: (c * _multiplier(inst, sign, a), a - 2))


def _plus_kernel_coefficients(inst: FamilyInstance, k: MonomialSum):
    """Decompose k in the plus-kernel basis; NotInKernel if it is not there."""
    exps = [inst.omega_plus.conjugate()]
    if inst.regime == TWO_DIM_KERNEL:
        exps.append(inst.omega_minus.conjugate())
    coeffs = [0j] * len(exps)
    for c, a in k.terms:
        for i, e in enumerate(exps):
            if abs(a - e) <= MERGE_TOL:
                coeffs[i] = c
                break
        else:
            raise NotInKernel(
                f"exponent {a} is not a plus-kernel exponent of gamma={inst.gamma} "
                f"({inst.regime})")
    return list(zip(coeffs, exps))


def friedrichs_inverse_kernel(inst: FamilyInstance, k: MonomialSum) -> MonomialSum:
    """Preimage of a plus-kernel element under the Friedrichs extension of A+.

    For k = x^{conj(omega_s)} the preimage is c*(x^{conj(omega_s)+2} - x^{omega+})
    with c = 1/multiplier(-, conj(omega_s)+2): the x^{omega+} correction keeps
    the boundary traces zero (it is annihilated by the minus action), and
    apply_formal_maximal(inst, '-', result) reproduces k exactly.
    """
    out = MonomialSum.zero()
    for c, e in _plus_kernel_coefficients(inst, k):
        if c == 0:
            continue
        mult = _multiplier(inst, "-", e + 2)
        out = out + (c / mult) * (MonomialSum.monomial(1, e + 2)
                                  - MonomialSum.monomial(1, inst.omega_plus))
    return out


def chi_vector(inst: FamilyInstance) -> MonomialSum:
    """The distinguished Friedrichs-domain vector of the two-kernel regime.

    chi = (2 + conj(omega-) - omega+) (x^{conj(omega+)+2} - x^{omega+})
        + (omega+ - conj(omega+) - 2) (x^{conj(omega-)+2} - x^{omega+})

    Its image under the Friedrichs action (see chi_companion) spans the
    right-hand sides whose extensions exhaust a one-parameter subfamily.
    """
    if inst.regime != TWO_DIM_KERNEL:
        raise WrongRegime(
            f"chi_vector needs the two-dimensional kernel regime; gamma={inst.gamma} "
            f"is {inst.regime}")
    wp = inst.omega_plus
    wpc = wp.conjugate()
    wmc = inst.omega_minus.conjugate()
    c1 = 2 + wmc - wp
    c2 = wp - wpc - 2
    xp = MonomialSum.monomial(1, wp)
    return (c1 * (MonomialSum.monomial(1, wpc + 2) - xp)
            + c2 * (MonomialSum.monomial(1, wmc + 2) - xp))


def chi_companion(inst: FamilyInstance) -> MonomialSum:
    """Image of chi under the Friedrichs action (an element of ker A+*),
    derived by applying the formal operator to chi rather than copied."""
    return apply_formal_maximal(inst, "-", chi_vector(inst))


@dataclass(frozen=True)
class GridSolution:
    """A boundary-value solve on a mesh: values include the zero endpoints."""

    nodes: np.ndarray
    values: np.ndarray
    residual: float

    def interior(self):
        return self.nodes[1:-1], self.values[1:-1]


def _coefficients(inst: FamilyInstance, sign: str):
    """(a2, potential scale) with the BVP written as a2*u'' + p/x^2 * u = g."""
    if inst.is_imaginary_family:
        a2 = -1.0 + 0j
        p = 1j * inst.gamma if sign == "-" else -1j * inst.gamma
    else:
        a2 = 1j if sign == "-" else -1j
        p = inst.gamma + 0j
    return a2, p


_ORACLE_DEPTH = 1e-12   # smallest relative spacing for BVP meshes


def bvp_solve_oracle(inst: FamilyInstance, sign: str, g: MonomialSum,
                     mesh: MeshSpec = MeshSpec()) -> GridSolution:
    """Finite-difference solution of  (formal action of A_sign*) u = g,  u(0)=u(1)=0.

    Second-order centered differences on the graded mesh, solved once on the
    mesh and once on its nested refinement, combined by one Richardson step
    (4*u_fine - u_coarse)/3 on the shared nodes.  The reported residual is
    the worst scaled algebraic residual of the two banded solves (it
    certifies the linear algebra; the discretization error is handled by the
    extrapolation).
    """
    if not g.is_square_integrable():
        raise SolveFailure("right-hand side is not square integrable")
    if sign not in ("+", "-"):
        raise ValueError(f"sign must be '+' or '-', got {sign!r}")
    a2, p = _coefficients(inst, sign)

    x1 = mesh_from_spec(mesh, _ORACLE_DEPTH, refine=1)
    x2 = mesh_from_spec(mesh, _ORACLE_DEPTH, refine=2)
    sols = []
    res = 0.0
    for x in (x1, x2):
        xi = x[1:-1]
        pot = p / xi**2
        u, r = solve_dirichlet(x, a2, pot, g.sample(xi))
        sols.append(u)
        res = max(res, r)
    u1, u2 = sols
    rich = (4.0 * u2[1::2] - u1) / 3.0

    values = np.zeros(x1.size, dtype=complex)
    values[1:-1] = rich
    return GridSolution(x1, values, res)


def real_part_inverse_oracle(inst: FamilyInstance, g: MonomialSum,
                             mesh: MeshSpec = MeshSpec()) -> GridSolution:
    """Friedrichs inverse of the *real part* applied to g, by the same oracle.

    HardyImaginary: solves -u'' = g with zero Dirichlet data.  HardyReal:
    the real part is multiplication by gamma/x^2, so the inverse is exact
    pointwise division (no boundary condition enters).
    """
    x1 = mesh_from_spec(mesh, _ORACLE_DEPTH, refine=1)
    if inst.is_imaginary_family:
        x2 = mesh_from_spec(mesh, _ORACLE_DEPTH, refine=2)
        sols = []
        res = 0.0
        for x in (x1, x2):
            xi = x[1:-1]
            u, r = solve_dirichlet(x, -1.0 + 0j, np.zeros(xi.size, complex), g.sample(xi))
            sols.append(u)
            res = max(res, r)
        rich = (4.0 * sols[1][1::2] - sols[0]) / 3.0
        values = np.zeros(x1.size, dtype=complex)
        values[1:-1] = rich
        return GridSolution(x1, values, res)
    xi = x1[1:-1]
    values = np.zeros(x1.size, dtype=complex)
    values[1:-1] = xi**2 * g.sample(xi) / inst.gamma
    return GridSolution(x1, values, 0.0)
