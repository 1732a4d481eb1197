"""Orchestrated verification runs over every numerical oracle in the package.

Nine independent checks, each ending in a single pass/fail verdict with a
short deterministic detail string (no timings in the text, so reports built
from these results stay byte-identical between runs; wall-clock seconds
travel separately on the result object).  The checks deliberately recompute
values through two routes wherever the package maintains two routes --
closed form against quadrature, closed constants against BVP oracles,
boundary-form values against mollified witnesses -- rather than trusting
any single pipeline.

``run_suite(level)`` executes all nine in a fixed order.  The ``full``
level uses the desk-scale sample counts; ``quick`` shrinks the randomized
counts so a cold run stays interactive while still driving every code
path.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Dict, List, Tuple

import numpy as np

from ._grid import MeshSpec
from .brackets import BOTH_AGREE, bracket_context, q_form
from .discretization import (
    ANGLE_TOL,
    certified_alpha,
    discretize,
    kato_sector_witness,
    nonclosability_witness,
    numerical_range_sweep,
    rayleigh_inf_on_extension,
)
from .extensions import (
    EQUAL,
    GREATER_EQUAL,
    LESS_EQUAL,
    ExtensionSpec,
    accretivity_samples,
    b_matrix,
    compare,
    d_for_margin,
    extension_vector,
    is_closable,
    lower_bound_sandwich,
    margin_of,
    negative_margin_witness,
)
from .families import (
    ONE_DIM_KERNEL,
    apply_formal_maximal,
    bvp_solve_oracle,
    friedrichs_inverse_kernel,
    instantiate,
    kernel_basis,
    real_part_inverse_oracle,
)
from .monomial import L2, MonomialSum, l2_inner
from .quadrature import oracle_form

__all__ = [
    "CheckResult",
    "check_inner_products",
    "check_kernel_annihilation",
    "check_constant_pipelines",
    "check_friedrichs_inverse",
    "check_accretivity_boundary",
    "check_closability_boundary",
    "check_b_matrix_and_order",
    "check_lower_bound_sandwich",
    "check_sector_classification",
    "run_suite",
]

_GAMMAS = (0.5, 1.0, 2.0, 5.0)
_CERT_MESH = MeshSpec(node_count=2000, grading_ratio=0.85)


@dataclass(frozen=True)
class CheckResult:
    name: str
    ok: bool
    detail: str
    seconds: float


def _finish(name: str, t0: float, problems: List[str], success: str) -> CheckResult:
    elapsed = time.perf_counter() - t0
    if problems:
        return CheckResult(name, False, "; ".join(problems[:4]), elapsed)
    return CheckResult(name, True, success, elapsed)


# ---------------------------------------------------------------------------
# 1. closed-form inner products against adaptive quadrature
# ---------------------------------------------------------------------------


def _random_sum(rng: np.random.Generator) -> MonomialSum:
    # exponents keep Re > -0.35 so every pairwise product stays integrable
    terms = []
    for _ in range(int(rng.integers(1, 5))):
        c = complex(rng.uniform(-2, 2), rng.uniform(-2, 2))
        e = complex(rng.uniform(-0.35, 3.0), rng.uniform(-3.0, 3.0))
        terms.append((c, e))
    return MonomialSum(terms)


def check_inner_products(pairs: int = 200, seed: int = 31) -> CheckResult:
    """Exact L2 pairings of random monomial sums vs adaptive quadrature."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    problems: List[str] = []
    worst = 0.0
    for j in range(pairs):
        f, g = _random_sum(rng), _random_sum(rng)
        closed = l2_inner(f, g)
        numeric = oracle_form(L2, f, g)
        allowance = max(1e-10, 1e-8 * abs(closed))
        ratio = abs(closed - numeric) / allowance
        worst = max(worst, ratio)
        if ratio > 1.0:
            problems.append(f"pair {j}: |closed-quadrature| at {ratio:.3f}x allowance")
    return _finish(
        "inner-products", t0, problems,
        f"{pairs} random pairs; worst gap {worst:.3e} of allowance "
        f"max(1e-10, 1e-8|value|)")


# ---------------------------------------------------------------------------
# 2. exact kernel annihilation
# ---------------------------------------------------------------------------


def check_kernel_annihilation(gammas: Tuple[float, ...] = _GAMMAS) -> CheckResult:
    """Formal maximal operators must send each adjoint-kernel basis vector
    to the canonical zero sum, not to roundoff dust."""
    t0 = time.perf_counter()
    problems: List[str] = []
    vectors = 0
    for family in ("A", "C"):
        for gamma in gammas:
            inst = instantiate(family, gamma)
            kb = kernel_basis(inst)
            expected = 1 if inst.regime == ONE_DIM_KERNEL else 2
            if len(kb.minus_kernel) != expected or len(kb.plus_kernel) != expected:
                problems.append(f"{family} gamma={gamma:g}: wrong kernel dimension")
                continue
            for sign, basis in (("-", kb.minus_kernel), ("+", kb.plus_kernel)):
                for k in basis:
                    vectors += 1
                    if not apply_formal_maximal(inst, sign, k).is_zero():
                        problems.append(
                            f"{family} gamma={gamma:g} sign {sign}: image not zero")
                    if not k.is_square_integrable():
                        problems.append(
                            f"{family} gamma={gamma:g}: basis vector not in L2")
    return _finish(
        "kernel-annihilation", t0, problems,
        f"{vectors} kernel vectors annihilated exactly across both families")


# ---------------------------------------------------------------------------
# 3. certified constants: closed forms vs the BVP/quadrature pipeline
# ---------------------------------------------------------------------------


def check_constant_pipelines(gammas: Tuple[float, ...] = _GAMMAS,
                             rel_tol: float = 1e-6) -> CheckResult:
    """sigma/tau and mu/nu through both pipelines, per instance."""
    t0 = time.perf_counter()
    problems: List[str] = []
    worst = 0.0
    for family in ("A", "C"):
        for gamma in gammas:
            ctx = bracket_context(instantiate(family, gamma))
            for name, cv in ctx.constants.items():
                rel = abs(cv.value - cv.oracle) / max(abs(cv.value), 1e-30)
                worst = max(worst, rel)
                if rel > rel_tol:
                    problems.append(
                        f"{family} gamma={gamma:g} {name}: pipelines differ by {rel:.3e}")
                if cv.status != BOTH_AGREE:
                    problems.append(
                        f"{family} gamma={gamma:g} {name}: status {cv.status}")
    return _finish(
        "constant-pipelines", t0, problems,
        f"closed forms vs oracle across {2 * len(gammas)} instances; "
        f"worst relative gap {worst:.3e}")


# ---------------------------------------------------------------------------
# 4. Friedrichs inverse against the collocation oracle
# ---------------------------------------------------------------------------


def check_friedrichs_inverse(gammas: Tuple[float, ...] = _GAMMAS,
                             node_count: int = 2000,
                             tol: float = 1e-8) -> CheckResult:
    """Closed Friedrichs-inverse images vs direct BVP solves, plus the
    positive Poisson solutions for right-hand sides 1 and x."""
    t0 = time.perf_counter()
    mesh = MeshSpec(node_count=node_count, grading_ratio=0.85)
    problems: List[str] = []
    worst = 0.0
    for family in ("A", "C"):
        for gamma in gammas:
            inst = instantiate(family, gamma)
            for k in kernel_basis(inst).plus_kernel:
                u = friedrichs_inverse_kernel(inst, k)
                sol = bvp_solve_oracle(inst, "-", k, mesh)
                xi, ui = sol.interior()
                err = float(np.max(np.abs(ui - u.sample(xi))))
                worst = max(worst, err)
                if err > tol:
                    problems.append(
                        f"{family} gamma={gamma:g}: BVP gap {err:.3e} > {tol:g}")
    # the real-part inverse of the imaginary family is the Dirichlet
    # Laplacian; its action on 1 and x has elementary positive solutions
    inst = instantiate("A", 1.0)
    poisson = (
        (MonomialSum.monomial(1, 0), lambda x: (x - x**2) / 2, "(x-x^2)/2"),
        (MonomialSum.monomial(1, 1), lambda x: (x - x**3) / 6, "(x-x^3)/6"),
    )
    for rhs, closed, label in poisson:
        sol = real_part_inverse_oracle(inst, rhs, mesh)
        xi, ui = sol.interior()
        err = float(np.max(np.abs(ui - closed(xi))))
        worst = max(worst, err)
        if err > tol:
            problems.append(f"Poisson solution {label}: gap {err:.3e} > {tol:g}")
    return _finish(
        "friedrichs-inverse", t0, problems,
        f"max-norm gap {worst:.3e} on {node_count}-node graded meshes; "
        f"positive-solution convention (negated table entries stay a warning)")


# ---------------------------------------------------------------------------
# 5. accretivity boundary: sampling above it, witnesses below it
# ---------------------------------------------------------------------------


def _spec_near_margin(rng: np.random.Generator, gamma: float,
                      target: float) -> ExtensionSpec:
    """Random d conditioned on a prescribed margin: draw freely, then slide
    along conj(sigma) (the direction that moves Re(d sigma) and nothing
    else) until the margin lands on target."""
    inst = instantiate("A", gamma)
    ctx = bracket_context(inst)
    s = ctx.sigma_or_mu.value
    d0 = complex(rng.uniform(-3, 3), rng.uniform(-3, 3))
    m0 = (d0 * s).real - ctx.tau_or_nu.real
    d = d0 + (target - m0) / abs(s) ** 2 * s.conjugate()
    return ExtensionSpec(inst, 1, d)


def check_accretivity_boundary(n_accretive: int = 20, n_negative: int = 20,
                               samples: int = 200, seed: int = 47) -> CheckResult:
    """Margin >= 0.1: random graph-domain elements keep Re<psi, A_-* psi>
    above -1e-8 * scale.  Margin <= -0.1: the mollified witness produces a
    strictly negative value."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    problems: List[str] = []
    floor = math.inf
    for j in range(n_accretive):
        gamma = float(rng.uniform(0.4, 4.0))
        spec = _spec_near_margin(rng, gamma, float(rng.uniform(0.101, 2.5)))
        margin = margin_of(spec)
        if margin < 0.1:
            problems.append(f"draw {j}: margin {margin:.3g} drifted below 0.1")
            continue
        for value, scale in accretivity_samples(spec, count=samples, seed=1000 + j):
            floor = min(floor, value / scale)
            if value < -1e-8 * scale:
                problems.append(
                    f"draw {j} (margin {margin:.3g}): sample at {value / scale:.3e} "
                    f"of scale")
                break
    witnessed = 0
    for j in range(n_negative):
        gamma = float(rng.uniform(0.4, 4.0))
        spec = _spec_near_margin(rng, gamma, float(rng.uniform(-2.5, -0.101)))
        margin = margin_of(spec)
        if margin > -0.1:
            problems.append(f"negative draw {j}: margin {margin:.3g} above -0.1")
            continue
        _, value = negative_margin_witness(spec)
        if not value < 0:
            problems.append(
                f"negative draw {j} (margin {margin:.3g}): witness value {value:.3e}")
        else:
            witnessed += 1
    return _finish(
        "accretivity-boundary", t0, problems,
        f"{n_accretive} accretive d sampled x{samples} (floor {floor:.3e} of scale); "
        f"{witnessed} negative-margin witnesses strictly below zero")


# ---------------------------------------------------------------------------
# 6. closability boundary of the real family
# ---------------------------------------------------------------------------


def check_closability_boundary(gammas: Tuple[float, ...] = (1.0, 2.0),
                               q_tol: float = 1e-8) -> CheckResult:
    """On the boundary Re(d mu) = nu the form value q(v_d) vanishes; off it
    the cut-off sequence shrinks in norm while its form value holds at
    q(v_d) -- the concrete non-closability certificate."""
    t0 = time.perf_counter()
    problems: List[str] = []
    shrink = math.inf
    drift = 0.0
    for gamma in gammas:
        inst = instantiate("C", gamma)
        ctx = bracket_context(inst)
        boundary = ExtensionSpec(inst, 1, d_for_margin(inst, 0.0))
        q0 = q_form(ctx, extension_vector(boundary))
        if abs(q0) > q_tol:
            problems.append(f"gamma={gamma:g}: |q(v)| = {abs(q0):.3e} on the boundary")
        if not is_closable(boundary).closable:
            problems.append(f"gamma={gamma:g}: boundary spec not flagged closable")
        off = ExtensionSpec(inst, 1, d_for_margin(inst, 0.5))
        margin = margin_of(off)
        norms, forms = nonclosability_witness(off)
        shrink = min(shrink, norms[0] / norms[-1])
        rel = abs(forms[-1] - margin) / margin
        drift = max(drift, rel)
        if norms[0] / norms[-1] < 10.0:
            problems.append(
                f"gamma={gamma:g}: witness norms shrink only "
                f"{norms[0] / norms[-1]:.2f}x")
        if rel > 0.05:
            problems.append(
                f"gamma={gamma:g}: witness form {forms[-1]:.6f} vs q(v) {margin:.6f}")
        if is_closable(off).closable:
            problems.append(f"gamma={gamma:g}: margin-0.5 spec flagged closable")
    return _finish(
        "closability-boundary", t0, problems,
        f"boundary |q(v)| <= {q_tol:g}; witness norms shrink {shrink:.1f}x with "
        f"form value within {drift:.2%} of q(v)")


# ---------------------------------------------------------------------------
# 7. B-matrix slope and the extension partial order
# ---------------------------------------------------------------------------

_FLIP = {GREATER_EQUAL: LESS_EQUAL, LESS_EQUAL: GREATER_EQUAL, EQUAL: EQUAL}


def check_b_matrix_and_order(n_d: int = 50, n_triples: int = 12,
                             seed: int = 53) -> CheckResult:
    """b = 3 * margin bitwise over random d, tied back to the independent
    boundary form; compare() behaves as a partial order with the Friedrichs
    spec on top."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    inst = instantiate("A", 1.0)
    ctx = bracket_context(inst)
    problems: List[str] = []
    specs: List[ExtensionSpec] = []
    for j in range(n_d):
        spec = ExtensionSpec(inst, 1, d_for_margin(inst, float(rng.uniform(0.0, 3.0))))
        margin = margin_of(spec)
        entry = b_matrix(spec).entries[0][0]
        if entry != complex(3.0 * margin):
            problems.append(f"draw {j}: b {entry} != 3*margin at margin {margin:.6g}")
        specs.append(spec)
    # the slope is only meaningful because margin equals the boundary form
    # q(v_d) computed through the bracket machinery; re-check that identity
    for spec in specs[:5]:
        q = q_form(ctx, extension_vector(spec))
        entry = b_matrix(spec).entries[0][0]
        if abs(entry.real - 3.0 * q) > 3e-9:
            problems.append(f"b vs 3*q(v): gap {abs(entry.real - 3.0 * q):.3e}")
    friedrichs = ExtensionSpec(inst, 0)
    for spec in specs[:10]:
        if compare(spec, spec) != EQUAL:
            problems.append("reflexivity failed")
        if compare(friedrichs, spec) != GREATER_EQUAL:
            problems.append("Friedrichs spec does not dominate a closable spec")
        verdict = compare(friedrichs, friedrichs)
        if verdict != EQUAL:
            problems.append(f"Friedrichs self-comparison gave {verdict}")
    exercised = 0
    for _ in range(n_triples):
        margins = sorted(float(rng.uniform(0.0, 3.0)) for _ in range(3))
        s1, s2, s3 = (ExtensionSpec(inst, 1, d_for_margin(inst, m)) for m in margins)
        v21, v32, v31 = compare(s2, s1), compare(s3, s2), compare(s3, s1)
        ge = (GREATER_EQUAL, EQUAL)
        if v21 not in ge or v32 not in ge:
            problems.append(f"order by margin violated: {v21}, {v32}")
        if v21 in ge and v32 in ge and v31 not in ge:
            problems.append("transitivity failed")
        for a, b_ in ((s1, s2), (s2, s3), (s1, s3)):
            if compare(b_, a) != _FLIP[compare(a, b_)]:
                problems.append("antisymmetry failed")
        exercised += 1
    return _finish(
        "b-matrix-order", t0, problems,
        f"b = 3*margin bitwise over {n_d} random d (tied to q(v) on a subsample); "
        f"order axioms hold over {exercised} random triples; Friedrichs dominates")


# ---------------------------------------------------------------------------
# 8. lower-bound sandwich around the real-part ground value
# ---------------------------------------------------------------------------


def check_lower_bound_sandwich(margins: Tuple[float, ...] = (0.0, 0.2, 1.0, 5.0),
                               node_count: int = 2000,
                               slack: float = 0.02) -> CheckResult:
    """The measured ground Rayleigh value must land inside the certified
    window [alpha*b/(alpha+b), b] for each margin, alpha = pi^2."""
    t0 = time.perf_counter()
    problems: List[str] = []
    inst = instantiate("A", 1.0)
    alpha, alpha_err = certified_alpha(node_count)
    if abs(alpha - math.pi**2) > 1e-3 * math.pi**2 or alpha_err > 1e-3:
        problems.append(f"alpha certification off: {alpha:.6f} (err {alpha_err:.2e})")
    mesh = MeshSpec(node_count=node_count)
    inside = 0
    for m in margins:
        spec = ExtensionSpec(inst, 1, d_for_margin(inst, float(m)))
        low, high = lower_bound_sandwich(spec)
        measured = rayleigh_inf_on_extension(spec, mesh)
        if m == 0.0:
            ok_here = -1e-9 <= measured <= slack * alpha
        else:
            ok_here = low * (1 - slack) <= measured <= high * (1 + slack)
        if ok_here:
            inside += 1
        else:
            problems.append(
                f"margin {m:g}: measured {measured:.6e} outside "
                f"[{low:.6e}, {high:.6e}] (slack {slack:.0%})")
    return _finish(
        "lower-bound-sandwich", t0, problems,
        f"alpha = pi^2 certified to {alpha_err:.2e}; {inside}/{len(margins)} "
        f"margins inside the window at {slack:.0%} slack")


# ---------------------------------------------------------------------------
# 9. sector classification of both families
# ---------------------------------------------------------------------------


def check_sector_classification(node_counts: Tuple[int, int] = (1024, 2048),
                                gamma: float = 2.0, epsilon: float = 0.3,
                                stability: float = 0.01) -> CheckResult:
    """Imaginary family: strict sector, arg bounds stable under refinement.
    Real family: extremal range, and the rotated-form witness values fall
    below -1e3 -- no rotation is accretive."""
    t0 = time.perf_counter()
    problems: List[str] = []
    inst_a = instantiate("A", gamma)
    reps = []
    for n in node_counts:
        rep = numerical_range_sweep(discretize(inst_a, "+", MeshSpec(node_count=n)), 64)
        reps.append(rep)
        if rep.extremal:
            problems.append(f"imaginary family flagged extremal at n={n}")
        if not rep.arg_sup < math.pi / 2 - ANGLE_TOL:
            problems.append(f"imaginary family arg_sup {rep.arg_sup:.4f} at n={n}")
    sup_shift = abs(reps[0].arg_sup - reps[-1].arg_sup)
    inf_shift = abs(reps[0].arg_inf - reps[-1].arg_inf)
    if sup_shift > stability or inf_shift > stability:
        problems.append(
            f"arg bounds unstable under refinement: {sup_shift:.4f}/{inf_shift:.4f}")
    inst_c = instantiate("C", gamma)
    rep_c = numerical_range_sweep(
        discretize(inst_c, "+", MeshSpec(node_count=node_counts[-1])), 64)
    if not rep_c.extremal:
        problems.append("real family not flagged extremal")
    values = kato_sector_witness(inst_c, epsilon, n_terms=8)
    if not all(b < a for a, b in zip(values, values[1:])):
        problems.append("rotation witness values not strictly decreasing")
    if not values[-1] <= -1e3:
        problems.append(f"rotation witness bottoms out at {values[-1]:.3e} > -1e3")
    return _finish(
        "sector-classification", t0, problems,
        f"imaginary family arg_sup {reps[-1].arg_sup:.4f} "
        f"(shift {sup_shift:.2e} under refinement); real family extremal, "
        f"witness falls to {values[-1]:.3e}")


# ---------------------------------------------------------------------------
# suite runner
# ---------------------------------------------------------------------------

_CHECKS = (
    ("inner-products", check_inner_products),
    ("kernel-annihilation", check_kernel_annihilation),
    ("constant-pipelines", check_constant_pipelines),
    ("friedrichs-inverse", check_friedrichs_inverse),
    ("accretivity-boundary", check_accretivity_boundary),
    ("closability-boundary", check_closability_boundary),
    ("b-matrix-order", check_b_matrix_and_order),
    ("lower-bound-sandwich", check_lower_bound_sandwich),
    ("sector-classification", check_sector_classification),
)

_QUICK_KWARGS: Dict[str, dict] = {
    "inner-products": dict(pairs=40),
    "kernel-annihilation": dict(gammas=(1.0, 2.0)),
    "constant-pipelines": dict(gammas=(1.0, 2.0)),
    "friedrichs-inverse": dict(gammas=(2.0,)),
    "accretivity-boundary": dict(n_accretive=4, n_negative=4, samples=60),
    "closability-boundary": dict(gammas=(1.0,)),
    "b-matrix-order": dict(n_d=12, n_triples=6),
    "lower-bound-sandwich": dict(margins=(0.0, 1.0)),
    "sector-classification": dict(node_counts=(512, 1024)),
}

LEVELS = ("quick", "full")


def run_suite(level: str = "quick") -> List[CheckResult]:
    if level not in LEVELS:
        raise ValueError(f"level must be one of {LEVELS}, got {level!r}")
    results = []
    for name, fn in _CHECKS:
        kwargs = _QUICK_KWARGS.get(name, {}) if level == "quick" else {}
        results.append(fn(**kwargs))
    return results
