import math

import numpy as np
import pytest
from numpy.polynomial import polynomial as npoly

from bkvg.brackets import bracket_context, q_form
from bkvg.discretization import (
    ANGLE_TOL,
    DiscreteOperator,
    MeshSpec,
    certified_alpha,
    discretize,
    kato_sector_witness,
    nonclosability_witness,
    numerical_range_sweep,
    rayleigh_inf_on_extension,
)
from bkvg.errors import NotAccretive, NotApplicable, NotClosable, WrongFamily
from bkvg.extensions import ExtensionSpec, d_for_margin, extension_vector, margin_of
from bkvg.families import instantiate
from bkvg.quadrature import integrate

A1 = instantiate("A", 1.0)
A2 = instantiate("A", 2.0)
C1 = instantiate("C", 1.0)
C2 = instantiate("C", 2.0)

SMALL = MeshSpec(node_count=256)


def spec_at(inst, m):
    return ExtensionSpec(inst, 1, d_for_margin(inst, m))


# ---------------------------------------------------------------------------
# assembly
# ---------------------------------------------------------------------------


def test_discretize_shapes_and_split():
    op = discretize(A1, "+", SMALL)
    n = op.n
    assert op.nodes.size == n and op.h_off.size == n - 1
    assert np.all(np.diff(op.nodes) > 0) and 0 < op.nodes[0] and op.nodes[-1] < 1
    # imaginary family: Hermitian part carries no Hardy term
    bare = discretize(instantiate("A", 123.0), "+", SMALL)
    assert np.array_equal(op.h_diag, bare.h_diag)
    assert np.array_equal(op.h_off, bare.h_off)
    # and the skew diagonal is exactly +/- gamma/x^2
    assert np.allclose(op.j_diag, A1.gamma / op.nodes**2, rtol=0, atol=0)


def test_hermitian_parts_of_both_signs_agree():
    for inst in (A1, C2):
        plus = discretize(inst, "+", SMALL)
        minus = discretize(inst, "-", SMALL)
        assert np.array_equal(plus.h_diag, minus.h_diag)
        assert np.array_equal(plus.h_off, minus.h_off)
        assert np.array_equal(plus.j_diag, -minus.j_diag)
        assert np.array_equal(plus.j_off, -minus.j_off)


def test_real_family_hermitian_part_is_hardy_diagonal():
    op = discretize(C2, "+", SMALL)
    assert np.array_equal(op.h_diag, C2.gamma / op.nodes**2)
    assert np.all(op.h_off == 0)


def test_matrix_reassembly_consistent():
    op = discretize(A1, "-", MeshSpec(node_count=32))
    k = op.matrix()
    h = (k + k.conj().T) / 2
    assert np.allclose(h, op.hermitian_part(), rtol=0, atol=1e-15)
    # symmetrized Laplacian rows reproduce the quadratic form of a linear
    # hat: <e_i, L e_i> = (1/h_l + 1/h_r)/w_i > 0
    assert np.all(op.h_diag > 0)


def test_laplacian_ground_energy_near_pi_squared():
    # the smallest Rayleigh quotient of the discretized real part is the
    # first Dirichlet eigenvalue
    alpha, rel = certified_alpha(1000)
    assert alpha == math.pi**2
    assert 0 <= rel < 1e-3


def test_certified_alpha_default():
    alpha, rel = certified_alpha()
    assert rel < 1e-3


def test_invalid_sign():
    with pytest.raises(ValueError):
        discretize(A1, "x", SMALL)


# ---------------------------------------------------------------------------
# numerical range
# ---------------------------------------------------------------------------


def test_sweep_singleton_matrix():
    op = DiscreteOperator.from_dense(np.array([[2.0 + 1.0j]]))
    rep = numerical_range_sweep(op, 16)
    assert rep.arg_inf == pytest.approx(math.atan(0.5), abs=1e-9)
    assert rep.arg_sup == pytest.approx(math.atan(0.5), abs=1e-9)
    assert not rep.extremal
    assert len(rep.support_samples) == 16
    # support of the singleton: sqrt(5) cos(theta + atan(1/2))
    for theta, val in rep.support_samples:
        assert val == pytest.approx(math.sqrt(5) * math.cos(theta + math.atan(0.5)),
                                    abs=1e-12)


def test_sweep_nilpotent_disk():
    # numerical range of [[0, 2], [0, 0]] is the closed disk of radius 1
    op = DiscreteOperator.from_dense(np.array([[0.0, 2.0], [0.0, 0.0]]))
    rep = numerical_range_sweep(op, 32)
    for _, val in rep.support_samples:
        assert val == pytest.approx(1.0, abs=1e-12)
    assert rep.extremal   # the disk reaches every argument


def test_sweep_requires_enough_steps():
    op = DiscreteOperator.from_dense(np.array([[1.0]]))
    with pytest.raises(ValueError):
        numerical_range_sweep(op, 7)


def test_imaginary_family_strict_sector():
    # Hardy's inequality ||f/x||^2 <= 4 ||f'||^2 caps the rotation of the
    # range at atan(4 gamma); the sweep must stay clearly short of pi/2 and
    # be stable under mesh refinement
    reps = {}
    for n in (512, 1024):
        op = discretize(A2, "+", MeshSpec(node_count=n))
        reps[n] = numerical_range_sweep(op, 32)
    for rep in reps.values():
        assert not rep.extremal
        assert rep.arg_sup < math.pi / 2 - ANGLE_TOL
        assert rep.arg_sup <= math.atan(4 * A2.gamma) + 1e-3
        assert -1e-3 <= rep.arg_inf <= ANGLE_TOL
    assert abs(reps[512].arg_sup - reps[1024].arg_sup) < 0.01


def test_minus_sign_mirrors_the_range():
    op_p = discretize(A2, "+", MeshSpec(node_count=512))
    op_m = discretize(A2, "-", MeshSpec(node_count=512))
    rp = numerical_range_sweep(op_p, 32)
    rm = numerical_range_sweep(op_m, 32)
    assert rp.arg_sup == pytest.approx(-rm.arg_inf, abs=1e-6)
    assert rp.arg_inf == pytest.approx(-rm.arg_sup, abs=1e-6)


def test_real_family_extremal():
    op = discretize(C2, "+", MeshSpec(node_count=1024))
    rep = numerical_range_sweep(op, 32)
    assert rep.extremal
    assert rep.arg_inf <= -math.pi / 2 + ANGLE_TOL
    # the other side stays interior: Re is strictly positive
    assert rep.arg_sup < 0


def test_arg_bounds_within_tolerance_for_accretive():
    for inst in (A1, A2, C1, C2):
        op = discretize(inst, "+", MeshSpec(node_count=512))
        rep = numerical_range_sweep(op, 16)
        assert -math.pi / 2 - ANGLE_TOL <= rep.arg_inf
        assert rep.arg_sup <= math.pi / 2 + ANGLE_TOL


def test_support_sequence_discrete_convexity():
    # support functions satisfy h(t-dt) + h(t+dt) >= 2 cos(dt) h(t)
    op = discretize(A1, "-", MeshSpec(node_count=512))
    rep = numerical_range_sweep(op, 48)
    h = [v for _, v in rep.support_samples]
    dt = rep.support_samples[1][0] - rep.support_samples[0][0]
    for i in range(1, len(h) - 1):
        assert h[i - 1] + h[i + 1] - 2 * math.cos(dt) * h[i] >= -1e-9


def test_report_carries_angle_tol():
    op = DiscreteOperator.from_dense(np.array([[1.0]]))
    assert numerical_range_sweep(op, 8).angle_tol == ANGLE_TOL


# ---------------------------------------------------------------------------
# Kato sector witness
# ---------------------------------------------------------------------------


def test_kato_witness_decreasing_and_unbounded():
    vals = kato_sector_witness(C1, 0.3, 8)
    assert len(vals) == 8
    assert all(b < a for a, b in zip(vals, vals[1:]))
    assert vals[-1] <= -1e3


def test_kato_witness_epsilon_zero_accretive():
    vals = kato_sector_witness(C1, 0.0, 5)
    assert all(v >= 0 for v in vals)
    # without rotation the value is the fixed Hardy quotient of the bump
    assert len(set(vals)) == 1


def test_kato_witness_scales_with_gamma():
    v1 = kato_sector_witness(C1, 0.0, 1)[0]
    v2 = kato_sector_witness(C2, 0.0, 1)[0]
    assert v2 == pytest.approx(2 * v1, rel=1e-12)


def test_kato_witness_hardy_term_against_quadrature():
    # the exact-rational interval integration behind the witness values,
    # cross-checked by adaptive quadrature of the *factored* bump -- two
    # genuinely different routes (the expanded integer coefficients reach
    # ~6e12 and are unusable pointwise; the factored form is stable)
    def factored(xs, shift):
        base = 1.0 - (4.0 * xs - 3.0) ** 2
        vals = base**8 * xs ** float(shift)
        return np.where((xs >= 0.5) & (xs <= 1.0), vals, 0.0)

    hardy_q = integrate(lambda xs: factored(xs, -2), 0.0,
                        abs_tol=1e-13, rel_tol=1e-12).value.real
    norm_q = integrate(lambda xs: factored(xs, 0), 0.0,
                       abs_tol=1e-13, rel_tol=1e-12).value.real
    # eps = 0 witness value is gamma * ||b/x||^2 / ||b||^2
    witness_ratio = kato_sector_witness(C1, 0.0, 1)[0] / C1.gamma
    assert hardy_q / norm_q == pytest.approx(witness_ratio, rel=1e-10)


def test_kato_witness_argument_validation():
    with pytest.raises(WrongFamily):
        kato_sector_witness(A1, 0.3, 4)
    with pytest.raises(ValueError):
        kato_sector_witness(C1, -0.1, 4)
    with pytest.raises(ValueError):
        kato_sector_witness(C1, math.pi, 4)
    with pytest.raises(ValueError):
        kato_sector_witness(C1, 0.3, 0)


# ---------------------------------------------------------------------------
# Rayleigh infimum
# ---------------------------------------------------------------------------


def test_rayleigh_friedrichs_is_alpha():
    val = rayleigh_inf_on_extension(ExtensionSpec(A1, 0), MeshSpec(node_count=2000))
    assert val == pytest.approx(math.pi**2, rel=1e-3)


def test_rayleigh_zero_margin_vanishes():
    val = rayleigh_inf_on_extension(spec_at(A1, 0.0), MeshSpec(node_count=2000))
    assert abs(val) <= 0.02 * math.pi**2


def test_rayleigh_inside_sandwich_window():
    alpha = math.pi**2
    for m in (0.2, 1.0):
        spec = spec_at(A1, m)
        val = rayleigh_inf_on_extension(spec, MeshSpec(node_count=2000))
        b = 3.0 * margin_of(spec)
        lo = alpha * b / (alpha + b)
        assert lo * 0.98 <= val <= b * 1.02


def test_rayleigh_real_family_ground_is_gamma():
    val = rayleigh_inf_on_extension(spec_at(C2, 0.0), MeshSpec(node_count=2000))
    assert val == pytest.approx(C2.gamma, rel=5e-3)


def test_rayleigh_preconditions():
    with pytest.raises(NotAccretive):
        rayleigh_inf_on_extension(spec_at(A1, -0.5))
    with pytest.raises(NotClosable):
        rayleigh_inf_on_extension(spec_at(C1, 0.5))


# ---------------------------------------------------------------------------
# non-closability witness
# ---------------------------------------------------------------------------


def test_witness_norms_vanish_forms_survive():
    spec = spec_at(C1, 0.5)
    norms, forms = nonclosability_witness(spec)
    assert all(b < a for a, b in zip(norms, norms[1:]))
    assert norms[0] / norms[-1] >= 10
    target = margin_of(spec)
    assert forms[-1] == pytest.approx(target, rel=0.05)
    ctx = bracket_context(C1)
    assert forms[-1] == pytest.approx(q_form(ctx, extension_vector(spec)), rel=0.05)


def test_witness_mollification_cap():
    norms, forms = nonclosability_witness(spec_at(C1, 0.5), mollification=20)
    assert len(norms) == len(forms) == 2      # powers 4 and 16 only


def test_witness_not_applicable_cases():
    with pytest.raises(NotApplicable):
        nonclosability_witness(spec_at(C1, 0.0))      # closable boundary
    with pytest.raises(NotApplicable):
        nonclosability_witness(spec_at(C1, 0.05))     # below threshold
    with pytest.raises(NotApplicable):
        nonclosability_witness(spec_at(A1, 0.5))      # wrong family
    with pytest.raises(NotApplicable):
        nonclosability_witness(spec_at(C1, 0.5), mollification=1.0)


def test_plateau_derivatives_match_finite_differences():
    from bkvg.discretization import _plateau

    xs = np.linspace(0.05, 0.95, 19)
    eps = 1e-6
    _, d1, d2 = _plateau(xs, 8)
    up, d1_up, _ = _plateau(xs + eps, 8)
    dn, d1_dn, _ = _plateau(xs - eps, 8)
    assert np.allclose((up - dn) / (2 * eps), d1, rtol=1e-5, atol=1e-5)
    # second derivative checked as the difference of analytic first
    # derivatives (a plain second difference of values drowns in roundoff
    # at this eps)
    assert np.allclose((d1_up - d1_dn) / (2 * eps), d2, rtol=1e-5, atol=1e-4)
