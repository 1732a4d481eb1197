import numpy as np
import pytest

from bkvg.brackets import (
    BOTH_AGREE,
    ORACLE,
    _certify,
    bracket,
    bracket_context,
    mu,
    nu,
    q_form,
    sigma,
    tau,
)
from bkvg.errors import DomainViolation, WrongFamily
from bkvg.families import (
    apply_formal_maximal,
    chi_companion,
    friedrichs_inverse_kernel,
    instantiate,
    kernel_basis,
)
from bkvg.monomial import L2, MonomialSum
from bkvg.quadrature import oracle_form

GAMMAS = [0.5, 1.0, 2.0, 5.0]

# Values frozen from the oracle-certified pipelines (BVP + mesh quadrature
# and adaptive Gauss); the closed forms must keep reproducing them.
FROZEN = {
    ("sigma", 0.5): 0.305621636517,
    ("sigma", 1.0): 0.277740346060,
    ("sigma", 2.0): 0.242210225790,
    ("sigma", 5.0): 0.190756061808,
    ("tau", 0.5): 0.13600982475703,
    ("tau", 1.0): 0.3002425902201,
    ("tau", 2.0): 0.5643224222656,
    ("tau", 5.0): 1.121148682050,
    ("nu", 0.5): 0.393075688879,
    ("nu", 1.0): 0.6248105338438,
    ("nu", 2.0): 0.9395649091666,
    ("nu", 5.0): 1.5421164188584,
}


def test_wrong_family_errors():
    a = instantiate("A", 1.0)
    c = instantiate("C", 1.0)
    with pytest.raises(WrongFamily):
        mu(a)
    with pytest.raises(WrongFamily):
        nu(a)
    with pytest.raises(WrongFamily):
        sigma(c)
    with pytest.raises(WrongFamily):
        tau(c)


@pytest.mark.parametrize("gamma", GAMMAS)
def test_frozen_constants(gamma):
    a = instantiate("A", gamma)
    c = instantiate("C", gamma)
    assert sigma(a).real == pytest.approx(FROZEN[("sigma", gamma)], abs=5e-12)
    assert abs(sigma(a).imag) < 1e-12
    assert tau(a) == pytest.approx(FROZEN[("tau", gamma)], rel=1e-12)
    assert nu(c) == pytest.approx(FROZEN[("nu", gamma)], rel=1e-12)
    # mu coincides numerically with sigma at every gamma tested (observed
    # regularity, asserted as a regression property, not used as a shortcut)
    assert mu(c) == pytest.approx(sigma(a), abs=1e-12)
    assert tau(a) > 0


@pytest.mark.parametrize("gamma", GAMMAS)
def test_structural_identities(gamma):
    # tau = -Re(omega-) and nu = Im(omega+): both follow from the real and
    # imaginary parts of omega(omega-1) = i*gamma
    a = instantiate("A", gamma)
    c = instantiate("C", gamma)
    assert tau(a) == pytest.approx(-a.omega_minus.real, rel=1e-12)
    assert nu(c) == pytest.approx(c.omega_plus.imag, rel=1e-12)


@pytest.mark.parametrize("family", ["A", "C"])
@pytest.mark.parametrize("gamma", GAMMAS)
def test_two_pipeline_certification(family, gamma):
    ctx = bracket_context(instantiate(family, gamma))
    for name, cv in ctx.constants.items():
        rel = abs(cv.value - cv.oracle) / max(abs(cv.value), 1e-30)
        assert rel <= 1e-6, (name, rel)
        assert cv.status == BOTH_AGREE
        assert not cv.flagged
    assert not ctx.flagged


def test_certify_policy_reports_oracle_on_disagreement():
    cv = _certify(1.0 + 0j, 2.0 + 0j, "demo")
    assert cv.flagged
    assert cv.status == ORACLE
    assert cv.value == 2.0 + 0j
    assert "demo" in cv.note
    cv2 = _certify(1.0 + 1e-5j, 1.0 + 1e-5j, "demo", real_expected=True)
    assert cv2.flagged  # imaginary residue above 1e-9


def test_bracket_reproduces_sigma():
    inst = instantiate("A", 2.0)
    ctx = bracket_context(inst)
    kp = MonomialSum.monomial(1, inst.omega_plus)
    kc = MonomialSum.monomial(1, inst.omega_plus.conjugate())
    assert bracket(ctx, kp, kc) == pytest.approx(sigma(inst), abs=1e-14)
    assert bracket(ctx, kp, MonomialSum.zero()) == 0


def test_bracket_orthogonal_companion():
    inst = instantiate("A", 1.0)
    ctx = bracket_context(inst)
    kp = MonomialSum.monomial(1, inst.omega_plus)
    assert abs(bracket(ctx, kp, chi_companion(inst))) < 1e-12


def test_bracket_linearity():
    inst = instantiate("C", 0.5)
    ctx = bracket_context(inst)
    kb = kernel_basis(inst)
    f = MonomialSum.monomial(1.3 - 0.2j, inst.omega_plus)
    g1, g2 = kb.plus_kernel
    a, b = 1.7 - 0.4j, -0.3 + 2j
    combo = bracket(ctx, f, a * g1 + b * g2)
    assert combo == pytest.approx(a * bracket(ctx, f, g1) + b * bracket(ctx, f, g2),
                                  rel=1e-12)
    scaled = bracket(ctx, (2 + 1j) * f, g1)
    assert scaled == pytest.approx((2 - 1j) * bracket(ctx, f, g1), rel=1e-12)


@pytest.mark.parametrize("family", ["A", "C"])
def test_q_form_examples(family):
    inst = instantiate(family, 2.0)
    ctx = bracket_context(inst)
    kc = MonomialSum.monomial(1, inst.omega_plus.conjugate())
    kp = MonomialSum.monomial(1, inst.omega_plus)
    assert q_form(ctx, friedrichs_inverse_kernel(inst, kc)) == pytest.approx(0, abs=1e-12)
    assert q_form(ctx, MonomialSum.zero()) == 0
    d = 2.3 - 0.7j
    v = friedrichs_inverse_kernel(inst, d * kc) + kp
    first = sigma(inst) if family == "A" else mu(inst)
    second = tau(inst) if family == "A" else nu(inst)
    assert q_form(ctx, v) == pytest.approx((d * first).real - second, abs=1e-12)


def test_q_form_shift_law_and_invariance():
    # Adding a Friedrichs-domain vector w = A_{+,F}^{-1} k' to v changes q by
    # exactly Re[k, k'] (k = the minus-kernel part of v); in particular q is
    # invariant whenever the shift direction is bracket-orthogonal to k.
    # Two-kernel regime: the companion of chi is that orthogonal direction.
    inst = instantiate("A", 1.0)
    ctx = bracket_context(inst)
    kb = kernel_basis(inst)
    kp = MonomialSum.monomial(1, inst.omega_plus)
    v = friedrichs_inverse_kernel(inst, (0.4 + 1.1j) * kb.plus_kernel[0]) + kp
    kprime = (1.9 - 0.8j) * kb.plus_kernel[1]
    w = friedrichs_inverse_kernel(inst, kprime)
    cross = bracket(ctx, kp, kprime).real
    assert q_form(ctx, v + w) == pytest.approx(q_form(ctx, v) + cross, abs=1e-10)
    w_orth = friedrichs_inverse_kernel(inst, (0.7 + 0.3j) * chi_companion(inst))
    assert q_form(ctx, v + w_orth) == pytest.approx(q_form(ctx, v), abs=1e-8)
    # pure Friedrichs-domain v: any shift leaves q at zero
    v0 = friedrichs_inverse_kernel(inst, kb.plus_kernel[0])
    assert q_form(ctx, v0 + w) == pytest.approx(0.0, abs=1e-8)


def test_q_form_invariance_one_dim_regime():
    # One-kernel regime: the bracket-orthogonal shifts are the phase
    # rotations i*conj(sigma)*x^{conj(omega+)}
    inst = instantiate("A", 2.0)
    ctx = bracket_context(inst)
    kc = MonomialSum.monomial(1, inst.omega_plus.conjugate())
    kp = MonomialSum.monomial(1, inst.omega_plus)
    v = friedrichs_inverse_kernel(inst, (1.2 - 0.5j) * kc) + kp
    w = friedrichs_inverse_kernel(inst, (1j * sigma(inst).conjugate()) * kc)
    assert q_form(ctx, v + w) == pytest.approx(q_form(ctx, v), abs=1e-8)


def test_q_form_domain_violation():
    # x^{omega-} is not in the Krein form domain (Re <= 1/2): rejected
    inst = instantiate("A", 1.0)
    ctx = bracket_context(inst)
    with pytest.raises(DomainViolation):
        q_form(ctx, MonomialSum.monomial(1, inst.omega_minus))


def _double_zero_poly(rng):
    # x^2 (1-x)^2 * (c0 + c1 x + c2 x^2): in the Friedrichs form domain of
    # both families and safely inside every integrability threshold
    base = MonomialSum([(1, 2), (-2, 3), (1, 4)])
    out = MonomialSum.zero()
    for k in range(3):
        c = complex(rng.uniform(-1, 1), rng.uniform(-1, 1))
        out = out + c * base.shift(k)
    return out


@pytest.mark.parametrize("family", ["A", "C"])
def test_lemma_identity_quadrature(family, n_pairs=25):
    # Re<f+v, A_-*(f+v)> = ||V_K^(1/2)(f+v)||^2 + q(v), both inner products
    # re-derived by the quadrature oracle
    rng = np.random.RandomState(5 if family == "A" else 6)
    inst = instantiate(family, 2.0)
    ctx = bracket_context(inst)
    kc = MonomialSum.monomial(1, inst.omega_plus.conjugate())
    kp = MonomialSum.monomial(1, inst.omega_plus)
    for _ in range(n_pairs):
        f = _double_zero_poly(rng)
        d = complex(rng.uniform(-2, 2), rng.uniform(-2, 2))
        t = complex(rng.uniform(-2, 2), rng.uniform(-2, 2))
        v = friedrichs_inverse_kernel(inst, d * kc) + t * kp
        total = f + v
        lhs = oracle_form(L2, total, apply_formal_maximal(inst, "-", total)).real
        rhs = oracle_form(ctx.krein_kind, total, total).real + q_form(ctx, v)
        assert lhs == pytest.approx(rhs, rel=1e-6, abs=1e-9)
