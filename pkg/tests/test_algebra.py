import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eitholes.algebra import (
    DEFAULT_CRITERION_TOL,
    admissible_basis,
    criterion_residual,
    hermitian_defect,
    involution,
    make_element,
    period_functionals,
    product,
    residual_grounded,
    residual_isolated,
    triple_norm,
)
from eitholes.dn import assemble_dn
from eitholes.errors import CriterionFailure

from conftest import theta

FLAVORS = ["grounded", "isolated"]


def random_element(op, flavor, basis, rng):
    c = rng.normal(size=len(basis))
    g = sum(ci * b for ci, b in zip(c, basis.traces))
    const = complex(*rng.normal(size=2))
    return make_element(op, flavor, g, const)


@pytest.fixture(scope="module")
def bases(annulus, annulus_ops):
    return {fl: admissible_basis(op, fl, 4, "validation", annulus) for fl, op in annulus_ops.items()}


@pytest.mark.parametrize("flavor", FLAVORS)
def test_validation_basis_is_admissible_and_orthonormal(bases, annulus_ops, flavor):
    b = bases[flavor]
    assert b.complete and len(b) == 4
    assert max(b.residuals) < DEFAULT_CRITERION_TOL
    op = annulus_ops[flavor]
    G = np.array([[x.inner(y) for y in b] for x in b]).real
    assert np.allclose(G, np.eye(4), atol=1e-10)


@pytest.mark.parametrize("flavor", FLAVORS)
def test_validation_basis_satisfies_period_conditions(two_holes, flavor):
    op = assemble_dn(two_holes, flavor)
    b = admissible_basis(op, flavor, 3, "validation", two_holes, n_modes=4)
    P = period_functionals(op, flavor, two_holes, 4)
    from eitholes.boundary import fourier_modes

    Q = fourier_modes(op.grid(), 4)
    for tr in b:
        coef = Q @ (op.weights * tr.values)
        assert np.abs(P @ coef).max() < 1e-8 * np.abs(P).max()


@pytest.mark.parametrize("flavor", FLAVORS)
def test_blind_search_finds_admissible_traces(annulus_ops, flavor):
    op = annulus_ops[flavor]
    b = admissible_basis(op, flavor, 2, "blind", seed=1)
    assert len(b) >= 1
    assert max(b.residuals) <= DEFAULT_CRITERION_TOL


def test_grounded_prefilter_flags_flux(annulus_ops):
    op = annulus_ops["grounded"]
    flux, res = residual_grounded(op, np.ones(op.n))
    assert flux > 1.0 and res == float("inf")
    # a loose prefilter lets the residual through
    assert np.isfinite(residual_grounded(op, np.ones(op.n), tol_mean=1.0).residual)


def test_isolated_constant_is_trivially_admissible(annulus_ops):
    op = annulus_ops["isolated"]
    assert residual_isolated(op, np.ones(op.n)).residual == 0.0


def test_isolated_c_h_vanishes_for_symmetric_annulus(annulus_ops):
    op = annulus_ops["isolated"]
    c, _ = residual_isolated(op, np.cos(theta(op)))
    assert abs(c) < 1e-6


@pytest.mark.parametrize("flavor", FLAVORS)
def test_scaling_invariance_of_relative_residual(annulus_ops, flavor):
    op = annulus_ops[flavor]
    f = np.sin(theta(op))
    r1 = criterion_residual(op, flavor, f)
    r2 = criterion_residual(op, flavor, 7.5 * f)
    assert r2 == pytest.approx(r1, rel=1e-6)


def test_make_element_rejects_inadmissible(two_holes):
    op = assemble_dn(two_holes, "isolated")
    with pytest.raises(CriterionFailure):
        make_element(op, "isolated", np.sin(theta(op)), tol=1e-3)


@pytest.mark.parametrize("flavor", FLAVORS)
def test_algebra_laws_on_random_elements(bases, annulus_ops, flavor):
    op, b = annulus_ops[flavor], bases[flavor]
    rng = np.random.default_rng(7)
    els = [random_element(op, flavor, b, rng) for _ in range(20)]
    for i in range(20):
        a, c = els[i], els[(i + 1) % 20]
        ab = product(op, flavor, a, c)
        lhs = involution(ab)
        rhs = product(op, flavor, involution(c), involution(a), verify=False)
        assert np.allclose(lhs.values, rhs.values, atol=1e-12 * triple_norm(ab))
        assert triple_norm(a) == triple_norm(involution(a))
        assert triple_norm(ab) <= triple_norm(a) * triple_norm(c) + 1e-8
        for part in (ab.w1, ab.w2):
            assert hermitian_defect(op, flavor, part) <= 10 * DEFAULT_CRITERION_TOL


@settings(max_examples=15, deadline=None)
@given(a=st.floats(-3, 3), b=st.floats(-3, 3), c1=st.floats(-2, 2), c2=st.floats(-2, 2))
def test_scale_is_complex_multiplication(annulus_gens, a, b, c1, c2):
    e = annulus_gens["grounded"][0]
    z = complex(a, b)
    assert np.allclose(e.scale(z).values, z * e.values, atol=1e-12)
    assert np.allclose((e + e.scale(complex(c1, c2))).values, (1 + complex(c1, c2)) * e.values, atol=1e-12)


def test_involution_is_idempotent(annulus_gens):
    e = annulus_gens["isolated"][1]
    assert np.array_equal(involution(involution(e)).values, e.values)
    assert np.allclose(involution(e).values, e.star_values)
