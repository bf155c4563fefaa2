import numpy as np
import pytest
from numpy.testing import assert_allclose

from app.services.ncvalue import (
    expectation,
    factor_rank,
    ktilde_finite_difference,
    ktilde_of,
    linear_combine,
    ncvalue_of,
    reconstruct_matrix,
    reexpress,
    star,
    star_commutator,
    uncertainty,
    value_gap,
)
from app.services.statekit import (
    BasisLayout,
    Factor,
    Operator,
    Role,
    apply,
    conjugate,
    generic_layout,
    identity,
    linear_combination,
    make_state,
    product,
)
from app.services.verifier import random_hermitian, random_unitary
from app.utils.errors import BadBipartition, BasisMismatch, DimensionMismatch, NotNormalized, NotUnitary

SIGMA_1 = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_3 = np.array([[1, 0], [0, -1]], dtype=complex)


def hermitian(matrix):
    m = np.asarray(matrix, dtype=complex)
    return Operator(generic_layout(m.shape[0]), m, hermitian=True)


def test_sigma3_at_up():
    s = make_state(generic_layout(2), [1, 0])
    v = ncvalue_of(hermitian(SIGMA_3), s)
    assert v.f == 1.0
    assert_allclose(v.V, [0, 0])
    assert uncertainty(v) == 0.0
    assert_allclose(ktilde_of(hermitian(SIGMA_3), s).k, np.diag([0, -2]))


def test_sigma1_at_up_has_unit_spread():
    s = make_state(generic_layout(2), [1, 0])
    v = ncvalue_of(hermitian(SIGMA_1), s)
    assert v.f == 0.0
    assert_allclose(v.V, [0, 1])
    assert uncertainty(v) == pytest.approx(1.0)


def test_unnormalized_state_is_rejected():
    s = make_state(generic_layout(2), [1, 1])
    with pytest.raises(NotNormalized):
        ncvalue_of(hermitian(SIGMA_3), s)
    with pytest.raises(NotNormalized):
        expectation(hermitian(SIGMA_3), s)


@pytest.mark.parametrize("d", [2, 5, 11])
def test_star_is_a_homomorphism(rng, random_state_on, d):
    beta, gamma = hermitian(random_hermitian(rng, d)), hermitian(random_hermitian(rng, d))
    s = random_state_on(generic_layout(d))
    lhs = star(ncvalue_of(beta, s), ncvalue_of(gamma, s), s)
    rhs = ncvalue_of(product(beta, gamma), s)
    assert max(value_gap(lhs, rhs).values()) < 1e-10


def test_star_commutator_closes(rng, random_state_on):
    beta, gamma = hermitian(random_hermitian(rng, 6)), hermitian(random_hermitian(rng, 6))
    s = random_state_on(generic_layout(6))
    via_star = star_commutator(ncvalue_of(beta, s), ncvalue_of(gamma, s), s)
    direct = Operator(s.layout, beta.dense() @ gamma.dense() - gamma.dense() @ beta.dense())
    assert max(value_gap(via_star, ncvalue_of(direct, s)).values()) < 1e-10


def test_uncertainty_identity(rng, random_state_on):
    beta = hermitian(random_hermitian(rng, 7))
    s = random_state_on(generic_layout(7))
    v = ncvalue_of(beta, s)
    spread = expectation(product(beta, beta), s) - expectation(beta, s) ** 2
    assert uncertainty(v) == pytest.approx(spread.real, abs=1e-10)
    assert (star(v, v, s).f - v.f ** 2).real == pytest.approx(uncertainty(v), abs=1e-10)


def test_eigenstates_have_vanishing_variation(rng):
    q = random_unitary(rng, 5)
    beta = hermitian((q * np.arange(1.0, 6.0)) @ q.conj().T)
    for j in range(5):
        v = ncvalue_of(beta, make_state(generic_layout(5), q[:, j]))
        assert np.max(np.abs(v.V)) < 1e-12
        assert v.f.real == pytest.approx(j + 1.0)
    mixed = make_state(generic_layout(5), q[:, 0] + q[:, 1], normalize=True)
    assert np.linalg.norm(ncvalue_of(beta, mixed).V) > 0.1


def test_degenerate_eigenspace_shares_values(rng):
    q = random_unitary(rng, 4)
    beta = hermitian((q * np.array([2.0, 2.0, 5.0, -1.0])) @ q.conj().T)
    first = ncvalue_of(beta, make_state(generic_layout(4), q[:, 0]))
    mix = ncvalue_of(beta, make_state(generic_layout(4), q[:, 0] - 1j * q[:, 1], normalize=True))
    assert first.f == pytest.approx(mix.f, abs=1e-12)
    assert np.max(np.abs(mix.V)) < 1e-12


def test_classical_observable(rng, random_state_on):
    s = random_state_on(generic_layout(4))
    r = 2.5
    constant = linear_combination([r], [identity(s.layout)])
    v = ncvalue_of(constant, s)
    assert v.f.real == pytest.approx(r)
    assert np.max(np.abs(v.V)) < 1e-12
    assert np.max(np.abs(ktilde_of(constant, s).k)) < 1e-12
    other = ncvalue_of(hermitian(random_hermitian(rng, 4)), s)
    comm = star_commutator(v, other, s)
    assert abs(comm.f) < 1e-12
    assert np.max(np.abs(comm.V)) < 1e-12


def test_reexpress_matches_conjugated_observable(rng, random_state_on):
    beta = hermitian(random_hermitian(rng, 6))
    s = random_state_on(generic_layout(6))
    u = Operator(s.layout, random_unitary(rng, 6), unitary=True, name="u")
    moved = reexpress(ncvalue_of(beta, s), u)
    target = ncvalue_of(conjugate(u, beta), apply(u, s))
    assert moved.basis_id == target.basis_id
    assert max(value_gap(moved, target).values()) < 1e-10
    assert uncertainty(moved) == pytest.approx(uncertainty(target), abs=1e-10)


def test_reexpress_back_recovers_the_original_value(rng, random_state_on):
    beta = hermitian(random_hermitian(rng, 3))
    s = random_state_on(generic_layout(3))
    u = Operator(s.layout, random_unitary(rng, 3), unitary=True, name="u")
    v = ncvalue_of(beta, s)

    back = reexpress(ncvalue_of(conjugate(u, beta), apply(u, s)), u.dagger())
    assert back.basis_id == v.basis_id
    assert max(value_gap(back, v).values()) < 1e-10

    round_trip = reexpress(reexpress(v, u), u.dagger())
    assert max(value_gap(round_trip, v).values()) < 1e-10
    diff = linear_combine([1.0, -1.0], [round_trip, v])
    assert abs(diff.f) < 1e-10
    assert np.max(np.abs(diff.V)) < 1e-10


def test_reexpress_accepts_an_explicit_basis_label(rng, random_state_on):
    s = random_state_on(generic_layout(2))
    u = Operator(s.layout, random_unitary(rng, 2), unitary=True, name="u")
    moved = reexpress(ncvalue_of(hermitian(SIGMA_3), s), u, basis_id="rotated")
    assert moved.basis_id == "rotated"
    with pytest.raises(BasisMismatch):
        reexpress(moved, u.dagger())


def test_reexpress_guards(rng, random_state_on, qubits):
    s = random_state_on(generic_layout(2))
    v = ncvalue_of(hermitian(SIGMA_3), s)
    with pytest.raises(NotUnitary):
        reexpress(v, hermitian(SIGMA_3))
    u = Operator(qubits, random_unitary(rng, 4), unitary=True)
    with pytest.raises(BasisMismatch):
        reexpress(v, u)


def test_values_from_different_bases_do_not_mix(random_state_on, single_c):
    a = ncvalue_of(hermitian(SIGMA_3), random_state_on(generic_layout(2)))
    b = ncvalue_of(Operator(single_c, SIGMA_3, hermitian=True), random_state_on(single_c))
    with pytest.raises(BasisMismatch):
        linear_combine([1.0, 1.0], [a, b])
    with pytest.raises(DimensionMismatch):
        linear_combine([], [])


@pytest.mark.parametrize("d", [2, 3, 8, 16])
def test_ktilde_reconstructs_matrix(rng, random_state_on, d):
    beta = hermitian(random_hermitian(rng, d))
    s = random_state_on(generic_layout(d))
    k = ktilde_of(beta, s)
    assert_allclose(reconstruct_matrix(k, ncvalue_of(beta, s), s), beta.dense(), atol=1e-10)
    assert_allclose(k.k, k.k.conj().T, atol=1e-10)


@pytest.mark.parametrize("d", [2, 3, 4])
def test_ktilde_matches_finite_differences(rng, random_state_on, d):
    beta = hermitian(random_hermitian(rng, d))
    s = random_state_on(generic_layout(d))
    numeric = ktilde_finite_difference(beta, s, step=1e-5)
    assert np.max(np.abs(numeric - ktilde_of(beta, s).k)) < 1e-5


def test_ktilde_finite_difference_sigma3():
    s = make_state(generic_layout(2), [1, 0])
    assert_allclose(ktilde_finite_difference(hermitian(SIGMA_3), s), np.diag([0, -2]), atol=1e-5)


def test_factor_rank():
    product_state = np.kron([1, 1], [1, -1]) / 2
    bell = np.array([1, 0, 0, 1]) / np.sqrt(2)
    assert factor_rank(product_state, (2, 2)) == 1
    assert factor_rank(bell, (2, 2)) == 2
    assert factor_rank(np.zeros(4), (2, 2)) == 0
    assert factor_rank(np.eye(3)) == 3
    with pytest.raises(BadBipartition):
        factor_rank(bell, (3, 2))
    with pytest.raises(BadBipartition):
        factor_rank(bell)


def test_factor_rank_on_layout_with_three_roles():
    layout = BasisLayout.build(Role.A, [Factor(Role.B, 2), Factor(Role.C, 3)])
    z = np.outer([1, 2], [1, 0, 1]).reshape(-1)
    s = make_state(layout, z, normalize=True)
    assert factor_rank(s.amplitudes, layout.dims) == 1
