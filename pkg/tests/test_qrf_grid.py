import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy import linalg

from app.models.report import GRID_CASES
from app.services.ncvalue import ncvalue_of, uncertainty
from app.services.qrf_grid import (
    GridBasis,
    GridScenario,
    appendix_momentum_checks,
    build_translation_unitary,
    classical_translation,
    closed_form_final,
    commutator_expectation_checks,
    default_width,
    final_layout,
    gaussian_packet,
    initial_amplitudes,
    initial_layout,
    inverse_relation_check,
    momentum_operator,
    plane_wave,
    position_operator,
    run_grid_case,
    single_layout,
    translation_generator_check,
    wrap_safe_mask,
)
from app.services.statekit import Role, apply, make_state, max_abs_gap
from app.utils.errors import BadLayout, BadParameters, OffGridLabel, OffGridShift, WrapAround

LABELS = dict(x_o=3.0, y_o=-2.0, x_1=-4.0, x_2=5.0, y_1=-3.0, y_2=2.0)
C, S = np.cos(0.5) * np.exp(-0.25j), np.sin(0.5) * np.exp(0.25j)


@pytest.fixture(scope="module")
def grid64():
    return GridBasis(64)


def scenario(case_id, grid, **overrides):
    params = dict(LABELS, c=C, s=S, zeta_prime=0.3)
    params.update(overrides)
    return GridScenario(case_id, grid, **params)


def check(report, name):
    return next(c for c in report.checks if c.name == name)


def test_grid_labels_and_momenta():
    g = GridBasis(8, 0.5)
    assert_allclose(g.labels, 0.5 * np.arange(-4, 4))
    assert g.momenta[0] == pytest.approx(-2 * np.pi)
    assert g.period == 4.0
    assert default_width(GridBasis(64)) == 2.0
    assert default_width(GridBasis(256)) == 8.0


@pytest.mark.parametrize("n, h", [(7, 1.0), (0, 1.0), (8, 0.0)])
def test_bad_grid(n, h):
    with pytest.raises(BadParameters):
        GridBasis(n, h)


def test_off_grid_labels_and_shifts():
    g = GridBasis(8)
    with pytest.raises(OffGridLabel):
        g.index(0.5)
    with pytest.raises(OffGridLabel):
        g.index(4.0)
    with pytest.raises(OffGridShift):
        classical_translation(g, 1.5, Role.C, single_layout(g))


def test_momentum_is_hermitian_with_plane_wave_eigenvectors():
    g = GridBasis(16, 0.5)
    p = g.momentum_matrix()
    assert_allclose(p, p.conj().T, atol=1e-12)
    wave, k = plane_wave(g, 1.3)
    assert_allclose(p @ wave, k * wave, atol=1e-12)


def test_shift_is_exponential_of_momentum():
    g = GridBasis(8)
    generator = linalg.expm(-1j * g.h * g.momentum_matrix())
    assert_allclose(g.shift_matrix(1), generator, atol=1e-10)


def test_classical_translation_moves_packets(grid64):
    layout = single_layout(grid64)
    x = position_operator(grid64, Role.C, layout)
    packet = make_state(layout, gaussian_packet(grid64, 2.0))
    moved = apply(classical_translation(grid64, 3.0, Role.C, layout), packet)
    before, after = ncvalue_of(x, packet), ncvalue_of(x, moved)
    assert after.f.real == pytest.approx(before.f.real - 3.0, abs=1e-10)
    assert uncertainty(after) == pytest.approx(uncertainty(before), abs=1e-10)


def test_classical_translation_matches_expm():
    g = GridBasis(8)
    step = classical_translation(g, 2.0, Role.C, single_layout(g))
    assert_allclose(step.dense(), linalg.expm(2j * g.momentum_matrix()), atol=1e-9)


def test_translation_unitary_is_a_permutation():
    g = GridBasis(8)
    u = build_translation_unitary(g, initial_layout(g)).dense()
    assert set(np.unique(u.real)) == {0.0, 1.0}
    assert_allclose(u.sum(axis=0), 1)
    assert_allclose(u.sum(axis=1), 1)


def test_translation_unitary_needs_initial_layout(grid64):
    with pytest.raises(BadLayout):
        build_translation_unitary(grid64, final_layout(grid64))


def test_sharp_labels_map_as_expected():
    g = GridBasis(16)
    u = build_translation_unitary(g, initial_layout(g))
    start = make_state(initial_layout(g), np.kron(g.ket(2.0), g.ket(-1.0)))
    end = apply(u, start)
    assert_allclose(end.amplitudes, np.kron(g.ket(-2.0), g.ket(-3.0)))


def test_exponential_form_of_the_frame_change():
    assert translation_generator_check(GridBasis(8)) < 1e-9


def test_wrap_safe_mask_excludes_the_edges():
    g = GridBasis(16)
    mask = wrap_safe_mask(g, 2).reshape(16, 16)
    centre = g.index(0.0)
    assert mask[centre, centre]
    assert not mask[0, centre]
    assert not mask[centre, 15]


@pytest.mark.parametrize("case_id", GRID_CASES)
def test_grid_cases_pass(grid64, case_id):
    sc = scenario(case_id, grid64)
    report = run_grid_case(sc)
    assert report.all_passed, [(c.name, c.error) for c in report.failed_checks]
    assert report.system == "grid"
    assert report.case_id == case_id


@pytest.mark.parametrize("case_id", GRID_CASES)
def test_closed_forms_are_normalized(grid64, case_id):
    sc = scenario(case_id, grid64)
    assert np.linalg.norm(initial_amplitudes(sc)) == pytest.approx(1.0)
    assert np.linalg.norm(closed_form_final(sc)) == pytest.approx(1.0)


def test_case_a_keeps_xb_sharp(grid64):
    report = run_grid_case(scenario("a", grid64))
    assert check(report, "V[xB]^i = 0 (eigenstate)").error < 1e-12
    assert check(report, "f[xA]^f = −x_o").passed
    assert not any(c.name.startswith("plane wave") for c in report.checks)


def test_case_d_ranks_follow_the_packet(grid64):
    report = run_grid_case(scenario("d", grid64))
    psi = gaussian_packet(grid64)
    support = int(np.count_nonzero(np.abs(psi) > 1e-10 * np.abs(psi).max()))
    assert report.factor_ranks["initial amplitudes B|C"] == support
    assert report.factor_ranks["final amplitudes A|C"] == 1


def test_case_b_and_c_ranks(grid64):
    b = run_grid_case(scenario("b", grid64))
    c = run_grid_case(scenario("c", grid64))
    assert b.factor_ranks["final amplitudes A|C"] == 2
    assert c.factor_ranks["initial amplitudes B|C"] == 2
    assert c.factor_ranks["final amplitudes A|C"] == 1


def test_wrap_around_is_refused(grid64):
    with pytest.raises(WrapAround):
        run_grid_case(scenario("a", grid64, x_o=30.0))


def test_scenario_validation(grid64):
    with pytest.raises(BadParameters):
        scenario("e", grid64)
    with pytest.raises(BadParameters):
        scenario("b", grid64, x_2=-4.0)
    with pytest.raises(BadParameters):
        scenario("a", grid64, psi=np.ones(64))
    with pytest.raises(OffGridLabel):
        scenario("a", grid64, x_o=3.5)


def test_inverse_relation(grid64):
    assert inverse_relation_check(grid64, -4.0, 5.0, -3.0, 0.3) == 0.0


def test_position_operators_are_diagonal(grid64):
    layout = initial_layout(grid64)
    x_b = position_operator(grid64, Role.B, layout)
    start = make_state(layout, np.kron(grid64.ket(3.0), grid64.ket(-2.0)))
    assert ncvalue_of(x_b, start).f.real == pytest.approx(3.0)
    with pytest.raises(BadLayout):
        position_operator(grid64, Role.A, layout)


def test_momentum_operator_shape(grid64):
    p_c = momentum_operator(GridBasis(8), Role.C, initial_layout(GridBasis(8)))
    assert p_c.dense().shape == (64, 64)
    assert max_abs_gap(p_c.matrix, p_c.dense().conj().T) < 1e-12


def test_appendix_momentum_checks_at_n256():
    g = GridBasis(256)
    sc = GridScenario("a", g, x_o=3.0, momentum_checks=True)
    checks = appendix_momentum_checks(sc)
    assert all(c.passed for c in checks), [(c.name, c.error) for c in checks if not c.passed]
    names = {c.name for c in checks}
    assert "[pC]^f = [pC]^i" in names
    assert "⟨[x, p]⟩ = i" in names
    assert "V[pB]^i = (i∂_x − f)φ̄(x)ψ̄(y) (Gaussian B, finite difference)" in names
    assert "V[pB]^i = (conj(p̂δ(x − x_o)) − f δ)ψ̄(y) (numpy FFT against the DFT matrix)" in names


def test_appendix_needs_case_a(grid64):
    with pytest.raises(BadParameters):
        appendix_momentum_checks(scenario("d", grid64))


def test_appendix_refuses_wrap_around(grid64):
    with pytest.raises(WrapAround):
        appendix_momentum_checks(scenario("a", grid64, x_o=30.0, momentum_checks=True))


def test_commutator_expectation():
    checks = commutator_expectation_checks(GridBasis(256), 8.0)
    assert all(c.passed for c in checks)
