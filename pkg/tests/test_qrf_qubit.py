import numpy as np
import pytest
from numpy.testing import assert_allclose

from app.services.qrf_qubit import (
    DISCREPANCY_FLAG,
    PUSHFORWARD_TABLE,
    QubitScenario,
    build_qubit_qrf_unitary,
    commutator_preservation_check,
    composition_sanity_check,
    coordinate_transform,
    final_layout,
    initial_layout,
    initial_state,
    pushforward_image,
    run_qubit_case,
    sigma,
)
from app.services.statekit import Role, apply, basis_state, conjugate, make_state
from app.utils.errors import BadLayout, BadParameters

SAMPLE_THETAS = np.linspace(0.1, 3.0, 5)
SAMPLE_ZETAS = np.linspace(0.0, 2 * np.pi, 5, endpoint=False)


def record(report, observable, side):
    return next(r for r in report.ncvalues if r.observable == observable and r.side == side)


def check(report, name):
    return next(c for c in report.checks if c.name == name)


def test_unitary_maps_layouts():
    u = build_qubit_qrf_unitary(initial_layout())
    assert u.layout.describe() == "FrameSlot(A) ⊗ B[2] ⊗ C[2]"
    assert u.codomain.describe() == "A[2] ⊗ FrameSlot(B) ⊗ C[2]"
    assert_allclose(u.dense() @ u.dense().conj().T, np.eye(4), atol=1e-15)


def test_unitary_on_basis_states():
    u = build_qubit_qrf_unitary(initial_layout())
    up_up = basis_state(initial_layout(), {Role.B: 0, Role.C: 0})
    down_down = basis_state(initial_layout(), {Role.B: 1, Role.C: 1})
    assert_allclose(apply(u, up_up).amplitudes, np.array([0, 0, 1, 1]) / np.sqrt(2))
    assert_allclose(apply(u, down_down).amplitudes, np.array([1, 1, 0, 0]) / np.sqrt(2))


def test_unitary_needs_initial_layout():
    with pytest.raises(BadLayout):
        build_qubit_qrf_unitary(final_layout())


def test_coordinate_transform_matches_unitary(rng, random_state_on):
    u = build_qubit_qrf_unitary(initial_layout())
    for _ in range(20):
        s = random_state_on(initial_layout())
        assert_allclose(coordinate_transform(s.amplitudes), apply(u, s).amplitudes, atol=1e-12)


@pytest.mark.parametrize("generator", list(PUSHFORWARD_TABLE))
def test_pushforward_table(generator):
    u = build_qubit_qrf_unitary(initial_layout())
    pushed = conjugate(u, sigma(*generator, initial_layout()))
    assert pushed.layout == final_layout()
    assert np.max(np.abs(pushed.dense() - pushforward_image(generator).dense())) < 1e-12


def test_sigma3_b_maps_to_minus_sigma3_a():
    image = pushforward_image((3, Role.B))
    assert image.name == "-σ3A"
    assert_allclose(np.diag(image.dense()).real, [-1, -1, 1, 1])


def test_commutators_and_composition():
    assert commutator_preservation_check() < 1e-12
    assert composition_sanity_check() < 1e-10


@pytest.mark.parametrize(
    "kwargs",
    [
        {"case_id": "a", "theta": 1.0},
        {"case_id": "c", "theta": np.pi},
        {"case_id": "c", "theta": 1.0, "zeta": 7.0},
        {"case_id": "c", "theta": -0.1},
    ],
)
def test_bad_parameters(kwargs):
    with pytest.raises(BadParameters):
        QubitScenario(**kwargs)


def test_case_id_prime_is_normalized():
    assert QubitScenario("b′", 1.0).case_id == "b'"


def test_case_c_balanced():
    report = run_qubit_case(QubitScenario("c", np.pi / 2, 0.0, 0.0))
    assert report.all_passed
    assert abs(record(report, "σ3B", "initial").f.re) < 1e-12
    assert abs(record(report, "-σ3A", "final").f.re) < 1e-12
    assert report.factor_ranks["initial amplitudes B|C"] == 2
    assert report.factor_ranks["final amplitudes A|C"] == 1


@pytest.mark.parametrize("theta", SAMPLE_THETAS)
@pytest.mark.parametrize("zeta", SAMPLE_ZETAS)
def test_case_c_goldens(theta, zeta):
    report = run_qubit_case(QubitScenario("c", float(theta), float(zeta), 0.7))
    assert report.all_passed, [c.name for c in report.failed_checks]
    sc = QubitScenario("c", float(theta), float(zeta))
    c, s = sc.c, sc.s
    v = record(report, "σ3B", "initial").V.to_array()
    assert_allclose(v, [2 * np.conj(c) * abs(s) ** 2, 0, 0, -2 * np.conj(s) * abs(c) ** 2], atol=1e-12)
    back = record(report, "σ3C (final, in initial basis)", "reexpressed").V.to_array()
    assert_allclose(back, [0, np.conj(c), -np.conj(s), 0], atol=1e-12)


def test_case_c_reports_printed_discrepancy():
    sc = QubitScenario("c", 1.0, 0.5)
    report = run_qubit_case(sc)
    flagged = check(report, "uncertainty σ3C initial = 1 − f² = 4|c|²|s|²")
    assert flagged.passed
    assert flagged.flag == DISCREPANCY_FLAG == "paper-discrepancy"
    c2, s2 = abs(sc.c) ** 2, abs(sc.s) ** 2
    assert flagged.details["computed"] == pytest.approx(4 * c2 * s2)
    assert flagged.details["published"] == pytest.approx(2 * c2 * s2)


def test_case_a_prime_stays_product():
    report = run_qubit_case(QubitScenario("a'", 1.0, 0.5, 0.3))
    assert report.all_passed
    assert report.factor_ranks["initial amplitudes B|C"] == 1
    assert report.factor_ranks["final amplitudes A|C"] == 1


def test_case_b_prime_entangles_generically():
    report = run_qubit_case(QubitScenario("b'", 1.0, 0.5, 0.3))
    assert report.all_passed
    assert report.factor_ranks["initial amplitudes B|C"] == 1
    assert report.factor_ranks["final amplitudes A|C"] == 2


def test_case_b_prime_special_point_stays_product():
    # c² + s² = 0 at θ = π/2, ζ = π/2
    report = run_qubit_case(QubitScenario("b'", np.pi / 2, np.pi / 2, 0.3))
    assert report.all_passed
    assert report.factor_ranks["final amplitudes A|C"] == 1


def test_initial_states_are_normalized():
    for case in ("a'", "b'", "c"):
        s = initial_state(QubitScenario(case, 1.2, 2.0, 4.0))
        assert s.normalized
        assert make_state(s.layout, s.amplitudes).normalized
