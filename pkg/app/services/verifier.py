"""
Property suites behind `verify`

Each suite draws seeded random inputs, evaluates one module's invariants and
reports the worst error per property as a CheckRecord.
"""

import time
from collections import OrderedDict
from typing import Callable, Dict, Iterable, List, Optional, Tuple

import numpy as np
from scipy import linalg

from app.config import settings
from app.models.report import GRID_CASES, QUBIT_CASES, CheckRecord, SuiteSummary
from app.services import ncvalue as nc
from app.services import qrf_grid as qg
from app.services import qrf_qubit as qq
from app.services.statekit import (
    Operator,
    Role,
    State,
    apply,
    conjugate,
    generic_layout,
    identity,
    linear_combination,
    make_state,
    max_abs_gap,
    product,
)
from app.utils.errors import BadParameters, UnknownSuite
from app.utils.logger import LoggerMixin

SUITES = ("ncvalue-core", "qubit", "grid", "appendix", "all")


def random_hermitian(rng: np.random.Generator, d: int) -> np.ndarray:
    a = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return (a + a.conj().T) / 2


def random_unitary(rng: np.random.Generator, d: int) -> np.ndarray:
    a = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    q, r = np.linalg.qr(a)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_state(rng: np.random.Generator, d: int) -> State:
    z = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return make_state(generic_layout(d), z, normalize=True)


def hermitian_op(matrix: np.ndarray, name: str = "") -> Operator:
    return Operator(generic_layout(matrix.shape[0]), matrix, hermitian=True, name=name)


def aggregate(checks: Iterable[CheckRecord], prefix: str = "") -> List[CheckRecord]:
    """Collapse repeated checks to one record per name carrying the worst error"""
    worst: "OrderedDict[str, CheckRecord]" = OrderedDict()
    failed: Dict[str, bool] = {}
    for check in checks:
        name = f"{prefix}{check.name}"
        failed[name] = failed.get(name, False) or not check.passed
        if name not in worst or check.error > worst[name].error or (check.flag and not worst[name].flag):
            worst[name] = check.model_copy(update={"name": name})
    return [c.model_copy(update={"passed": c.passed and not failed[n]}) for n, c in worst.items()]


class _Worst:
    """Running maximum of one property's error over many draws"""

    def __init__(self, name: str, tolerance: float):
        self.name, self.tolerance, self.error = name, tolerance, 0.0

    def update(self, error: float):
        self.error = max(self.error, float(error))

    def record(self) -> CheckRecord:
        return CheckRecord.measure(self.name, self.error, self.tolerance)


def _gap(a: nc.NCValue, b: nc.NCValue) -> float:
    return max(nc.value_gap(a, b).values())


class SuiteVerifier(LoggerMixin):
    """Runs the named property suite and returns a SuiteSummary"""

    def verify(
        self,
        suite: str,
        dims: Tuple[int, int] = (2, 16),
        draws: int = 200,
        seed: Optional[int] = None,
        grid_n: Optional[int] = None,
    ) -> SuiteSummary:
        if suite not in SUITES:
            raise UnknownSuite(f"unknown suite {suite!r}, expected one of {list(SUITES)}")
        lo, hi = dims
        if lo < 2 or hi < lo:
            raise BadParameters(f"dimension range {lo}..{hi} is empty or below 2")
        if draws < 1:
            raise BadParameters("draws must be positive")
        seed = settings.DEFAULT_SEED if seed is None else seed
        started = time.perf_counter()
        try:
            self.log_info(f"Verifying suite {suite} (dims {lo}..{hi}, {draws} draws, seed {seed})")
            plan: List[Tuple[str, Callable[[], List[CheckRecord]]]] = []
            if suite in ("ncvalue-core", "all"):
                plan.append(("ncvalue-core", lambda: self.ncvalue_core(lo, hi, draws, seed)))
            if suite in ("qubit", "all"):
                plan.append(("qubit", lambda: self.qubit(draws, seed)))
            if suite in ("grid", "all"):
                plan.append(("grid", lambda: self.grid(grid_n or 64, seed)))
            if suite in ("appendix", "all"):
                appendix_n = grid_n if suite == "appendix" and grid_n else 256
                plan.append(("appendix", lambda: self.appendix(appendix_n, seed)))

            checks: List[CheckRecord] = []
            for name, step in plan:
                part = step()
                bad = [c.name for c in part if not c.passed]
                self.log_info(f"Suite part {name}: {len(part)} properties, {len(bad)} failing")
                for c in bad:
                    self.log_warning(f"{name}: property '{c}' out of tolerance")
                checks.extend(aggregate(part, prefix=f"{name}: " if suite == "all" else ""))

            return SuiteSummary(
                suite=suite,
                seed=seed,
                parameters={"dims": [lo, hi], "draws": draws, "grid_n": grid_n},
                checks=checks,
                wall_time_s=time.perf_counter() - started,
            )

        except Exception as e:
            self.log_error(f"Error verifying suite {suite}: {str(e)}")
            raise

    # ------------------------------------------------------------------
    def ncvalue_core(self, lo: int, hi: int, draws: int, seed: int) -> List[CheckRecord]:
        rng = np.random.default_rng(seed)
        homo = _Worst("homomorphism star = product", 1e-10)
        closure = _Worst("commutator closure", 1e-10)
        spread = _Worst("uncertainty identity", 1e-10)
        eigen = _Worst("eigenstate has V = 0", 1e-12)
        non_eigen = _Worst("non-eigenstate has V ≠ 0", 0.0)
        covariance = _Worst("basis covariance", 1e-10)
        classical = _Worst("r·I: V = 0, k̃ = 0, central", 1e-12)
        reconstruct = _Worst("k̃ reconstructs M", 1e-10)
        k_sym = _Worst("k̃ Hermitian symmetry", 1e-10)
        finite_diff = _Worst("k̃ matches finite differences", 1e-5)
        degenerate = _Worst("degenerate eigenvectors share {f, V}", 1e-12)

        for i in range(draws):
            d = int(rng.integers(lo, hi + 1))
            beta, gamma = random_hermitian(rng, d), random_hermitian(rng, d)
            b_op, g_op = hermitian_op(beta, "β"), hermitian_op(gamma, "γ")
            s = random_state(rng, d)
            vb, vg = nc.ncvalue_of(b_op, s), nc.ncvalue_of(g_op, s)

            homo.update(_gap(nc.star(vb, vg, s), nc.ncvalue_of(product(b_op, g_op), s)))
            comm = Operator(s.layout, beta @ gamma - gamma @ beta)
            closure.update(_gap(nc.star_commutator(vb, vg, s), nc.ncvalue_of(comm, s)))
            sq = nc.expectation(product(b_op, b_op), s) - nc.expectation(b_op, s) ** 2
            spread.update(abs(nc.uncertainty(vb) - sq.real))

            lam = np.cumsum(rng.uniform(0.1, 1.0, size=d)) - d / 2
            q = random_unitary(rng, d)
            spectral = hermitian_op((q * lam) @ q.conj().T)
            j = int(rng.integers(d))
            eigenstate = make_state(s.layout, q[:, j])
            eigen.update(np.max(np.abs(nc.ncvalue_of(spectral, eigenstate).V)))
            if np.linalg.norm(nc.ncvalue_of(spectral, s).V) <= 1e-12:
                non_eigen.update(1.0)

            u = Operator(s.layout, random_unitary(rng, d), unitary=True, name="u")
            target = nc.ncvalue_of(conjugate(u, b_op), apply(u, s))
            covariance.update(max(_gap(nc.reexpress(vb, u), target), _gap(nc.reexpress(target, u.dagger()), vb)))

            r = float(rng.uniform(-3, 3))
            constant = linear_combination([r], [identity(s.layout)])
            vr = nc.ncvalue_of(constant, s)
            comm_r = nc.star_commutator(vr, vb, s)
            classical.update(max(
                np.max(np.abs(vr.V)),
                abs(vr.f - r),
                np.max(np.abs(nc.ktilde_of(constant, s).k)),
                abs(comm_r.f), np.max(np.abs(comm_r.V)), max_abs_gap(comm_r.M, np.zeros((d, d))),
            ))

            k = nc.ktilde_of(b_op, s)
            reconstruct.update(np.max(np.abs(nc.reconstruct_matrix(k, vb, s) - beta)))
            k_sym.update(np.max(np.abs(k.k - k.k.conj().T)))
            if i < min(draws, 25) and d <= 4:
                finite_diff.update(np.max(np.abs(nc.ktilde_finite_difference(b_op, s) - k.k)))

            if d >= 3:
                lam_deg = lam.copy()
                lam_deg[1] = lam_deg[0]
                deg = hermitian_op((q * lam_deg) @ q.conj().T)
                angle = rng.uniform(0, 2 * np.pi)
                mix = np.cos(angle) * q[:, 0] + np.sin(angle) * q[:, 1]
                ortho = -np.sin(angle) * q[:, 0] + np.cos(angle) * q[:, 1]
                v1 = nc.ncvalue_of(deg, make_state(s.layout, mix, normalize=True))
                v2 = nc.ncvalue_of(deg, make_state(s.layout, ortho, normalize=True))
                degenerate.update(max(abs(v1.f - v2.f), np.max(np.abs(v1.V)), np.max(np.abs(v2.V))))

        # finite differences need at least one small draw
        for _ in range(3):
            d = int(rng.integers(2, 5))
            s = random_state(rng, d)
            b_op = hermitian_op(random_hermitian(rng, d))
            finite_diff.update(np.max(np.abs(nc.ktilde_finite_difference(b_op, s) - nc.ktilde_of(b_op, s).k)))

        return [w.record() for w in (homo, closure, spread, eigen, non_eigen, covariance, classical,
                                      reconstruct, k_sym, finite_diff, degenerate)]

    def qubit(self, draws: int, seed: int) -> List[CheckRecord]:
        rng = np.random.default_rng(seed)
        u = qq.build_qubit_qrf_unitary(qq.initial_layout())
        checks = [CheckRecord.measure(f"pushforward {name}", err, 1e-12) for name, err in qq.pushforward_table_check(u)]
        checks.append(CheckRecord.measure("U U† = I", max_abs_gap(u.dense() @ u.dense().conj().T, np.eye(4)), 1e-12))
        checks.append(CheckRecord.measure("commutators preserved", qq.commutator_preservation_check(u), 1e-12))
        checks.append(CheckRecord.measure("composition sanity", qq.composition_sanity_check(), 1e-10))

        coords = _Worst("coordinate transform = U z", 1e-12)
        for _ in range(draws):
            s = make_state(qq.initial_layout(), rng.standard_normal(4) + 1j * rng.standard_normal(4), normalize=True)
            coords.update(np.max(np.abs(qq.coordinate_transform(s.amplitudes) - apply(u, s).amplitudes)))
        checks.append(coords.record())

        for theta in np.linspace(0.1, 3.0, 5):
            for zeta in np.linspace(0.0, 2 * np.pi, 5, endpoint=False):
                zeta_prime = float(rng.uniform(0, 2 * np.pi))
                for case in QUBIT_CASES:
                    report = qq.run_qubit_case(qq.QubitScenario(case, float(theta), float(zeta), zeta_prime))
                    checks.extend(c.model_copy(update={"name": f"case {case}: {c.name}"}) for c in report.checks)
        return checks

    def grid(self, n: int, seed: int) -> List[CheckRecord]:
        grid = qg.GridBasis(n)
        checks: List[CheckRecord] = []
        defaults = dict(x_o=3.0, y_o=-2.0, x_1=-4.0, x_2=5.0, y_1=-3.0, y_2=2.0)
        c, s = np.cos(0.5) * np.exp(-0.25j), np.sin(0.5) * np.exp(0.25j)
        for case in GRID_CASES:
            sc = qg.GridScenario(case, grid, c=c, s=s, zeta_prime=0.3, check_seed=seed, **defaults)
            report = qg.run_grid_case(sc)
            checks.extend(ch.model_copy(update={"name": f"case {case}: {ch.name}"}) for ch in report.checks)

        small = qg.GridBasis(8)
        checks.append(CheckRecord.measure("P_AB exp(i xB pC) = Ux (expm, N=8)", qg.translation_generator_check(small), 1e-9))
        p = small.momentum_matrix()
        checks.append(CheckRecord.measure(
            "one-site shift = exp(−ih p) (expm, N=8)", max_abs_gap(small.shift_matrix(1), linalg.expm(-1j * small.h * p)), 1e-10
        ))
        layout = qg.single_layout(small)
        step = qg.classical_translation(small, 3 * small.h, Role.C, layout)
        checks.append(CheckRecord.measure(
            "classical translation = exp(i a p) (expm, N=8)", max_abs_gap(step.matrix, linalg.expm(3j * small.h * p)), 1e-9
        ))
        checks.append(CheckRecord.measure("p Hermitian", np.max(np.abs(p - p.conj().T)), 1e-12))
        checks.append(CheckRecord.measure(
            "(b') with sharp C is the inverse of (c)", qg.inverse_relation_check(grid, -4.0, 5.0, -3.0, 0.3), 0.0
        ))

        layout = qg.single_layout(grid)
        x = qg.position_operator(grid, Role.C, layout)
        packet = make_state(layout, qg.gaussian_packet(grid, 2.0))
        a = 3 * grid.h
        moved = apply(qg.classical_translation(grid, a, Role.C, layout), packet)
        before, after = nc.ncvalue_of(x, packet), nc.ncvalue_of(x, moved)
        checks.append(CheckRecord.measure("classical translation shifts ⟨x⟩ by −a", abs(after.f - (before.f - a)), 1e-10))
        checks.append(CheckRecord.measure(
            "classical translation keeps uncertainty", abs(nc.uncertainty(after) - nc.uncertainty(before)), 1e-10
        ))
        return checks

    def appendix(self, n: int, seed: int) -> List[CheckRecord]:
        grid = qg.GridBasis(n)
        sc = qg.GridScenario("a", grid, x_o=3 * grid.h, momentum_checks=True, check_seed=seed)
        return qg.appendix_momentum_checks(sc)


# Global verifier instance
verifier = SuiteVerifier()
