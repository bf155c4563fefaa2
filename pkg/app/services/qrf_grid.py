"""
Spatial-translation quantum reference frame on a cyclic lattice

Systems B and C live on an N-site lattice with labels x_j = h(j − N/2). The frame
change from A to B sends |x⟩_B|y⟩_C to |−x⟩_A|y − x⟩_C (labels modulo the
period) and leaves B as the amplitude-free frame slot. Position identities are
exact on the wrap-safe subspace; momentum identities hold up to aliasing of the
discrete Fourier window.
"""

import time
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy import linalg, sparse
from scipy.sparse.linalg import aslinearoperator

from app.config import settings
from app.models.report import (
    GRID_CASES,
    CheckRecord,
    NCValueRecord,
    ScenarioReport,
    StateSummary,
    normalize_case_id,
)
from app.services.ncvalue import (
    NCValue,
    expectation,
    factor_rank,
    linear_combine,
    ncvalue_of,
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
    State,
    apply,
    commutator,
    conjugate,
    embed_matrix,
    make_state,
    matvec,
    max_abs_gap,
    permutation_matrix,
    product,
    relabel_operator,
)
from app.utils.errors import (
    BadLayout,
    BadParameters,
    OffGridLabel,
    OffGridShift,
    UnknownRole,
    WrapAround,
)
from app.utils.logger import LoggerMixin

LEAK_TOL = 1e-12
SQRT2 = np.sqrt(2.0)


@dataclass(frozen=True)
class GridBasis:
    n: int
    h: float = 1.0

    def __post_init__(self):
        if self.n < 2 or self.n % 2:
            raise BadParameters(f"grid size must be an even integer ≥ 2, got {self.n}")
        if not self.h > 0:
            raise BadParameters(f"grid spacing must be positive, got {self.h}")

    @property
    def labels(self) -> np.ndarray:
        return self.h * (np.arange(self.n) - self.n // 2)

    @property
    def momenta(self) -> np.ndarray:
        """k_m = 2π/(N h)·(m − N/2), matching fftshift order"""
        return 2 * np.pi * np.fft.fftshift(np.fft.fftfreq(self.n, self.h))

    @property
    def period(self) -> float:
        return self.n * self.h

    def index(self, x: float) -> int:
        u = x / self.h + self.n // 2
        j = int(round(u))
        if abs(u - j) > 1e-9 or not 0 <= j < self.n:
            raise OffGridLabel(f"label {x} is not a site of the {self.n}-site grid with spacing {self.h}")
        return j

    def steps(self, a: float) -> int:
        """a as a whole number of lattice steps"""
        m = int(round(a / self.h))
        if abs(a / self.h - m) > 1e-9:
            raise OffGridShift(f"shift {a} is not an integer multiple of h={self.h}")
        return m

    def ket(self, x: float) -> np.ndarray:
        v = np.zeros(self.n, dtype=complex)
        v[self.index(x)] = 1.0
        return v

    def factor(self, role: Role) -> Factor:
        return Factor(role, self.n, tuple(self.labels))

    def position_matrix(self) -> sparse.csr_matrix:
        return sparse.diags(self.labels.astype(complex), format="csr")

    def fourier_matrix(self) -> np.ndarray:
        """E[j, m] = exp(i x_j k_m)/√N, unitary"""
        return np.exp(1j * np.outer(self.labels, self.momenta)) / np.sqrt(self.n)

    def momentum_matrix(self) -> np.ndarray:
        E = self.fourier_matrix()
        p = E @ np.diag(self.momenta) @ E.conj().T
        return (p + p.conj().T) / 2

    def shift_matrix(self, steps: int):
        """|x_j⟩ → |x_{j+steps}⟩ cyclically"""
        targets = (np.arange(self.n) + steps) % self.n
        return permutation_matrix(targets, self.n)

    def spectral_derivative(self, g: np.ndarray) -> np.ndarray:
        """p̂ g computed with numpy's FFT"""
        k = 2 * np.pi * np.fft.fftfreq(self.n, self.h)
        return np.fft.ifft(k * np.fft.fft(g))


def default_width(grid: GridBasis) -> float:
    return max(2 * grid.h, grid.period / 32)


def gaussian_packet(grid: GridBasis, center: float = 0.0, width: Optional[float] = None, momentum: float = 0.0) -> np.ndarray:
    width = default_width(grid) if width is None else width
    x = grid.labels
    psi = np.exp(-((x - center) ** 2) / (4 * width ** 2) + 1j * momentum * x)
    return psi / np.linalg.norm(psi)


def gaussian_echo(grid: GridBasis, center: float = 0.0, width: Optional[float] = None, momentum: float = 0.0) -> Dict[str, object]:
    """The Gaussian parameters actually used, with the default width resolved"""
    return {
        "kind": "gaussian",
        "center": center,
        "width": default_width(grid) if width is None else width,
        "momentum": momentum,
    }


def plane_wave(grid: GridBasis, momentum: float) -> Tuple[np.ndarray, float]:
    """Lattice plane wave at the window momentum nearest to `momentum`"""
    k = grid.momenta[np.argmin(np.abs(grid.momenta - momentum))]
    return np.exp(1j * k * grid.labels) / np.sqrt(grid.n), float(k)


def initial_layout(grid: GridBasis) -> BasisLayout:
    return BasisLayout.build(Role.A, [grid.factor(Role.B), grid.factor(Role.C)])


def final_layout(grid: GridBasis) -> BasisLayout:
    return BasisLayout.build(Role.B, [grid.factor(Role.A), grid.factor(Role.C)])


def single_layout(grid: GridBasis) -> BasisLayout:
    return BasisLayout.build(Role.A, [grid.factor(Role.C)])


def _check_factor(grid: GridBasis, role: Role, layout: BasisLayout):
    try:
        factor = layout.factor(role)
    except UnknownRole as e:
        raise BadLayout(e.message) from e
    if factor.dimension != grid.n:
        raise BadLayout(f"factor {role.value} has {factor.dimension} sites, grid has {grid.n}")


def position_operator(grid: GridBasis, role: Role, layout: BasisLayout) -> Operator:
    _check_factor(grid, role, layout)
    return Operator(layout, embed_matrix(grid.position_matrix(), role, layout), hermitian=True, name=f"x{role.value}")


def momentum_operator(grid: GridBasis, role: Role, layout: BasisLayout) -> Operator:
    _check_factor(grid, role, layout)
    return Operator(layout, embed_matrix(grid.momentum_matrix(), role, layout), hermitian=True, name=f"p{role.value}")


def classical_translation(grid: GridBasis, a: float, role: Role, layout: BasisLayout) -> Operator:
    """e^{i a p̂} on one factor: |x⟩ → |x − a⟩"""
    steps = grid.steps(a)
    _check_factor(grid, role, layout)
    return Operator(
        layout,
        embed_matrix(grid.shift_matrix(-steps), role, layout),
        unitary=True,
        name=f"exp(i{a:g}p{role.value})",
    )


def build_translation_unitary(grid: GridBasis, layout: BasisLayout) -> Operator:
    if layout != initial_layout(grid):
        raise BadLayout(
            f"frame change needs FrameSlot(A) ⊗ B[{grid.n}] ⊗ C[{grid.n}] on this grid, got {layout.describe()}"
        )
    n = grid.n
    nb, nc = np.divmod(np.arange(n * n), n)
    na = (n - nb) % n
    nc_new = (nc - nb + n // 2) % n
    return Operator(
        layout,
        permutation_matrix(na * n + nc_new, n * n),
        unitary=True,
        codomain=final_layout(grid),
        name="Ux",
    )


def parity_relabel(grid: GridBasis) -> Operator:
    """|x⟩_B → |−x⟩_A with B taking over the frame slot"""
    n = grid.n
    nb, nc = np.divmod(np.arange(n * n), n)
    return Operator(
        initial_layout(grid),
        permutation_matrix(((n - nb) % n) * n + nc, n * n),
        unitary=True,
        codomain=final_layout(grid),
        name="P_AB",
    )


def translation_generator_check(grid: GridBasis) -> float:
    """‖P_AB · exp(i x̂_B p̂_C) − Û_x‖ with the exponential from scipy.linalg.expm"""
    layout = initial_layout(grid)
    generator = np.kron(np.diag(grid.labels), grid.momentum_matrix())
    shifted = linalg.expm(1j * generator)
    direct = build_translation_unitary(grid, layout).dense()
    return max_abs_gap(parity_relabel(grid).dense() @ shifted, direct)


def wrap_safe_mask(grid: GridBasis, guard: int) -> np.ndarray:
    """Initial-basis sites (x, y) for which x, y, −x and y − x all stay `guard`
    sites clear of the lattice edge"""
    n = grid.n
    lo, hi = -n // 2 + guard, n // 2 - 1 - guard
    signed = np.arange(n) - n // 2
    xb, yc = np.meshgrid(signed, signed, indexing="ij")
    ok = np.ones((n, n), dtype=bool)
    for coord in (xb, yc, -xb, yc - xb):
        ok &= (coord >= lo) & (coord <= hi)
    return ok.reshape(-1)


@dataclass(frozen=True, eq=False)
class GridScenario:
    case_id: str
    grid: GridBasis
    x_o: float = 0.0
    y_o: float = 0.0
    x_1: float = 0.0
    x_2: float = 0.0
    y_1: float = 0.0
    y_2: float = 0.0
    psi: Optional[np.ndarray] = None
    c: complex = 1.0
    s: complex = 0.0
    zeta_prime: float = 0.0
    wrap_guard: int = settings.WRAP_GUARD
    momentum_checks: bool = False
    # seeds the random test vectors of the matrix-free checks
    check_seed: int = settings.DEFAULT_SEED
    # how psi was specified, echoed into the report parameters
    wavepacket: Optional[Dict[str, object]] = None

    def __post_init__(self):
        object.__setattr__(self, "case_id", normalize_case_id(self.case_id))
        if self.case_id not in GRID_CASES:
            raise BadParameters(f"unknown grid case {self.case_id!r}, expected one of {list(GRID_CASES)}")
        for name in ("x_o", "y_o", "x_1", "x_2", "y_1", "y_2"):
            self.grid.index(getattr(self, name))
        if abs(abs(self.c) ** 2 + abs(self.s) ** 2 - 1.0) > 1e-12:
            raise BadParameters("|c|² + |s|² must be 1")
        if self.case_id in ("b", "b'", "c") and self.x_1 == self.x_2:
            raise BadParameters(f"case {self.case_id} needs two distinct positions x_1 ≠ x_2")
        if self.case_id in ("a'", "b'") and self.y_1 == self.y_2:
            raise BadParameters(f"case {self.case_id} needs two distinct positions y_1 ≠ y_2")
        if self.case_id in ("a", "b", "d"):
            if self.psi is None:
                object.__setattr__(self, "psi", gaussian_packet(self.grid))
                if self.wavepacket is None:
                    object.__setattr__(self, "wavepacket", gaussian_echo(self.grid))
            psi = np.asarray(self.psi, dtype=complex)
            if psi.shape != (self.grid.n,):
                raise BadParameters(f"wavepacket has {psi.size} samples, grid has {self.grid.n}")
            if abs(np.linalg.norm(psi) - 1.0) > 1e-12:
                raise BadParameters("wavepacket must be normalized")
            object.__setattr__(self, "psi", psi)

    @property
    def phase(self) -> complex:
        return np.exp(1j * self.zeta_prime)

    def parameters(self) -> Dict[str, object]:
        return {
            "n": self.grid.n,
            "h": self.grid.h,
            "wrap_guard": self.wrap_guard,
            "x_o": self.x_o,
            "y_o": self.y_o,
            "x_1": self.x_1,
            "x_2": self.x_2,
            "y_1": self.y_1,
            "y_2": self.y_2,
            "c": [complex(self.c).real, complex(self.c).imag],
            "s": [complex(self.s).real, complex(self.s).imag],
            "zeta_prime": self.zeta_prime,
            "momentum_checks": self.momentum_checks,
            "check_seed": self.check_seed,
            **({"wavepacket": dict(self.wavepacket)} if self.wavepacket is not None and self.case_id in ("a", "b", "d") else {}),
        }


def _cyc(grid: GridBasis, x: float) -> int:
    """Site index of a label taken modulo the period"""
    return (int(round(x / grid.h)) + grid.n // 2) % grid.n


def initial_amplitudes(sc: GridScenario) -> np.ndarray:
    """Amplitude matrix Z[x, y] over (B, C)"""
    g, n = sc.grid, sc.grid.n
    c, s, e = sc.c, sc.s, sc.phase
    if sc.case_id == "a":
        return np.outer(g.ket(sc.x_o), sc.psi)
    if sc.case_id == "a'":
        return np.outer(g.ket(sc.x_o), c * g.ket(sc.y_1) + s * g.ket(sc.y_2))
    if sc.case_id == "b":
        return np.outer((g.ket(sc.x_1) + g.ket(sc.x_2)) / SQRT2, sc.psi)
    if sc.case_id == "b'":
        return np.outer((g.ket(sc.x_1) + e * g.ket(sc.x_2)) / SQRT2, c * g.ket(sc.y_1) + s * g.ket(sc.y_2))
    Z = np.zeros((n, n), dtype=complex)
    if sc.case_id == "c":
        Z[g.index(sc.x_1), _cyc(g, sc.y_o + sc.x_1)] += c
        Z[g.index(sc.x_2), _cyc(g, sc.y_o + sc.x_2)] += s
        return Z
    # d: Σ_x ψ(x)|x⟩_B|y_o + x⟩_C
    for j, x in enumerate(g.labels):
        Z[j, _cyc(g, sc.y_o + x)] = sc.psi[j]
    return Z


def closed_form_final(sc: GridScenario) -> np.ndarray:
    """Final amplitude matrix Z'[a, y] over (A, C), written out per case"""
    g, n = sc.grid, sc.grid.n
    c, s, e = sc.c, sc.s, sc.phase
    Z = np.zeros((n, n), dtype=complex)

    def ket(x):
        v = np.zeros(n, dtype=complex)
        v[_cyc(g, x)] = 1.0
        return v

    if sc.case_id == "a":
        return np.outer(ket(-sc.x_o), np.roll(sc.psi, -g.steps(sc.x_o)))
    if sc.case_id == "a'":
        return np.outer(ket(-sc.x_o), c * ket(sc.y_1 - sc.x_o) + s * ket(sc.y_2 - sc.x_o))
    if sc.case_id == "b":
        return (np.outer(ket(-sc.x_1), np.roll(sc.psi, -g.steps(sc.x_1)))
                + np.outer(ket(-sc.x_2), np.roll(sc.psi, -g.steps(sc.x_2)))) / SQRT2
    if sc.case_id == "b'":
        for w, x in ((1.0, sc.x_1), (e, sc.x_2)):
            Z += w * np.outer(ket(-x), c * ket(sc.y_1 - x) + s * ket(sc.y_2 - x)) / SQRT2
        return Z
    if sc.case_id == "c":
        return np.outer(c * ket(-sc.x_1) + s * ket(-sc.x_2), ket(sc.y_o))
    for j, x in enumerate(g.labels):
        Z[_cyc(g, -x), _cyc(g, sc.y_o)] += sc.psi[j]
    return Z


def expected_ranks(sc: GridScenario) -> Tuple[int, int]:
    if sc.case_id in ("a", "a'"):
        return 1, 1
    if sc.case_id in ("b", "b'"):
        return 1, 2
    if sc.case_id == "c":
        return (2 if min(abs(sc.c), abs(sc.s)) > 1e-6 else 1), 1
    mags = np.abs(sc.psi)
    return int(np.count_nonzero(mags > settings.FACTOR_TOL * mags.max())), 1


def check_wrap(grid: GridBasis, state: State, guard: int) -> np.ndarray:
    mask = wrap_safe_mask(grid, guard)
    leaked = float(np.sum(np.abs(state.amplitudes[~mask]) ** 2))
    if leaked > LEAK_TOL:
        raise WrapAround(
            f"{leaked:.3e} of the probability lies within {guard} sites of the lattice edge "
            f"before or after translation"
        )
    return mask


def inverse_relation_check(grid: GridBasis, x_1: float, x_2: float, y_1: float, zeta_prime: float) -> float:
    """Case (b') with C sharp at y_1 ends in the case (c) pattern at x' = −x_1, −x_2,
    y_o = y_1 with coefficients 1/√2, e^{iζ'}/√2; applying Û_x to that pattern
    returns the (b') start."""
    b_prime = GridScenario("b'", grid, x_1=x_1, x_2=x_2, y_1=y_1, y_2=y_1 + grid.h, c=1.0, s=0.0, zeta_prime=zeta_prime)
    c_case = GridScenario(
        "c", grid, x_1=-x_1, x_2=-x_2, y_o=y_1,
        c=1 / SQRT2, s=np.exp(1j * zeta_prime) / SQRT2,
    )
    u = build_translation_unitary(grid, initial_layout(grid))
    start = make_state(initial_layout(grid), initial_amplitudes(b_prime))
    pattern = initial_amplitudes(c_case).reshape(-1)
    forward = apply(u, start).amplitudes
    back = apply(u, make_state(initial_layout(grid), pattern)).amplitudes
    return max(float(np.max(np.abs(forward - pattern))), float(np.max(np.abs(back - start.amplitudes))))


def canonicality_check(grid: GridBasis, samples: int = 3, seed: int = 0) -> float:
    """Worst relative ‖Û[α,β]Û† − [ÛαÛ†, ÛβÛ†]‖ over α, β ∈ {x̂_B, x̂_C, p̂_B, p̂_C}, by random test vectors"""
    layout = initial_layout(grid)
    u = aslinearoperator(build_translation_unitary(grid, layout).matrix)
    ops = [
        aslinearoperator(op.matrix)
        for op in (
            position_operator(grid, Role.B, layout),
            position_operator(grid, Role.C, layout),
            momentum_operator(grid, Role.B, layout),
            momentum_operator(grid, Role.C, layout),
        )
    ]
    rng = np.random.default_rng(seed)
    dim = layout.dimension
    worst = 0.0
    for i, a in enumerate(ops):
        for b in ops[i + 1:]:
            ia, ib = u @ a @ u.H, u @ b @ u.H
            lhs = u @ (a @ b - b @ a) @ u.H
            rhs = ia @ ib - ib @ ia
            for _ in range(samples):
                v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
                v /= np.linalg.norm(v)
                want = rhs @ v
                scale = max(1.0, float(np.max(np.abs(want))))
                worst = max(worst, float(np.max(np.abs(lhs @ v - want))) / scale)
    return worst


def _fd_derivative(g: np.ndarray, h: float) -> np.ndarray:
    """Sixth-order central difference on a periodic sample vector"""
    def r(k):
        return np.roll(g, -k)

    return (-r(-3) + 9 * r(-2) - 45 * r(-1) + 45 * r(1) - 9 * r(2) + r(3)) / (60 * h)


def _vgap(a: NCValue, b: NCValue, support: Optional[np.ndarray] = None, with_matrix: bool = True) -> float:
    gaps = value_gap(a, b, support)
    if not with_matrix:
        gaps.pop("M")
    return max(gaps.values())


class GridQRFEngine(LoggerMixin):
    """Runs the lattice cases, their identity checks and the momentum-sector checks"""

    def run_case(self, sc: GridScenario, scenario_id: Optional[str] = None) -> ScenarioReport:
        scenario_id = scenario_id or f"grid-{sc.case_id}"
        started = time.perf_counter()
        try:
            self.log_info(f"Running grid case {sc.case_id} ({scenario_id}), N={sc.grid.n}, h={sc.grid.h}")
            g = sc.grid
            lay_i, lay_f = initial_layout(g), final_layout(g)
            u = build_translation_unitary(g, lay_i)
            u_back = u.dagger()

            psi = make_state(lay_i, initial_amplitudes(sc))
            mask = check_wrap(g, psi, sc.wrap_guard)
            phi = apply(u, psi)

            checks: List[CheckRecord] = []
            records: List[NCValueRecord] = []

            checks.append(CheckRecord.measure(
                "Ux unitary", max_abs_gap(product(u_back, u).matrix, sparse.identity(lay_i.dimension, format="csr")), 1e-15
            ))
            checks.append(CheckRecord.measure(
                "final amplitudes = closed form", np.max(np.abs(phi.amplitudes - closed_form_final(sc).reshape(-1))), 1e-12
            ))
            back = relabel_operator(lay_f, Role.A, Role.B)
            checks.append(CheckRecord.measure(
                "Ux involution (relabel A↔B, apply again)",
                np.max(np.abs(apply(u, apply(back, phi)).amplitudes - psi.amplitudes)), 0.0,
            ))

            xb_i, xc_i = position_operator(g, Role.B, lay_i), position_operator(g, Role.C, lay_i)
            xa_f, xc_f = position_operator(g, Role.A, lay_f), position_operator(g, Role.C, lay_f)
            rel_f = Operator(lay_f, xc_f.matrix - xa_f.matrix, hermitian=True, name="xC-xA")

            # operator identities, restricted to the wrap-safe sites in the final basis
            mask_f = matvec(u.matrix, mask.astype(float)) != 0
            checks.append(CheckRecord.measure(
                "P(Ux xB Ux† + xA)P = 0",
                max_abs_gap(conjugate(u, xb_i).matrix, -xa_f.matrix, support=mask_f), 1e-12,
            ))
            checks.append(CheckRecord.measure(
                "P(Ux xC Ux† − xC + xA)P = 0",
                max_abs_gap(conjugate(u, xc_i).matrix, rel_f.matrix, support=mask_f), 1e-12,
            ))

            v_xb, v_xc = ncvalue_of(xb_i, psi), ncvalue_of(xc_i, psi)
            v_xa_f, v_xc_f, v_rel_f = ncvalue_of(xa_f, phi), ncvalue_of(xc_f, phi), ncvalue_of(rel_f, phi)
            for name, side, value, state in (
                ("xB", "initial", v_xb, psi),
                ("xC", "initial", v_xc, psi),
                ("xA", "final", v_xa_f, phi),
                ("xC", "final", v_xc_f, phi),
                ("xC-xA", "final", v_rel_f, phi),
            ):
                records.append(NCValueRecord.of(name, side, value, uncertainty(value)))
                spread = (star(value, value, state).f - value.f ** 2).real
                checks.append(CheckRecord.measure(
                    f"uncertainty identity {name} ({side})", abs(uncertainty(value) - spread), 1e-10
                ))

            neg_xb = linear_combine([-1.0], [v_xb])
            checks.append(CheckRecord.measure(
                "[xA]^f = [−xB]^i", _vgap(reexpress(v_xa_f, u_back), neg_xb, mask), 1e-10
            ))
            checks.append(CheckRecord.measure(
                "[xC − xA]^f = [xC]^i", _vgap(reexpress(v_rel_f, u_back), v_xc, mask), 1e-10
            ))
            checks.append(CheckRecord.measure(
                "[xC]^f − [xA]^f = [xC − xA]^f",
                max(value_gap(linear_combine([1.0, -1.0], [v_xc_f, v_xa_f]), v_rel_f).values()), 1e-12,
            ))
            pushed = conjugate(u, xb_i)
            checks.append(CheckRecord.measure(
                "[Ux xB Ux†]^f re-expressed = [xB]^i",
                max(value_gap(reexpress(ncvalue_of(pushed, phi), u_back), v_xb).values()), 1e-10,
            ))

            checks.extend(self._case_checks(sc, v_xb, v_xc, v_xa_f, v_xc_f, u_back, mask))

            ranks = {
                "initial amplitudes B|C": factor_rank(psi.amplitudes, (g.n, g.n)),
                "final amplitudes A|C": factor_rank(phi.amplitudes, (g.n, g.n)),
            }
            want_i, want_f = expected_ranks(sc)
            checks.append(CheckRecord.measure(
                "factor rank initial", abs(ranks["initial amplitudes B|C"] - want_i), 0, details={"expected": float(want_i)}
            ))
            checks.append(CheckRecord.measure(
                "factor rank final", abs(ranks["final amplitudes A|C"] - want_f), 0, details={"expected": float(want_f)}
            ))

            checks.append(CheckRecord.measure("canonicality under Ux (sampled)", canonicality_check(g, seed=sc.check_seed), 1e-12))

            if sc.case_id == "a":
                pc_i, pc_f = momentum_operator(g, Role.C, lay_i), momentum_operator(g, Role.C, lay_f)
                v_pc_i, v_pc_f = ncvalue_of(pc_i, psi), ncvalue_of(pc_f, phi)
                records.append(NCValueRecord.of("pC", "initial", v_pc_i, uncertainty(v_pc_i)))
                records.append(NCValueRecord.of("pC", "final", v_pc_f, uncertainty(v_pc_f)))
                if sc.momentum_checks:
                    checks.extend(self.appendix_momentum_checks(sc))

            report = ScenarioReport(
                scenario_id=scenario_id,
                system="grid",
                case_id=sc.case_id,
                parameters=sc.parameters(),
                initial_state=StateSummary.of(psi),
                final_state=StateSummary.of(phi),
                ncvalues=records,
                factor_ranks=ranks,
                checks=checks,
                wall_time_s=time.perf_counter() - started,
            )
            for failed in report.failed_checks:
                self.log_warning(f"{scenario_id}: check '{failed.name}' failed, error {failed.error:.3e} > {failed.tolerance:.1e}")
            self.log_info(f"Grid case {sc.case_id} done in {report.wall_time_s:.3f}s, {len(checks)} checks")
            return report

        except Exception as e:
            self.log_error(f"Error running grid case {sc.case_id}: {str(e)}")
            raise

    def _case_checks(self, sc, v_xb, v_xc, v_xa_f, v_xc_f, u_back, mask) -> List[CheckRecord]:
        checks = []
        if sc.case_id == "a":
            checks.append(CheckRecord.measure("V[xB]^i = 0 (eigenstate)", np.max(np.abs(v_xb.V)), 1e-12))
            checks.append(CheckRecord.measure("f[xA]^f = −x_o", abs(v_xa_f.f + sc.x_o), 1e-10))
            moved = reexpress(v_xc_f, u_back)
            checks.append(CheckRecord.measure(
                "V[xC]^f re-expressed = V[xC]^i", np.max(np.abs((moved.V - v_xc.V)[mask])), 1e-10
            ))
            expected_v = np.outer(sc.grid.ket(sc.x_o), np.conj(sc.psi) * (sc.grid.labels - v_xc.f.real))
            checks.append(CheckRecord.measure(
                "V[xC]^i = ψ̄(y)(y − f)δ(x − x_o)", np.max(np.abs(v_xc.V - expected_v.reshape(-1))), 1e-12
            ))
        elif sc.case_id == "d":
            checks.append(CheckRecord.measure("V[xC]^f = 0", np.max(np.abs(v_xc_f.V)), 1e-12))
            checks.append(CheckRecord.measure("f[xC]^f = y_o", abs(v_xc_f.f - sc.y_o), 1e-10))
            checks.append(CheckRecord.measure(
                "V[xC]^i − V[xB]^i = 0 (perfect correlation)", np.max(np.abs((v_xc.V - v_xb.V)[mask])), 1e-12
            ))
            checks.append(CheckRecord.measure(
                "uncertainty (xC − xB)^i = 0", uncertainty(linear_combine([1.0, -1.0], [v_xc, v_xb])), 1e-12
            ))
        return checks

    def appendix_momentum_checks(self, sc: GridScenario) -> List[CheckRecord]:
        """Momentum-sector identities for case (a) and its band-limited companion"""
        if sc.case_id != "a":
            raise BadParameters("momentum checks run on case (a) scenarios")
        try:
            g = sc.grid
            lay_i, lay_f = initial_layout(g), final_layout(g)
            psi = make_state(lay_i, initial_amplitudes(sc))
            # companion: B a Gaussian at x_o instead of a lattice site
            width = default_width(g)
            companion = make_state(lay_i, np.outer(gaussian_packet(g, sc.x_o, width), sc.psi))
            check_wrap(g, psi, sc.wrap_guard)
            check_wrap(g, companion, sc.wrap_guard)

            u = build_translation_unitary(g, lay_i)
            u_back = u.dagger()
            pb_i, pc_i = momentum_operator(g, Role.B, lay_i), momentum_operator(g, Role.C, lay_i)
            pa_f, pc_f = momentum_operator(g, Role.A, lay_f), momentum_operator(g, Role.C, lay_f)
            checks: List[CheckRecord] = []

            phi = apply(u, psi)
            v_pb, v_pc = ncvalue_of(pb_i, psi), ncvalue_of(pc_i, psi)
            v_pc_f = ncvalue_of(pc_f, phi)
            checks.append(CheckRecord.measure(
                "[pC]^f = [pC]^i", _vgap(reexpress(v_pc_f, u_back), v_pc), 1e-9
            ))
            checks.append(CheckRecord.measure(
                "Ux pC Ux† = pC (sampled)", max_abs_gap(conjugate(u, pc_i).matrix, pc_f.matrix), 1e-9
            ))

            delta = g.ket(sc.x_o)
            p_delta = g.spectral_derivative(delta)
            f_pb = p_delta[g.index(sc.x_o)]
            want_pb = np.outer(np.conj(p_delta) - f_pb * delta, np.conj(sc.psi)).reshape(-1)
            checks.append(CheckRecord.measure(
                "V[pB]^i = (conj(p̂δ(x − x_o)) − f δ)ψ̄(y) (numpy FFT against the DFT matrix)",
                np.max(np.abs(v_pb.V - want_pb)) / max(1.0, np.max(np.abs(want_pb))), 1e-9,
            ))
            psi_bar = np.conj(sc.psi)
            want_pc = np.outer(delta, 1j * _fd_derivative(psi_bar, g.h) - v_pc.f * psi_bar).reshape(-1)
            checks.append(CheckRecord.measure(
                "V[pC]^i = (i∂_y − p_o)ψ̄(y)δ(x − x_o) (finite difference)",
                np.max(np.abs(v_pc.V - want_pc)) / np.max(np.abs(want_pc)), 1e-4,
            ))

            step_b = classical_translation(g, -g.h, Role.B, lay_i)
            step_ac = product(
                classical_translation(g, g.h, Role.A, lay_f), classical_translation(g, g.h, Role.C, lay_f)
            )
            checks.append(CheckRecord.measure(
                "Ux exp(−ih pB) Ux† = exp(ih pA) exp(ih pC)",
                max_abs_gap(conjugate(u, step_b).matrix, step_ac.matrix), 1e-12,
            ))

            phi_c = apply(u, companion)
            c_pb, c_pc = ncvalue_of(pb_i, companion), ncvalue_of(pc_i, companion)
            c_pa_f = ncvalue_of(pa_f, phi_c)
            phi_b = np.conj(gaussian_packet(g, sc.x_o, width))
            want_cpb = np.outer(1j * _fd_derivative(phi_b, g.h) - c_pb.f * phi_b, np.conj(sc.psi)).reshape(-1)
            checks.append(CheckRecord.measure(
                "V[pB]^i = (i∂_x − f)φ̄(x)ψ̄(y) (Gaussian B, finite difference)",
                np.max(np.abs(c_pb.V - want_cpb)) / np.max(np.abs(want_cpb)), 1e-4,
            ))
            summed = linear_combine([-1.0, -1.0], [c_pb, c_pc])
            checks.append(CheckRecord.measure(
                "f[pA]^f = −f[pB]^i − f[pC]^i (Gaussian B)", abs(c_pa_f.f - summed.f), 1e-9
            ))
            checks.append(CheckRecord.measure(
                "[pA]^f = −[pB]^i − [pC]^i (Gaussian B)", _vgap(reexpress(c_pa_f, u_back), summed, with_matrix=False), 1e-6
            ))
            checks.append(CheckRecord.measure(
                "[pC]^f = [pC]^i (Gaussian B)", _vgap(reexpress(ncvalue_of(pc_f, phi_c), u_back), c_pc), 1e-9
            ))
            checks.append(CheckRecord.measure(
                "Ux pB Ux† = −pA − pC on band-limited packets", self._band_limited_pushforward(g, u, pb_i, pa_f, pc_f, seed=sc.check_seed), 1e-6
            ))

            wave, p_o = plane_wave(g, float(np.real(np.vdot(sc.psi, g.spectral_derivative(sc.psi)))))
            pw = make_state(lay_i, np.outer(delta, wave))
            pw_f = apply(u, pw)
            w_pc, w_pc_f, w_pa_f = ncvalue_of(pc_i, pw), ncvalue_of(pc_f, pw_f), ncvalue_of(pa_f, pw_f)
            checks.append(CheckRecord.measure("plane wave: V[pC]^i = 0", np.max(np.abs(w_pc.V)), 1e-9))
            checks.append(CheckRecord.measure(
                "plane wave: f[pC]^f = f[pC]^i = p_o", max(abs(w_pc.f - p_o), abs(w_pc_f.f - p_o)), 1e-9
            ))
            norm_pa = float(np.linalg.norm(w_pa_f.V))
            checks.append(CheckRecord.measure(
                "plane wave: V[pA]^f ≠ 0", max(0.0, 1e-6 - norm_pa), 0.0, details={"norm": norm_pa}
            ))

            checks.extend(commutator_expectation_checks(g, width))
            return checks

        except Exception as e:
            self.log_error(f"Error in momentum checks: {str(e)}")
            raise

    def _band_limited_pushforward(self, g, u, pb_i, pa_f, pc_f, samples: int = 3, seed: int = 0) -> float:
        rng = np.random.default_rng(seed)
        width = default_width(g)
        pushed = conjugate(u, pb_i).matrix
        worst = 0.0
        for _ in range(samples):
            a0, c0 = rng.integers(-g.n // 8, g.n // 8, size=2) * g.h
            ka, kc = rng.uniform(-0.5, 0.5, size=2) / width
            v = np.kron(gaussian_packet(g, a0, width, ka), gaussian_packet(g, c0, width, kc))
            want = -(matvec(pa_f.matrix, v) + matvec(pc_f.matrix, v))
            err = np.max(np.abs(matvec(pushed, v) - want)) / max(1.0, np.max(np.abs(want)))
            worst = max(worst, float(err))
        return worst


def commutator_expectation_checks(grid: GridBasis, width: Optional[float] = None) -> List[CheckRecord]:
    """⟨[x̂, p̂]⟩ ≈ i on a centred Gaussian, directly and through star products"""
    layout = single_layout(grid)
    x, p = position_operator(grid, Role.C, layout), momentum_operator(grid, Role.C, layout)
    s = make_state(layout, gaussian_packet(grid, 0.0, width))
    direct = expectation(commutator(x, p), s)
    via_star = star_commutator(ncvalue_of(x, s), ncvalue_of(p, s), s)
    closure = max(value_gap(via_star, ncvalue_of(commutator(x, p), s)).values())
    return [
        CheckRecord.measure("⟨[x, p]⟩ = i", abs(direct - 1j), 1e-3, details={"re": direct.real, "im": direct.imag}),
        CheckRecord.measure("f_xp − f_px = ⟨[x, p]⟩ (star product)", closure, 1e-10),
    ]


# Global engine instance
grid_engine = GridQRFEngine()


def run_grid_case(sc: GridScenario, scenario_id: Optional[str] = None) -> ScenarioReport:
    return grid_engine.run_case(sc, scenario_id)


def appendix_momentum_checks(sc: GridScenario) -> List[CheckRecord]:
    return grid_engine.appendix_momentum_checks(sc)
