"""
Pydantic schemas for scenario configs and reports

ScenarioConfig is the document `run` reads; ScenarioReport is what it writes.
Complex numbers travel as {re, im}, complex vectors as paired re/im arrays.
"""

from typing import Any, Dict, List, Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationInfo, field_validator, model_validator

from app.config import settings

QUBIT_CASES = ("a'", "b'", "c")
GRID_CASES = ("a", "a'", "b", "b'", "c", "d")

# Vectors longer than this are stored sparsely (indices + nonzero entries)
DENSE_VECTOR_LIMIT = 64
SPARSE_THRESHOLD = 1e-15


def normalize_case_id(case_id: str) -> str:
    return case_id.strip().replace("′", "'")


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


# ---------------------------------------------------------------------------
# Config
# ---------------------------------------------------------------------------

class GridSpec(_Strict):
    n: int = Field(64, ge=4, description="number of lattice sites per factor (even)")
    h: float = Field(1.0, gt=0, description="lattice spacing")
    wrap_guard: int = Field(default_factory=lambda: settings.WRAP_GUARD, ge=0)

    @field_validator("n")
    @classmethod
    def _even(cls, v: int) -> int:
        if v % 2:
            raise ValueError("grid size must be even")
        return v


class LabelsSpec(_Strict):
    x_o: Optional[float] = None
    y_o: Optional[float] = None
    x_1: Optional[float] = None
    x_2: Optional[float] = None
    y_1: Optional[float] = None
    y_2: Optional[float] = None


class WavepacketSpec(_Strict):
    kind: Literal["gaussian", "explicit"] = "gaussian"
    center: float = 0.0
    width: Optional[float] = Field(None, gt=0, description="standard deviation in position units; grid default when omitted")
    momentum: float = 0.0
    samples_re: Optional[List[float]] = None
    samples_im: Optional[List[float]] = None

    @model_validator(mode="after")
    def _explicit_needs_samples(self) -> "WavepacketSpec":
        if self.kind == "explicit":
            if self.samples_re is None:
                raise ValueError("explicit wavepacket needs samples_re")
            if self.samples_im is not None and len(self.samples_im) != len(self.samples_re):
                raise ValueError("samples_re and samples_im differ in length")
        return self


class QubitParams(_Strict):
    theta: float = Field(1.0, ge=0.0, lt=np.pi)
    zeta: float = Field(0.5, ge=0.0, lt=2 * np.pi)
    zeta_prime: float = Field(0.3, ge=0.0, lt=2 * np.pi)


class ScenarioConfig(_Strict):
    scenario_id: str = Field(..., min_length=1)
    system: Literal["qubit", "grid"]
    case_id: str
    grid: Optional[GridSpec] = None
    labels: LabelsSpec = Field(default_factory=LabelsSpec)
    wavepacket: WavepacketSpec = Field(default_factory=WavepacketSpec)
    qubit: QubitParams = Field(default_factory=QubitParams)
    momentum_checks: Optional[bool] = None
    output_format: Literal["json", "csv-summary"] = "json"
    seed: Optional[int] = None

    @field_validator("case_id")
    @classmethod
    def _known_case(cls, v: str, info: ValidationInfo) -> str:
        v = normalize_case_id(v)
        allowed = QUBIT_CASES if info.data.get("system") == "qubit" else GRID_CASES
        if v not in allowed:
            raise ValueError(f"case_id must be one of {list(allowed)}")
        return v

    @model_validator(mode="after")
    def _grid_defaults(self) -> "ScenarioConfig":
        if self.system == "grid" and self.grid is None:
            self.grid = GridSpec()
        return self


# ---------------------------------------------------------------------------
# Report
# ---------------------------------------------------------------------------

class ComplexNumber(_Strict):
    re: float
    im: float

    @classmethod
    def of(cls, z: complex) -> "ComplexNumber":
        z = complex(z)
        return cls(re=z.real, im=z.imag)


class ComplexVector(_Strict):
    re: List[float]
    im: List[float]
    indices: Optional[List[int]] = None
    length: int

    @classmethod
    def of(cls, values: np.ndarray) -> "ComplexVector":
        arr = np.asarray(values, dtype=complex).reshape(-1)
        if arr.size <= DENSE_VECTOR_LIMIT:
            return cls(re=arr.real.tolist(), im=arr.imag.tolist(), length=arr.size)
        idx = np.flatnonzero(np.abs(arr) > SPARSE_THRESHOLD)
        kept = arr[idx]
        return cls(re=kept.real.tolist(), im=kept.imag.tolist(), indices=idx.tolist(), length=arr.size)

    def to_array(self) -> np.ndarray:
        out = np.zeros(self.length, dtype=complex)
        vals = np.asarray(self.re) + 1j * np.asarray(self.im)
        if self.indices is None:
            out[:] = vals
        else:
            out[np.asarray(self.indices, dtype=int)] = vals
        return out


class StateSummary(_Strict):
    layout: str
    dims: List[int]
    amplitudes: ComplexVector

    @classmethod
    def of(cls, state) -> "StateSummary":
        return cls(
            layout=state.layout.describe(),
            dims=list(state.layout.dims),
            amplitudes=ComplexVector.of(state.amplitudes),
        )


class NCValueRecord(_Strict):
    observable: str
    side: Literal["initial", "final", "reexpressed"]
    basis_id: str
    f: ComplexNumber
    V: ComplexVector
    uncertainty: Optional[float] = None

    @classmethod
    def of(cls, observable: str, side: str, value, uncertainty: Optional[float] = None) -> "NCValueRecord":
        return cls(
            observable=observable,
            side=side,
            basis_id=value.basis_id,
            f=ComplexNumber.of(value.f),
            V=ComplexVector.of(value.V),
            uncertainty=uncertainty,
        )


class CheckRecord(_Strict):
    name: str
    error: float
    tolerance: float
    passed: bool
    flag: Optional[str] = None
    details: Optional[Dict[str, float]] = None

    @classmethod
    def measure(
        cls,
        name: str,
        error: float,
        tolerance: float,
        flag: Optional[str] = None,
        details: Optional[Dict[str, float]] = None,
    ) -> "CheckRecord":
        error = float(error)
        return cls(
            name=name,
            error=error,
            tolerance=tolerance,
            passed=bool(error <= tolerance),
            flag=flag,
            details=details,
        )


class ScenarioReport(_Strict):
    scenario_id: str
    system: Literal["qubit", "grid"]
    case_id: str
    parameters: Dict[str, Any]
    initial_state: StateSummary
    final_state: StateSummary
    ncvalues: List[NCValueRecord] = Field(default_factory=list)
    factor_ranks: Dict[str, int] = Field(default_factory=dict)
    checks: List[CheckRecord] = Field(default_factory=list)
    wall_time_s: Optional[float] = None

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failed_checks(self) -> List[CheckRecord]:
        return [c for c in self.checks if not c.passed]


class SuiteSummary(_Strict):
    """Output of `verify`: one check per property with its worst error"""

    suite: str
    seed: int
    parameters: Dict[str, Any]
    checks: List[CheckRecord] = Field(default_factory=list)
    wall_time_s: Optional[float] = None

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks)
