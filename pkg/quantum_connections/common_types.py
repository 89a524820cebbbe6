from typing import Union, Any
from pydantic import BaseModel, Field, TypeAdapter
from typing import Literal, List, Annotated, Optional
from datetime import datetime
from pydantic import model_validator, ConfigDict, field_serializer
from enum import Enum
from typing_extensions import Self

import numpy as np


class ConnectionKind(str, Enum):
    M_CONNECTION = "m"
    UNITARY_DUAL = "dual"
    ALPHA = "alpha"
    PRODUCT_FORM = "product_form"
    SYNTHETIC = "synthetic"


class PathKind(str, Enum):
    SEGMENT = "segment"
    COORDINATE_LINE = "coordinate_line"
    COMPOSITE = "composite"
    RECTANGLE_LEG = "rectangle_leg"


class HolonomyEstimator(str, Enum):
    LOOP = "loop"
    FORMULA = "formula"


def matrix_to_pairs(matrix: np.ndarray) -> list[list[list[float]]]:
    """Encodes a complex matrix as nested [re, im] pairs."""
    m = np.asarray(matrix, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def pairs_to_matrix(pairs: list[list[list[float]]]) -> np.ndarray:
    """Decodes nested [re, im] pairs into a complex matrix."""
    arr = np.asarray(pairs, dtype=float)
    if arr.ndim != 3 or arr.shape[-1] != 2:
        raise ValueError(f"expected a matrix of [re, im] pairs, got shape {arr.shape}")
    return arr[..., 0] + 1j * arr[..., 1]


class ArrayModel(BaseModel):
    """Immutable record holding numpy arrays."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)


## Kernel and representation records


class EigenSystem(ArrayModel):
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    source_dim: int

    @model_validator(mode="after")
    def check_unitary(self) -> Self:
        if np.any(np.diff(self.eigenvalues) < 0):
            raise ValueError("eigenvalues must be sorted ascending")
        u = self.eigenvectors
        defect = np.max(np.abs(u.conj().T @ u - np.eye(self.source_dim)))
        if defect > 1e-10:
            raise ValueError(f"eigenvectors are not unitary (defect {defect:.2e})")
        return self


class GNSContext(ArrayModel):
    theta: np.ndarray
    probs: np.ndarray
    basis: np.ndarray
    omega: np.ndarray
    reference_tag: str

    @model_validator(mode="after")
    def check_wave_vector(self) -> Self:
        n = self.probs.shape[0]
        rebuilt = np.einsum("ai,bi,i->ab", self.basis, self.basis, np.sqrt(self.probs)).reshape(n * n)
        if np.max(np.abs(rebuilt - self.omega)) > 1e-12:
            raise ValueError("omega does not match sum_i sqrt(p_i) psi_i (x) psi_i")
        if abs(np.linalg.norm(self.omega) - 1.0) > 1e-12:
            raise ValueError("omega is not normalized")
        return self

    @property
    def dim_hilbert(self) -> int:
        return self.probs.shape[0]

    def to_json_dict(self) -> dict[str, Any]:
        return {
            "theta": [float(x) for x in self.theta],
            "probs": [float(x) for x in self.probs],
            "basis": matrix_to_pairs(self.basis),
            "reference_tag": self.reference_tag,
        }

    @classmethod
    def from_json_dict(cls, data: dict[str, Any]) -> "GNSContext":
        probs = np.asarray(data["probs"], dtype=float)
        basis = pairs_to_matrix(data["basis"])
        n = probs.shape[0]
        omega = np.einsum("ai,bi,i->ab", basis, basis, np.sqrt(probs)).reshape(n * n)
        return cls(
            theta=np.asarray(data["theta"], dtype=float),
            probs=probs,
            basis=basis,
            omega=omega,
            reference_tag=data.get("reference_tag", "cache"),
        )


class MetricOperator(ArrayModel):
    """T = rho^(-1/4) (x) I together with the eigen-data it was built from."""
    t_matrix: np.ndarray
    theta: np.ndarray
    probs: np.ndarray
    basis: np.ndarray

    def power(self, lam: float) -> np.ndarray:
        """Returns T**lam = rho^(-lam/4) (x) I."""
        n = self.probs.shape[0]
        b = self.basis
        factor = (b * self.probs ** (-lam / 4.0)) @ b.conj().T
        return np.kron(factor, np.eye(n))

    @property
    def inverse(self) -> np.ndarray:
        return self.power(-1.0)

    @property
    def squared(self) -> np.ndarray:
        return self.power(2.0)


class TransportOperator(ArrayModel):
    matrix: np.ndarray
    s: float
    t: float
    connection_kind: ConnectionKind
    path_kind: PathKind


## Differential-calculus records


class VectorPotential(ArrayModel):
    components: list[np.ndarray]
    theta: np.ndarray
    hbar: float
    fd_step: float

    @property
    def dim_param(self) -> int:
        return len(self.components)

    def along(self, direction: np.ndarray) -> np.ndarray:
        """Returns v^p A_p."""
        return sum(v * a for v, a in zip(direction, self.components))

    def hermiticity_defect(self) -> float:
        return max(float(np.linalg.norm(a - a.conj().T, 2)) for a in self.components)


class HolonomyTensor(ArrayModel):
    components: list[list[np.ndarray]]
    theta: np.ndarray
    estimator: HolonomyEstimator

    def antisymmetry_defect(self) -> float:
        n = len(self.components)
        if n == 0:
            return 0.0
        return max(
            float(np.linalg.norm(self.components[p][q] + self.components[q][p], 2))
            for p in range(n) for q in range(n)
        )

    def max_norm(self) -> float:
        return max((float(np.linalg.norm(h, 2)) for row in self.components for h in row), default=0.0)


class ForceTensor(ArrayModel):
    components: list[list[np.ndarray]]
    theta: np.ndarray

    def antisymmetry_defect(self) -> float:
        n = len(self.components)
        if n == 0:
            return 0.0
        return max(
            float(np.linalg.norm(self.components[p][q] + self.components[q][p], 2))
            for p in range(n) for q in range(n)
        )


## Metric geometry records


class MetricTensor(ArrayModel):
    g: np.ndarray
    theta: np.ndarray
    degenerate: bool = False

    @model_validator(mode="after")
    def check_symmetric(self) -> Self:
        if self.g.size and np.max(np.abs(self.g - self.g.T)) > 1e-10:
            raise ValueError("metric tensor is not symmetric")
        if self.g.size and np.min(np.linalg.eigvalsh(self.g)) < -1e-10:
            raise ValueError("metric tensor has a negative eigenvalue")
        return self

    @property
    def min_eigenvalue(self) -> float:
        return float(np.min(np.linalg.eigvalsh(self.g))) if self.g.size else 0.0

    def length(self, velocity: np.ndarray) -> float:
        """Returns g_pq v^p v^q."""
        v = np.asarray(velocity, dtype=float)
        return float(v @ self.g @ v)


class ChristoffelSymbols(ArrayModel):
    gamma_lower: np.ndarray
    gamma_upper: np.ndarray | None
    theta: np.ndarray
    metric: MetricTensor


## Geodesics


class GeodesicState(ArrayModel):
    theta: np.ndarray
    velocity: np.ndarray
    time: float

    @model_validator(mode="after")
    def check_finite(self) -> Self:
        if not (np.all(np.isfinite(self.theta)) and np.all(np.isfinite(self.velocity))):
            raise ValueError("geodesic state has non-finite entries")
        return self


class GeodesicTrace(ArrayModel):
    states: list[GeodesicState]
    step: float
    connection_kind: ConnectionKind
    tangent_length: list[float]
    truncated: bool = False
    failure: str | None = None

    @property
    def times(self) -> np.ndarray:
        return np.array([s.time for s in self.states])

    def relative_drift(self) -> float:
        """Max relative deviation of the tangent length from its initial value."""
        lengths = np.asarray(self.tangent_length)
        if lengths.size == 0 or lengths[0] == 0.0:
            return 0.0
        return float(np.max(np.abs(lengths - lengths[0])) / abs(lengths[0]))


class GeodesicDiagnostics(BaseModel):
    drift_a: list[float]
    residual_a: float
    residual_b: float
    residual_c: float
    expectation: float
    wave_covariance_defect: float


## JSON inputs


class ModelSpec(BaseModel):
    N: int = Field(gt=0)
    generators: Optional[List[List[List[List[float]]]]] = None
    preset: str | None = None
    domain_hint: Optional[List[List[float]]] = None

    @model_validator(mode="after")
    def check_source(self) -> Self:
        if not (self.generators or self.preset):
            raise ValueError("Either 'generators' or 'preset' must be present in the model")
        if self.generators and self.preset:
            raise ValueError("Only one of 'generators' or 'preset' can be present in the model")
        return self


class SegmentSpec(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    kind: Literal["segment"] = "segment"
    start: List[float] = Field(alias="from")
    to: List[float]
    samples: int = Field(default=64, gt=0)


class CoordinateLineSpec(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    kind: Literal["coordinate_line"] = "coordinate_line"
    start: List[float] = Field(alias="from")
    p: int = Field(ge=0)
    samples: int = Field(default=64, gt=0)


class RectangleSpec(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    kind: Literal["rectangle"] = "rectangle"
    start: List[float] = Field(alias="from")
    to: List[float]
    samples: int = Field(default=64, gt=0)


PathSpec = TypeAdapter(
    Annotated[
        Union[SegmentSpec, CoordinateLineSpec, RectangleSpec],
        Field(discriminator="kind"),
    ]
)


## Reports


class CheckRecord(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    check: str
    anchor: str
    theta: List[float]
    residual: float
    tolerance: float
    passed: bool = Field(alias="pass")
    informational: bool = False
    detail: dict[str, Any] | None = None

    @model_validator(mode="after")
    def check_verdict(self) -> Self:
        if self.passed != bool(self.residual <= self.tolerance):
            raise ValueError("pass must equal residual <= tolerance")
        return self

    @classmethod
    def measure(
        cls,
        check: str,
        anchor: str,
        theta: Any,
        residual: float,
        tolerance: float,
        informational: bool = False,
        detail: dict[str, Any] | None = None,
    ) -> "CheckRecord":
        residual = float(residual)
        return cls(
            check=check,
            anchor=anchor,
            theta=[float(x) for x in np.atleast_1d(theta)],
            residual=residual,
            tolerance=float(tolerance),
            passed=bool(residual <= tolerance),
            informational=informational,
            detail=detail,
        )


class ReportSummary(BaseModel):
    total: int = 0
    passed: int = 0
    failed: int = 0
    informational: int = 0


class VerificationReport(BaseModel):
    suite: str
    records: List[CheckRecord] = Field(default_factory=list)
    summary: ReportSummary = Field(default_factory=ReportSummary)
    config: dict[str, Any] = Field(default_factory=dict)
    errors: List[str] = Field(default_factory=list)
    timestamp: datetime = Field(default_factory=datetime.now)

    @field_serializer("timestamp")
    def serialize_dt(self, dt: datetime, _info):
        return dt.isoformat()

    @model_validator(mode="after")
    def tally(self) -> Self:
        counted = [r for r in self.records if not r.informational]
        self.summary = ReportSummary(
            total=len(self.records),
            passed=sum(r.passed for r in counted),
            failed=sum(not r.passed for r in counted),
            informational=len(self.records) - len(counted),
        )
        return self

    @property
    def all_passed(self) -> bool:
        return self.summary.failed == 0 and not self.errors

    def failed_records(self) -> list[CheckRecord]:
        return [r for r in self.records if not r.informational and not r.passed]

    def to_json(self) -> str:
        return self.model_dump_json(by_alias=True, indent=2)

    def fingerprint(self) -> str:
        """JSON dump without the timestamp, for determinism comparisons."""
        return self.model_dump_json(by_alias=True, exclude={"timestamp"})


class RunConfig(BaseModel):
    model: str = "pauli2"
    theta: List[float]
    connection: Literal["m", "dual", "alpha", "synthetic"] = "m"
    alpha: float = 0.0
    fd_step: float | None = Field(default=None, gt=0)
    samples: int | None = Field(default=None, gt=0)
    seed: int = Field(default=0, ge=0)
    out: str | None = None
    workers: int = Field(default=1, gt=0)
    initial_velocity: Optional[List[float]] = None
    horizon: float = Field(default=1.0, ge=0)
    geodesic_step: float = Field(default=1 / 256, gt=0)

    @model_validator(mode="after")
    def check_velocity(self) -> Self:
        if self.initial_velocity is not None and len(self.initial_velocity) != len(self.theta):
            raise ValueError("initial_velocity and theta must have the same length")
        return self


## Error types


class QuantumGeometryError(Exception):
    """Base exception for numerical failures of the geometry stack."""
    exit_code: int = 3


class EigenSolverError(QuantumGeometryError):
    """The Hermitian eigen-solver did not converge."""
    def __init__(self, norm: float, message: str):
        self.norm = norm
        super().__init__(f"Eigen-solver failed on matrix with norm {norm:.3e}: {message}")


class SpectrumDomainError(QuantumGeometryError):
    """A spectral function is undefined at an eigenvalue."""
    def __init__(self, eigenvalue: float, message: str = "function undefined on spectrum"):
        self.eigenvalue = eigenvalue
        super().__init__(f"{message} (eigenvalue {eigenvalue:.6e})")


class DegeneracyError(QuantumGeometryError):
    """Two eigenvalues collide closer than the degeneracy guard."""
    def __init__(self, eigenvalues: tuple[float, float], guard: float):
        self.eigenvalues = eigenvalues
        super().__init__(
            f"Near-degenerate spectrum: eigenvalues {eigenvalues[0]:.12g} and "
            f"{eigenvalues[1]:.12g} closer than {guard:.1e}"
        )


class ContinuationLostError(QuantumGeometryError):
    """Eigenbasis overlap matching became ambiguous."""
    def __init__(self, overlap: float):
        self.overlap = overlap
        super().__init__(
            f"Basis continuation lost (best squared overlap {overlap:.3f}); use a smaller path step"
        )


class InternalConsistencyError(QuantumGeometryError):
    """A computed quantity violates an invariant it must satisfy."""
    pass


class SingularTransportError(QuantumGeometryError):
    """A transport frame could not be inverted."""
    def __init__(self, condition_number: float):
        self.condition_number = condition_number
        super().__init__(f"Singular transport frame (condition number {condition_number:.3e})")


class StepUnderflowError(QuantumGeometryError):
    """Finite-difference step below the representable range."""
    def __init__(self, step: float):
        self.step = step
        super().__init__(f"Finite-difference step {step:.3e} is below 1e-12")


class DegenerateMetricError(QuantumGeometryError):
    """Index raising requested on a degenerate metric tensor."""
    def __init__(self, min_eigenvalue: float):
        self.min_eigenvalue = min_eigenvalue
        super().__init__(f"Degenerate metric tensor (min eigenvalue {min_eigenvalue:.3e})")


class EstimatorError(QuantumGeometryError):
    """An extrapolated estimate failed to converge."""
    def __init__(self, residuals: list[float]):
        self.residuals = residuals
        seq = ", ".join(f"{r:.3e}" for r in residuals)
        super().__init__(f"Extrapolation did not converge; residual sequence [{seq}]")


class StepRejectedError(QuantumGeometryError):
    """An integration stage failed to evaluate."""
    pass


class ConfigError(QuantumGeometryError):
    """Invalid run configuration or input file."""
    exit_code: int = 2

    def __init__(self, message: str, field: str | None = None):
        self.field = field
        prefix = f"{field}: " if field else ""
        super().__init__(f"Configuration error: {prefix}{message}")
