"""The quantum exponential family rho_theta = exp(theta^k E_k - alpha(theta))."""
import json
import logging
from pathlib import Path
from typing import Callable, List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, ValidationError, field_validator, model_validator
from typing_extensions import Self

from .common_types import (
    ConfigError,
    InternalConsistencyError,
    ModelSpec,
    matrix_to_pairs,
    pairs_to_matrix,
)
from .config import Settings, resolve
from .matrix_kernel import as_hermitian, eig_hermitian, kubo_transform, spectral_apply

logger = logging.getLogger(__name__)


class ExpFamilyModel(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    dim_hilbert: int
    generators: List[np.ndarray]
    domain_hint: Optional[np.ndarray] = None
    name: str | None = None

    @field_validator("generators")
    @classmethod
    def hermitian_generators(cls, value: List[np.ndarray]) -> List[np.ndarray]:
        return [as_hermitian(g) for g in value]

    @model_validator(mode="after")
    def check_independent(self) -> Self:
        if not self.generators:
            raise ValueError("model needs at least one generator")
        for k, g in enumerate(self.generators):
            if g.shape != (self.dim_hilbert, self.dim_hilbert):
                raise ValueError(f"generator {k} has shape {g.shape}, expected N={self.dim_hilbert}")
        if self.domain_hint is not None and self.domain_hint.shape != (self.dim_param, 2):
            raise ValueError("domain_hint must be an (n, 2) box")
        gram = np.array([[np.trace(a @ b).real for b in self.generators] for a in self.generators])
        if np.min(np.linalg.eigvalsh(gram)) <= 1e-10:
            raise ValueError("generators are not linearly independent")
        return self

    @property
    def dim_param(self) -> int:
        return len(self.generators)

    def is_commutative(self, tol: float = 1e-12) -> bool:
        return all(
            np.max(np.abs(a @ b - b @ a)) <= tol
            for i, a in enumerate(self.generators) for b in self.generators[i + 1:]
        )

    def combination(self, theta) -> np.ndarray:
        """Returns theta^k E_k."""
        theta = check_point(self, theta)
        return sum(t * g for t, g in zip(theta, self.generators))

    def to_json_dict(self) -> dict:
        data = {"N": self.dim_hilbert, "generators": [matrix_to_pairs(g) for g in self.generators]}
        if self.domain_hint is not None:
            data["domain_hint"] = self.domain_hint.tolist()
        return data


def check_point(model: ExpFamilyModel, theta) -> np.ndarray:
    point = np.asarray(theta, dtype=float).reshape(-1)
    if point.shape != (model.dim_param,):
        raise ValueError(f"theta has {point.size} entries, model has n={model.dim_param}")
    if not np.all(np.isfinite(point)):
        raise ValueError("theta has non-finite entries")
    return point


def log_partition(model: ExpFamilyModel, theta) -> float:
    """Returns alpha(theta) = log Tr exp(theta^k E_k), shifted by the top eigenvalue."""
    w = eig_hermitian(model.combination(theta)).eigenvalues
    top = w[-1]
    return float(top + np.log(np.sum(np.exp(w - top))))


def _normalized_exp(h: np.ndarray, settings: Settings) -> np.ndarray:
    system = eig_hermitian(h, settings)
    top = system.eigenvalues[-1]
    weights = np.exp(system.eigenvalues - top)
    weights = weights / weights.sum()
    if weights.min() <= settings.pd_floor:
        raise InternalConsistencyError(
            f"density lost positivity (min eigenvalue {weights.min():.3e} <= {settings.pd_floor:.1e})"
        )
    return spectral_apply(system, lambda _: weights)


def density(model: ExpFamilyModel, theta, settings: Settings | None = None) -> np.ndarray:
    """Returns rho_theta = exp(theta^k E_k - alpha(theta)).

    Raises:
        InternalConsistencyError: If positivity or normalization fails numerically.
    """
    settings = resolve(settings)
    rho = _normalized_exp(model.combination(theta), settings)
    if abs(np.trace(rho).real - 1.0) > 1e-10:
        raise InternalConsistencyError(f"density trace {np.trace(rho).real:.12f} != 1")
    return rho


class PerturbedPath:
    """The curve t -> exp(theta^k E_k + tX - alpha(theta) - zeta_X(t))."""

    def __init__(self, model: ExpFamilyModel, theta, x, settings: Settings | None = None):
        self.settings = resolve(settings)
        self.base = model.combination(theta)
        self.x = as_hermitian(x, self.settings)
        self.alpha = log_partition(model, theta)

    def zeta(self, t: float) -> float:
        w = eig_hermitian(self.base + t * self.x, self.settings).eigenvalues
        top = w[-1]
        return float(top + np.log(np.sum(np.exp(w - top)))) - self.alpha

    def __call__(self, t: float) -> np.ndarray:
        return _normalized_exp(self.base + t * self.x, self.settings)


def perturbed_path(model: ExpFamilyModel, theta, x, settings: Settings | None = None) -> PerturbedPath:
    return PerturbedPath(model, theta, x, settings)


def tangent(model: ExpFamilyModel, theta, x, settings: Settings | None = None) -> np.ndarray:
    """Returns [X]^K - (Tr rho X) rho, the tangent of the perturbed path at t = 0."""
    rho = density(model, theta, settings)
    x = as_hermitian(x, settings)
    return kubo_transform(rho, x, settings) - np.trace(rho @ x) * rho


## Presets


SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)


def gell_mann() -> list[np.ndarray]:
    """The eight Gell-Mann matrices."""
    mats = []
    for j in range(3):
        for k in range(j + 1, 3):
            sym = np.zeros((3, 3), dtype=complex)
            sym[j, k] = sym[k, j] = 1
            anti = np.zeros((3, 3), dtype=complex)
            anti[j, k], anti[k, j] = -1j, 1j
            mats.extend([sym, anti])
    mats.append(np.diag([1, -1, 0]).astype(complex))
    mats.append(np.diag([1, 1, -2]).astype(complex) / np.sqrt(3))
    return mats


PRESETS: dict[str, Callable[[], ExpFamilyModel]] = {
    "pauli": lambda: ExpFamilyModel(dim_hilbert=2, generators=[SIGMA_X, SIGMA_Y, SIGMA_Z], name="pauli"),
    "pauli2": lambda: ExpFamilyModel(dim_hilbert=2, generators=[SIGMA_X, SIGMA_Z], name="pauli2"),
    "sigmaz1": lambda: ExpFamilyModel(dim_hilbert=2, generators=[SIGMA_Z], name="sigmaz1"),
    "gellmann3": lambda: ExpFamilyModel(dim_hilbert=3, generators=gell_mann(), name="gellmann3"),
    "diag2": lambda: ExpFamilyModel(
        dim_hilbert=3,
        generators=[np.diag([1.0, -1.0, 0.0]), np.diag([0.0, 1.0, -1.0])],
        name="diag2",
    ),
}


def preset_model(name: str) -> ExpFamilyModel:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset '{name}' (known: {', '.join(sorted(PRESETS))})", field="model")
    return PRESETS[name]()


def model_from_spec(spec: ModelSpec) -> ExpFamilyModel:
    if spec.preset:
        model = preset_model(spec.preset)
        if model.dim_hilbert != spec.N:
            raise ConfigError(f"preset '{spec.preset}' has N={model.dim_hilbert}, file says N={spec.N}", field="N")
        return model
    hint = np.asarray(spec.domain_hint, dtype=float) if spec.domain_hint else None
    try:
        return ExpFamilyModel(
            dim_hilbert=spec.N,
            generators=[pairs_to_matrix(g) for g in spec.generators],
            domain_hint=hint,
        )
    except (ValidationError, ValueError) as e:
        raise ConfigError(str(e), field="generators") from e


def load_model(source: str) -> ExpFamilyModel:
    """Resolves a preset name or a model JSON file.

    Raises:
        ConfigError: On unreadable, malformed or invalid input.
    """
    if source in PRESETS:
        return preset_model(source)
    path = Path(source)
    if not path.exists():
        raise ConfigError(f"'{source}' is neither a preset nor a readable file", field="model")
    try:
        spec = ModelSpec.model_validate_json(path.read_text())
    except ValidationError as e:
        raise ConfigError(str(e), field="model") from e
    logger.info(f"Loaded model from {path} (N={spec.N})")
    return model_from_spec(spec)


def dump_model(model: ExpFamilyModel) -> str:
    return json.dumps(model.to_json_dict())
