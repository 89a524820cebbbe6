import os
import logging
import threading

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from .common_types import ConfigError

logger = logging.getLogger(__name__)

ENV_PREFIX = "QCONN_"


class Settings(BaseModel):
    """Numerical tolerances and defaults shared by every module."""
    model_config = ConfigDict(frozen=True)

    hermitian_tol: float = Field(default=1e-12, gt=0)
    pd_floor: float = Field(default=1e-12, gt=0)
    kubo_degeneracy_tol: float = Field(default=1e-9, gt=0)
    degeneracy_guard: float = Field(default=1e-8, gt=0)
    continuation_min_overlap: float = Field(default=0.5, gt=0, le=1)
    max_halvings: int = Field(default=20, ge=0)
    continuation_steps: int = Field(default=16, gt=0)
    hbar: float = Field(default=1.0, gt=0)
    fd_step: float = Field(default=1e-4, gt=0)
    fd_scale: float = Field(default=1.0, gt=0)
    g_floor: float = Field(default=1e-10, gt=0)
    autoparallel_tol: float = Field(default=1e-7, gt=0)
    diag_tol: float = Field(default=1e-4, gt=0)
    samples: int = Field(default=64, gt=0)
    loop_base_step: float = Field(default=0.02, gt=0)
    loop_levels: int = Field(default=4, ge=2)

    def fd_tol(self, scale: float = 1.0) -> float:
        """Tolerance for quantities obtained by a Richardson-refined central difference."""
        return max(1e-6, self.fd_scale * scale * self.fd_step ** 2)


def load_settings(**overrides) -> Settings:
    """Builds settings from QCONN_* environment variables and explicit overrides.

    Args:
        **overrides: Field values taking precedence over the environment. None is ignored.

    Returns:
        A validated Settings instance.

    Raises:
        ConfigError: If any value fails validation.
    """
    load_dotenv()
    values = {}
    for name in Settings.model_fields:
        raw = os.getenv(f"{ENV_PREFIX}{name.upper()}")
        if raw is not None:
            values[name] = raw
    values.update({k: v for k, v in overrides.items() if v is not None})
    try:
        settings = Settings(**values)
    except ValidationError as e:
        raise ConfigError(str(e)) from e
    logger.debug(f"Loaded settings: {settings.model_dump()}")
    return settings


_lock = threading.Lock()
_settings: Settings | None = None


def get_settings() -> Settings:
    global _settings
    with _lock:
        if _settings is None:
            _settings = load_settings()
        return _settings


def resolve(settings: Settings | None) -> Settings:
    return settings if settings is not None else get_settings()
