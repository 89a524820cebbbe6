from . import calculus, checks, connections, exp_family, geodesics, gns, metric_geometry
from .common_types import QuantumGeometryError, RunConfig, VerificationReport
from .config import Settings, load_settings
