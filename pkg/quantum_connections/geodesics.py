"""Autoparallel operator fields and geodesics of the induced connection on parameter space."""
import logging
from abc import ABC, abstractmethod
from typing import Callable

import numpy as np
from scipy import linalg

from .calculus import covariant_derivative_along, vector_potential
from .common_types import (
    ConnectionKind,
    DegenerateMetricError,
    GeodesicDiagnostics,
    GeodesicState,
    GeodesicTrace,
    MetricTensor,
    QuantumGeometryError,
    StepRejectedError,
)
from .config import Settings, resolve
from .connections import Connection, ProductFormConnection
from .metric_geometry import christoffel, inner_product
from .paths import CurvePath, segment

logger = logging.getLogger(__name__)

OperatorField = Callable[[np.ndarray], np.ndarray]


## Autoparallel fields


def autoparallel_residual(conn: Connection, field: OperatorField, path: CurvePath, sample_count: int = 8) -> float:
    """max over sampled s < t of |Pi^t_s X(gamma_s) - X(gamma_t) Pi^t_s|, relative to the operator scale."""
    times = np.linspace(0.0, 1.0, sample_count)
    values = [field(path.point(t)) for t in times]
    worst = 0.0
    for i, s in enumerate(times):
        for j in range(i + 1, len(times)):
            pi = conn.transport_matrix(path, s, times[j])
            defect = np.linalg.norm(pi @ values[i] - values[j] @ pi, 2)
            scale = max(1.0, np.linalg.norm(pi, 2) * max(np.linalg.norm(values[i], 2), np.linalg.norm(values[j], 2)))
            worst = max(worst, float(defect / scale))
    return worst


def is_autoparallel(conn: Connection, field: OperatorField, path: CurvePath, sample_count: int = 8) -> bool:
    return autoparallel_residual(conn, field, path, sample_count) < conn.settings.autoparallel_tol


def frame_field(conn: ProductFormConnection, a: np.ndarray) -> OperatorField:
    """theta -> V(theta) A V(theta)^-1, autoparallel along every path."""
    def field(theta: np.ndarray) -> np.ndarray:
        v, v_inv = conn.frame_pair(theta)
        return v @ a @ v_inv
    return field


def field_sum(x: OperatorField, y: OperatorField) -> OperatorField:
    return lambda theta: x(theta) + y(theta)


def field_product(x: OperatorField, y: OperatorField) -> OperatorField:
    return lambda theta: x(theta) @ y(theta)


def field_adjoint(x: OperatorField) -> OperatorField:
    return lambda theta: x(theta).conj().T


def alpha_conjugate(conn: Connection, field: OperatorField, alpha: float) -> OperatorField:
    """theta -> T^-(1-alpha) X T^(1-alpha)."""
    exponent = 1.0 - alpha
    return lambda theta: conn.metric_power(theta, -exponent) @ field(theta) @ conn.metric_power(theta, exponent)


def covariant_consistency(conn: Connection, field: OperatorField, path: CurvePath, times=(0.25, 0.5, 0.75)) -> float:
    """max |nabla_{gamma'} X| at sampled points of path."""
    return max(
        float(np.linalg.norm(covariant_derivative_along(conn, field, path.point(t), path.velocity(t)), 2))
        for t in times
    )


## Geodesic integration


class GeodesicSystem(ABC):
    """Supplies Gamma^s_{pq} and g_pq at a parameter point."""

    @abstractmethod
    def evaluate(self, theta: np.ndarray) -> tuple[np.ndarray, MetricTensor]:
        pass

    def acceleration(self, gamma: np.ndarray, velocity: np.ndarray) -> np.ndarray:
        return -np.einsum("spq,p,q->s", gamma, velocity, velocity)


class ConnectionGeodesics(GeodesicSystem):

    def __init__(self, conn: Connection):
        self.conn = conn

    @property
    def kind(self) -> ConnectionKind:
        return self.conn.kind

    def evaluate(self, theta: np.ndarray) -> tuple[np.ndarray, MetricTensor]:
        symbols = christoffel(self.conn, theta, raise_index=True)
        return symbols.gamma_upper, symbols.metric


class ConstantChristoffel(GeodesicSystem):
    """Fixed Gamma^s_{pq} with a fixed metric; free motion when Gamma is zero."""

    kind = ConnectionKind.SYNTHETIC

    def __init__(self, gamma, metric=None):
        self.gamma = np.asarray(gamma, dtype=float)
        n = self.gamma.shape[0]
        self.g = np.eye(n) if metric is None else np.asarray(metric, dtype=float)

    def evaluate(self, theta: np.ndarray) -> tuple[np.ndarray, MetricTensor]:
        if np.min(np.linalg.eigvalsh(self.g)) <= 0:
            raise DegenerateMetricError(float(np.min(np.linalg.eigvalsh(self.g))))
        return self.gamma, MetricTensor(g=self.g, theta=np.asarray(theta, dtype=float))


def _as_system(conn: Connection | GeodesicSystem) -> GeodesicSystem:
    return conn if isinstance(conn, GeodesicSystem) else ConnectionGeodesics(conn)


def geodesic_step(
    conn: Connection | GeodesicSystem,
    state: GeodesicState,
    step: float,
    gamma: np.ndarray | None = None,
) -> GeodesicState:
    """One RK4 step of theta'' = -Gamma(theta)(theta', theta').

    Raises:
        DegenerateMetricError: If the metric at state.theta is degenerate.
        StepRejectedError: If an inner stage fails to evaluate.
    """
    system = _as_system(conn)
    theta, v = state.theta, state.velocity
    if gamma is None:
        gamma, _ = system.evaluate(theta)
    k1r = v
    k1v = system.acceleration(gamma, v)
    try:
        k2r = v + k1v * step * 0.5
        k2v = system.acceleration(system.evaluate(theta + k1r * step * 0.5)[0], k2r)
        k3r = v + k2v * step * 0.5
        k3v = system.acceleration(system.evaluate(theta + k2r * step * 0.5)[0], k3r)
        k4r = v + k3v * step
        k4v = system.acceleration(system.evaluate(theta + k3r * step)[0], k4r)
    except QuantumGeometryError as e:
        raise StepRejectedError(f"Christoffel evaluation failed inside the step from t={state.time:.6g}: {e}") from e
    return GeodesicState(
        theta=theta + (1 / 6) * step * (k1r + 2 * k2r + 2 * k3r + k4r),
        velocity=v + (1 / 6) * step * (k1v + 2 * k2v + 2 * k3v + k4v),
        time=state.time + step,
    )


def integrate_geodesic(
    conn: Connection | GeodesicSystem,
    initial: GeodesicState,
    horizon: float,
    step: float,
) -> GeodesicTrace:
    """Integrates the geodesic equation with fixed RK4 steps over [0, horizon].

    A failure after the first state truncates the trace and flags it.

    Raises:
        ValueError: If step is not positive or horizon is negative.
        DegenerateMetricError: If the metric at the initial point is degenerate.
    """
    if step <= 0 or horizon < 0:
        raise ValueError(f"need step > 0 and horizon >= 0, got step={step}, horizon={horizon}")
    system = _as_system(conn)
    kind = getattr(system, "kind", ConnectionKind.SYNTHETIC)
    if not np.any(initial.velocity):
        return GeodesicTrace(states=[initial], step=step, connection_kind=kind, tangent_length=[0.0])

    gamma, metric = system.evaluate(initial.theta)
    states, lengths = [initial], [metric.length(initial.velocity)]
    truncated, failure = False, None
    current = initial
    for k in range(int(round(horizon / step))):
        try:
            advanced = geodesic_step(system, current, step, gamma)
            gamma, metric = system.evaluate(advanced.theta)
        except (QuantumGeometryError, ValueError) as e:
            logger.warning(f"Geodesic truncated at t={current.time:.6g}: {e}")
            truncated, failure = True, str(e)
            break
        current = GeodesicState(theta=advanced.theta, velocity=advanced.velocity,
                                time=initial.time + (k + 1) * step)
        states.append(current)
        lengths.append(metric.length(current.velocity))
    trace = GeodesicTrace(
        states=states,
        step=step,
        connection_kind=kind,
        tangent_length=lengths,
        truncated=truncated,
        failure=failure,
    )
    logger.info(f"Integrated {len(states) - 1} geodesic steps, relative drift {trace.relative_drift():.3e}")
    return trace


def reversed_state(state: GeodesicState) -> GeodesicState:
    return GeodesicState(theta=state.theta, velocity=-state.velocity, time=0.0)


def geodesic_diagnostics(conn: Connection, trace: GeodesicTrace) -> GeodesicDiagnostics:
    """Measures how far an integrated trace is from an operator-level geodesic.

    (a) drift of gamma'^p A_p(gamma_t) from its initial value, (b) residual of
    dA_p/dt = (i/hbar)[A_p, gamma'^q A_q] by differences along the trace,
    (c) residual of the formal solution exp(-itH/hbar) A_p(0) exp(itH/hbar).
    Also reports max |(A_p Omega, Omega)| and max |Pi Omega_k - Omega_(k+1)|
    between consecutive states.
    """
    states = trace.states
    potentials = [vector_potential(conn, s.theta) for s in states]
    generators = [pot.along(s.velocity) for pot, s in zip(potentials, states)]
    h0 = generators[0]
    drift = [float(np.linalg.norm(g - h0, 2)) for g in generators]

    factor = 1j / conn.hbar
    residual_b = 0.0
    for k in range(1, len(states) - 1):
        for p, a in enumerate(potentials[k].components):
            rate = (potentials[k + 1].components[p] - potentials[k - 1].components[p]) / (2 * trace.step)
            expected = factor * (a @ generators[k] - generators[k] @ a)
            residual_b = max(residual_b, float(np.linalg.norm(rate - expected, 2)))

    residual_c = 0.0
    for s, pot in zip(states, potentials):
        elapsed = s.time - states[0].time
        u = linalg.expm(-factor * elapsed * h0)
        for p, a in enumerate(pot.components):
            formal = u @ potentials[0].components[p] @ u.conj().T
            residual_c = max(residual_c, float(np.linalg.norm(a - formal, 2)))

    identity = np.eye(conn.dim, dtype=complex)
    expectation = 0.0
    for s, pot in zip(states, potentials):
        ctx, metric = conn.context(s.theta), conn.metric(s.theta)
        for a in pot.components:
            expectation = max(expectation, abs(inner_product(ctx, metric, a, identity)))

    covariance = 0.0
    for before, after in zip(states, states[1:]):
        leg = segment(before.theta, after.theta)
        moved = conn.transport_matrix(leg, 0.0, 1.0) @ conn.context(before.theta).omega
        covariance = max(covariance, float(np.linalg.norm(moved - conn.context(after.theta).omega)))

    return GeodesicDiagnostics(
        drift_a=drift,
        residual_a=max(drift),
        residual_b=residual_b,
        residual_c=residual_c,
        expectation=expectation,
        wave_covariance_defect=covariance,
    )


def conservation_preconditions(diagnostics: GeodesicDiagnostics, settings: Settings | None = None) -> dict[str, bool]:
    """Which hypotheses of tangent-length conservation hold along a trace, within diag_tol."""
    settings = resolve(settings)
    return {
        "vanishing_expectation": diagnostics.expectation <= settings.diag_tol,
        "operator_geodesic": diagnostics.residual_a <= settings.diag_tol,
        "covariant_wave_vector": diagnostics.wave_covariance_defect <= settings.diag_tol,
    }
