"""Inner product on lifted operators, metric tensor and connection coefficients."""
import logging

import numpy as np

from .calculus import potential_derivatives, richardson_derivative, vector_potential
from .common_types import (
    ChristoffelSymbols,
    DegenerateMetricError,
    GNSContext,
    MetricOperator,
    MetricTensor,
    VectorPotential,
)
from .config import Settings, resolve
from .connections import Connection, adjoint_operator
from .exp_family import ExpFamilyModel, check_point, density
from .matrix_kernel import matrix_function
from .paths import CurvePath

logger = logging.getLogger(__name__)


def inner_product(gns: GNSContext, metric: MetricOperator, x: np.ndarray, y: np.ndarray) -> complex:
    """Returns (X, Y) = <T Y Omega, T X Omega>, linear in X and conjugate-linear in Y."""
    t = metric.t_matrix
    return complex(np.vdot(t @ y @ gns.omega, t @ x @ gns.omega))


def _centered(conn: Connection, potential: VectorPotential) -> tuple[np.ndarray, list[np.ndarray]]:
    """Returns T Omega and the vectors T A_p Omega with their T Omega component removed."""
    ctx = conn.context(potential.theta)
    t = conn.metric(potential.theta).t_matrix
    e = t @ ctx.omega
    norm = np.vdot(e, e).real
    centered = []
    for a in potential.components:
        u = t @ a @ ctx.omega
        centered.append(u - (np.vdot(e, u) / norm) * e)
    return e, centered


def metric_tensor(conn: Connection, potential: VectorPotential) -> MetricTensor:
    """g_pq = Re[(A_p, A_q) - (A_p, I)(I, A_q) / (I, I)].

    The result is flagged degenerate when its smallest eigenvalue is below g_floor.
    """
    _, centered = _centered(conn, potential)
    n = len(centered)
    g = np.array([[np.vdot(centered[q], centered[p]).real for q in range(n)] for p in range(n)])
    g = (g + g.T) / 2
    degenerate = bool(n and np.min(np.linalg.eigvalsh(g)) < conn.settings.g_floor)
    if degenerate:
        logger.warning(f"Degenerate metric tensor at theta={potential.theta.tolist()}")
    return MetricTensor(g=g, theta=potential.theta, degenerate=degenerate)


def gauge_shifted(potential: VectorPotential, gradient) -> VectorPotential:
    """Replaces A_p by A_p - hbar (d phi / d theta^p) I."""
    identity = np.eye(potential.components[0].shape[0])
    return VectorPotential(
        components=[a - potential.hbar * c * identity for a, c in zip(potential.components, gradient)],
        theta=potential.theta,
        hbar=potential.hbar,
        fd_step=potential.fd_step,
    )


def covariant_potentials(conn: Connection, potential: VectorPotential,
                         derivatives: list[list[np.ndarray]]) -> list[list[np.ndarray]]:
    """Returns N with N[q][p] = nabla_q A_p."""
    a = potential.components
    n = len(a)
    factor = 1j / conn.hbar
    return [[derivatives[q][p] + factor * (a[q] @ a[p] - a[p] @ a[q]) for p in range(n)] for q in range(n)]


def christoffel(conn: Connection, theta, raise_index: bool = True) -> ChristoffelSymbols:
    """Connection coefficients Gamma_{qp,r} = Re(nabla_q A_p, A_r) and Gamma^r_{qp}.

    A_r enters centered, so the metric and the coefficients use the same form.

    Raises:
        DegenerateMetricError: If raise_index is set and the metric is degenerate.
    """
    theta = np.asarray(theta, dtype=float)
    potential = vector_potential(conn, theta)
    nabla = covariant_potentials(conn, potential, potential_derivatives(conn, theta))
    metric = metric_tensor(conn, potential)
    _, centered = _centered(conn, potential)
    ctx = conn.context(theta)
    t = conn.metric(theta).t_matrix
    n = theta.size
    lower = np.zeros((n, n, n))
    for q in range(n):
        for p in range(n):
            w = t @ nabla[q][p] @ ctx.omega
            for r in range(n):
                lower[q, p, r] = np.vdot(centered[r], w).real
    upper = None
    if metric.degenerate:
        if raise_index:
            raise DegenerateMetricError(metric.min_eigenvalue)
    else:
        upper = np.einsum("rs,qps->rqp", np.linalg.inv(metric.g), lower)
    return ChristoffelSymbols(gamma_lower=lower, gamma_upper=upper, theta=theta, metric=metric)


def christoffel_orthogonality_residual(conn: Connection, theta) -> float:
    """max |Re(nabla_q A_p - Gamma^r_{qp} A_r, A_s)| with centered A_r, A_s."""
    theta = np.asarray(theta, dtype=float)
    symbols = christoffel(conn, theta)
    potential = vector_potential(conn, theta)
    nabla = covariant_potentials(conn, potential, potential_derivatives(conn, theta))
    _, centered = _centered(conn, potential)
    ctx = conn.context(theta)
    t = conn.metric(theta).t_matrix
    n = theta.size
    worst = 0.0
    for q in range(n):
        for p in range(n):
            w = t @ nabla[q][p] @ ctx.omega
            w = w - sum(symbols.gamma_upper[r, q, p] * centered[r] for r in range(n))
            for s in range(n):
                worst = max(worst, abs(np.vdot(centered[s], w).real))
    return worst


def bkm_metric(model: ExpFamilyModel, theta, settings: Settings | None = None) -> np.ndarray:
    """Tr(d_p rho d_q log rho), the Kubo-Mori Fisher information, by differences."""
    settings = resolve(settings)
    theta = check_point(model, theta)
    n = theta.size
    d_rho, d_log = [], []
    for p in range(n):
        g = np.zeros(n)
        g[p] = 1.0
        d_rho.append(richardson_derivative(lambda u: density(model, theta + u * g, settings), settings.fd_step))
        d_log.append(richardson_derivative(
            lambda u: matrix_function(density(model, theta + u * g, settings), np.log, settings),
            settings.fd_step,
        ))
    out = np.array([[np.trace(d_rho[p] @ d_log[q]).real for q in range(n)] for p in range(n)])
    return (out + out.T) / 2


## Pairing identities


def _scale(*vectors: np.ndarray) -> float:
    return max(1.0, float(np.prod([np.linalg.norm(v) for v in vectors])))


def transported_pairing_residual(
    first: Connection,
    second: Connection,
    path: CurvePath,
    s: float,
    t: float,
    x: np.ndarray,
    y: np.ndarray,
) -> tuple[float, float]:
    """|(T_t Pi X Omega_s, T_t Pi' Y Omega_s) - (X, Y)_s| for a candidate dual pair Pi, Pi'.

    Returns:
        The residual and the scale it should be compared against.
    """
    start, end = path.point(s), path.point(t)
    omega = first.context(start).omega
    t_end = first.metric(end).t_matrix
    u = t_end @ first.transport_matrix(path, s, t) @ x @ omega
    v = t_end @ second.transport_matrix(path, s, t) @ y @ omega
    reference = inner_product(first.context(start), first.metric(start), x, y)
    return abs(np.vdot(v, u) - reference), _scale(u, v)


def adjoint_pairing_residual(conn: Connection, path: CurvePath, s: float, t: float,
                             x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    """|<T_t Pi X Omega_s, T_t Y Omega_t> - <T_s X Omega_s, T_s Z Y Omega_t>| with Z = T_s^-2 Pi^dagger T_t^2."""
    start, end = path.point(s), path.point(t)
    omega_s, omega_t = conn.context(start).omega, conn.context(end).omega
    t_s, t_t = conn.metric(start).t_matrix, conn.metric(end).t_matrix
    z = adjoint_operator(conn, path, s, t)
    u = t_t @ conn.transport_matrix(path, s, t) @ x @ omega_s
    v = t_t @ y @ omega_t
    lhs = np.vdot(v, u)
    rhs = np.vdot(t_s @ z @ y @ omega_t, t_s @ x @ omega_s)
    return abs(lhs - rhs), _scale(u, v)
