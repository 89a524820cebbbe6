"""Finite-difference layer: vector potentials, covariant derivatives, force and holonomy tensors."""
import logging
from typing import Callable

import numpy as np

from .common_types import (
    CheckRecord,
    EstimatorError,
    ForceTensor,
    HolonomyEstimator,
    HolonomyTensor,
    StepUnderflowError,
    VectorPotential,
)
from .config import Settings
from .connections import Connection
from .paths import CurvePath, coordinate_line, line

logger = logging.getLogger(__name__)

OperatorField = Callable[[np.ndarray], np.ndarray]


def check_step(h: float) -> float:
    if not h >= 1e-12:
        raise StepUnderflowError(h)
    return h


def central_difference(f: Callable[[float], np.ndarray], h: float) -> np.ndarray:
    return (f(h) - f(-h)) / (2 * h)


def richardson_derivative(f: Callable[[float], np.ndarray], h: float) -> np.ndarray:
    """Central difference at 0 refined by one Richardson level, (4 D(h/2) - D(h)) / 3."""
    check_step(h)
    return (4 * central_difference(f, h / 2) - central_difference(f, h)) / 3


def extrapolate(estimates: list[np.ndarray]) -> tuple[np.ndarray, list[float]]:
    """Richardson table for estimates at steps s0 / 2^k with error in powers 1, 2, 3, ...

    Returns:
        The fully extrapolated value and the norms of successive diagonal differences.
    """
    table = [[np.asarray(e)] for e in estimates]
    for k in range(1, len(estimates)):
        for j in range(1, k + 1):
            prev, above = table[k][j - 1], table[k - 1][j - 1]
            table[k].append(prev + (prev - above) / (2 ** j - 1))
    diagonal = [table[k][k] for k in range(len(estimates))]
    residuals = [float(np.linalg.norm(b - a)) for a, b in zip(diagonal, diagonal[1:])]
    return diagonal[-1], residuals


def fd_tolerance(settings: Settings, potential: VectorPotential | None = None) -> float:
    """fd_tol with the constant scaled by the squared operator norm of the potential."""
    if potential is None or not potential.components:
        return settings.fd_tol()
    scale = 1.0 + max(float(np.linalg.norm(a, 2)) for a in potential.components) ** 2
    return settings.fd_tol(scale)


## Vector potential


def vector_potential(conn: Connection, theta) -> VectorPotential:
    """A_p = i hbar d/dt Pi(gamma_p^theta)^t_0 at t = 0.

    Raises:
        StepUnderflowError: If fd_step is below 1e-12.
    """
    settings = conn.settings
    h = check_step(settings.fd_step)
    theta = np.asarray(theta, dtype=float)
    components = []
    for p in range(theta.size):
        path = coordinate_line(theta, p)
        derivative = richardson_derivative(lambda u: conn.transport_matrix(path, 0.0, u), h)
        components.append(1j * conn.hbar * derivative)
    return VectorPotential(components=components, theta=theta, hbar=conn.hbar, fd_step=h)


def directional_potential(conn: Connection, theta, direction) -> np.ndarray:
    """i hbar d/dt Pi^t_0 along the straight line theta + t v."""
    path = line(theta, direction)
    derivative = richardson_derivative(lambda u: conn.transport_matrix(path, 0.0, u), conn.settings.fd_step)
    return 1j * conn.hbar * derivative


def potential_derivatives(conn: Connection, theta) -> list[list[np.ndarray]]:
    """Returns D with D[q][p] = dA_p / dtheta^q."""
    theta = np.asarray(theta, dtype=float)
    h = check_step(conn.settings.fd_step)
    n = theta.size
    derivatives = []
    for q in range(n):
        g = np.zeros(n)
        g[q] = 1.0
        cache: dict[float, VectorPotential] = {}

        def components(u: float) -> np.ndarray:
            if u not in cache:
                cache[u] = vector_potential(conn, theta + u * g)
            return np.stack(cache[u].components)

        stacked = richardson_derivative(components, h)
        derivatives.append(list(stacked))
    return derivatives


def schrodinger_residual(conn: Connection, path: CurvePath, times=(0.25, 0.5, 0.75)) -> float:
    """max_t |i hbar dOmega/dt - gamma'^p A_p(gamma_t) Omega_t| along path."""
    h = check_step(conn.settings.fd_step)
    worst = 0.0
    for t in times:
        omega_dot = richardson_derivative(lambda u: conn.context(path.point(t + u)).omega, h)
        potential = vector_potential(conn, path.point(t))
        rhs = potential.along(path.velocity(t)) @ conn.context(path.point(t)).omega
        worst = max(worst, float(np.linalg.norm(1j * conn.hbar * omega_dot - rhs)))
    return worst


## Covariant derivative


def covariant_derivative(
    conn: Connection,
    field: OperatorField,
    theta,
    p: int,
    potential: VectorPotential | None = None,
) -> np.ndarray:
    """nabla_p X = dX/dtheta^p + (i/hbar) [A_p, X]."""
    theta = np.asarray(theta, dtype=float)
    potential = potential or vector_potential(conn, theta)
    g = np.zeros(theta.size)
    g[p] = 1.0
    dx = richardson_derivative(lambda u: field(theta + u * g), conn.settings.fd_step)
    x = field(theta)
    a = potential.components[p]
    return dx + (1j / conn.hbar) * (a @ x - x @ a)


def covariant_derivative_along(conn: Connection, field: OperatorField, theta, direction,
                               potential: VectorPotential | None = None) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    potential = potential or vector_potential(conn, theta)
    result = np.zeros_like(field(theta), dtype=complex)
    for p, v in enumerate(direction):
        if v != 0.0:
            result += v * covariant_derivative(conn, field, theta, p, potential)
    return result


def transported_derivative(conn: Connection, field: OperatorField, theta, direction) -> np.ndarray:
    """d/dt [Pi^0_t X(gamma_t) Pi^t_0] at t = 0 along theta + t v."""
    path = line(theta, direction)

    def pulled_back(u: float) -> np.ndarray:
        forward = conn.transport_matrix(path, 0.0, u)
        back = conn.transport_matrix(path, u, 0.0)
        return back @ field(path.point(u)) @ forward

    return richardson_derivative(pulled_back, conn.settings.fd_step)


## Force and holonomy


def force_tensor(conn: Connection, theta, derivatives: list[list[np.ndarray]] | None = None) -> ForceTensor:
    """F_pq = dA_p/dtheta^q - dA_q/dtheta^p."""
    theta = np.asarray(theta, dtype=float)
    d = derivatives if derivatives is not None else potential_derivatives(conn, theta)
    n = theta.size
    components = [[d[q][p] - d[p][q] for q in range(n)] for p in range(n)]
    return ForceTensor(components=components, theta=theta)


def holonomy_formula(
    conn: Connection,
    theta,
    potential: VectorPotential | None = None,
    derivatives: list[list[np.ndarray]] | None = None,
) -> HolonomyTensor:
    """H_pq = F_pq - (i/hbar) [A_p, A_q]."""
    theta = np.asarray(theta, dtype=float)
    potential = potential or vector_potential(conn, theta)
    force = force_tensor(conn, theta, derivatives)
    a = potential.components
    n = theta.size
    factor = 1j / conn.hbar
    components = [
        [force.components[p][q] - factor * (a[p] @ a[q] - a[q] @ a[p]) for q in range(n)]
        for p in range(n)
    ]
    return HolonomyTensor(components=components, theta=theta, estimator=HolonomyEstimator.FORMULA)


def loop_operator(conn: Connection, theta, p: int, q: int, s: float, t: float) -> np.ndarray:
    """L(s,t): out along g_q then g_p, back along g_q then g_p."""
    theta = np.asarray(theta, dtype=float)
    gp = np.zeros(theta.size)
    gp[p] = 1.0
    gq = np.zeros(theta.size)
    gq[q] = 1.0
    first = conn.transport_matrix(coordinate_line(theta, q), 0.0, t)
    second = conn.transport_matrix(coordinate_line(theta + t * gq, p), 0.0, s)
    third = conn.transport_matrix(coordinate_line(theta + s * gp, q), t, 0.0)
    fourth = conn.transport_matrix(coordinate_line(theta, p), s, 0.0)
    return fourth @ third @ second @ first


def loop_estimate(conn: Connection, theta, p: int, q: int, s: float) -> np.ndarray:
    """i hbar [L(s,s) - L(s,0) - L(0,s) + L(0,0)] / s^2."""
    identity = np.eye(conn.dim, dtype=complex)
    mixed = (loop_operator(conn, theta, p, q, s, s) - loop_operator(conn, theta, p, q, s, 0.0)
             - loop_operator(conn, theta, p, q, 0.0, s) + identity)
    return 1j * conn.hbar * mixed / s ** 2


def holonomy_loop(conn: Connection, theta, p: int, q: int,
                  base_step: float | None = None, levels: int | None = None) -> np.ndarray:
    """Holonomy H_pq from small rectangular loops, extrapolated over halving loop sizes.

    Raises:
        EstimatorError: If successive extrapolated estimates diverge.
    """
    settings = conn.settings
    s0 = check_step(base_step or settings.loop_base_step)
    levels = levels or settings.loop_levels
    estimates = [loop_estimate(conn, theta, p, q, s0 / 2 ** k) for k in range(levels)]
    value, residuals = extrapolate(estimates)
    if not np.all(np.isfinite(value)) or (
        len(residuals) > 1 and residuals[-1] > residuals[0] and residuals[-1] > 1e-10
    ):
        raise EstimatorError(residuals)
    logger.debug(f"Loop holonomy H_{p}{q} residual sequence {residuals}")
    return value


def holonomy_loop_tensor(conn: Connection, theta) -> HolonomyTensor:
    theta = np.asarray(theta, dtype=float)
    n = theta.size
    zero = np.zeros((conn.dim, conn.dim), dtype=complex)
    components = [[zero for _ in range(n)] for _ in range(n)]
    for p in range(n):
        for q in range(p + 1, n):
            h = holonomy_loop(conn, theta, p, q)
            components[p][q] = h
            components[q][p] = -h
    return HolonomyTensor(components=components, theta=theta, estimator=HolonomyEstimator.LOOP)


def loop_expansion_order(conn: Connection, theta, p: int, q: int, steps=(0.04, 0.02, 0.01, 0.005)) -> float:
    """Log-log slope of |L(s,s) - I - s^2 H / (i hbar)| against s."""
    h = holonomy_loop(conn, theta, p, q)
    identity = np.eye(conn.dim, dtype=complex)
    remainders = [
        float(np.linalg.norm(loop_operator(conn, theta, p, q, s, s) - identity - s ** 2 * h / (1j * conn.hbar), 2))
        for s in steps
    ]
    slope, _ = np.polyfit(np.log(steps), np.log(remainders), 1)
    return float(slope)


def curvature_commutator(conn: Connection, field: OperatorField, theta, p: int, q: int) -> np.ndarray:
    """(nabla_p nabla_q - nabla_q nabla_p) X by nested differences."""
    theta = np.asarray(theta, dtype=float)

    def nabla(index: int) -> OperatorField:
        return lambda th: covariant_derivative(conn, field, th, index)

    potential = vector_potential(conn, theta)
    return (covariant_derivative(conn, nabla(q), theta, p, potential)
            - covariant_derivative(conn, nabla(p), theta, q, potential))


def nabla_potential_residual(conn: Connection, theta) -> float:
    """max |nabla_q A_p - (dA_q/dtheta^p - H_qp)| over index pairs."""
    theta = np.asarray(theta, dtype=float)
    potential = vector_potential(conn, theta)
    d = potential_derivatives(conn, theta)
    h = holonomy_formula(conn, theta, potential, d)
    a = potential.components
    worst = 0.0
    for q in range(theta.size):
        for p in range(theta.size):
            nabla = d[q][p] + (1j / conn.hbar) * (a[q] @ a[p] - a[p] @ a[q])
            worst = max(worst, float(np.linalg.norm(nabla - (d[p][q] - h.components[q][p]), 2)))
    return worst


## Dual relations


def dual_potential_relation(conn: Connection, theta) -> CheckRecord:
    """Residual of T A*_p T^-1 - T^-1 A_p^dagger T + i hbar T^-1 (dT^2/dtheta^p) T^-1."""
    theta = np.asarray(theta, dtype=float)
    potential = vector_potential(conn, theta)
    dual_potential = vector_potential(conn.dual(), theta)
    t = conn.metric_power(theta, 1.0)
    t_inv = conn.metric_power(theta, -1.0)
    worst = 0.0
    for p in range(theta.size):
        g = np.zeros(theta.size)
        g[p] = 1.0
        d_t2 = richardson_derivative(lambda u: conn.metric_power(theta + u * g, 2.0), conn.settings.fd_step)
        a, a_star = potential.components[p], dual_potential.components[p]
        residual = t @ a_star @ t_inv - t_inv @ a.conj().T @ t + 1j * conn.hbar * t_inv @ d_t2 @ t_inv
        worst = max(worst, float(np.linalg.norm(residual, 2)))
    return CheckRecord.measure(
        "calculus.dual_potential",
        anchor="dual vector potential relation",
        theta=theta,
        residual=worst,
        tolerance=50 * fd_tolerance(conn.settings, potential),
        detail={"connection": conn.describe()},
    )


def dual_holonomy_conjugation(conn: Connection, theta) -> CheckRecord:
    """Residual of T H*_pq T^-1 = T^-1 H_pq T for a unitary connection."""
    if not conn.is_unitary:
        raise ValueError(f"holonomy conjugation needs a unitary connection, got {conn.describe()}")
    theta = np.asarray(theta, dtype=float)
    potential = vector_potential(conn, theta)
    h = holonomy_formula(conn, theta, potential)
    h_star = holonomy_formula(conn.dual(), theta)
    t = conn.metric_power(theta, 1.0)
    t_inv = conn.metric_power(theta, -1.0)
    n = theta.size
    worst = max(
        (float(np.linalg.norm(t @ h_star.components[p][q] @ t_inv - t_inv @ h.components[p][q] @ t, 2))
         for p in range(n) for q in range(n)),
        default=0.0,
    )
    return CheckRecord.measure(
        "calculus.dual_conjugation",
        anchor="holonomy of the dual connection",
        theta=theta,
        residual=worst,
        tolerance=50 * fd_tolerance(conn.settings, potential),
        detail={"connection": conn.describe(), "holonomy_norm": h.max_norm(), "dual_holonomy_norm": h_star.max_norm()},
    )
