import numpy as np
from pytest import mark, raises

from quantum_connections import geodesics
from quantum_connections.common_types import ConnectionKind, DegenerateMetricError, GeodesicState, GeodesicTrace
from quantum_connections.connections import (
    AlphaConnection,
    DualConnection,
    ProductFormConnection,
    SyntheticConnection,
    basis_frame,
    build_connection,
    constant_field,
)
from quantum_connections.exp_family import preset_model
from quantum_connections.gns import GaugeChart, lift
from quantum_connections.metric_geometry import christoffel
from quantum_connections.paths import segment

from .conftest import THETA


def _state(theta, velocity):
    return GeodesicState(theta=np.asarray(theta, dtype=float), velocity=np.asarray(velocity, dtype=float), time=0.0)


def _draw(rng, d=4):
    return (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2 * d)


def test_free_motion_is_a_straight_line():
    system = geodesics.ConstantChristoffel(np.zeros((2, 2, 2)))
    trace = geodesics.integrate_geodesic(system, _state([0.1, 0.2], [1.0, -0.5]), 1.0, 1 / 16)
    final = trace.states[-1]
    assert np.max(np.abs(final.theta - [1.1, -0.3])) < 1e-12
    assert final.time == 1.0
    assert trace.relative_drift() < 1e-12


def test_zero_velocity_is_stationary(m_conn):
    trace = geodesics.integrate_geodesic(m_conn, _state(THETA, [0.0, 0.0]), 1.0, 1 / 256)
    assert len(trace.states) == 1
    assert trace.tangent_length == [0.0]
    stepped = geodesics.geodesic_step(geodesics.ConstantChristoffel(np.ones((1, 1, 1))), _state([0.3], [0.0]), 0.1)
    assert stepped.theta[0] == 0.3 and stepped.velocity[0] == 0.0


def _closed_form(gamma, v0, t):
    return np.log1p(gamma * v0 * t) / gamma, v0 / (1 + gamma * v0 * t)


def test_constant_christoffel_closed_form():
    gamma, v0 = 0.8, 1.2
    trace = geodesics.integrate_geodesic(geodesics.ConstantChristoffel([[[gamma]]]), _state([0.0], [v0]), 1.0, 1 / 256)
    for state in trace.states[::32]:
        position, velocity = _closed_form(gamma, v0, state.time)
        assert abs(state.theta[0] - position) < 1e-8
        assert abs(state.velocity[0] - velocity) < 1e-8


def test_fourth_order_convergence():
    system = geodesics.ConstantChristoffel([[[1.0]]])
    exact, _ = _closed_form(1.0, 1.0, 1.0)
    errors = [
        abs(geodesics.integrate_geodesic(system, _state([0.0], [1.0]), 1.0, step).states[-1].theta[0] - exact)
        for step in (1 / 8, 1 / 16)
    ]
    assert 10 < errors[0] / errors[1] < 22


def test_reversal_returns_to_start(m_conn):
    start = _state(THETA, [0.6, -0.4])
    forward = geodesics.integrate_geodesic(m_conn, start, 0.25, 1 / 32)
    back = geodesics.integrate_geodesic(m_conn, geodesics.reversed_state(forward.states[-1]), 0.25, 1 / 32)
    assert np.max(np.abs(back.states[-1].theta - THETA)) < 1e-6


def test_degenerate_metric_at_start(settings):
    conn = build_connection("dual", preset_model("diag2"), [0.2, -0.1], settings=settings)
    with raises(DegenerateMetricError):
        geodesics.integrate_geodesic(conn, _state([0.2, -0.1], [1.0, 0.0]), 1.0, 1 / 256)
    with raises(DegenerateMetricError):
        geodesics.ConstantChristoffel(np.zeros((1, 1, 1)), metric=[[0.0]]).evaluate(np.zeros(1))


def test_bad_step_rejected():
    with raises(ValueError):
        geodesics.integrate_geodesic(geodesics.ConstantChristoffel(np.zeros((1, 1, 1))), _state([0.0], [1.0]), 1.0, 0.0)


def test_self_dual_geodesic_conservation(m_conn, settings):
    self_dual = AlphaConnection(0.0, DualConnection(m_conn))
    trace = geodesics.integrate_geodesic(self_dual, _state([0.2, 0.1], [1.0, 0.0]), 0.25, 1 / 64)
    diagnostics = geodesics.geodesic_diagnostics(self_dual, trace)
    preconditions = geodesics.conservation_preconditions(diagnostics, settings)
    assert set(preconditions) == {"vanishing_expectation", "operator_geodesic", "covariant_wave_vector"}
    assert len(diagnostics.drift_a) == len(trace.states)
    assert diagnostics.expectation > settings.diag_tol
    assert not preconditions["vanishing_expectation"]
    assert not all(preconditions.values())


def test_m_connection_tangent_length_drifts(m_conn):
    trace = geodesics.integrate_geodesic(m_conn, _state([0.2, 0.1], [1.0, 0.0]), 1.0, 1 / 32)
    assert not trace.truncated
    assert trace.relative_drift() > 1e-2


def test_diagnostics_vanish_for_commuting_constant_field(pauli2, settings):
    ops = [lift(np.diag([1.0, -1.0]).astype(complex)), lift(np.diag([0.5, 2.0]).astype(complex))]
    conn = SyntheticConnection(pauli2, constant_field(ops), chart=GaugeChart(pauli2, THETA, settings))
    trace = geodesics.integrate_geodesic(geodesics.ConstantChristoffel(np.zeros((2, 2, 2))),
                                         _state(THETA, [0.3, 0.2]), 0.25, 1 / 16)
    diagnostics = geodesics.geodesic_diagnostics(conn, trace)
    tol = settings.fd_tol()
    assert diagnostics.residual_a < tol
    assert diagnostics.residual_b < tol
    assert diagnostics.residual_c < tol


def test_autoparallel_algebra(m_conn, rng):
    path = segment(THETA, THETA + [0.15, -0.1])
    x = geodesics.frame_field(m_conn, _draw(rng))
    y = geodesics.frame_field(m_conn, _draw(rng))
    assert geodesics.autoparallel_residual(m_conn, lambda th: np.eye(4), path) < 1e-12
    assert geodesics.autoparallel_residual(m_conn, x, path) < 1e-9
    assert geodesics.autoparallel_residual(m_conn, geodesics.field_sum(x, y), path) < 2e-7
    assert geodesics.autoparallel_residual(m_conn, geodesics.field_product(x, y), path) < 2e-7
    assert geodesics.covariant_consistency(m_conn, x, path) < 1e-6


def test_unitary_fields_and_alpha_conjugation(m_conn, rng):
    path = segment(THETA, THETA + [-0.1, 0.12])
    dual = DualConnection(m_conn)
    unitary = ProductFormConnection(m_conn.model, basis_frame(m_conn.chart), chart=m_conn.chart)
    u = geodesics.frame_field(unitary, _draw(rng))
    assert geodesics.is_autoparallel(dual, u, path)
    assert geodesics.is_autoparallel(dual, geodesics.field_adjoint(u), path)
    for alpha in (-0.5, 0.0, 0.5):
        conjugated = geodesics.alpha_conjugate(m_conn, u, alpha)
        assert geodesics.is_autoparallel(AlphaConnection(alpha, dual), conjugated, path)


@mark.parametrize("alpha", (0.0, 0.5))
def test_non_autoparallel_field_detected(m_conn, rng, alpha):
    path = segment(THETA, THETA + [0.2, 0.2])
    a = _draw(rng)
    drifting = lambda th: np.cos(th[0]) * a
    assert not geodesics.is_autoparallel(AlphaConnection(alpha, DualConnection(m_conn)), drifting, path)


def _trace_along(points, velocities, step):
    states = [GeodesicState(theta=p, velocity=v, time=k * step) for k, (p, v) in enumerate(zip(points, velocities))]
    return GeodesicTrace(states=states, step=step, connection_kind=ConnectionKind.SYNTHETIC,
                         tangent_length=[1.0] * len(states))


def test_operator_drift_detects_a_bent_path(pauli2, settings):
    ops = [lift(np.diag([1.0, -1.0]).astype(complex)), lift(np.diag([0.5, 2.0]).astype(complex))]
    conn = SyntheticConnection(pauli2, constant_field(ops), chart=GaugeChart(pauli2, THETA, settings))
    step, times = 1 / 64, np.arange(17) / 64
    v, w = np.array([0.3, 0.2]), np.array([-0.2, 0.3])
    straight = _trace_along([THETA + t * v for t in times], [v] * len(times), step)
    bend = lambda t: 0.1 * np.sin(4 * np.pi * t)
    bent = _trace_along([THETA + t * v + bend(t) * w for t in times],
                        [v + 0.4 * np.pi * np.cos(4 * np.pi * t) * w for t in times], step)
    baseline = geodesics.geodesic_diagnostics(conn, straight).residual_a
    perturbed = geodesics.geodesic_diagnostics(conn, bent).residual_a
    assert perturbed > 1e-2
    assert perturbed > 10 * baseline


def test_single_parameter_geodesic_equation(settings):
    model = preset_model("sigmaz1")
    conn = build_connection("m", model, [0.3], settings=settings)
    step = 1 / 64
    trace = geodesics.integrate_geodesic(conn, _state([0.3], [1.0]), 0.25, step)
    states = trace.states
    for before, here, after in zip(states, states[1:], states[2:]):
        gamma = christoffel(conn, here.theta).gamma_upper[0, 0, 0]
        acceleration = (after.velocity[0] - before.velocity[0]) / (2 * step)
        assert abs(acceleration + gamma * here.velocity[0] ** 2) < 1e-5
        assert abs(gamma) < 1e-6
    assert abs(states[-1].theta[0] - 0.55) < 1e-6
