import numpy as np
from pytest import raises

from quantum_connections import calculus
from quantum_connections.common_types import EstimatorError, StepUnderflowError
from quantum_connections.config import Settings
from quantum_connections.connections import (
    DualConnection,
    ProductFormConnection,
    SyntheticConnection,
    build_connection,
    constant_field,
    random_product_frame,
    synthetic_field,
)
from quantum_connections.exp_family import preset_model
from quantum_connections.gns import GaugeChart, lift
from quantum_connections.paths import segment

from .conftest import THETA, random_matrix


def _synthetic(model, settings, seed=5):
    chart = GaugeChart(model, THETA, settings)
    return SyntheticConnection(model, synthetic_field(model, seed), chart=chart)


def test_richardson_derivative_of_polynomial():
    value = calculus.richardson_derivative(lambda u: np.array([(1 + u) ** 3]), 1e-2)
    assert abs(value[0] - 3.0) < 1e-10


def test_step_underflow():
    with raises(StepUnderflowError):
        calculus.check_step(1e-13)


def test_extrapolate_removes_linear_error():
    estimates = [np.array([2.0 + 0.5 * h + 0.1 * h ** 2]) for h in (0.1, 0.05, 0.025)]
    value, residuals = calculus.extrapolate(estimates)
    assert abs(value[0] - 2.0) < 1e-12
    assert len(residuals) == 2


def test_constant_frame_has_zero_potential(pauli2, settings):
    chart = GaugeChart(pauli2, THETA, settings)
    frame = np.eye(4) + 0.1 * np.arange(16).reshape(4, 4) / 16
    conn = ProductFormConnection(pauli2, lambda th: frame, chart=chart)
    potential = calculus.vector_potential(conn, THETA)
    assert max(np.max(np.abs(a)) for a in potential.components) < settings.fd_tol()
    assert calculus.force_tensor(conn, THETA).antisymmetry_defect() < settings.fd_tol()


def test_unitary_dual_potential_is_hermitian(m_conn):
    potential = calculus.vector_potential(m_conn.dual(), THETA)
    assert potential.hermiticity_defect() < 5 * calculus.fd_tolerance(m_conn.settings, potential)


def test_schrodinger_equation_along_segment(m_conn, rng):
    path = segment(THETA, THETA + 0.1 * rng.standard_normal(2))
    potential = calculus.vector_potential(m_conn, THETA)
    assert calculus.schrodinger_residual(m_conn, path) < 10 * calculus.fd_tolerance(m_conn.settings, potential)


def test_directional_potential_is_linear(m_conn):
    v = np.array([0.7, -1.2])
    potential = calculus.vector_potential(m_conn, THETA)
    directional = calculus.directional_potential(m_conn, THETA, v)
    assert np.max(np.abs(directional - potential.along(v))) < 10 * calculus.fd_tolerance(m_conn.settings, potential)


def test_covariant_derivative_examples(pauli2, settings, rng):
    ops = [lift(np.diag([1.0, -1.0]).astype(complex)), lift(np.diag([2.0, 0.5]).astype(complex))]
    chart = GaugeChart(pauli2, THETA, settings)
    conn = SyntheticConnection(pauli2, constant_field(ops), chart=chart)
    commuting = lift(np.diag([3.0, 1.0]).astype(complex))
    assert np.max(np.abs(calculus.covariant_derivative(conn, lambda th: commuting, THETA, 0))) < settings.fd_tol()

    m = build_connection("m", pauli2, THETA, settings=settings)
    a, b = lift(random_matrix(rng, 2)), lift(random_matrix(rng, 2))
    x = lambda th: np.sin(th[0]) * a
    y = lambda th: th[1] * b
    total = calculus.covariant_derivative(m, lambda th: x(th) + y(th), THETA, 1)
    parts = calculus.covariant_derivative(m, x, THETA, 1) + calculus.covariant_derivative(m, y, THETA, 1)
    assert np.max(np.abs(total - parts)) < 1e-10


def test_covariant_derivative_is_transported_derivative(m_conn, rng):
    a, b = lift(random_matrix(rng, 2)), lift(random_matrix(rng, 2))
    field = lambda th: np.cos(th[0]) * a + th[1] ** 2 * b
    v = np.array([0.4, -0.9])
    covariant = calculus.covariant_derivative_along(m_conn, field, THETA, v)
    transported = calculus.transported_derivative(m_conn, field, THETA, v)
    potential = calculus.vector_potential(m_conn, THETA)
    assert np.max(np.abs(covariant - transported)) < 10 * calculus.fd_tolerance(m_conn.settings, potential)


def test_product_form_holonomy_vanishes(m_conn, pauli2, settings):
    tol = settings.fd_tol()
    assert calculus.holonomy_formula(m_conn, THETA).max_norm() < 10 * tol
    product = ProductFormConnection(pauli2, random_product_frame(pauli2, 11), chart=m_conn.chart)
    assert calculus.holonomy_formula(product, THETA).max_norm() < 10 * tol
    loop = calculus.loop_operator(product, THETA, 0, 1, 0.05, 0.05)
    assert np.max(np.abs(loop - np.eye(4))) < 1e-10


def test_synthetic_holonomy_is_detected_and_estimators_agree(pauli2, settings):
    conn = _synthetic(pauli2, settings)
    formula = calculus.holonomy_formula(conn, THETA)
    assert formula.max_norm() > 100 * settings.fd_tol()
    assert formula.antisymmetry_defect() < settings.fd_tol()
    loop = calculus.holonomy_loop(conn, THETA, 0, 1)
    assert np.max(np.abs(loop - formula.components[0][1])) < 50 * settings.fd_tol()


def test_loop_tensor_matches_formula(pauli2, settings):
    conn = _synthetic(pauli2, settings, seed=9)
    loops = calculus.holonomy_loop_tensor(conn, THETA)
    assert loops.antisymmetry_defect() == 0.0
    difference = loops.components[1][0] - calculus.holonomy_formula(conn, THETA).components[1][0]
    assert np.max(np.abs(difference)) < 50 * settings.fd_tol()


def test_loop_expansion_is_third_order(pauli2, settings):
    slope = calculus.loop_expansion_order(_synthetic(pauli2, settings), THETA, 0, 1)
    assert slope > 2.5


def test_non_finite_loop_estimates_raise(pauli2, settings):
    chart = GaugeChart(pauli2, THETA, settings)
    broken = np.full((4, 4), np.nan, dtype=complex)
    conn = SyntheticConnection(pauli2, constant_field([broken, broken]), chart=chart)
    with raises(EstimatorError):
        calculus.holonomy_loop(conn, THETA, 0, 1)


def test_curvature_commutator(pauli2, settings, rng):
    conn = _synthetic(pauli2, settings)
    holonomy = calculus.holonomy_formula(conn, THETA).components[0][1]
    a, b = lift(random_matrix(rng, 2)), lift(random_matrix(rng, 2))
    field = lambda th: a + th[0] * th[1] * b
    x = field(THETA)
    commutator = calculus.curvature_commutator(conn, field, THETA, 0, 1)
    residual = np.max(np.abs(1j * conn.hbar * commutator - (holonomy @ x - x @ holonomy)))
    assert residual < 100 * settings.fd_tol() * max(1.0, np.linalg.norm(x, 2))
    identity = calculus.curvature_commutator(conn, lambda th: np.eye(4), THETA, 0, 1)
    assert np.max(np.abs(identity)) < 1e-8


def test_nabla_potential_identity(pauli2, settings):
    assert calculus.nabla_potential_residual(_synthetic(pauli2, settings), THETA) < 50 * settings.fd_tol()


def test_dual_relations(m_conn, pauli2, settings):
    assert calculus.dual_potential_relation(m_conn, THETA).passed
    assert calculus.dual_potential_relation(DualConnection(m_conn), THETA).passed
    record = calculus.dual_holonomy_conjugation(_synthetic(pauli2, settings), THETA)
    assert record.passed
    flat = calculus.dual_holonomy_conjugation(DualConnection(m_conn), THETA)
    assert flat.passed and flat.detail["holonomy_norm"] < 50 * settings.fd_tol()


def test_dual_conjugation_needs_unitary(m_conn):
    with raises(ValueError):
        calculus.dual_holonomy_conjugation(m_conn, THETA)


def test_single_parameter_force_is_zero(settings):
    model = preset_model("sigmaz1")
    conn = build_connection("dual", model, [0.3], settings=settings)
    force = calculus.force_tensor(conn, [0.3])
    assert np.max(np.abs(force.components[0][0])) == 0.0


def test_covariant_derivative_product_rule(m_conn, rng):
    a, b = lift(random_matrix(rng, 2)), lift(random_matrix(rng, 2))
    x = lambda th: a + np.sin(th[1]) * b
    f = lambda th: np.sin(th[0]) + th[1] ** 2
    gradient = (np.cos(THETA[0]), 2 * THETA[1])
    potential = calculus.vector_potential(m_conn, THETA)
    for p in range(2):
        scaled = calculus.covariant_derivative(m_conn, lambda th: f(th) * x(th), THETA, p, potential)
        expected = gradient[p] * x(THETA) + f(THETA) * calculus.covariant_derivative(m_conn, x, THETA, p, potential)
        assert np.max(np.abs(scaled - expected)) < 1e-9


def test_potential_converges_with_step(pauli2):
    def potential(step):
        conn = build_connection("m", pauli2, THETA, settings=Settings(fd_step=step))
        return np.stack(calculus.vector_potential(conn, THETA).components)

    limit = potential(2e-3)
    coarse = np.max(np.abs(potential(4e-2) - limit))
    fine = np.max(np.abs(potential(2e-2) - limit))
    assert coarse > 0
    assert coarse / fine > 3
