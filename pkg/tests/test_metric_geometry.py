import numpy as np
from pytest import raises

from quantum_connections import metric_geometry
from quantum_connections.calculus import vector_potential
from quantum_connections.common_types import DegenerateMetricError, VectorPotential
from quantum_connections.connections import ProductFormConnection, build_connection
from quantum_connections.exp_family import preset_model
from quantum_connections.gns import GaugeChart, continue_context, gns_context, lift, metric_operator

from .conftest import THETA, random_matrix


def test_inner_product_is_hermitian_and_positive(m_conn, rng):
    ctx, metric = m_conn.context(THETA), m_conn.metric(THETA)
    x, y = lift(random_matrix(rng, 2)), lift(random_matrix(rng, 2))
    xy = metric_geometry.inner_product(ctx, metric, x, y)
    yx = metric_geometry.inner_product(ctx, metric, y, x)
    assert abs(xy - np.conj(yx)) < 1e-12
    assert metric_geometry.inner_product(ctx, metric, x, x).real >= 0
    identity = metric_geometry.inner_product(ctx, metric, np.eye(4), np.eye(4))
    assert abs(identity - np.sum(np.sqrt(ctx.probs))) < 1e-12


def test_sigma_z_norm_at_maximally_mixed_state(settings):
    model = preset_model("sigmaz1")
    ctx = continue_context(model, [0.0], gns_context(model, [0.4], settings=settings), settings)
    metric = metric_operator(model, [0.0], ctx)
    sigma_z = lift(np.diag([1.0, -1.0]))
    assert abs(metric_geometry.inner_product(ctx, metric, sigma_z, sigma_z) - np.sqrt(2)) < 1e-12


def test_metric_is_gauge_invariant(m_conn, rng):
    potential = vector_potential(m_conn, THETA)
    g = metric_geometry.metric_tensor(m_conn, potential)
    shifted = metric_geometry.metric_tensor(m_conn, metric_geometry.gauge_shifted(potential, rng.standard_normal(2)))
    assert np.max(np.abs(g.g - shifted.g)) < 1e-8
    assert not g.degenerate and g.min_eigenvalue > 0


def test_zero_potential_gives_zero_metric(m_conn):
    zero = VectorPotential(components=[np.zeros((4, 4), dtype=complex)] * 2, theta=THETA, hbar=1.0, fd_step=1e-4)
    g = metric_geometry.metric_tensor(m_conn, zero)
    assert np.all(g.g == 0) and g.degenerate


def test_single_parameter_metric_closed_form(settings):
    model = preset_model("sigmaz1")
    theta = 0.3
    conn = build_connection("m", model, [theta], settings=settings)
    g = metric_geometry.metric_tensor(conn, vector_potential(conn, [theta])).g[0, 0]
    tau = np.tanh(theta)
    p = np.array([np.exp(theta), np.exp(-theta)]) / (2 * np.cosh(theta))
    roots = np.sqrt(p)
    norm = 0.25 * ((1 - tau) ** 2 * roots[0] + (1 + tau) ** 2 * roots[1])
    overlap = 0.5 * ((1 - tau) * roots[0] - (1 + tau) * roots[1])
    assert abs(g - (norm - overlap ** 2 / roots.sum())) < 1e-5


def test_constant_frame_has_vanishing_coefficients(pauli2, settings):
    frame = np.eye(4) + 0.05 * np.arange(16).reshape(4, 4) / 16
    conn = ProductFormConnection(pauli2, lambda th: frame, chart=GaugeChart(pauli2, THETA, settings))
    symbols = metric_geometry.christoffel(conn, THETA, raise_index=False)
    assert np.max(np.abs(symbols.gamma_lower)) < 1e-6
    assert symbols.gamma_upper is None
    with raises(DegenerateMetricError):
        metric_geometry.christoffel(conn, THETA)


def test_christoffel_orthogonality(m_conn):
    symbols = metric_geometry.christoffel(m_conn, THETA)
    assert symbols.gamma_upper.shape == (2, 2, 2)
    assert np.all(np.isreal(symbols.gamma_lower))
    assert metric_geometry.christoffel_orthogonality_residual(m_conn, THETA) < 1e-6


def test_commuting_dual_metric_is_degenerate(settings):
    model = preset_model("diag2")
    conn = build_connection("dual", model, [0.2, -0.1], settings=settings)
    with raises(DegenerateMetricError):
        metric_geometry.christoffel(conn, [0.2, -0.1])


def test_bkm_metric_classical_limit(settings):
    model = preset_model("sigmaz1")
    bkm = metric_geometry.bkm_metric(model, [0.3], settings)
    assert abs(bkm[0, 0] - (1 - np.tanh(0.3) ** 2)) < 1e-6


def test_bkm_metric_is_positive(pauli2, settings):
    bkm = metric_geometry.bkm_metric(pauli2, THETA, settings)
    assert np.allclose(bkm, bkm.T)
    assert np.min(np.linalg.eigvalsh(bkm)) > 0
