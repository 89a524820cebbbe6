import numpy as np
from pytest import mark, raises

from quantum_connections.calculus import vector_potential
from quantum_connections.common_types import DegeneracyError, GNSContext
from quantum_connections.connections import build_connection
from quantum_connections.exp_family import density, preset_model
from quantum_connections.gns import (
    GaugeChart,
    continue_context,
    gns_context,
    lift,
    lifted_closure_residual,
    metric_operator,
    track_path,
    wave_covariance_defect,
)

from .conftest import random_matrix


def test_diagonal_state_wave_vector(settings):
    model = preset_model("sigmaz1")
    theta = [0.5 * np.log(0.7 / 0.3)]
    ctx = gns_context(model, theta, settings=settings)
    assert np.allclose(ctx.probs, [0.7, 0.3])
    assert np.max(np.abs(ctx.omega - [np.sqrt(0.7), 0, 0, np.sqrt(0.3)])) < 1e-12


def test_gns_identity(pauli2, settings, rng):
    for _ in range(5):
        theta = rng.standard_normal(2)
        ctx = gns_context(pauli2, theta, settings=settings)
        rho = density(pauli2, theta, settings)
        for _ in range(20):
            b = random_matrix(rng, 2)
            assert abs(np.trace(rho @ b) - np.vdot(ctx.omega, lift(b) @ ctx.omega)) < 1e-10


def test_degenerate_spectrum_needs_continuation(pauli2, settings):
    with raises(DegeneracyError):
        gns_context(pauli2, [0.0, 0.0], settings=settings)


def test_maximally_mixed_state_by_continuation(settings, rng):
    model = preset_model("sigmaz1")
    anchor = gns_context(model, [0.3], settings=settings)
    ctx = continue_context(model, [0.0], anchor, settings)
    assert np.allclose(ctx.probs, [0.5, 0.5])
    b = random_matrix(rng, 2)
    assert abs(np.vdot(ctx.omega, lift(b) @ ctx.omega) - np.trace(b) / 2) < 1e-12
    sigma_z = np.diag([1.0, -1.0])
    assert abs(np.vdot(ctx.omega, lift(sigma_z) @ ctx.omega)) < 1e-12

    metric = metric_operator(model, [0.0], ctx)
    assert np.allclose(metric.t_matrix, 2 ** 0.25 * np.eye(4))
    assert abs(wave_covariance_defect(ctx, metric) - (2 ** 0.25 - 1)) < 1e-12


def test_metric_operator_powers(pauli2, settings):
    ctx = gns_context(pauli2, [0.3, 0.5], settings=settings)
    metric = metric_operator(pauli2, [0.3, 0.5], ctx)
    assert np.max(np.abs(metric.squared @ metric.power(-2.0) - np.eye(4))) < 1e-10
    assert np.max(np.abs(metric.power(1.0) - metric.t_matrix)) < 1e-12
    assert np.min(np.linalg.eigvalsh(metric.t_matrix)) > 0


def test_lift_is_a_homomorphism(rng):
    a, b = random_matrix(rng, 2), random_matrix(rng, 2)
    assert np.allclose(lift(np.eye(2)), np.eye(4))
    assert np.max(np.abs(lift(a) @ lift(b) - lift(a @ b))) < 1e-12
    assert lifted_closure_residual(lift(a), 2) < 1e-12
    assert lifted_closure_residual(np.kron(np.eye(2), a), 2) > 1e-3


def test_continuation_keeps_overlap(pauli2, settings):
    points = [np.array([0.3, 0.5]) + t * np.array([-0.6, 0.4]) for t in np.linspace(0.0, 1.0, 21)]
    contexts = track_path(pauli2, points, settings=settings)
    for before, after in zip(contexts, contexts[1:]):
        overlaps = np.abs(np.sum(before.basis.conj() * after.basis, axis=0)) ** 2
        assert overlaps.min() > 0.9


def test_chart_is_order_independent(pauli2, settings):
    target = np.array([-0.2, 0.6])
    first = GaugeChart(pauli2, [0.3, 0.5], settings)
    second = GaugeChart(pauli2, [0.3, 0.5], settings)
    second.context([0.1, 0.1])
    assert np.allclose(first.context(target).basis, second.context(target).basis)


def _bloch_pauli(angle):
    return [np.sin(angle), 0.0, np.cos(angle)]


def _bloch_pauli2(angle):
    return [np.sin(angle), np.cos(angle)]


@mark.parametrize("name, bloch", [("pauli", _bloch_pauli), ("pauli2", _bloch_pauli2)])
def test_gauge_is_continuous_across_a_right_angle(settings, name, bloch):
    model = preset_model(name)
    chart = GaugeChart(model, bloch(0.0), settings)
    bases = [chart.context(bloch(a)).basis for a in np.linspace(1.45, 1.75, 61)]
    jumps = [np.max(np.abs(after - before)) for before, after in zip(bases, bases[1:])]
    assert max(jumps) < 0.05

    conn = build_connection("m", model, bloch(0.0), settings=settings)
    potential = vector_potential(conn, bloch(np.pi / 2))
    assert max(np.linalg.norm(a, 2) for a in potential.components) < 5.0


def test_context_json_round_trip(pauli2, settings):
    ctx = gns_context(pauli2, [0.3, 0.5], settings=settings)
    restored = GNSContext.from_json_dict(ctx.to_json_dict())
    assert np.allclose(restored.omega, ctx.omega)
    assert restored.reference_tag == ctx.reference_tag
