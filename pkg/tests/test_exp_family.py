import json

import numpy as np
from pydantic import ValidationError
from pytest import approx, mark, raises
from hypothesis import given, settings as hsettings
from hypothesis.strategies import floats

from quantum_connections.calculus import richardson_derivative
from quantum_connections.common_types import ConfigError, matrix_to_pairs
from quantum_connections.exp_family import (
    SIGMA_X,
    SIGMA_Z,
    ExpFamilyModel,
    density,
    dump_model,
    load_model,
    log_partition,
    perturbed_path,
    preset_model,
    tangent,
)

from .conftest import random_hermitian

coordinate = floats(min_value=-2.0, max_value=2.0)


def test_log_partition_at_origin(pauli2):
    assert log_partition(pauli2, [0.0, 0.0]) == approx(np.log(2))


def test_log_partition_single_sigma_z():
    model = preset_model("sigmaz1")
    assert log_partition(model, [0.5]) == approx(np.log(2 * np.cosh(0.5)))
    assert log_partition(model, [0.5]) == approx(0.813262, abs=1e-6)


@given(coordinate, coordinate, coordinate, coordinate)
@hsettings(max_examples=50, deadline=None)
def test_log_partition_convex(a, b, c, d):
    model = preset_model("pauli2")
    x, y = np.array([a, b]), np.array([c, d])
    mid = log_partition(model, (x + y) / 2)
    assert mid <= (log_partition(model, x) + log_partition(model, y)) / 2 + 1e-12


def test_density_at_origin(pauli2, settings):
    assert np.allclose(density(pauli2, [0.0, 0.0], settings), np.eye(2) / 2)


def test_density_closed_form(settings):
    rho = density(preset_model("sigmaz1"), [0.5], settings)
    expected = np.diag([np.exp(0.5), np.exp(-0.5)]) / (2 * np.cosh(0.5))
    assert np.max(np.abs(rho - expected)) < 1e-12


def test_commuting_density_is_classical(settings):
    theta = np.array([0.4, -0.2])
    rho = density(preset_model("diag2"), theta, settings)
    weights = np.exp([theta[0], theta[1] - theta[0], -theta[1]])
    assert np.allclose(rho, np.diag(weights / weights.sum()))


def test_perturbed_path_start_and_identity_shift(pauli2, settings):
    theta = [0.3, 0.5]
    path = perturbed_path(pauli2, theta, 2.0 * np.eye(2), settings)
    assert np.allclose(path(0.0), density(pauli2, theta, settings))
    assert np.allclose(path(0.7), density(pauli2, theta, settings))


def test_zeta_derivative_is_expectation(pauli2, settings, rng):
    theta = [0.3, 0.5]
    x = random_hermitian(rng, 2)
    path = perturbed_path(pauli2, theta, x, settings)
    slope = richardson_derivative(path.zeta, 1e-4)
    assert abs(slope - np.trace(density(pauli2, theta, settings) @ x).real) < 1e-7


def test_tangent_of_identity_vanishes(pauli2, settings):
    assert np.max(np.abs(tangent(pauli2, [0.3, 0.5], np.eye(2), settings))) < 1e-12


def test_tangent_matches_path_derivative(pauli2, settings, rng):
    theta = [0.3, 0.5]
    x = random_hermitian(rng, 2)
    path = perturbed_path(pauli2, theta, x, settings)
    derivative = richardson_derivative(path, 1e-4)
    t = tangent(pauli2, theta, x, settings)
    assert np.max(np.abs(derivative - t)) < 1e-6
    assert abs(np.trace(t)) < 1e-10


@mark.parametrize("k", (0, 1))
def test_log_partition_gradient(pauli2, settings, k):
    theta = np.array([0.3, 0.5])
    g = np.eye(2)[k]
    slope = richardson_derivative(lambda u: log_partition(pauli2, theta + u * g), 1e-4)
    expectation = np.trace(density(pauli2, theta, settings) @ pauli2.generators[k]).real
    assert abs(slope - expectation) < 1e-6


def test_dependent_generators_rejected():
    with raises(ValidationError):
        ExpFamilyModel(dim_hilbert=2, generators=[SIGMA_Z, 2 * SIGMA_Z])


def test_load_model_from_file(tmp_path):
    path = tmp_path / "model.json"
    path.write_text(json.dumps({"N": 2, "generators": [matrix_to_pairs(SIGMA_X), matrix_to_pairs(SIGMA_Z)]}))
    model = load_model(str(path))
    assert model.dim_param == 2
    assert np.allclose(model.generators[1], SIGMA_Z)
    assert json.loads(dump_model(model))["N"] == 2


def test_load_model_malformed_json(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{\"N\": 2, \"generators\": [")
    with raises(ConfigError) as info:
        load_model(str(path))
    assert info.value.exit_code == 2


def test_unknown_preset():
    with raises(ConfigError):
        load_model("no-such-model")
