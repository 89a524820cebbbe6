import numpy as np
from pytest import fixture

from quantum_connections.config import Settings
from quantum_connections.connections import build_connection
from quantum_connections.exp_family import preset_model

THETA = np.array([0.3, 0.5])


@fixture
def settings():
    return Settings()


@fixture
def pauli2():
    return preset_model("pauli2")


@fixture
def rng():
    return np.random.default_rng(42)


@fixture
def m_conn(pauli2, settings):
    return build_connection("m", pauli2, THETA, settings=settings)


def random_matrix(rng, n):
    return (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)


def random_hermitian(rng, n):
    b = random_matrix(rng, n)
    return (b + b.conj().T) / 2
