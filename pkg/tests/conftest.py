"""Shared fixtures: model instances are immutable, so build each once per session."""
import pytest

from ldpkit import make_model


@pytest.fixture(scope="session")
def ou():
    return make_model("ou")


@pytest.fixture(scope="session")
def periodic():
    return make_model("periodic1d")


@pytest.fixture(scope="session")
def lin_a1():
    return make_model("linear2d-a1")


@pytest.fixture(scope="session")
def lin_a2():
    return make_model("linear2d-a2")


@pytest.fixture(scope="session")
def hopf():
    return make_model("hopf-radial")


@pytest.fixture(scope="session")
def burgers():
    return make_model("burgers1d")


@pytest.fixture(scope="session")
def all_models(ou, periodic, lin_a1, lin_a2, hopf, burgers):
    return [ou, periodic, lin_a1, lin_a2, hopf, burgers]
