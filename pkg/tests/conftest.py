import pytest

from ancilla_factory.codes import build_syndrome_decoder, css_catalog, parent_catalog
from ancilla_factory.network import build_prep_network


@pytest.fixture(scope="session")
def parents():
    return parent_catalog()


@pytest.fixture(scope="session")
def css7():
    return css_catalog()["css7"]


@pytest.fixture(scope="session")
def css23():
    return css_catalog()["css23"]


@pytest.fixture(scope="session")
def css55():
    return css_catalog()["css55"]


@pytest.fixture(scope="session")
def css87():
    return css_catalog()["css87"]


@pytest.fixture(scope="session")
def net7(css7):
    return build_prep_network(css7)


@pytest.fixture(scope="session")
def net23(css23):
    return build_prep_network(css23)


@pytest.fixture(scope="session")
def decoder7(css7):
    return build_syndrome_decoder(css7)


@pytest.fixture(scope="session")
def decoder23(css23):
    return build_syndrome_decoder(css23)
