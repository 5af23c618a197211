import pytest

from qsurf.codes import surface_code


@pytest.fixture(scope="session")
def code_4d_l2():
    return surface_code(4, 2)


@pytest.fixture(scope="session")
def code_2d_l2():
    return surface_code(2, 2)


@pytest.fixture(scope="session")
def code_2d_l4():
    return surface_code(2, 4)


@pytest.fixture(scope="session")
def code_3d_l2():
    return surface_code(3, 2, 1)
