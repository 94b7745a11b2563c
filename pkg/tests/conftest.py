import pytest

from svilab import quadratic_orthant_problem, robust_affine_problem


@pytest.fixture
def quad1():
    return quadratic_orthant_problem(1)


@pytest.fixture
def quad2():
    return quadratic_orthant_problem(2)


@pytest.fixture
def quad4():
    return quadratic_orthant_problem(4)


@pytest.fixture
def affine():
    return robust_affine_problem()
