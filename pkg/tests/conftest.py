import pytest

from qrsin import validate_params
from qrsin.analysis import estimate_beta

BETA_SAMPLES = 10 ** 5


@pytest.fixture(scope="session")
def beta2():
    return estimate_beta(2, BETA_SAMPLES, 1)


@pytest.fixture(scope="session")
def beta3():
    return estimate_beta(3, BETA_SAMPLES, 1)


@pytest.fixture(scope="session")
def params2(beta2):
    """d=2 with the auto lambda = 1.1 / beta_hat."""
    return validate_params(2, 1.1 / beta2, beta2)


@pytest.fixture(scope="session")
def params3(beta3):
    return validate_params(3, 1.1 / beta3, beta3)


@pytest.fixture(scope="session")
def params2_wide(beta2):
    """d=2 with the stronger lambda = 2 / beta_hat."""
    return validate_params(2, 2.0 / beta2, beta2)


@pytest.fixture()
def params_fixed():
    """Pinned desk-scale parameters for unit tests (no estimation)."""
    return validate_params(2, 4.29, 0.2565)


@pytest.fixture()
def params_fixed3():
    return validate_params(3, 5.6, 0.1966)
