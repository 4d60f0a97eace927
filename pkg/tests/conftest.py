import pytest

from helpers import DENSITY_PARAMS, build_density, build_proposal


@pytest.fixture(params=tuple(DENSITY_PARAMS))
def density(request):
    return build_density(request.param)


@pytest.fixture
def gauss_proposal():
    return build_proposal("gauss", sigma=1.0)


@pytest.fixture
def ball_proposal():
    return build_proposal("ball", radius=1.0)
