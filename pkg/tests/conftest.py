import warnings

import pytest

from kolmo.fields import AnisotropyAdvisory


@pytest.fixture(autouse=True)
def _quiet_grid_advisory():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", AnisotropyAdvisory)
        yield
