import os

os.environ.setdefault('CIRCE_NOMPI', '1')

import numpy as np  # noqa: E402
import pytest  # noqa: E402

from CIRCE.atomic_core import ShiftModel, default_nu0_table  # noqa: E402


@pytest.fixture
def model():
    return ShiftModel()


@pytest.fixture
def power_law_model():
    """Power law with the measured amplitude, B = 757 kHz and C = -2.7 kHz."""
    return ShiftModel.power_law(757.0, -2.7)


@pytest.fixture
def table():
    return default_nu0_table((49, 50, 51, 53))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def output_env(tmp_path, monkeypatch):
    monkeypatch.setenv('CIRCE_OUTPUT', str(tmp_path / 'out'))
    return tmp_path / 'out'
