import logging

from CIRCE.utils.base import BaseClass
from CIRCE.utils.mpi import gather_points, get_mpi_rank, get_mpi_size, split_indices


class _Component(BaseClass):
    def __init__(self, **kwargs):
        super().__init__("Component", **kwargs)
        self.update_hyperparameters({'rate': 1.0}, **kwargs)


def test_serial_scan_split():
    assert get_mpi_size() == 0
    assert get_mpi_rank() == 0
    assert split_indices(4) == [0, 1, 2, 3]
    assert gather_points({2: 'c', 0: 'a', 1: 'b'}, 3) == ['a', 'b', 'c']


def test_hyperparameters_merge_defaults():
    component = _Component(rate=2.0, extra=1)
    assert component.hyperparameters == {'rate': 2.0, 'extra': 1}
    assert _Component().hyperparameters == {'rate': 1.0}


def test_logger_name_and_level():
    assert _Component().logger.name == 'CIRCE.Component'
    assert _Component(debug=True).logger.level == logging.DEBUG


def test_timer_keeps_first_call_apart():
    component = _Component()
    for _ in range(3):
        component.start('scan')
        assert component.stop('scan') >= 0.0
    first, total, calls = component.timings['scan']
    assert calls == 3
    assert first >= 0.0 and total >= 0.0
