"""
Base class shared by the stateful components of CIRCE (sequence runner, fitter, pipelines).

It carries a timer and a logger. Every component logs through its own named logger, so that
a scan, a fit and a recipe run can be told apart in the output.

"""

import time
import logging
from .mpi import get_mpi_rank, get_mpi_size

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
RANK_LOG_FORMAT = '%(asctime)s - %(name)s - rank %(rank)s - %(levelname)s - %(message)s'


class Timer:
    """Wall-clock bookkeeping per label. The first call of a label is reported on its own since it
    carries jit compilation and propagator caching."""

    def __init__(self):
        self._running = {}
        self.timings = {}

    def start(self, label):
        self._running[label] = time.perf_counter()

    def stop(self, label, logger=None):
        elapsed = time.perf_counter() - self._running.pop(label)
        first, total, calls = self.timings.get(label, (elapsed, 0., 0))
        if calls:
            total += elapsed
        self.timings[label] = (first, total, calls + 1)
        if logger is not None:
            if calls == 0:
                logger.debug("%s: first call took %.3g s", label, elapsed)
            else:
                logger.debug("%s: %d calls, %.3g s on average after the first", label, calls + 1, total / calls)
        return elapsed


class Logger:
    def __init__(self, name):
        self._name = name
        self.logger = logging.getLogger('CIRCE.' + name)

        if not self.logger.handlers:
            handler = logging.StreamHandler()
            if get_mpi_size() > 1:
                handler.setFormatter(logging.Formatter(RANK_LOG_FORMAT, defaults={'rank': get_mpi_rank()}))
            else:
                handler.setFormatter(logging.Formatter(LOG_FORMAT))
            self.logger.addHandler(handler)
            self.logger.propagate = False

    def debug(self, msg, *args, **kwargs):
        self.logger.debug(msg, *args, **kwargs)

    def info(self, msg, *args, **kwargs):
        self.logger.info(msg, *args, **kwargs)

    def warning(self, msg, *args, **kwargs):
        self.logger.warning(msg, *args, **kwargs)

    def error(self, msg, *args, **kwargs):
        self.logger.error(msg, *args, **kwargs)


class BaseClass(Logger, Timer):

    def __init__(self, name=None, debug=False, **kwargs):
        Logger.__init__(self, name or type(self).__name__)
        Timer.__init__(self)
        self.logger.setLevel(logging.DEBUG if debug else logging.INFO)

    def update_hyperparameters(self, defaulthyperparameters, **kwargs):
        # unknown keys are kept but reported
        self.hyperparameters = dict(defaulthyperparameters)
        for key, value in kwargs.items():
            if key not in defaulthyperparameters:
                self.debug("Hyperparameter %s is not used by %s", key, self._name)
            self.hyperparameters[key] = value
        return self.hyperparameters
