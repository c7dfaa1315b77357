# SpectrumDataset is the interchange object between the sequence runner and the fits.
# On disk a dataset is a CSV file (axis, extra columns, value, error, shots) next to a JSON
# sidecar holding the names, units and metadata. Writes are serialized with an inter-process
# lock so that MPI ranks and parallel recipe runs never interleave output.
import json
import os
from dataclasses import dataclass, field
from typing import Dict, Optional

import fasteners
import numpy as np

from CIRCE.utils.exceptions import ConfigurationError

FLOAT_FORMAT = '%.12g'


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, (np.floating, float)):
        return float(FLOAT_FORMAT % value)
    if isinstance(value, np.integer):
        return int(value)
    if hasattr(value, 'value') and not isinstance(value, (str, bool, int)):
        return value.value
    return value


def write_json(path, content):
    with fasteners.InterProcessLock(path + '.lock'):
        with open(path, 'w') as f:
            json.dump(_jsonable(content), f, indent=2, sort_keys=True)
            f.write('\n')


@dataclass
class SpectrumDataset:
    axis_name: str
    axis_unit: str
    axis: np.ndarray
    observable: str
    values: np.ndarray
    errors: np.ndarray
    shots: Optional[np.ndarray] = None
    # further columns sharing the scan axis, e.g. the two-photon frequency of a microwave scan
    columns: Dict[str, np.ndarray] = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.axis = np.asarray(self.axis, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        self.errors = np.zeros_like(self.values) if self.errors is None else np.asarray(self.errors, dtype=float)
        if self.shots is not None:
            self.shots = np.asarray(self.shots, dtype=int)
        self.columns = {k: np.asarray(v, dtype=float) for k, v in self.columns.items()}
        n = len(self.axis)
        if n == 0:
            raise ConfigurationError("a dataset needs at least one point")
        lengths = [len(self.values), len(self.errors)] + [len(v) for v in self.columns.values()]
        if self.shots is not None:
            lengths.append(len(self.shots))
        if any(length != n for length in lengths):
            raise ConfigurationError("dataset columns have different lengths")
        if np.any(self.errors < 0):
            raise ConfigurationError("dataset errors must be >= 0")

    def __len__(self):
        return len(self.axis)

    @property
    def has_errors(self):
        return bool(np.any(self.errors > 0))

    def column(self, name):
        """Values of a named column, the scan axis included."""
        if name == self.axis_name:
            return self.axis
        if name in self.columns:
            return self.columns[name]
        raise ConfigurationError("dataset has no column %r, available: %s" % (name, [self.axis_name] + sorted(self.columns)))

    def sorted(self):
        order = np.argsort(self.axis, kind='stable')
        return SpectrumDataset(self.axis_name, self.axis_unit, self.axis[order], self.observable, self.values[order],
                               self.errors[order], None if self.shots is None else self.shots[order],
                               {k: v[order] for k, v in self.columns.items()}, dict(self.metadata))

    def header(self):
        return [self.axis_name] + sorted(self.columns) + ['value', 'error'] + ([] if self.shots is None else ['shots'])

    def table(self):
        cols = [self.axis] + [self.columns[k] for k in sorted(self.columns)] + [self.values, self.errors]
        if self.shots is not None:
            cols.append(self.shots)
        return np.column_stack(cols)

    def sidecar(self):
        return {
            'axis': {'name': self.axis_name, 'unit': self.axis_unit},
            'observable': self.observable,
            'columns': sorted(self.columns),
            'metadata': self.metadata,
        }

    def save(self, path):
        """Write `path` (CSV) and `path` with .json extension (sidecar)."""
        base, _ = os.path.splitext(path)
        with fasteners.InterProcessLock(path + '.lock'):
            np.savetxt(path, self.table(), delimiter=',', header=','.join(self.header()), comments='', fmt=FLOAT_FORMAT)
        write_json(base + '.json', self.sidecar())
        return path

    @classmethod
    def load(cls, path):
        base, _ = os.path.splitext(path)
        with open(base + '.json') as f:
            sidecar = json.load(f)
        with open(path) as f:
            header = f.readline().strip().split(',')
        data = np.atleast_2d(np.loadtxt(path, delimiter=',', skiprows=1))
        cols = {name: data[:, i] for i, name in enumerate(header)}
        axis_name = sidecar['axis']['name']
        return cls(axis_name, sidecar['axis']['unit'], cols[axis_name], sidecar['observable'], cols['value'], cols['error'],
                   cols.get('shots'), {k: cols[k] for k in sidecar['columns']}, sidecar['metadata'])
