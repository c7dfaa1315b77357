"""
Declarative pulse sequences, the detection model and the sequence runner.

A SequenceSpec lists the steps applied after the circular state preparation, each with the
delay preceding it, and one scanned parameter addressed by a path such as
``steps[2].small_delta``. The runner composes the propagators of every scan point, applies
the detection model and emits a SpectrumDataset. Steps in front of the first scanned step
are evaluated only once per scan.

The presets reproduce the sequences of the experiment: microwave spectroscopy of the core
state, Raman spectroscopy of the quadrupole splitting, the Ramsey optical switch, the
purification filter and the supplementary Rabi and filter-fringe scans.
"""
import re
import zlib
from dataclasses import dataclass, fields, replace
from enum import Enum
from typing import Dict, Tuple

import numpy as np
from numpy.polynomial.hermite_e import hermegauss
from scipy.optimize import brentq
from tqdm import tqdm

from CIRCE.atomic_core import (CompositeLevel, CoreTerm, RydbergLevel, ShiftModel, composite, core_sublevels,
                               default_nu0_table, total_delta, transition_frequency)
from CIRCE.datasets import SpectrumDataset
from CIRCE.dynamics import (DEFAULT_GAMMA_P, DEFAULT_PUMP_RATE, DEFAULT_REPUMP_RATE,
                            MicrowavePulse, OpticalPump422, ProbePulse, QuantumState, RamanPulse, apply,
                            make_basis, mw_propagator, pi_pulse_rabi, pump_propagator,
                            raman_beams_for_rabi, raman_propagator, raman_resonance)
from CIRCE.utils.base import BaseClass
from CIRCE.utils.exceptions import ConfigurationError, SearchError
from CIRCE.utils.mpi import gather_points, split_indices
from CIRCE.utils.units import KHZ_PER_GHZ

PULSE_TYPES = (MicrowavePulse, RamanPulse, OpticalPump422, ProbePulse)
# fraction of non-circular atoms left by the circularisation, detected in a single manifold
DEFAULT_DETECTION_BACKGROUND = 0.10
# label of the shot error estimate stored with sampled datasets
SHOT_ERRORS = 'beta_posterior_std'


@dataclass(frozen=True)
class Step:
    pulse: object
    # wait in front of the pulse, us
    delay: float = 0.0

    def __post_init__(self):
        if not isinstance(self.pulse, PULSE_TYPES):
            raise ConfigurationError("unsupported pulse %r" % (self.pulse,))
        if self.delay < 0:
            raise ConfigurationError("step delay must be >= 0, got %r" % (self.delay,))

    @property
    def duration(self):
        if isinstance(self.pulse, OpticalPump422):
            return self.pulse.duration + (self.pulse.repumper_overhang if self.pulse.repumper_on else 0.0)
        return self.pulse.duration


@dataclass(frozen=True)
class Readout:
    """Steps appended to the sequence for one branch of a multi-branch measurement."""
    label: str
    steps: Tuple[Step, ...]

    def __post_init__(self):
        object.__setattr__(self, 'steps', tuple(self.steps))


@dataclass(frozen=True)
class Scan:
    path: str
    values: Tuple[float, ...]
    unit: str = ''
    # further paths that receive the same value, e.g. both pulses of a Ramsey pair
    linked: Tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, 'values', tuple(float(v) for v in np.atleast_1d(self.values)))
        object.__setattr__(self, 'linked', tuple(self.linked))
        if len(self.values) == 0:
            raise ConfigurationError("scan values must not be empty")

    @property
    def paths(self):
        return (self.path,) + self.linked


@dataclass(frozen=True)
class SequenceSpec:
    name: str
    # CompositeLevel for a pure state or a preparation such as '51c,5s' / '51c,4d' (uniform mixtures)
    initial: object
    steps: Tuple[Step, ...]
    scan: Scan
    manifolds: Tuple[int, ...]
    # detected channel, 'n<manifold>' or 'other'
    observable: str = 'n49'
    # with readouts the observable is evaluated per branch and the last branch fraction is returned
    readouts: Tuple[Readout, ...] = ()
    markers: Tuple[int, ...] = ()
    shots_per_point: int = 0
    # Gaussian frequency jitter (kHz, effective frequency) convolved into the scanned microwave line
    jitter_sigma: float = 0.0
    detection_background: float = DEFAULT_DETECTION_BACKGROUND

    def __post_init__(self):
        object.__setattr__(self, 'steps', tuple(self.steps))
        object.__setattr__(self, 'readouts', tuple(self.readouts))
        object.__setattr__(self, 'manifolds', tuple(sorted(set(int(n) for n in self.manifolds))))
        object.__setattr__(self, 'markers', tuple(sorted(set(int(n) for n in self.markers))))

    @property
    def probe(self):
        if self.steps and isinstance(self.steps[-1].pulse, ProbePulse):
            return self.steps[-1].pulse
        return None

    def validate(self):
        problems = check_sequence(self)
        if problems:
            raise ConfigurationError("; ".join("%s: %s" % p for p in problems))
        return self


# scan paths

STEP_PATH = re.compile(r'^steps\[(\d+)\]\.(\w+)$')
TOP_LEVEL_PATHS = ('repeat', 'detection_background', 'jitter_sigma')
# integer fields selecting transitions are not scannable
_FIXED_FIELDS = ('n_a', 'n_b')


def _pulse_scan_fields(pulse):
    return [f.name for f in fields(pulse)
            if f.name not in _FIXED_FIELDS and isinstance(getattr(pulse, f.name), (int, float))
            and not isinstance(getattr(pulse, f.name), bool)]


def scan_paths(spec):
    """All parameter paths a scan of this sequence may address."""
    paths = list(TOP_LEVEL_PATHS)
    for i, step in enumerate(spec.steps):
        paths.append('steps[%d].delay' % i)
        paths += ['steps[%d].%s' % (i, name) for name in _pulse_scan_fields(step.pulse)]
    return paths


def _path_step(path):
    match = STEP_PATH.match(path)
    return (int(match.group(1)), match.group(2)) if match else (None, path)


def set_path(spec, path, value):
    index, name = _path_step(path)
    if index is None:
        if name == 'repeat':
            return spec
        if name in TOP_LEVEL_PATHS:
            return replace(spec, **{name: value})
        raise ConfigurationError("unknown scan path %r, valid paths: %s" % (path, ', '.join(scan_paths(spec))))
    if index >= len(spec.steps):
        raise ConfigurationError("unknown scan path %r, valid paths: %s" % (path, ', '.join(scan_paths(spec))))
    steps = list(spec.steps)
    step = steps[index]
    if name == 'delay':
        steps[index] = replace(step, delay=value)
    elif name in _pulse_scan_fields(step.pulse):
        steps[index] = replace(step, pulse=replace(step.pulse, **{name: value}))
    else:
        raise ConfigurationError("unknown scan path %r, valid paths: %s" % (path, ', '.join(scan_paths(spec))))
    return replace(spec, steps=tuple(steps))


def first_scanned_step(spec):
    indices = [_path_step(p)[0] for p in spec.scan.paths]
    indices = [len(spec.steps) if i is None else i for i in indices]
    return min(indices)


def channel_labels(spec):
    labels = ['n%d' % n for n in spec.manifolds]
    probe = spec.probe or next((s.pulse for r in spec.readouts for s in r.steps if isinstance(s.pulse, ProbePulse)), None)
    if probe is not None:
        labels.append('n%d' % probe.n_b)
    return sorted(set(labels)) + ['other']


def check_sequence(spec):
    """List of (field, message) problems of a sequence, empty if it can be run."""
    problems = []
    valid = scan_paths(spec)
    for path in spec.scan.paths:
        if path not in valid:
            problems.append(('scan.path', "unknown scan path %r, valid paths: %s" % (path, ', '.join(valid))))
    if spec.shots_per_point < 0:
        problems.append(('shots_per_point', "must be >= 0 (0 selects noiseless expectation values)"))
    if not 0 <= spec.detection_background <= 1:
        problems.append(('detection_background', "must lie in [0, 1]"))
    if spec.jitter_sigma < 0:
        problems.append(('jitter_sigma', "must be >= 0"))
    if not spec.manifolds:
        problems.append(('manifolds', "at least one manifold is needed"))

    all_steps = [('steps[%d]' % i, s) for i, s in enumerate(spec.steps)]
    for r, readout in enumerate(spec.readouts):
        all_steps += [('readouts[%d].steps[%d]' % (r, i), s) for i, s in enumerate(readout.steps)]
    for name, step in all_steps:
        pulse = step.pulse
        if isinstance(pulse, MicrowavePulse):
            for n in (pulse.n_a, pulse.n_b):
                if n not in spec.manifolds:
                    problems.append((name, "microwave transition addresses manifold %d which is not in the basis" % n))
        if isinstance(pulse, ProbePulse) and pulse.n_a not in spec.manifolds:
            problems.append((name, "probe source manifold %d is not in the basis" % pulse.n_a))
    for i, step in enumerate(spec.steps[:-1]):
        if isinstance(step.pulse, ProbePulse):
            problems.append(('steps[%d]' % i, "a probe pulse must be the last step"))

    try:
        prepare(spec.initial, make_basis(spec.manifolds or (51,), spec.markers))
    except ConfigurationError as e:
        problems.append(('initial', str(e)))

    if spec.observable not in channel_labels(spec):
        problems.append(('observable', "unknown channel %r, available: %s" % (spec.observable, channel_labels(spec))))

    if spec.jitter_sigma > 0:
        index, name = _path_step(spec.scan.path)
        if index is None or name != 'source_freq' or index >= len(spec.steps) \
                or not isinstance(spec.steps[index].pulse, MicrowavePulse):
            problems.append(('jitter_sigma', "frequency jitter needs a scanned microwave source frequency"))
    return problems


# preparation and detection

PREPARATION = re.compile(r'^(\d+)c,(5s|4d)$')


def prepare(initial, basis):
    """Initial state: a pure CompositeLevel or an unpolarised core preparation like '51c,5s'."""
    if isinstance(initial, CompositeLevel):
        if initial not in basis:
            raise ConfigurationError("initial level %s is not part of the basis" % initial)
        return QuantumState.pure(basis, initial)
    match = PREPARATION.match(str(initial))
    if not match:
        raise ConfigurationError("unknown initial state %r, use a level or '<n>c,5s' / '<n>c,4d'" % (initial,))
    n = int(match.group(1))
    term = CoreTerm.S5_1_2 if match.group(2) == '5s' else CoreTerm.D4_3_2
    levels = [CompositeLevel(RydbergLevel(n), core) for core in core_sublevels(term)]
    if any(level not in basis for level in levels):
        raise ConfigurationError("initial state %s needs manifold %d in the basis" % (initial, n))
    return QuantumState.mixture(basis, {level: 1.0 for level in levels})


@dataclass(frozen=True)
class DetectionRecord:
    channels: Dict[str, float]
    shots: int = 0

    def __getitem__(self, label):
        return self.channels.get(label, 0.0)

    @property
    def total(self):
        return sum(v for k, v in self.channels.items() if k != 'other')


def detect(state, probe=None, background=DEFAULT_DETECTION_BACKGROUND, background_n=51):
    """
    State-selective field-ionisation readout binned by manifold. A probe relabels the circular
    population of probe.n_a (any core state) as probe.n_b. A fraction `background` of the atoms
    is non-circular contamination that is always detected in manifold `background_n`.
    """
    manifolds = sorted(set(level.n for level in state.basis))
    if probe is not None and probe.n_a not in manifolds:
        raise ConfigurationError("probe source manifold %d is not in the basis" % probe.n_a)
    channels = {'n%d' % n: 0.0 for n in manifolds}
    if probe is not None:
        channels.setdefault('n%d' % probe.n_b, 0.0)
    for level, p in state.populations().items():
        n = level.n
        if probe is not None and level.rydberg.is_circular and n == probe.n_a:
            n = probe.n_b
        channels['n%d' % n] += p
    if background:
        channels = {k: (1.0 - background) * v for k, v in channels.items()}
        key = 'n%d' % background_n
        channels[key] = channels.get(key, 0.0) + background
    channels = {k: float(np.clip(v, 0.0, 1.0)) for k, v in channels.items()}
    channels['other'] = float(max(0.0, 1.0 - sum(channels.values())))
    return DetectionRecord(channels)


def _beta_std(k, n):
    """Standard deviation of the Beta(k+1, n-k+1) posterior of a binomial fraction, finite at k = 0 and k = n."""
    a, b = k + 1.0, n - k + 1.0
    return float(np.sqrt(a * b / ((a + b) ** 2 * (a + b + 1.0))))


# runner


class SequenceRunner(BaseClass):

    def __init__(self, model=None, nu0_table=None, **kwargs):
        super().__init__("SequenceRunner", **kwargs)

        defaulthyperparameters = {
            # p5_1/2 linewidth Gamma/2pi in MHz
            'gamma_p': DEFAULT_GAMMA_P,
            # 422 nm and 1092 nm pumping rates, 1/us
            'pump_rate': DEFAULT_PUMP_RATE,
            'repump_rate': DEFAULT_REPUMP_RATE,
            # manifold in which non-circular background atoms are detected
            'background_n': 51,
            # Gauss-Hermite nodes of the frequency jitter average
            'jitter_nodes': 40,
            'progress': False,
        }
        self.update_hyperparameters(defaulthyperparameters, **kwargs)
        self.model = model if model is not None else ShiftModel()
        self.nu0_table = nu0_table

    def _table(self, spec):
        if self.nu0_table is not None:
            return self.nu0_table
        return default_nu0_table(spec.manifolds)

    def propagator(self, pulse, basis, t_start, table):
        if isinstance(pulse, MicrowavePulse):
            return mw_propagator(pulse, self.model, table, basis, t_start)
        if isinstance(pulse, RamanPulse):
            return raman_propagator(pulse, self.model, basis, t_start, self.hyperparameters['gamma_p'])
        if isinstance(pulse, OpticalPump422):
            return pump_propagator(pulse, basis, self.hyperparameters['gamma_p'],
                                   self.hyperparameters['pump_rate'], self.hyperparameters['repump_rate'])
        raise ConfigurationError("pulse %r has no propagator" % (pulse,))

    def evolve(self, steps, state, t_start, table):
        """Apply steps to state from time t_start. Returns the state, the end time and the probe, if any."""
        t = t_start
        probe = None
        for step in steps:
            t += step.delay
            if isinstance(step.pulse, ProbePulse):
                probe = step.pulse
            elif isinstance(step.pulse, OpticalPump422) and step.duration == 0:
                pass
            else:
                state = apply(self.propagator(step.pulse, state.basis, t, table), state)
            t += step.duration
        return state, t, probe

    def _detect(self, state, probe, spec):
        return detect(state, probe, spec.detection_background, self.hyperparameters['background_n'])

    def _jittered(self, spec, prefix_state, t_prefix, start, table):
        """
        Records averaged over a Gaussian distribution of frequency offsets of width jitter_sigma
        (kHz, effective frequency) on every scanned microwave source frequency. The full sequence,
        readout branches included, runs at each Gauss-Hermite node.
        """
        nodes, weights = hermegauss(self.hyperparameters['jitter_nodes'])
        weights = weights / weights.sum()
        averaged = None
        for x, weight in zip(nodes, weights):
            shifted = spec
            for path in spec.scan.paths:
                index, name = _path_step(path)
                if name != 'source_freq' or not isinstance(spec.steps[index].pulse, MicrowavePulse):
                    continue
                pulse = spec.steps[index].pulse
                offset = spec.jitter_sigma * x / KHZ_PER_GHZ / (2.0 if pulse.two_photon else 1.0)
                shifted = set_path(shifted, path, pulse.source_freq + offset)
            records = self._coherent(shifted, prefix_state, t_prefix, start, table)
            if averaged is None:
                averaged = [dict.fromkeys(r.channels, 0.0) for r in records]
            for channels, record in zip(averaged, records):
                for label, value in record.channels.items():
                    channels[label] = channels.get(label, 0.0) + weight * value
        return [DetectionRecord(channels) for channels in averaged]

    def _coherent(self, spec, prefix_state, t_prefix, start, table):
        state, t, probe = self.evolve(spec.steps[start:], prefix_state, t_prefix, table)
        if not spec.readouts:
            return [self._detect(state, probe, spec)]
        records = []
        for readout in spec.readouts:
            branch, _, branch_probe = self.evolve(readout.steps, state, t, table)
            records.append(self._detect(branch, branch_probe or probe, spec))
        return records

    def records(self, spec, prefix_state, t_prefix, start, table):
        """Detection records of one scan point, one per readout branch."""
        if spec.jitter_sigma > 0:
            return self._jittered(spec, prefix_state, t_prefix, start, table)
        return self._coherent(spec, prefix_state, t_prefix, start, table)

    def point(self, spec, records, rng):
        """Observable value, its error and the number of shots of one scan point."""
        values = np.array([r[spec.observable] for r in records])
        shots = spec.shots_per_point
        if shots == 0:
            if len(values) == 1:
                return float(values[0]), 0.0, 0
            total = values.sum()
            return float(values[-1] / total) if total > 0 else 0.0, 0.0, 0
        counts = rng.binomial(shots, np.clip(values, 0.0, 1.0))
        if len(values) == 1:
            return counts[0] / shots, _beta_std(counts[0], shots), shots
        total = counts.sum()
        value = counts[-1] / total if total > 0 else 0.0
        return float(value), _beta_std(counts[-1], total), int(total)

    def run(self, spec, seed=0):
        spec.validate()
        table = self._table(spec)
        basis = make_basis(spec.manifolds, spec.markers)
        n_points = len(spec.scan.values)
        self.info("Running sequence '%s' with %d scan points", spec.name, n_points)
        self.start('scan')

        start = first_scanned_step(spec)
        prefix_state, t_prefix, _ = self.evolve(spec.steps[:start], prepare(spec.initial, basis), 0.0, table)
        name_hash = zlib.crc32(spec.name.encode())

        local = {}
        for i in tqdm(split_indices(n_points), disable=not self.hyperparameters['progress']):
            point_spec = spec
            for path in spec.scan.paths:
                point_spec = set_path(point_spec, path, spec.scan.values[i])
            rng = np.random.default_rng([int(seed), name_hash, i])
            records = self.records(point_spec, prefix_state, t_prefix, start, table)
            local[i] = self.point(point_spec, records, rng)
        results = gather_points(local, n_points)

        self.stop('scan', self.logger)
        values, errors, shots = (np.array(c) for c in zip(*results))
        return SpectrumDataset(_path_step(spec.scan.path)[1], spec.scan.unit, np.array(spec.scan.values), spec.observable,
                               values, errors, shots if spec.shots_per_point else None,
                               self._columns(spec), self._metadata(spec, seed, table))

    def _columns(self, spec):
        index, name = _path_step(spec.scan.path)
        if index is not None and name == 'source_freq':
            pulse = spec.steps[index].pulse
            if pulse.two_photon:
                return {'effective_freq': 2.0 * np.array(spec.scan.values)}
        return {}

    def _metadata(self, spec, seed, table):
        return {
            'sequence': spec.name,
            'scan_path': list(spec.scan.paths),
            'seed': int(seed),
            'shots_per_point': spec.shots_per_point,
            'shot_errors': SHOT_ERRORS if spec.shots_per_point else None,
            'jitter_sigma': spec.jitter_sigma,
            'detection_background': spec.detection_background,
            'model': {'theta': self.model.theta, 'dipole_C': self.model.dipole_C, 'mode': self.model.mode.value,
                      'B': self.model.B, 'reference_n': self.model.reference_n},
            'nu0_table': table.as_dict(),
            'gamma_p': self.hyperparameters['gamma_p'],
        }


def run_sequence(spec, model=None, rng_seed=0, nu0_table=None, **kwargs):
    return SequenceRunner(model, nu0_table, **kwargs).run(spec, rng_seed)


# presets


class MWVariant(str, Enum):
    NO_PUMP = 'no_pump'
    PUMP = 'pump'
    PUMP_PLUS_REPUMP = 'pump_plus_repump'


def _offsets(span, n_points):
    return np.linspace(-span, span, int(n_points))


def d_transition(upper_n, lower_n, m_j, model, table):
    """Frequency (GHz) of the core-preserving transition upper_n <-> lower_n for 4d3/2, m_j."""
    return transition_frequency(composite(upper_n, CoreTerm.D4_3_2, m_j), composite(lower_n, CoreTerm.D4_3_2, m_j),
                                model, table)


def pump_step(repumper_on, duration=200.0, overhang=2.0, leak=0.0, loss=0.0):
    return Step(OpticalPump422(duration, repumper_on, overhang if repumper_on else 0.0,
                               leak if repumper_on else 0.0, loss if repumper_on else 0.0))


def preset_mw_spectroscopy(variant, model=None, nu0_table=None, span=400.0, n_points=161, duration=15.0,
                           pulse_area=np.pi, leak=0.10, loss=0.0, pump_duration=200.0, overhang=2.0,
                           jitter_sigma=0.0, detection_background=0.0, shots_per_point=0, n_from=51, n_to=49):
    """
    Two-photon microwave spectroscopy of n_from -> n_to with a square pulse, scanning the source
    frequency over nu0 +- span (kHz, two-photon units), after the pumping stage of `variant`.
    """
    variant = MWVariant(variant)
    table = nu0_table if nu0_table is not None else default_nu0_table((n_from, n_to))
    nu0 = table.lookup(n_from, n_to)
    steps = []
    if variant is not MWVariant.NO_PUMP:
        steps.append(pump_step(variant is MWVariant.PUMP_PLUS_REPUMP, pump_duration, overhang, leak, loss))
    rabi = pulse_area / (2.0 * np.pi * 1e-3 * duration)
    steps.append(Step(MicrowavePulse(n_from, n_to, nu0 / 2.0, rabi, duration, two_photon=True)))
    values = (nu0 + _offsets(span, n_points) / KHZ_PER_GHZ) / 2.0
    markers = (n_from,) if loss > 0 and variant is MWVariant.PUMP_PLUS_REPUMP else ()
    return SequenceSpec('mw_spectroscopy_%s' % variant.value, '%dc,5s' % n_from, steps,
                        Scan('steps[%d].source_freq' % (len(steps) - 1), values, 'GHz'),
                        (n_from, n_to), 'n%d' % n_to, markers=markers, shots_per_point=shots_per_point,
                        jitter_sigma=jitter_sigma, detection_background=detection_background)


def raman_partner(n_init):
    return 51 if n_init == 49 else n_init - 2


NOMINAL_RAMAN_DURATION = 17.0


def raman_pulse(small_delta, rabi, duration, big_delta=0.65, intensity_ratio=1.3, scattering_on=False):
    omega_pi, omega_sigma = raman_beams_for_rabi(rabi, big_delta, intensity_ratio)
    return RamanPulse(big_delta, small_delta, omega_pi, omega_sigma, duration, scattering_on)


def selective_readouts(n_init, model, table, duration=15.0):
    """Microwave pi pulses resonant with the |m_j|=3/2 and the |m_j|=1/2 line of n_init -> partner."""
    partner = raman_partner(n_init)
    upper, lower = max(n_init, partner), min(n_init, partner)
    rabi = pi_pulse_rabi(duration)
    readouts = []
    for label, m_j in (('pi_3_2', 1.5), ('pi_1_2', 0.5)):
        nu = d_transition(upper, lower, m_j, model, table)
        readouts.append(Readout(label, (Step(MicrowavePulse(n_init, partner, nu / 2.0, rabi, duration, two_photon=True)),)))
    return tuple(readouts)


def preset_raman_spectroscopy(n_init=51, pulse_duration=NOMINAL_RAMAN_DURATION, power_scale=1.0, model=None,
                              nu0_table=None, big_delta=0.65, intensity_ratio=1.3, nominal_rabi=None, span=100.0,
                              n_points=101, center=None, scattering_on=False, leak=0.0, loss=0.0,
                              pump_duration=200.0, overhang=2.0, readout_duration=15.0, shots_per_point=0,
                              detection_background=0.0):
    """
    Pump into |m_j|=3/2, drive the Raman pair with small_delta scanned around delta_n and read
    out with m_j-selective microwave pi pulses. The observable is pi_1/2 / (pi_3/2 + pi_1/2).

    The beam intensities scale linearly with power_scale. At power_scale 1 they give a pi pulse
    in NOMINAL_RAMAN_DURATION unless nominal_rabi (kHz) says otherwise.
    """
    model = model if model is not None else ShiftModel()
    partner = raman_partner(n_init)
    table = nu0_table if nu0_table is not None else default_nu0_table((n_init, partner))
    nominal_rabi = pi_pulse_rabi(NOMINAL_RAMAN_DURATION) if nominal_rabi is None else nominal_rabi
    center = total_delta(model, n_init) if center is None else center
    steps = [pump_step(True, pump_duration, overhang, leak, loss),
             Step(raman_pulse(center, nominal_rabi * power_scale, pulse_duration, big_delta, intensity_ratio,
                              scattering_on))]
    return SequenceSpec('raman_spectroscopy_n%d' % n_init, '%dc,5s' % n_init, steps,
                        Scan('steps[1].small_delta', center + _offsets(span, n_points), 'kHz'),
                        (n_init, partner), 'n%d' % partner, selective_readouts(n_init, model, table, readout_duration),
                        markers=(n_init,) if loss > 0 else (), shots_per_point=shots_per_point,
                        detection_background=detection_background)


def purification_delay(model, n_upper=51, n_lower=50):
    """Center-to-center separation 1/(delta_lower - delta_upper) of the filter pulses, us."""
    return 1e3 / (total_delta(model, n_lower) - total_delta(model, n_upper))


def purification_filter_steps(model, table, pulse_duration=0.5, n_upper=51, n_lower=50, delay=0.0):
    """
    Ramsey pair on n_upper -> n_lower resonant with the 5s line. 5s atoms leave to n_lower,
    4d atoms accumulate a pi phase between the pulses and return to n_upper.
    """
    separation = purification_delay(model, n_upper, n_lower)
    nu = table.lookup(n_upper, n_lower)
    rabi = pi_pulse_rabi(pulse_duration) / 2.0
    first = MicrowavePulse(n_upper, n_lower, nu, rabi, pulse_duration)
    return [Step(first, delay), Step(first, separation - pulse_duration)]


def preset_purification_filter(model=None, nu0_table=None, pulse_duration=0.5, initial='51c,5s', span=0.0,
                               n_points=1, n_upper=51, n_lower=50, detection_background=0.0):
    """The interference filter alone. With span > 0 the source frequency of both pulses is scanned (kHz)."""
    model = model if model is not None else ShiftModel()
    table = nu0_table if nu0_table is not None else default_nu0_table((n_upper, n_lower))
    steps = purification_filter_steps(model, table, pulse_duration, n_upper, n_lower)
    values = table.lookup(n_upper, n_lower) + _offsets(span, n_points) / KHZ_PER_GHZ
    return SequenceSpec('purification_filter', initial, steps,
                        Scan('steps[0].source_freq', values, 'GHz', linked=('steps[1].source_freq',)),
                        (n_lower, n_upper), 'n%d' % n_lower, detection_background=detection_background)


def preset_filter_fringes(core='5s', model=None, nu0_table=None, span=150.0, n_points=121, pulse_duration=0.5):
    """Transfer through the filter versus source frequency for atoms entering in 5s or 4d."""
    if core not in ('5s', '4d'):
        raise ConfigurationError("filter fringes are defined for '5s' or '4d', got %r" % (core,))
    spec = preset_purification_filter(model, nu0_table, pulse_duration, '51c,%s' % core, span, n_points)
    return replace(spec, name='filter_fringes_%s' % core)


# Ramsey optical switch

SWITCH_RAMAN_DETUNING = 200.0


def switch_operating_point(raman_detuning=SWITCH_RAMAN_DETUNING):
    """
    Rabi frequency (kHz), duration (us) and detuning from the switched resonance (kHz) at which
    the switched manifold completes one generalised Rabi cycle, the spectator manifold detuned
    by raman_detuning completes two and the Ramsey phase flips by pi. The three conditions give
    a detuning of -raman_detuning/8 and a duration of 2/raman_detuning.
    """
    if not raman_detuning > 0:
        raise ConfigurationError("the switch needs a positive spectator detuning, got %r" % (raman_detuning,))
    return np.sqrt(15.0) / 8.0 * raman_detuning, 2e3 / raman_detuning, -raman_detuning / 8.0


def switch_raman_pulse(delta, pulse_power=1.0, raman_detuning=SWITCH_RAMAN_DETUNING, big_delta=0.65,
                       intensity_ratio=1.3, scattering_on=False):
    """
    Raman pulse of the optical switch at the operating point of switch_operating_point.
    pulse_power scales the Rabi frequency and the duration inversely, the pulse area is kept.
    """
    if not pulse_power > 0:
        raise ConfigurationError("the switch pulse needs a positive power")
    rabi, duration, _ = switch_operating_point(raman_detuning)
    return raman_pulse(delta, pulse_power * rabi, duration / pulse_power, big_delta, intensity_ratio, scattering_on)


def switch_phase_shift(model, delta, pulse_power=1.0, raman_detuning=SWITCH_RAMAN_DETUNING, big_delta=0.65,
                       intensity_ratio=1.3, n_switched=49, n_spectator=51):
    """Ramsey phase shift (rad) written by the switch pulse: arg U_33(n_switched) - arg U_33(n_spectator)."""
    pulse = switch_raman_pulse(delta, pulse_power, raman_detuning, big_delta, intensity_ratio)
    basis = make_basis((n_switched, n_spectator))
    u = raman_propagator(pulse, model, basis).matrix
    index = {level: i for i, level in enumerate(basis)}
    i_sw = index[composite(n_switched, CoreTerm.D4_3_2, 1.5)]
    i_sp = index[composite(n_spectator, CoreTerm.D4_3_2, 1.5)]
    return float(np.angle(u[i_sw, i_sw] * np.conj(u[i_sp, i_sp])))


def _phase_error(phase):
    return float(np.angle(np.exp(1j * (phase - np.pi))))


def find_delta_star(model, pulse_power=1.0, raman_detuning=SWITCH_RAMAN_DETUNING, big_delta=0.65,
                    intensity_ratio=1.3, window=100.0, n_grid=801, n_switched=49, n_spectator=51):
    """
    Raman detuning (kHz) at which the switch pulse flips the Ramsey phase by exactly pi. The
    off-resonant phase picked up by the spectator manifold moves it away from the light-shifted
    resonance of the switched manifold. The crossing nearest to that resonance is returned.
    """
    pulse = switch_raman_pulse(0.0, pulse_power, raman_detuning, big_delta, intensity_ratio)
    resonance = raman_resonance(pulse, model, n_switched)

    def error(delta):
        return _phase_error(switch_phase_shift(model, delta, pulse_power, raman_detuning, big_delta,
                                               intensity_ratio, n_switched, n_spectator))

    grid = resonance + np.linspace(-window, window, int(n_grid))
    errors = np.array([error(d) for d in grid])
    roots = [grid[i] for i in np.nonzero(errors == 0)[0]]
    for i in range(len(grid) - 1):
        a, b = errors[i], errors[i + 1]
        # a sign change across the 2 pi wrap is not a root
        if a * b < 0 and abs(a) + abs(b) < np.pi:
            roots.append(brentq(error, grid[i], grid[i + 1], xtol=1e-9))
    if not roots:
        raise SearchError("no pi phase shift within %g kHz of the resonance at %.3f kHz" % (window, resonance))
    return float(min(roots, key=lambda r: abs(r - resonance)))


def phase_shift_scan(model, deltas, pulse_power=1.0, raman_detuning=SWITCH_RAMAN_DETUNING, big_delta=0.65,
                     intensity_ratio=1.3):
    """Switch phase shift versus Raman detuning as a dataset."""
    deltas = np.asarray(deltas, dtype=float)
    values = [switch_phase_shift(model, d, pulse_power, raman_detuning, big_delta, intensity_ratio) for d in deltas]
    return SpectrumDataset('small_delta', 'kHz', deltas, 'fringe_phase_shift', np.unwrap(values), np.zeros(len(deltas)),
                           metadata={'sequence': 'switch_phase_shift', 'pulse_power': pulse_power,
                                     'raman_detuning': raman_detuning})


def preset_ramsey_switch(raman_on, delta=None, model=None, nu0_table=None, separation=15.0,
                         pulse_durations=(0.15, 0.45), pulse_power=1.0, raman_detuning=SWITCH_RAMAN_DETUNING,
                         big_delta=0.65, intensity_ratio=1.3, scattering_on=False, span=100.0, n_points=121,
                         leak=0.0, loss=0.0, pump_duration=200.0, overhang=2.0, filter_duration=0.5,
                         probe_duration=0.2, shots_per_point=0, detection_background=0.0):
    """
    pump -> purification filter -> pi/2 (51c -> 49c) -> [Raman 2 pi pulse at delta] -> pi/2
    -> 53c probe. The pi/2 pulses are separated by `separation` us center to center and both
    follow the scanned source frequency around the |m_j|=3/2 line (span in kHz, two-photon units).
    Without delta the switch runs at delta*.
    """
    model = model if model is not None else ShiftModel()
    table = nu0_table if nu0_table is not None else default_nu0_table((49, 50, 51))
    tau1, tau2 = pulse_durations
    gap = separation - 0.5 * (tau1 + tau2)
    if gap < 0:
        raise ConfigurationError("Ramsey pulses of %g and %g us overlap at a separation of %g us" % (tau1, tau2, separation))
    nu = d_transition(51, 49, 1.5, model, table)

    steps = [pump_step(True, pump_duration, overhang, leak, loss)]
    steps += purification_filter_steps(model, table, filter_duration)
    steps.append(Step(MicrowavePulse(51, 49, nu / 2.0, pi_pulse_rabi(tau1) / 2.0, tau1, two_photon=True)))
    second = MicrowavePulse(51, 49, nu / 2.0, pi_pulse_rabi(tau2) / 2.0, tau2, two_photon=True)
    if raman_on:
        if delta is None:
            delta = find_delta_star(model, pulse_power, raman_detuning, big_delta, intensity_ratio)
        raman = switch_raman_pulse(delta, pulse_power, raman_detuning, big_delta, intensity_ratio, scattering_on)
        wait = 0.5 * (gap - raman.duration)
        if wait < 0:
            raise ConfigurationError("the %g us Raman pulse does not fit between the Ramsey pulses" % raman.duration)
        steps += [Step(raman, wait), Step(second, wait)]
    else:
        steps.append(Step(second, gap))
    steps.append(Step(ProbePulse(51, 53, probe_duration)))

    first_index = 3
    second_index = len(steps) - 2
    values = (nu + _offsets(span, n_points) / KHZ_PER_GHZ) / 2.0
    return SequenceSpec('ramsey_switch_%s' % ('on' if raman_on else 'off'), '51c,5s', steps,
                        Scan('steps[%d].source_freq' % first_index, values, 'GHz',
                             linked=('steps[%d].source_freq' % second_index,)),
                        (49, 50, 51), 'n49', markers=(51,) if loss > 0 else (), shots_per_point=shots_per_point,
                        detection_background=detection_background)


def preset_raman_rabi(n_init=51, delta=None, model=None, nu0_table=None, pulse_power=1.0,
                      raman_detuning=SWITCH_RAMAN_DETUNING, big_delta=0.65, intensity_ratio=1.3, max_duration=20.0,
                      n_points=101, scattering_on=False, pump_duration=200.0, overhang=2.0, readout_duration=15.0,
                      detection_background=0.0):
    """
    Raman transfer versus pulse duration with the switch pulse parameters. Without delta the
    pair runs at delta*, close to the 49c resonance, so 51c atoms see the off-resonant drive.
    """
    model = model if model is not None else ShiftModel()
    partner = raman_partner(n_init)
    table = nu0_table if nu0_table is not None else default_nu0_table((n_init, partner))
    if delta is None:
        delta = find_delta_star(model, pulse_power, raman_detuning, big_delta, intensity_ratio)
    pulse = switch_raman_pulse(delta, pulse_power, raman_detuning, big_delta, intensity_ratio, scattering_on)
    steps = [pump_step(True, pump_duration, overhang), Step(pulse)]
    durations = np.linspace(max_duration / n_points, max_duration, int(n_points))
    return SequenceSpec('raman_rabi_n%d' % n_init, '%dc,5s' % n_init, steps, Scan('steps[1].duration', durations, 'us'),
                        (n_init, partner), 'n%d' % partner, selective_readouts(n_init, model, table, readout_duration),
                        detection_background=detection_background)
