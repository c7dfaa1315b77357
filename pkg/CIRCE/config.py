"""
Run configurations.

A run config is a YAML file selecting either a shipped recipe (``recipe: fig2`` plus optional
``settings``) or a sequence (``sequence:`` with a preset or explicit steps, and an optional
``fit``). The ``model`` section sets the shift model, the bare transition frequencies, the 5p
linewidth, the pumping imperfections and the detection background.

Validation collects every problem before giving up. Each Diagnostic names the offending
field and, when it can be traced back to the file, its line.
"""
import inspect
import os
from dataclasses import dataclass, field, fields, replace
from typing import List, Optional

import yaml

from CIRCE.atomic_core import ShiftModel, default_nu0_table
from CIRCE.dynamics import (DEFAULT_GAMMA_P, DEFAULT_PUMP_RATE, DEFAULT_REPUMP_RATE, MicrowavePulse, OpticalPump422,
                            ProbePulse, RamanPulse, raman_beams_for_rabi)
from CIRCE.pipelines import RECIPES
from CIRCE.sequences import (Readout, Scan, SequenceSpec, Step, check_sequence, preset_filter_fringes,
                             preset_mw_spectroscopy, preset_purification_filter, preset_raman_rabi,
                             preset_raman_spectroscopy, preset_ramsey_switch)
from CIRCE.utils.exceptions import ConfigurationError, SearchError, ValidationError

OUTPUT_ENV = 'CIRCE_OUTPUT'
RECIPE_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), 'recipes')
DEFAULT_OUTPUT = 'circe_output'

TOP_LEVEL_KEYS = ('name', 'recipe', 'settings', 'sequence', 'fit', 'model', 'seed', 'output')

PRESETS = {
    'mw_spectroscopy': preset_mw_spectroscopy,
    'raman_spectroscopy': preset_raman_spectroscopy,
    'ramsey_switch': preset_ramsey_switch,
    'purification_filter': preset_purification_filter,
    'filter_fringes': preset_filter_fringes,
    'raman_rabi': preset_raman_rabi,
}
# manifolds whose bare frequencies presets may look up
PRESET_MANIFOLDS = (49, 50, 51, 53)

PULSES = {'microwave': MicrowavePulse, 'raman': RamanPulse, 'pump': OpticalPump422, 'probe': ProbePulse}
NON_NEGATIVE_FIELDS = ('duration', 'delay', 'rabi', 'repumper_overhang', 'omega_pi', 'omega_sigma', 'leak', 'loss')

FIT_KINDS = ('gaussian', 'rabi_lineshape', 'sine')

# settings that may be negative, and those that must be strictly positive
SIGNED_SETTINGS = ('C',)
POSITIVE_SETTINGS = ('power', 'pulse_power', 'pulse_duration', 'duration', 'separation', 'intensity_ratio',
                     'big_delta', 'raman_detuning', 'filter_duration', 'max_duration', 'pump_duration', 'n_points',
                     'span_rabi')
INTEGER_SETTINGS = ('n_points', 'shots_per_point', 'n')


@dataclass(frozen=True)
class Diagnostic:
    field: str
    message: str
    line: Optional[int] = None

    def __str__(self):
        location = 'line %d: ' % self.line if self.line else ''
        return '%s%s: %s' % (location, self.field, self.message)


@dataclass
class ModelConfig:
    theta: float = 2.029
    dipole_C: float = -2.7
    dipole_C_sigma: float = 1.0
    reference_n: int = 51
    mode: str = 'exact_hydrogenic'
    B: Optional[float] = None
    # bare transition frequencies in GHz keyed like '51-49', on top of the built-in table
    nu0: dict = field(default_factory=dict)
    gamma_p: float = DEFAULT_GAMMA_P
    pump_rate: float = DEFAULT_PUMP_RATE
    repump_rate: float = DEFAULT_REPUMP_RATE
    # imperfections of the repumped preparation
    leak: float = 0.10
    loss: float = 0.0
    # non-circular fraction, applied to sequences read out through the 53c probe
    detection_background: float = 0.10

    def shift_model(self):
        return ShiftModel(theta=self.theta, dipole_C=self.dipole_C, dipole_C_sigma=self.dipole_C_sigma,
                          reference_n=self.reference_n, mode=self.mode, B=self.B)

    def nu0_table(self, manifolds):
        return default_nu0_table(manifolds, self.nu0)

    def runner_settings(self):
        return {'gamma_p': self.gamma_p, 'pump_rate': self.pump_rate, 'repump_rate': self.repump_rate}


@dataclass
class RunConfig:
    name: str
    model: ModelConfig
    output: str
    recipe: Optional[str] = None
    settings: dict = field(default_factory=dict)
    sequence: Optional[SequenceSpec] = None
    fit: Optional[dict] = None
    seed: Optional[int] = None
    noiseless: bool = False
    source: Optional[str] = None

    def settings_for(self, entry):
        settings = dict(entry.defaults)
        settings.update(self.settings)
        if self.noiseless and 'shots_per_point' in settings:
            settings['shots_per_point'] = 0
        return settings

    @property
    def shots_per_point(self):
        if self.recipe is not None and self.recipe in RECIPES:
            return self.settings_for(RECIPES[self.recipe]).get('shots_per_point', 0)
        return self.sequence.shots_per_point if self.sequence is not None else 0


# YAML with locations


def _line_index(node, path='', lines=None):
    """Map of dotted field paths to 1-based line numbers of a composed YAML node tree."""
    lines = {} if lines is None else lines
    lines.setdefault(path, node.start_mark.line + 1)
    if isinstance(node, yaml.MappingNode):
        for key, value in node.value:
            child = '%s.%s' % (path, key.value) if path else str(key.value)
            lines[child] = key.start_mark.line + 1
            _line_index(value, child, lines)
    elif isinstance(node, yaml.SequenceNode):
        for i, item in enumerate(node.value):
            _line_index(item, '%s[%d]' % (path, i), lines)
    return lines


def line_of(lines, path):
    while path:
        if path in lines:
            return lines[path]
        cut = max(path.rfind('.'), path.rfind('['))
        path = path[:cut] if cut > 0 else ''
    return None


def read_yaml(path):
    """Parsed content and line index of a YAML file. Parse errors raise ValidationError."""
    if not os.path.isfile(path):
        raise ValidationError([Diagnostic(path, "no such file")])
    with open(path) as f:
        text = f.read()
    try:
        node = yaml.compose(text, Loader=yaml.SafeLoader)
        content = yaml.safe_load(text)
    except yaml.YAMLError as e:
        mark = getattr(e, 'problem_mark', None)
        problem = getattr(e, 'problem', None) or str(e)
        raise ValidationError([Diagnostic(path, "cannot parse YAML: %s" % problem, mark.line + 1 if mark else None)])
    return content if content is not None else {}, _line_index(node) if node is not None else {}


# building and checking


class _Collector:

    def __init__(self, lines):
        self.lines = lines
        self.diagnostics: List[Diagnostic] = []

    def add(self, path, message):
        self.diagnostics.append(Diagnostic(path, message, line_of(self.lines, path)))

    def mapping(self, value, path):
        if value is None:
            return {}
        if not isinstance(value, dict):
            self.add(path, "must be a mapping")
            return {}
        return value

    def unknown(self, section, allowed, path):
        for key in section:
            if key not in allowed:
                self.add('%s.%s' % (path, key) if path else str(key),
                         "unknown key, expected one of: %s" % ', '.join(allowed))


def _is_number(value):
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def _build_model(raw, collector):
    before = len(collector.diagnostics)
    section = collector.mapping(raw, 'model')
    allowed = [f.name for f in fields(ModelConfig)]
    collector.unknown(section, allowed, 'model')
    values = {k: v for k, v in section.items() if k in allowed}
    for key, value in values.items():
        if key == 'nu0':
            continue
        if key == 'mode':
            if not isinstance(value, str):
                collector.add('model.mode', "must be a string")
            continue
        if key == 'B' and value is None:
            continue
        if not _is_number(value):
            collector.add('model.%s' % key, "must be a number, got %r" % (value,))
    nu0 = collector.mapping(values.get('nu0'), 'model.nu0')
    for key, value in nu0.items():
        if not _is_number(value) or value <= 0:
            collector.add('model.nu0.%s' % key, "bare frequencies must be positive numbers in GHz")
    if len(collector.diagnostics) > before:
        return None
    model = ModelConfig(**values)
    for key in ('gamma_p', 'pump_rate', 'repump_rate'):
        if not getattr(model, key) > 0:
            collector.add('model.%s' % key, "must be > 0")
    for key in ('leak', 'loss', 'detection_background'):
        if not 0 <= getattr(model, key) <= 1:
            collector.add('model.%s' % key, "must lie in [0, 1]")
    if model.leak + model.loss > 1:
        collector.add('model.loss', "leak + loss must not exceed 1")
    try:
        model.shift_model()
        model.nu0_table(PRESET_MANIFOLDS)
    except ConfigurationError as e:
        collector.add('model', str(e))
    return model


def _check_settings(recipe_name, settings, collector):
    defaults = RECIPES[recipe_name].defaults
    collector.unknown(settings, sorted(defaults), 'settings')
    for key, value in settings.items():
        if key not in defaults:
            continue
        path = 'settings.%s' % key
        if isinstance(defaults[key], list):
            if not isinstance(value, list) or not value:
                collector.add(path, "must be a non-empty list")
            elif not all(_is_number(v) and v > 0 for v in value):
                collector.add(path, "entries must be positive numbers")
            continue
        if not _is_number(value):
            collector.add(path, "must be a number, got %r" % (value,))
        elif key in INTEGER_SETTINGS and int(value) != value:
            collector.add(path, "must be an integer")
        elif key in POSITIVE_SETTINGS and not value > 0:
            collector.add(path, "must be > 0")
        elif key not in SIGNED_SETTINGS and value < 0:
            collector.add(path, "must be >= 0")


def _build_scan(raw, collector, path):
    section = collector.mapping(raw, path)
    collector.unknown(section, ('path', 'values', 'range', 'unit', 'linked'), path)
    if 'path' not in section:
        collector.add(path + '.path', "a scan needs a parameter path")
        return None
    if 'range' in section:
        grid = collector.mapping(section['range'], path + '.range')
        if not all(_is_number(grid.get(k)) for k in ('start', 'stop', 'num')) or grid.get('num', 0) < 1:
            collector.add(path + '.range', "needs numeric start, stop and num >= 1")
            return None
        values = [grid['start'] + (grid['stop'] - grid['start']) * i / max(int(grid['num']) - 1, 1)
                  for i in range(int(grid['num']))]
    else:
        values = section.get('values')
        if not isinstance(values, list) or not values:
            collector.add(path + '.values', "scan values must be a non-empty list")
            return None
        if not all(_is_number(v) for v in values):
            collector.add(path + '.values', "scan values must be numbers")
            return None
    return Scan(str(section['path']), values, str(section.get('unit', '')), tuple(section.get('linked', ())))


def _build_pulse(raw, collector, path):
    step = collector.mapping(raw, path)
    kinds = [k for k in step if k in PULSES]
    collector.unknown(step, tuple(PULSES) + ('delay',), path)
    if len(kinds) != 1:
        collector.add(path, "a step needs exactly one of: %s" % ', '.join(PULSES))
        return None
    kind = kinds[0]
    pulse_path = '%s.%s' % (path, kind)
    options = dict(collector.mapping(step[kind], pulse_path))
    allowed = [f.name for f in fields(PULSES[kind])] + (['rabi', 'intensity_ratio'] if kind == 'raman' else [])
    collector.unknown(options, allowed, pulse_path)
    bad = False
    for key, value in list(options.items()) + [('delay', step.get('delay', 0.0))]:
        where = '%s.%s' % (path if key == 'delay' else pulse_path, key)
        if key in ('two_photon', 'repumper_on', 'scattering_on'):
            continue
        if not _is_number(value):
            collector.add(where, "must be a number, got %r" % (value,))
            bad = True
        elif key in NON_NEGATIVE_FIELDS and value < 0:
            collector.add(where, "must be >= 0, got %r" % (value,))
            bad = True
    if bad or any(key not in allowed for key in options):
        return None
    if kind == 'raman' and 'rabi' in options:
        rabi = options.pop('rabi')
        ratio = options.pop('intensity_ratio', 1.3)
        options['omega_pi'], options['omega_sigma'] = raman_beams_for_rabi(rabi, options.get('big_delta', 0.65), ratio)
    try:
        return Step(PULSES[kind](**options), float(step.get('delay', 0.0)))
    except (TypeError, ValueError) as e:
        collector.add(pulse_path, str(e))
        return None


def _build_steps(raw, collector, path):
    if not isinstance(raw, list):
        collector.add(path, "must be a list of steps")
        return None
    steps = [_build_pulse(item, collector, '%s[%d]' % (path, i)) for i, item in enumerate(raw)]
    return None if any(s is None for s in steps) else steps


SEQUENCE_KEYS = ('name', 'preset', 'options', 'initial', 'manifolds', 'observable', 'markers', 'steps', 'readouts',
                 'scan', 'shots_per_point', 'jitter_sigma', 'detection_background')


def _build_sequence(raw, model, collector):
    before = len(collector.diagnostics)
    section = collector.mapping(raw, 'sequence')
    collector.unknown(section, SEQUENCE_KEYS, 'sequence')
    overrides = {k: section[k] for k in ('shots_per_point', 'jitter_sigma', 'detection_background') if k in section}
    for key, value in overrides.items():
        if not _is_number(value) or value < 0:
            collector.add('sequence.%s' % key, "must be a number >= 0")
            return None
    if 'shots_per_point' in overrides and int(overrides['shots_per_point']) != overrides['shots_per_point']:
        collector.add('sequence.shots_per_point', "must be an integer")
        return None

    if 'preset' in section:
        preset = PRESETS.get(section['preset'])
        if preset is None:
            collector.add('sequence.preset', "unknown preset %r, available: %s" % (section['preset'], ', '.join(PRESETS)))
            return None
        options = dict(collector.mapping(section.get('options'), 'sequence.options'))
        accepted = [p for p in inspect.signature(preset).parameters if p not in ('model', 'nu0_table')]
        collector.unknown(options, accepted, 'sequence.options')
        if any(key not in accepted for key in options):
            return None
        try:
            spec = preset(model=model.shift_model(), nu0_table=model.nu0_table(PRESET_MANIFOLDS), **options)
        except (TypeError, ValueError, SearchError) as e:
            collector.add('sequence.options', str(e))
            return None
        if 'scan' in section:
            scan = _build_scan(section['scan'], collector, 'sequence.scan')
            if scan is None:
                return None
            spec = replace(spec, scan=scan)
    else:
        for key in ('initial', 'manifolds', 'steps', 'scan'):
            if key not in section:
                collector.add('sequence.%s' % key, "missing, an explicit sequence needs initial, manifolds, steps "
                                                   "and scan")
        if len(collector.diagnostics) > before:
            return None
        steps = _build_steps(section['steps'], collector, 'sequence.steps')
        scan = _build_scan(section['scan'], collector, 'sequence.scan')
        readouts = []
        for r, item in enumerate(section.get('readouts') or []):
            item = collector.mapping(item, 'sequence.readouts[%d]' % r)
            branch = _build_steps(item.get('steps', []), collector, 'sequence.readouts[%d].steps' % r)
            if branch is not None:
                readouts.append(Readout(str(item.get('label', 'readout_%d' % r)), branch))
        manifolds = section['manifolds']
        if not isinstance(manifolds, list) or not all(isinstance(n, int) and n >= 2 for n in manifolds):
            collector.add('sequence.manifolds', "must be a list of integers >= 2")
        if steps is None or scan is None or len(collector.diagnostics) > before:
            return None
        spec = SequenceSpec(str(section.get('name', 'sequence')), section['initial'], steps, scan, manifolds,
                            str(section.get('observable', 'n49')), readouts, section.get('markers') or (),
                            detection_background=model.detection_background)

    if overrides:
        spec = replace(spec, **overrides)
    if 'name' in section:
        spec = replace(spec, name=str(section['name']))
    for where, message in check_sequence(spec):
        collector.add('sequence.%s' % where, message)
    return spec


def _check_fit(raw, collector):
    section = collector.mapping(raw, 'fit')
    kind = section.get('kind')
    if kind not in FIT_KINDS:
        collector.add('fit.kind', "unknown fit kind %r, available: %s" % (kind, ', '.join(FIT_KINDS)))
        return None
    required = {'gaussian': (), 'rabi_lineshape': ('duration', 'rabi'), 'sine': ('frequency',)}[kind]
    for key in required:
        if not _is_number(section.get(key)) or not section[key] > 0:
            collector.add('fit.%s' % key, "a %s fit needs %s > 0" % (kind, key))
    return section


def _writable(path):
    path = os.path.abspath(path)
    while not os.path.exists(path):
        parent = os.path.dirname(path)
        if parent == path:
            return False
        path = parent
    return os.path.isdir(path) and os.access(path, os.W_OK)


def build_config(raw, lines=None, source=None, seed=None, output=None, noiseless=False):
    """RunConfig and the list of diagnostics of parsed YAML content. The config is None if any diagnostic was found."""
    collector = _Collector(lines or {})
    if not isinstance(raw, dict):
        collector.add('<file>', "a run config must be a mapping")
        return None, collector.diagnostics
    collector.unknown(raw, TOP_LEVEL_KEYS, '')

    model = _build_model(raw.get('model'), collector)
    recipe_name = raw.get('recipe')
    has_sequence = 'sequence' in raw
    if (recipe_name is None) == (not has_sequence):
        collector.add('recipe', "a config selects either a recipe or a sequence")
    if recipe_name is not None and recipe_name not in RECIPES:
        collector.add('recipe', "unknown recipe %r, available: %s" % (recipe_name, ', '.join(sorted(RECIPES))))
        recipe_name = None
    settings = collector.mapping(raw.get('settings'), 'settings')
    if settings and has_sequence:
        collector.add('settings', "settings apply to recipes, set sequence options instead")
    elif recipe_name is not None:
        _check_settings(recipe_name, settings, collector)
    if 'fit' in raw and not has_sequence:
        collector.add('fit', "a fit block needs an inline sequence")

    spec = None
    fit_settings = None
    if has_sequence and model is not None:
        spec = _build_sequence(raw['sequence'], model, collector)
        if 'fit' in raw:
            fit_settings = _check_fit(raw['fit'], collector)

    seed = raw.get('seed') if seed is None else seed
    if seed is not None and (not isinstance(seed, int) or isinstance(seed, bool) or seed < 0):
        collector.add('seed', "must be a non-negative integer")

    name = str(raw.get('name') or recipe_name or (spec.name if spec is not None else 'run'))
    output = output or raw.get('output') or os.path.join(os.environ.get(OUTPUT_ENV, DEFAULT_OUTPUT), name)
    if not _writable(output):
        collector.add('output', "directory %s is not writable" % output)

    if collector.diagnostics:
        return None, collector.diagnostics
    if noiseless and spec is not None:
        spec = replace(spec, shots_per_point=0)
    config = RunConfig(name, model, output, recipe_name, dict(settings), spec, fit_settings, seed, noiseless, source)
    if config.shots_per_point > 0 and seed is None:
        collector.add('seed', "a seed is required when shots_per_point > 0")
        return None, collector.diagnostics
    return config, []


def load_config(path, seed=None, output=None, noiseless=False):
    """Validated RunConfig of a YAML file. Raises ValidationError with all diagnostics."""
    raw, lines = read_yaml(path)
    config, diagnostics = build_config(raw, lines, path, seed, output, noiseless)
    if diagnostics:
        raise ValidationError(diagnostics)
    return config


def validate(path):
    """Diagnostics of a config file, empty if it can be run."""
    try:
        load_config(path)
    except ValidationError as e:
        return e.diagnostics
    return []


def recipe_path(name):
    path = os.path.join(RECIPE_DIR, name + '.yaml')
    if not os.path.isfile(path):
        raise ConfigurationError("unknown recipe %r, available: %s" % (name, ', '.join(shipped_recipes())))
    return path


def shipped_recipes():
    return sorted(os.path.splitext(f)[0] for f in os.listdir(RECIPE_DIR) if f.endswith('.yaml'))
