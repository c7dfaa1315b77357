"""
Reproduction recipes.

A recipe runs the sequences behind one figure, feeds the datasets through the analysis chain
and writes everything into the output directory: one CSV and JSON sidecar per dataset,
``report.json`` with the fit reports and ``summary.json`` / ``summary.csv`` with the headline
numbers. Outputs contain no timestamps, so identical settings and seed give identical files.

Recipes register themselves with their default settings through the ``recipe`` decorator.
"""
import os
from dataclasses import dataclass, replace
from typing import Callable, Dict

import numpy as np

from CIRCE.analysis import (FitModel, Fitter, axis_khz, fit_B_extract_theta, fit_raman_resonance, gaussian_seed,
                            light_shift_extrapolate, mw_three_step_pipeline, rabi_seed, sine_seed)
from CIRCE.atomic_core import total_delta
from CIRCE.datasets import FLOAT_FORMAT, SpectrumDataset, write_json
from CIRCE.dynamics import pi_pulse_rabi, raman_parameters
from CIRCE.sequences import (NOMINAL_RAMAN_DURATION, Scan, SequenceRunner, d_transition, find_delta_star,
                             phase_shift_scan, preset_filter_fringes, preset_mw_spectroscopy,
                             preset_raman_rabi, preset_raman_spectroscopy, preset_ramsey_switch, purification_delay,
                             raman_partner, raman_pulse, switch_raman_pulse)
from CIRCE.utils.base import BaseClass
from CIRCE.utils.exceptions import PipelineError
from CIRCE.utils.units import KHZ_PER_GHZ


@dataclass(frozen=True)
class Recipe:
    name: str
    function: Callable
    defaults: Dict[str, object]
    description: str = ''


RECIPES: Dict[str, Recipe] = {}


def recipe(name, **defaults):
    def register(function):
        doc = (function.__doc__ or '').strip().split('\n')[0]
        RECIPES[name] = Recipe(name, function, defaults, doc)
        return function
    return register


class RecipeRunner(BaseClass):
    """Runs one recipe (or an inline sequence) of a RunConfig and writes its artifacts."""

    def __init__(self, config, **kwargs):
        super().__init__("RecipeRunner", **kwargs)
        self.config = config
        self.model = config.model.shift_model()
        self.seed = int(config.seed or 0)
        self.out = config.output
        self.reports = {}
        self.summary = {}

    def table(self, manifolds):
        return self.config.model.nu0_table(manifolds)

    def simulate(self, spec, label):
        runner = SequenceRunner(self.model, self.table(spec.manifolds), **self.config.model.runner_settings())
        dataset = runner.run(spec, self.seed)
        dataset.save(os.path.join(self.out, label + '.csv'))
        return dataset

    def save(self, dataset, label):
        dataset.save(os.path.join(self.out, label + '.csv'))

    def record(self, name, value, sigma=0.0, unit=''):
        self.summary[name] = {'value': float(value), 'sigma': float(sigma), 'unit': unit}

    def require(self, stage, result):
        if not result.converged:
            raise PipelineError(stage, "fit did not converge (%s)" % result.message)
        return result

    def run(self):
        os.makedirs(self.out, exist_ok=True)
        self.start('recipe')
        if self.config.recipe is not None:
            entry = RECIPES[self.config.recipe]
            self.info("Reproducing %s into %s", entry.name, self.out)
            entry.function(self, self.config.settings_for(entry))
        else:
            self.info("Running sequence '%s' into %s", self.config.sequence.name, self.out)
            run_inline(self, self.config.sequence, self.config.fit)
        write_json(os.path.join(self.out, 'report.json'), self.reports)
        write_json(os.path.join(self.out, 'summary.json'), self.summary)
        self.write_summary_table()
        self.stop('recipe', self.logger)
        return self.summary

    def write_summary_table(self):
        path = os.path.join(self.out, 'summary.csv')
        lines = ['quantity,value,sigma,unit']
        for name, row in self.summary.items():
            lines.append(','.join([name, FLOAT_FORMAT % row['value'], FLOAT_FORMAT % row['sigma'], row['unit']]))
        with open(path, 'w') as f:
            f.write('\n'.join(lines) + '\n')


def run_inline(runner, spec, fit_settings=None):
    """
    Inline sequence of a run config, with an optional single fit of the resulting dataset.
    GHz axes are fitted as kHz offsets from the middle of the scan, which is recorded as `reference`.
    """
    dataset = runner.simulate(spec, spec.name)
    runner.record('points', len(dataset))
    if not fit_settings:
        return
    kind = fit_settings['kind']
    unit = dataset.axis_unit
    reference = 0.0
    if unit == 'GHz':
        reference, unit = float(np.median(dataset.axis)), 'kHz'
        runner.record('reference', reference, 0.0, 'GHz')
    x = axis_khz(dataset, reference=reference)
    if kind == 'gaussian':
        center, area, width = gaussian_seed(x, dataset.values)
        model = FitModel.gaussian_multi([center], [area], width, fit_offset=fit_settings.get('fit_offset', False))
    elif kind == 'rabi_lineshape':
        center, amplitude, offset = rabi_seed(x, dataset.values)
        model = FitModel.rabi_lineshape(fit_settings['duration'], center, fit_settings['rabi'], amplitude, offset,
                                        free_rabi=fit_settings.get('free_rabi', False))
    else:
        amplitude, phase = sine_seed(x, dataset.values, fit_settings['frequency'])
        model = FitModel.sine(fit_settings['frequency'], phase, amplitude, float(np.mean(dataset.values)))
    result = runner.require('fit', Fitter().fit(x, dataset.values, model, dataset.errors))
    runner.reports['fit'] = result.report()
    for name in model.free:
        runner.record(name, result[name], result.sigma(name), unit if name.startswith(('center', 'width')) else '')


# microwave spectroscopy of the core state


@recipe('fig2', span=400.0, n_points=161, duration=15.0, pump_duration=200.0, overhang=2.0, jitter_sigma=75.0,
        shots_per_point=1000)
def fig2(runner, settings):
    """Microwave spectra without pumping, with 422 nm pumping and with pumping plus repumper."""
    table = runner.table((49, 51))
    datasets = {}
    for label, variant in (('black', 'no_pump'), ('red', 'pump'), ('blue', 'pump_plus_repump')):
        spec = preset_mw_spectroscopy(variant, runner.model, table, settings['span'], settings['n_points'],
                                      settings['duration'], leak=runner.config.model.leak,
                                      loss=runner.config.model.loss, pump_duration=settings['pump_duration'],
                                      overhang=settings['overhang'], jitter_sigma=settings['jitter_sigma'],
                                      shots_per_point=settings['shots_per_point'])
        datasets[label] = runner.simulate(spec, 'fig2_' + label)
    report = mw_three_step_pipeline(datasets['black'], datasets['red'], datasets['blue'],
                                    reference=table.lookup(51, 49))
    runner.reports['mw_three_step'] = report
    runner.record('nu0', report['nu0_GHz'], report['nu0_sigma_kHz'] / KHZ_PER_GHZ, 'GHz')
    runner.record('w0', report['w0_kHz'], report['w0_sigma_kHz'], 'kHz')
    runner.record('nu_3_2', report['nu_3_2_GHz'], report['nu_3_2_sigma_kHz'] / KHZ_PER_GHZ, 'GHz')
    runner.record('nu_1_2', report['nu_1_2_GHz'], report['nu_1_2_sigma_kHz'] / KHZ_PER_GHZ, 'GHz')
    runner.record('splitting', report['splitting_kHz'], report['splitting_sigma_kHz'], 'kHz')
    for key, name in (('A_3_2/A0', 'A_3_2_over_A0'), ('A_1_2/A0', 'A_1_2_over_A0'),
                      ("A'_3_2/A0", 'Ap_3_2_over_A0'), ("A'_0/A0", 'Ap_0_over_A0')):
        runner.record(name, report[key], report[key + '_sigma'])
    runner.record('model_splitting', total_delta(runner.model, 49) - total_delta(runner.model, 51), 0.0, 'kHz')


# Raman spectroscopy of the quadrupole splitting


def _raman_spectrum(runner, settings, n, power, label):
    """Raman spectrum of manifold n at relative power `power` with a pi pulse, and its resonance fit."""
    table = runner.table((n, raman_partner(n)))
    duration = settings['pulse_duration'] / power
    rabi = pi_pulse_rabi(NOMINAL_RAMAN_DURATION) * power
    probe = raman_pulse(0.0, rabi, duration, settings['big_delta'], settings['intensity_ratio'])
    center = raman_parameters(probe, runner.model, n)['resonance']
    spec = preset_raman_spectroscopy(n, duration, power, runner.model, table, settings['big_delta'],
                                     settings['intensity_ratio'], span=settings['span_rabi'] * rabi,
                                     n_points=settings['n_points'], center=center,
                                     leak=runner.config.model.leak, loss=runner.config.model.loss,
                                     shots_per_point=settings['shots_per_point'])
    dataset = runner.simulate(spec, label)
    result = runner.require(label, fit_raman_resonance(dataset, duration, rabi))
    runner.reports[label] = result.report()
    return result


@recipe('fig3', pulse_duration=NOMINAL_RAMAN_DURATION, power=1.0, big_delta=0.65, intensity_ratio=1.3,
        span_rabi=4.0, n_points=101, shots_per_point=1000)
def fig3(runner, settings):
    """Raman spectra of 51c and 49c at nominal power and the splitting of their resonances."""
    centers = {}
    for n in (51, 49):
        result = _raman_spectrum(runner, settings, n, settings['power'], 'fig3_n%d' % n)
        centers[n] = (result['center'], result.sigma('center'))
        runner.record('resonance_n%d' % n, *centers[n], unit='kHz')
    runner.record('resonance_difference', centers[49][0] - centers[51][0], np.hypot(centers[49][1], centers[51][1]),
                  'kHz')
    runner.record('model_delta_difference', total_delta(runner.model, 49) - total_delta(runner.model, 51), 0.0, 'kHz')


@recipe('fig3-inset', manifolds=[49, 51, 53], powers=[0.5, 1.0, 2.0], pulse_duration=NOMINAL_RAMAN_DURATION,
        big_delta=0.65, intensity_ratio=1.3, span_rabi=4.0, n_points=81, shots_per_point=1000, C=-2.7, C_sigma=1.0)
def fig3_inset(runner, settings):
    """Zero-power resonances of three manifolds and the n^-6 fit giving B and Theta."""
    deltas = []
    for n in settings['manifolds']:
        points = []
        for power in settings['powers']:
            result = _raman_spectrum(runner, settings, n, power, 'fig3_inset_n%d_p%g' % (n, power))
            points.append((power, result['center'], result.sigma('center')))
        extrapolation = light_shift_extrapolate(points)
        runner.reports['extrapolation_n%d' % n] = extrapolation.report()
        runner.record('delta_n%d' % n, extrapolation.intercept, extrapolation.intercept_sigma, 'kHz')
        deltas.append((n, extrapolation.intercept, extrapolation.intercept_sigma))
    theta = fit_B_extract_theta(deltas, settings['C'], settings['C_sigma'], runner.model)
    runner.reports['theta'] = theta.report()
    runner.record('B', theta.B, theta.B_sigma, 'kHz')
    runner.record('theta', theta.theta, theta.theta_sigma, 'a.u.')


@recipe('figS2', n=51, powers=[0.5, 1.0, 1.5, 2.0], pulse_duration=NOMINAL_RAMAN_DURATION, big_delta=0.65,
        intensity_ratio=1.3, span_rabi=4.0, n_points=81, shots_per_point=1000)
def figS2(runner, settings):
    """Light-shifted Raman resonance of one manifold versus power and its zero-power intercept."""
    n = settings['n']
    points = []
    for power in settings['powers']:
        result = _raman_spectrum(runner, settings, n, power, 'figS2_p%g' % power)
        points.append((power, result['center'], result.sigma('center')))
    powers, centers, sigmas = zip(*points)
    runner.save(SpectrumDataset('power', '', powers, 'resonance', centers, sigmas,
                                metadata={'sequence': 'light_shift', 'n': n}), 'figS2_resonances')
    extrapolation = light_shift_extrapolate(points)
    runner.reports['extrapolation'] = extrapolation.report()
    runner.record('intercept', extrapolation.intercept, extrapolation.intercept_sigma, 'kHz')
    runner.record('slope', extrapolation.slope, extrapolation.slope_sigma, 'kHz')
    runner.record('model_delta', total_delta(runner.model, n), 0.0, 'kHz')


# Ramsey optical switch


def _fringe_fit(runner, dataset, center, separation, label):
    x = (dataset.column('effective_freq') - center) * KHZ_PER_GHZ
    frequency = separation * 1e-3
    amplitude, phase = sine_seed(x, dataset.values, frequency)
    model = FitModel.sine(frequency, phase, amplitude, float(np.mean(dataset.values)))
    result = runner.require(label, Fitter().fit(x, dataset.values, model, dataset.errors))
    runner.reports[label] = result.report()
    return result


@recipe('fig4', separation=15.0, pulse_power=1.0, raman_detuning=200.0, big_delta=0.65, intensity_ratio=1.3,
        span=100.0, n_points=121, filter_duration=0.5, shots_per_point=1000)
def fig4(runner, settings):
    """Ramsey fringes without and with the Raman 2 pi pulse at delta*, the latter also with scattering."""
    table = runner.table((49, 50, 51))
    delta_star = find_delta_star(runner.model, settings['pulse_power'], settings['raman_detuning'],
                                 settings['big_delta'], settings['intensity_ratio'])
    runner.record('delta_star', delta_star, 0.0, 'kHz')
    fits = {}
    for label, raman_on, scattering in (('off', False, False), ('on', True, False), ('on_scattering', True, True)):
        spec = preset_ramsey_switch(raman_on, delta_star, runner.model, table, settings['separation'],
                                    pulse_power=settings['pulse_power'], raman_detuning=settings['raman_detuning'],
                                    big_delta=settings['big_delta'], intensity_ratio=settings['intensity_ratio'],
                                    scattering_on=scattering, span=settings['span'], n_points=settings['n_points'],
                                    leak=runner.config.model.leak, loss=runner.config.model.loss,
                                    filter_duration=settings['filter_duration'],
                                    shots_per_point=settings['shots_per_point'])
        spec = replace(spec, detection_background=runner.config.model.detection_background)
        dataset = runner.simulate(spec, 'fig4_' + label)
        fits[label] = _fringe_fit(runner, dataset, d_transition(51, 49, 1.5, runner.model, table),
                                  settings['separation'], 'fringes_' + label)
        runner.record('contrast_' + label, 2.0 * fits[label]['amplitude'], 2.0 * fits[label].sigma('amplitude'))
    for label in ('on', 'on_scattering'):
        shift = np.angle(np.exp(1j * (fits[label]['phase'] - fits['off']['phase'])))
        runner.record('phase_shift_' + label, abs(shift), np.hypot(fits[label].sigma('phase'), fits['off'].sigma('phase')),
                      'rad')


@recipe('figS4', pulse_power=1.0, raman_detuning=200.0, big_delta=0.65, intensity_ratio=1.3, window=100.0,
        n_points=201)
def figS4(runner, settings):
    """Phase written by the switch pulse versus Raman detuning around the 49c resonance."""
    probe = switch_raman_pulse(0.0, settings['pulse_power'], settings['raman_detuning'], settings['big_delta'],
                               settings['intensity_ratio'])
    resonance = raman_parameters(probe, runner.model, 49)['resonance']
    deltas = resonance + np.linspace(-settings['window'], settings['window'], int(settings['n_points']))
    runner.save(phase_shift_scan(runner.model, deltas, settings['pulse_power'], settings['raman_detuning'],
                                 settings['big_delta'], settings['intensity_ratio']), 'figS4_phase_shift')
    delta_star = find_delta_star(runner.model, settings['pulse_power'], settings['raman_detuning'],
                                 settings['big_delta'], settings['intensity_ratio'], settings['window'])
    runner.record('resonance_n49', resonance, 0.0, 'kHz')
    runner.record('delta_star', delta_star, 0.0, 'kHz')
    runner.record('offset', resonance - delta_star, 0.0, 'kHz')


@recipe('figS3', pulse_power=1.0, raman_detuning=200.0, big_delta=0.65, intensity_ratio=1.3, max_duration=20.0,
        n_points=101)
def figS3(runner, settings):
    """Raman transfer versus duration for the resonant 49c and the off-resonant 51c atoms."""
    delta_star = find_delta_star(runner.model, settings['pulse_power'], settings['raman_detuning'],
                                 settings['big_delta'], settings['intensity_ratio'])
    pulse = switch_raman_pulse(delta_star, settings['pulse_power'], settings['raman_detuning'], settings['big_delta'],
                               settings['intensity_ratio'])
    for n in (49, 51):
        table = runner.table((n, raman_partner(n)))
        spec = preset_raman_rabi(n, delta_star, runner.model, table, settings['pulse_power'], settings['raman_detuning'],
                                 settings['big_delta'], settings['intensity_ratio'], settings['max_duration'],
                                 settings['n_points'])
        runner.simulate(spec, 'figS3_n%d' % n)
        closing = runner.simulate(replace(spec, name=spec.name + '_2pi', scan=Scan('steps[1].duration',
                                                                                   [pulse.duration], 'us')),
                                  'figS3_n%d_2pi' % n)
        runner.record('transfer_2pi_n%d' % n, closing.values[0])
    runner.record('delta_star', delta_star, 0.0, 'kHz')
    runner.record('two_pi_duration', pulse.duration, 0.0, 'us')


# purification filter


@recipe('figS1', span=150.0, n_points=121, pulse_duration=0.5)
def figS1(runner, settings):
    """Fringes of the interference filter for atoms entering in 5s and in 4d."""
    table = runner.table((50, 51))
    delay = purification_delay(runner.model)
    runner.record('filter_delay', delay, 0.0, 'us')
    for core in ('5s', '4d'):
        spec = preset_filter_fringes(core, runner.model, table, settings['span'], settings['n_points'],
                                     settings['pulse_duration'])
        runner.simulate(spec, 'figS1_%s' % core)
        center = runner.simulate(replace(spec, name=spec.name + '_center',
                                         scan=replace(spec.scan, values=(table.lookup(51, 50),))),
                                 'figS1_%s_center' % core)
        if core == '5s':
            runner.record('transfer_5s', center.values[0])
        else:
            runner.record('retention_4d', 1.0 - center.values[0])
