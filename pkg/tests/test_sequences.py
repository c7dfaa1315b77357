import numpy as np
import pytest
from dataclasses import replace
from scipy.integrate import trapezoid

from CIRCE.analysis import FitModel, Fitter, fit_raman_resonance, sine_seed
from CIRCE.atomic_core import CoreTerm, composite, default_nu0_table, total_delta
from CIRCE.dynamics import ProbePulse, QuantumState, make_basis, marker_level, pi_pulse_rabi, raman_resonance
from CIRCE.sequences import (SHOT_ERRORS, Scan, SequenceRunner, SequenceSpec, check_sequence, d_transition, detect,
                             find_delta_star, phase_shift_scan, prepare, preset_filter_fringes, preset_mw_spectroscopy,
                             preset_purification_filter, preset_raman_spectroscopy, preset_ramsey_switch,
                             purification_delay, raman_pulse, run_sequence, scan_paths, set_path, switch_operating_point,
                             switch_phase_shift, switch_raman_pulse)
from CIRCE.utils.exceptions import ConfigurationError, SearchError
from CIRCE.utils.units import KHZ_PER_GHZ


def _d(n, m_j):
    return composite(n, CoreTerm.D4_3_2, m_j)


# detection


def test_detect_bins_by_manifold():
    basis = make_basis((49, 51))
    record = detect(QuantumState.pure(basis, _d(51, 1.5)), background=0.0)
    assert record['n51'] == 1.0
    assert record['n49'] == 0.0
    assert record['n99'] == 0.0
    assert record['other'] == 0.0


def test_probe_relabels_51_as_53():
    basis = make_basis((49, 51))
    record = detect(prepare('51c,4d', basis), ProbePulse(), background=0.0)
    assert record['n53'] == pytest.approx(1.0)
    assert record['n51'] == 0.0
    with_background = detect(prepare('51c,4d', basis), ProbePulse())
    assert with_background['n53'] == pytest.approx(0.9)
    assert with_background['n51'] == pytest.approx(0.1)
    assert with_background.total == pytest.approx(1.0)


def test_markers_are_detected_in_their_manifold():
    basis = make_basis((49, 51), markers=(51,))
    state = QuantumState.mixture(basis, {marker_level(51): 1.0, _d(51, 1.5): 1.0})
    record = detect(state, ProbePulse(), background=0.0)
    # the lost atoms are not circular, so the 53 relabel leaves them in 51
    assert record['n51'] == pytest.approx(0.5)
    assert record['n53'] == pytest.approx(0.5)
    assert record['other'] == pytest.approx(0.0, abs=1e-12)


def test_preparation():
    basis = make_basis((51,))
    state = prepare('51c,4d', basis)
    assert state.population(_d(51, -0.5)) == pytest.approx(0.25)
    with pytest.raises(ConfigurationError):
        prepare('49c,5s', basis)
    with pytest.raises(ConfigurationError):
        prepare('51c,5p', basis)


# specs and scan paths


def test_empty_sequence_is_flat():
    spec = SequenceSpec('empty', '51c,5s', [], Scan('repeat', [0, 1, 2]), (49, 51), 'n51')
    dataset = run_sequence(spec)
    # the default non-circular background is detected in 51 as well
    assert spec.detection_background == pytest.approx(0.10)
    np.testing.assert_allclose(dataset.values, [1.0, 1.0, 1.0], atol=1e-12)
    assert dataset.axis_name == 'repeat'
    assert dataset.metadata['detection_background'] == pytest.approx(0.10)
    assert dataset.metadata['shot_errors'] is None


def test_unknown_scan_path_lists_valid_paths(model):
    spec = preset_mw_spectroscopy('no_pump', model, n_points=5)
    bad = replace(spec, scan=Scan('steps[0].frequency', spec.scan.values))
    problems = check_sequence(bad)
    assert len(problems) == 1
    field, message = problems[0]
    assert field == 'scan.path'
    assert 'steps[0].source_freq' in message
    with pytest.raises(ConfigurationError):
        bad.validate()
    with pytest.raises(ConfigurationError):
        set_path(spec, 'steps[3].duration', 1.0)


def test_scan_paths_and_set_path(model):
    spec = preset_mw_spectroscopy('pump', model, n_points=5)
    paths = scan_paths(spec)
    assert 'steps[0].duration' in paths
    assert 'steps[1].rabi' in paths
    assert 'steps[1].n_a' not in paths
    assert 'steps[0].repumper_on' not in paths
    changed = set_path(spec, 'steps[1].duration', 20.0)
    assert changed.steps[1].pulse.duration == 20.0
    assert spec.steps[1].pulse.duration == 15.0


def test_empty_scan_rejected():
    with pytest.raises(ConfigurationError):
        Scan('repeat', [])


def test_jitter_needs_scanned_microwave(model):
    spec = preset_raman_spectroscopy(51, model=model, n_points=5)
    problems = check_sequence(replace(spec, jitter_sigma=10.0))
    assert [field for field, _ in problems] == ['jitter_sigma']
    # later pulses and readout branches are allowed behind the scanned microwave
    assert check_sequence(replace(preset_purification_filter(model), jitter_sigma=10.0)) == []


# microwave spectroscopy


def test_unpumped_line_peaks_at_nu0(model):
    table = default_nu0_table((49, 51))
    dataset = run_sequence(preset_mw_spectroscopy('no_pump', model, table, n_points=41), model)
    assert np.argmax(dataset.values) == 20
    assert dataset.values[20] == pytest.approx(1.0, abs=1e-9)
    assert dataset.column('effective_freq')[20] == pytest.approx(table.lookup(51, 49))


def test_jitter_convolves_the_pulse_line(model):
    table = default_nu0_table((49, 51))
    sigma = 40.0
    coherent = run_sequence(preset_mw_spectroscopy('no_pump', model, table, span=300.0, n_points=121), model)
    jittered = run_sequence(preset_mw_spectroscopy('no_pump', model, table, span=300.0, n_points=121,
                                                   jitter_sigma=sigma), model)
    offsets = (coherent.column('effective_freq') - table.lookup(51, 49)) * KHZ_PER_GHZ
    step = offsets[1] - offsets[0]
    kernel = np.exp(-0.5 * (np.arange(-40, 41) * step) ** 2 / sigma**2)
    reference = np.convolve(coherent.values, kernel / kernel.sum(), mode='same')
    central = np.abs(offsets) <= 100.0
    np.testing.assert_allclose(jittered.values[central], reference[central], atol=1e-3)
    assert np.max(jittered.values) < 0.8
    assert np.argmax(jittered.values) == 60
    assert trapezoid(jittered.values, offsets) == pytest.approx(trapezoid(coherent.values, offsets), rel=0.02)
    assert jittered.metadata['jitter_sigma'] == sigma


def test_narrow_jitter_keeps_later_steps(model):
    spec = preset_purification_filter(model, initial='51c,5s')
    exact = run_sequence(spec, model)
    jittered = run_sequence(replace(spec, jitter_sigma=0.5), model)
    assert jittered.values[0] == pytest.approx(exact.values[0], abs=1e-3)
    assert jittered.values[0] >= 0.98


def test_ideal_lines_keep_their_area_under_pumping(model):
    table = default_nu0_table((49, 51))
    areas = {}
    for variant in ('no_pump', 'pump'):
        spec = preset_mw_spectroscopy(variant, model, table, span=3000.0, n_points=3001)
        dataset = run_sequence(spec, model)
        offsets = (dataset.column('effective_freq') - table.lookup(51, 49)) * KHZ_PER_GHZ
        areas[variant] = trapezoid(dataset.values, offsets)
        if variant == 'pump':
            lower = offsets <= 0
            half = trapezoid(dataset.values[lower], offsets[lower]) / areas[variant]
    # pumping redistributes the atoms over two lines of equal weight
    assert areas['pump'] / areas['no_pump'] == pytest.approx(1.0, abs=1e-3)
    assert half == pytest.approx(0.5, abs=1e-3)


def test_shots_follow_expectation(model):
    table = default_nu0_table((49, 51))
    exact = run_sequence(preset_mw_spectroscopy('no_pump', model, table, n_points=41, jitter_sigma=40.0), model)
    spec = preset_mw_spectroscopy('no_pump', model, table, n_points=41, jitter_sigma=40.0, shots_per_point=10000)
    sampled = run_sequence(spec, model, rng_seed=3)
    again = run_sequence(spec, model, rng_seed=3)
    other = run_sequence(spec, model, rng_seed=4)
    np.testing.assert_array_equal(sampled.values, again.values)
    assert not np.array_equal(sampled.values, other.values)
    assert np.all(sampled.shots == 10000)
    assert np.all(sampled.errors > 0)
    assert sampled.metadata['shot_errors'] == SHOT_ERRORS
    pulls = np.abs(sampled.values - exact.values) / sampled.errors
    assert np.mean(pulls < 3.0) >= 0.9
    assert np.all(pulls < 5.0)


def test_repumped_preparation_with_leak(model):
    table = default_nu0_table((49, 51))
    values = {}
    for leak in (0.0, 0.1):
        spec = preset_mw_spectroscopy('pump_plus_repump', model, table, n_points=5, span=0.0, leak=leak)
        values[leak] = run_sequence(spec, model).values[0]
    # at nu0 the leaked 5s atoms are all transferred, the 4d atoms lose a tenth
    assert values[0.1] - 0.9 * values[0.0] == pytest.approx(0.1, abs=1e-6)


# Raman spectroscopy


@pytest.mark.parametrize('n', [51, 49])
def test_raman_resonance_is_recovered(model, n):
    rabi = pi_pulse_rabi(17.0)
    center = raman_resonance(raman_pulse(0.0, rabi, 17.0), model, n)
    spec = preset_raman_spectroscopy(n, model=model, span=4 * rabi, n_points=61, center=center)
    dataset = run_sequence(spec, model)
    result = fit_raman_resonance(dataset, 17.0, rabi)
    assert result.converged
    assert result['center'] == pytest.approx(center, abs=1e-4)


def test_raman_resonances_split_by_delta_difference(model):
    rabi = pi_pulse_rabi(17.0)
    probe = raman_pulse(0.0, rabi, 17.0)
    difference = raman_resonance(probe, model, 49) - raman_resonance(probe, model, 51)
    assert difference == pytest.approx(total_delta(model, 49) - total_delta(model, 51), rel=1e-12)


def test_zero_power_raman_does_nothing(model):
    spec = preset_raman_spectroscopy(51, power_scale=0.0, model=model, n_points=11)
    dataset = run_sequence(spec, model)
    assert np.ptp(dataset.values) < 1e-12
    assert dataset.values[0] < 0.05


# purification filter


def test_filter_delay(power_law_model):
    assert purification_delay(power_law_model) == pytest.approx(10.5, abs=0.1)


def test_filter_removes_5s_and_keeps_4d(model):
    transferred = run_sequence(preset_purification_filter(model, initial='51c,5s'), model)
    kept = run_sequence(preset_purification_filter(model, initial='51c,4d'), model)
    assert transferred.values[0] >= 0.99
    assert kept.values[0] <= 0.01


def test_filter_preserves_4d_sublevels(model):
    spec = preset_purification_filter(model, initial='51c,4d')
    table = default_nu0_table((50, 51))
    basis = make_basis(spec.manifolds)
    runner = SequenceRunner(model, table)
    state, _, _ = runner.evolve(spec.steps, prepare('51c,4d', basis), 0.0, table)
    for m_j in (-1.5, -0.5, 0.5, 1.5):
        assert state.population(_d(51, m_j)) == pytest.approx(0.25, abs=1e-3)


def test_filter_fringes(model):
    fringes_5s = run_sequence(preset_filter_fringes('5s', model, n_points=31), model)
    fringes_4d = run_sequence(preset_filter_fringes('4d', model, n_points=31), model)
    assert fringes_5s.values[15] >= 0.99
    assert fringes_4d.values[15] <= 0.01
    with pytest.raises(ConfigurationError):
        preset_filter_fringes('5p', model)


# Ramsey optical switch


def test_switch_operating_point():
    rabi, duration, detuning = switch_operating_point(200.0)
    assert rabi == pytest.approx(96.82, abs=0.01)
    assert duration == pytest.approx(10.0)
    # one generalised cycle of the switched manifold, two of the spectator
    assert np.hypot(rabi, detuning) * duration * 1e-3 == pytest.approx(1.0)
    assert np.hypot(rabi, 200.0 + detuning) * duration * 1e-3 == pytest.approx(2.0)
    with pytest.raises(ConfigurationError):
        switch_operating_point(0.0)


def test_delta_star_offset(model):
    probe = switch_raman_pulse(0.0)
    resonance = raman_resonance(probe, model, 49)
    delta_star = find_delta_star(model)
    # below the resonance, tens of kHz away
    assert 10.0 <= resonance - delta_star <= 35.0
    assert abs(switch_phase_shift(model, delta_star)) == pytest.approx(np.pi, abs=1e-6)


def test_delta_star_approaches_resonance_at_low_power(model):
    resonance = raman_resonance(switch_raman_pulse(0.0, 0.1), model, 49)
    low = find_delta_star(model, pulse_power=0.1, window=20.0)
    assert abs(low - resonance) < 1.0


def test_delta_star_search_fails_in_narrow_window(model):
    with pytest.raises(SearchError):
        find_delta_star(model, window=5.0, n_grid=101)


def test_phase_shift_scan(model):
    resonance = raman_resonance(switch_raman_pulse(0.0), model, 49)
    dataset = phase_shift_scan(model, resonance + np.linspace(-50, 50, 51))
    assert dataset.observable == 'fringe_phase_shift'
    assert len(dataset) == 51


def _fringe_phase(dataset, model, table):
    x = (dataset.column('effective_freq') - d_transition(51, 49, 1.5, model, table)) * KHZ_PER_GHZ
    frequency = 15.0 * 1e-3
    amplitude, phase = sine_seed(x, dataset.values, frequency)
    result = Fitter().fit(x, dataset.values, FitModel.sine(frequency, phase, amplitude, float(np.mean(dataset.values))))
    assert result.converged
    return result


@pytest.fixture(scope='module')
def switch_runs():
    from CIRCE.atomic_core import ShiftModel
    model = ShiftModel()
    table = default_nu0_table((49, 50, 51))
    delta_star = find_delta_star(model)
    runs = {}
    for label, raman_on, scattering in (('off', False, False), ('on', True, False), ('scattering', True, True)):
        spec = preset_ramsey_switch(raman_on, delta_star, model, table, scattering_on=scattering, n_points=41)
        runs[label] = _fringe_phase(run_sequence(spec, model), model, table)
    return runs


def test_ramsey_fringe_period(switch_runs):
    assert switch_runs['off']['frequency'] == pytest.approx(15.0e-3, rel=0.02)


def test_switch_flips_fringes(switch_runs):
    shift = np.angle(np.exp(1j * (switch_runs['on']['phase'] - switch_runs['off']['phase'])))
    assert abs(shift) == pytest.approx(np.pi, abs=0.05)


def test_scattering_lowers_contrast(switch_runs):
    assert switch_runs['scattering']['amplitude'] < switch_runs['on']['amplitude']
    assert switch_runs['off']['amplitude'] > 0.4


def test_frame_invariance(model):
    table = default_nu0_table((49, 50, 51))
    plain = run_sequence(preset_ramsey_switch(False, model=model, nu0_table=table, n_points=21), model)
    shifted = run_sequence(preset_ramsey_switch(False, model=model, nu0_table=table.shifted(1e-4), n_points=21), model,
                           nu0_table=table.shifted(1e-4))
    np.testing.assert_allclose(shifted.values, plain.values, atol=1e-6)
