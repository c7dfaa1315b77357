import numpy as np
import pytest

from CIRCE.analysis import (UNCERTAINTY_LABEL, FitModel, FitParameter, Fitter, ModelKind, fit_B_extract_theta,
                            fit_raman_resonance, light_shift_extrapolate, mw_three_step_pipeline, numerical_jacobian,
                            sine_seed)
from CIRCE.atomic_core import ShiftModel, total_delta
from CIRCE.datasets import SpectrumDataset
from CIRCE.dynamics import pi_pulse_rabi, raman_resonance
from CIRCE.sequences import NOMINAL_RAMAN_DURATION, preset_raman_spectroscopy, raman_pulse, run_sequence
from CIRCE.utils.exceptions import ConfigurationError, DomainError, PipelineError


def _gaussians(x, centers, areas, width):
    return sum(a / (np.sqrt(2 * np.pi) * width) * np.exp(-0.5 * (x - c) ** 2 / width**2) for c, a in zip(centers, areas))


def _power_law(n, B=757.0, C=-2.7, ref=51):
    return B * (ref / n) ** 6 + C * (ref / n) ** 8


# fits


def test_gaussian_doublet_round_trip():
    x = np.linspace(-300, 300, 121)
    y = _gaussians(x, [-100.0, 100.0], [50.0, 40.0], 30.0)
    result = Fitter().fit(x, y, FitModel.gaussian_multi([-90.0, 110.0], [40.0, 50.0], 25.0))
    assert result.converged
    assert result['center_0'] == pytest.approx(-100.0, rel=1e-6)
    assert result['center_1'] == pytest.approx(100.0, rel=1e-6)
    assert result['area_0'] == pytest.approx(50.0, rel=1e-6)
    assert result['area_1'] == pytest.approx(40.0, rel=1e-6)
    assert result['width'] == pytest.approx(30.0, rel=1e-6)


def test_rabi_lineshape_round_trip():
    x = np.linspace(-120, 120, 81)
    truth = FitModel.rabi_lineshape(17.0, 5.0, 29.4, 0.9, 0.02)
    y = truth.evaluate(x)
    result = Fitter().fit(x, y, FitModel.rabi_lineshape(17.0, 2.0, 27.0, 0.8, 0.0, free_rabi=True))
    assert result.converged
    for name, value in (('center', 5.0), ('rabi', 29.4), ('amplitude', 0.9), ('offset', 0.02)):
        assert result[name] == pytest.approx(value, rel=1e-6)


def test_sine_round_trip():
    x = np.linspace(-200, 200, 41)
    y = 0.5 + 0.45 * np.cos(2 * np.pi * 0.015 * x + 1.0)
    amplitude, phase = sine_seed(x, y, 0.0145)
    result = Fitter().fit(x, y, FitModel.sine(0.0145, phase, amplitude, 0.4))
    assert result.converged
    assert result['frequency'] == pytest.approx(0.015, rel=1e-6)
    assert result['amplitude'] == pytest.approx(0.45, rel=1e-6)
    assert np.angle(np.exp(1j * (result['phase'] - 1.0))) == pytest.approx(0.0, abs=1e-6)
    assert -np.pi <= result['phase'] <= np.pi


def test_linear_round_trip():
    x = np.linspace(0, 2, 5)
    result = Fitter().fit(x, 750.0 + 12.5 * x, FitModel.linear(700.0, 0.0))
    assert result.converged
    assert result['intercept'] == pytest.approx(750.0, rel=1e-6)
    assert result['slope'] == pytest.approx(12.5, rel=1e-6)


def test_random_gaussian_fits_recover_truth(rng):
    x = np.linspace(-300, 300, 121)
    noise = 0.005
    pulls = []
    for _ in range(60):
        center, area, width = rng.uniform(-100, 100), rng.uniform(30, 80), rng.uniform(25, 50)
        y = _gaussians(x, [center], [area], width) + rng.normal(0, noise, len(x))
        start = FitModel.gaussian_multi([center + rng.uniform(-10, 10)], [area * rng.uniform(0.8, 1.2)],
                                        width * rng.uniform(0.8, 1.2))
        result = Fitter().fit(x, y, start, np.full(len(x), noise))
        assert result.converged
        for name, truth in (('center_0', center), ('area_0', area), ('width', width)):
            pulls.append((result[name] - truth) / result.sigma(name))
    pulls = np.array(pulls)
    assert np.all(np.abs(pulls) < 5.0)
    assert np.mean(np.abs(pulls) < 1.0) == pytest.approx(0.68, abs=0.1)


def test_scaling_errors_scales_uncertainties(rng):
    x = np.linspace(-300, 300, 121)
    y = _gaussians(x, [0.0], [60.0], 40.0) + rng.normal(0, 0.01, len(x))
    model = FitModel.gaussian_multi([10.0], [50.0], 35.0)
    one = Fitter().fit(x, y, model, np.full(len(x), 0.01))
    two = Fitter().fit(x, y, model, np.full(len(x), 0.02))
    for name in model.free:
        assert two[name] == pytest.approx(one[name], rel=1e-8)
        assert two.sigma(name) == pytest.approx(2 * one.sigma(name), rel=1e-6)


def test_jax_jacobian_matches_finite_differences():
    x = np.linspace(-200, 200, 41)
    model = FitModel.rabi_lineshape(17.0, 5.0, 29.4, 0.9, 0.02, free_rabi=True)
    y = np.zeros_like(x)
    residual, jacobian = Fitter().residual_functions(model, x, y, None)
    p = np.array([model.parameter(n).value for n in model.free])
    expected = numerical_jacobian(lambda q: np.asarray(residual(q)), p)
    np.testing.assert_allclose(np.asarray(jacobian(p)), expected, rtol=1e-6, atol=1e-7)


def test_degenerate_jacobian_is_flagged():
    x = np.linspace(-300, 300, 121)
    y = _gaussians(x, [0.0], [60.0], 40.0)
    # two peaks at the same fixed position: only the sum of the areas is constrained
    model = FitModel.gaussian_multi([0.0, 0.0], [20.0, 20.0], 35.0, fixed_centers=(0, 1))
    result = Fitter().fit(x, y, model)
    assert not result.converged
    assert result.message == 'degenerate Jacobian'


def test_iteration_cap():
    x = np.linspace(-300, 300, 121)
    y = _gaussians(x, [0.0], [60.0], 40.0)
    result = Fitter(max_iterations=1).fit(x, y, FitModel.gaussian_multi([60.0], [20.0], 80.0))
    assert not result.converged
    assert not result.report()['reliable']


def test_fit_rejects_bad_input():
    with pytest.raises(DomainError):
        Fitter().fit([0.0, 1.0], [1.0, 2.0], FitModel.linear())
    with pytest.raises(ConfigurationError):
        FitParameter('width', 1.0, lower=2.0, upper=1.0)
    with pytest.raises(ConfigurationError):
        FitModel(ModelKind.LINEAR, (FitParameter('intercept', 0.0, True), FitParameter('slope', 0.0, True)))
    with pytest.raises(ConfigurationError):
        FitModel(ModelKind.RABI_LINESHAPE, (FitParameter('center', 0.0), FitParameter('rabi', 1.0),
                                            FitParameter('amplitude', 1.0), FitParameter('offset', 0.0)))


def test_report_schema():
    x = np.linspace(0, 2, 5)
    report = Fitter().fit(x, 1.0 + x, FitModel.linear()).report()
    assert report['uncertainty'] == UNCERTAINTY_LABEL
    assert [p['name'] for p in report['parameters']] == ['intercept', 'slope']


# microwave three-step analysis


def _dataset(x, y):
    return SpectrumDataset('detuning', 'kHz', x, 'n49', y, None)


def test_three_step_pipeline_on_exact_lines():
    x = np.linspace(-400, 400, 161)
    black = _dataset(x, _gaussians(x, [0.0], [60.0], 40.0))
    red = _dataset(x, _gaussians(x, [-100.0, 100.0], [30.0, 30.0], 40.0))
    blue = _dataset(x, _gaussians(x, [-100.0, 0.0], [54.0, 4.8], 40.0))
    report = mw_three_step_pipeline(black, red, blue)
    assert report['w0_kHz'] == pytest.approx(40.0, rel=1e-6)
    assert report['splitting_kHz'] == pytest.approx(200.0, rel=1e-6)
    assert report['A_3_2/A0'] == pytest.approx(0.5, rel=1e-6)
    assert report['A_1_2/A0'] == pytest.approx(0.5, rel=1e-6)
    assert report["A'_3_2/A0"] == pytest.approx(0.9, rel=1e-6)
    assert report["A'_0/A0"] == pytest.approx(0.08, rel=1e-6)
    assert set(report['fits']) == {'step 1', 'step 2', 'step 3'}


def test_three_step_pipeline_fails_on_flat_data():
    x = np.linspace(-400, 400, 161)
    flat = _dataset(x, np.zeros_like(x))
    with pytest.raises(PipelineError) as error:
        mw_three_step_pipeline(flat, flat, flat)
    assert error.value.step == 'step 1'


# zero-power extrapolation


def test_light_shift_extrapolation():
    result = light_shift_extrapolate([(0.5, 755.0), (1.0, 760.0), (2.0, 770.0)])
    assert result.intercept == pytest.approx(750.0)
    assert result.slope == pytest.approx(10.0)
    assert result.intercept_sigma == pytest.approx(0.0, abs=1e-6)
    weighted = light_shift_extrapolate([(0.5, 755.0, 1.0), (1.0, 760.0, 1.0), (2.0, 770.0, 1.0)])
    assert weighted.intercept == pytest.approx(750.0)
    assert weighted.intercept_sigma > 0
    assert weighted.report()['uncertainty'] == UNCERTAINTY_LABEL


def test_extrapolation_needs_two_powers():
    with pytest.raises(DomainError):
        light_shift_extrapolate([(1.0, 760.0), (1.0, 761.0)])


# n^-6 law and Theta


def test_theta_from_exact_power_law():
    deltas = [(n, _power_law(n), 1.0) for n in (49, 51, 53)]
    result = fit_B_extract_theta(deltas)
    assert result.B == pytest.approx(757.0, rel=1e-9)
    assert result.theta == pytest.approx(2.025, abs=0.003)
    assert 0 < result.theta_sigma < 0.01
    assert result.B_sigma == pytest.approx(np.hypot(result.B_sigma_stat, result.B_sigma_C))
    assert result.report()['n'] == [49, 51, 53]


def test_shifting_C_moves_B_by_its_sensitivity():
    deltas = [(n, _power_law(n), 1.0) for n in (49, 51, 53)]
    base = fit_B_extract_theta(deltas, C=-2.7, C_sigma=1.0)
    moved = fit_B_extract_theta(deltas, C=-1.7, C_sigma=1.0)
    assert base.B - moved.B == pytest.approx(base.B_sigma_C, rel=1e-9)


def test_single_reference_point():
    result = fit_B_extract_theta([(51, 760.0)], C=-2.7)
    assert result.B == pytest.approx(762.7)
    doubled = fit_B_extract_theta([(51, 1520.0)], C=0.0)
    assert doubled.B == pytest.approx(2 * fit_B_extract_theta([(51, 760.0)], C=0.0).B)


def test_theta_rejects_bad_input():
    with pytest.raises(DomainError):
        fit_B_extract_theta([])
    with pytest.raises(DomainError):
        fit_B_extract_theta([(51, 754.0), (51, 755.0)])


def test_reference_theta_uncertainty_is_optional():
    deltas = [(n, _power_law(n), 1.0) for n in (49, 51, 53)]
    plain = fit_B_extract_theta(deltas, model_ref=ShiftModel())
    full = fit_B_extract_theta(deltas, model_ref=ShiftModel(), include_theta_ref=True)
    assert full.theta_sigma > plain.theta_sigma
    assert full.theta == plain.theta


def test_B_pulls_are_normal(rng):
    n = np.array([49, 51, 53])
    pulls = []
    for _ in range(2000):
        y = _power_law(n) + rng.normal(0, 2.0, 3)
        result = fit_B_extract_theta(zip(n, y, [2.0] * 3), C_sigma=0.0)
        pulls.append((result.B - 757.0) / result.B_sigma)
    assert 0.8 < np.var(pulls) < 1.2
    assert abs(np.mean(pulls)) < 0.1


@pytest.mark.slow
def test_B_pulls_through_sampled_raman_spectra(power_law_model):
    rabi = pi_pulse_rabi(NOMINAL_RAMAN_DURATION)
    probe = raman_pulse(0.0, rabi, NOMINAL_RAMAN_DURATION)
    manifolds = (49, 51, 53)
    centers = {n: raman_resonance(probe, power_law_model, n) for n in manifolds}
    light_shifts = {n: centers[n] - total_delta(power_law_model, n) for n in manifolds}
    pulls = []
    for seed in range(20):
        deltas = []
        for n in manifolds:
            spec = preset_raman_spectroscopy(n, model=power_law_model, span=4 * rabi, n_points=41, center=centers[n],
                                             shots_per_point=200)
            result = fit_raman_resonance(run_sequence(spec, power_law_model, rng_seed=seed),
                                         NOMINAL_RAMAN_DURATION, rabi)
            assert result.converged
            deltas.append((n, result['center'] - light_shifts[n], result.sigma('center')))
        theta = fit_B_extract_theta(deltas, C=-2.7, C_sigma=0.0, model_ref=power_law_model)
        pulls.append((theta.B - 757.0) / theta.B_sigma)
    assert abs(np.mean(pulls)) < 0.7
    assert 0.3 < np.var(pulls) < 2.0


# datasets


def test_dataset_save_and_load(tmp_path):
    dataset = SpectrumDataset('detuning', 'kHz', [-1.0, 0.0, 1.0], 'n49', [0.25, 0.5, 0.75], [0.0, 0.125, 0.0],
                              shots=[100, 100, 100], columns={'effective_freq': [105.5, 105.25, 105.0]},
                              metadata={'name': 'demo'})
    path = dataset.save(str(tmp_path / 'demo.csv'))
    loaded = SpectrumDataset.load(path)
    np.testing.assert_array_equal(loaded.values, dataset.values)
    np.testing.assert_array_equal(loaded.column('effective_freq'), dataset.column('effective_freq'))
    np.testing.assert_array_equal(loaded.shots, [100, 100, 100])
    assert loaded.metadata == {'name': 'demo'}
    with pytest.raises(ConfigurationError):
        loaded.column('missing')
    with pytest.raises(ConfigurationError):
        SpectrumDataset('detuning', 'kHz', [0.0, 1.0], 'n49', [0.5], None)
