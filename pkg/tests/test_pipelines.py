import json

import numpy as np
import pytest

from CIRCE.cli import EXIT_OK, main
from CIRCE.config import load_config, recipe_path
from CIRCE.pipelines import RECIPES, RecipeRunner

pytestmark = pytest.mark.slow


def _reproduce(tmp_path_factory, name):
    out = tmp_path_factory.mktemp(name)
    assert main(['reproduce', name, '--noiseless', '--out', str(out)]) == EXIT_OK
    with open(out / 'summary.json') as f:
        summary = json.load(f)
    return {key: row['value'] for key, row in summary.items()}, out


def test_every_shipped_recipe_is_registered():
    from CIRCE.config import shipped_recipes
    assert set(shipped_recipes()) == set(RECIPES)


def test_microwave_spectra(tmp_path_factory):
    summary, out = _reproduce(tmp_path_factory, 'fig2')
    # the jittered lines are not exactly Gaussian, all share one shape
    assert summary['splitting'] == pytest.approx(summary['model_splitting'], rel=0.02)
    assert summary['w0'] == pytest.approx(78.0, abs=5.0)
    assert summary['A_3_2_over_A0'] == pytest.approx(0.5, abs=0.02)
    assert summary['A_1_2_over_A0'] == pytest.approx(0.5, abs=0.02)
    assert summary['Ap_3_2_over_A0'] == pytest.approx(0.90, abs=0.03)
    assert summary['Ap_0_over_A0'] == pytest.approx(0.08, abs=0.015)
    with open(out / 'report.json') as f:
        report = json.load(f)
    assert set(report['mw_three_step']['fits']) == {'step 1', 'step 2', 'step 3'}


def test_raman_resonances(tmp_path_factory):
    summary, _ = _reproduce(tmp_path_factory, 'fig3')
    assert summary['resonance_difference'] == pytest.approx(summary['model_delta_difference'], abs=1e-3)


def test_quadrupole_moment(tmp_path_factory):
    summary, _ = _reproduce(tmp_path_factory, 'fig3-inset')
    assert summary['B'] == pytest.approx(757.0, abs=0.1)
    assert summary['theta'] == pytest.approx(2.025, abs=0.003)
    assert summary['delta_n51'] == pytest.approx(757.0 - 2.7, abs=0.01)


def test_light_shift_intercept(tmp_path_factory):
    summary, out = _reproduce(tmp_path_factory, 'figS2')
    assert summary['intercept'] == pytest.approx(summary['model_delta'], abs=1e-3)
    assert (out / 'figS2_resonances.csv').exists()


def test_optical_switch(tmp_path_factory):
    summary, _ = _reproduce(tmp_path_factory, 'fig4')
    assert summary['phase_shift_on'] == pytest.approx(np.pi, abs=0.05)
    assert summary['contrast_on_scattering'] < summary['contrast_on']
    assert summary['contrast_off'] > 0.3


def test_purification_filter(tmp_path_factory):
    summary, _ = _reproduce(tmp_path_factory, 'figS1')
    assert summary['transfer_5s'] >= 0.99
    assert summary['retention_4d'] >= 0.99
    assert 9.5 < summary['filter_delay'] < 11.5


def test_raman_rabi_flopping(tmp_path_factory):
    summary, _ = _reproduce(tmp_path_factory, 'figS3')
    assert summary['transfer_2pi_n51'] <= 0.02
    assert summary['transfer_2pi_n49'] <= 0.01
    assert summary['two_pi_duration'] == pytest.approx(10.0)


def test_runner_settings_override(tmp_path):
    config = load_config(recipe_path('figS4'), output=str(tmp_path / 'narrow'))
    config.settings = {'n_points': 21}
    summary = RecipeRunner(config).run()
    assert 10.0 <= summary['offset']['value'] <= 35.0
    assert len(np.loadtxt(tmp_path / 'narrow' / 'figS4_phase_shift.csv', delimiter=',', skiprows=1)) == 21
