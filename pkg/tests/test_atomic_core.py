import numpy as np
import pytest

from CIRCE.atomic_core import (CoreLevel, CoreTerm, Nu0Table, Polarization, ShiftModel, circular_gradient,
                               circular_gradient_quadrature, composite, core_line_strengths, core_sublevels,
                               default_nu0_table, level_shift, quadrupole_delta, total_delta, transition_frequency)
from CIRCE.utils.angular import clebsch_gordan, wigner_3j
from CIRCE.utils.exceptions import ConfigurationError, DomainError
from CIRCE.utils.units import HARTREE_HZ


def test_quadrupole_delta_51():
    assert quadrupole_delta(51, 2.029) == pytest.approx(759.0, abs=1.5)


@pytest.mark.parametrize('n', [2, 3, 5, 10, 25, 49, 51, 53, 80])
def test_gradient_matches_quadrature(n):
    assert circular_gradient_quadrature(n) == pytest.approx(circular_gradient(n), rel=1e-9)


def test_gradient_scaling():
    # ~ n^-6 for large n
    assert circular_gradient(100) / circular_gradient(50) == pytest.approx(2.0**-6, rel=1e-3)


def test_invalid_n():
    with pytest.raises(DomainError):
        circular_gradient(1)
    with pytest.raises(DomainError):
        circular_gradient(2.5)


def test_power_law_splitting(power_law_model):
    assert total_delta(power_law_model, 51) == pytest.approx(757.0 - 2.7)
    difference = total_delta(power_law_model, 49) - total_delta(power_law_model, 51)
    assert difference == pytest.approx(204.4, abs=0.2)
    # within 3 sigma of the measured 202(2) kHz
    assert abs(difference - 202.0) < 3 * 2.0


def test_theta_from_power_law_amplitude():
    theta = 757.0 * 1e3 / (circular_gradient(51) * HARTREE_HZ)
    assert theta == pytest.approx(2.025, abs=0.003)


def test_exact_model_includes_dipole_term():
    model = ShiftModel(theta=2.029, dipole_C=-2.7)
    assert total_delta(model, 51) == pytest.approx(quadrupole_delta(51, 2.029) - 2.7)
    assert total_delta(model, 49) == pytest.approx(quadrupole_delta(49, 2.029) - 2.7 * (51 / 49) ** 8)


def test_power_law_needs_amplitude():
    with pytest.raises(ConfigurationError):
        ShiftModel(mode='power_law')
    with pytest.raises(ConfigurationError):
        ShiftModel(theta=-1.0)


def test_level_shifts(model):
    delta = total_delta(model, 51)
    assert level_shift(composite(51, CoreTerm.D4_3_2, 1.5), model) == pytest.approx(delta / 2)
    assert level_shift(composite(51, CoreTerm.D4_3_2, -1.5), model) == pytest.approx(delta / 2)
    assert level_shift(composite(51, CoreTerm.D4_3_2, 0.5), model) == pytest.approx(-delta / 2)
    assert level_shift(composite(51, CoreTerm.S5_1_2, 0.5), model) == 0.0
    with pytest.raises(DomainError):
        level_shift(composite(51, CoreTerm.P5_1_2, 0.5), model)


def test_transition_frequencies(model):
    table = default_nu0_table((49, 51))
    nu0 = table.lookup(51, 49)
    s = transition_frequency(composite(51, CoreTerm.S5_1_2, 0.5), composite(49, CoreTerm.S5_1_2, 0.5), model, table)
    assert s == nu0
    nu_3_2 = transition_frequency(composite(51, CoreTerm.D4_3_2, 1.5), composite(49, CoreTerm.D4_3_2, 1.5), model, table)
    nu_1_2 = transition_frequency(composite(51, CoreTerm.D4_3_2, 0.5), composite(49, CoreTerm.D4_3_2, 0.5), model, table)
    # the |m_j|=3/2 line sits below nu0, symmetric to the 1/2 line
    assert nu_3_2 < nu0 < nu_1_2
    assert (nu_1_2 - nu_3_2) * 1e6 == pytest.approx(total_delta(model, 49) - total_delta(model, 51), rel=1e-6)
    assert nu_1_2 + nu_3_2 == pytest.approx(2 * nu0, abs=1e-12)


def test_microwave_transition_must_keep_core(model):
    table = default_nu0_table((49, 51))
    with pytest.raises(ConfigurationError):
        transition_frequency(composite(51, CoreTerm.S5_1_2, 0.5), composite(49, CoreTerm.D4_3_2, 0.5), model, table)


def test_optical_transition_is_shift_difference(model):
    table = default_nu0_table((51,))
    a = composite(51, CoreTerm.D4_3_2, 1.5)
    b = composite(51, CoreTerm.D4_3_2, 0.5)
    assert transition_frequency(a, b, model, table) * 1e6 == pytest.approx(total_delta(model, 51))


def test_nu0_table():
    table = default_nu0_table((49, 50, 51))
    assert table.lookup(51, 49) == 105.357546
    assert table[(49, 51)] == table['51-49']
    assert table.lookup(51, 50) == 51.098516
    # hydrogenic fallback, roughly
    assert table.lookup(50, 49) == pytest.approx(54.26, rel=1e-2)
    with pytest.raises(ConfigurationError):
        table.lookup(53, 51)
    shifted = table.shifted(1e-3)
    assert shifted.lookup(51, 49) == pytest.approx(105.358546)
    assert Nu0Table(table.as_dict()) == table
    overridden = default_nu0_table((49, 51), {'51-49': 105.0})
    assert overridden.lookup(51, 49) == 105.0


def test_core_sublevels():
    assert [c.m_j for c in core_sublevels(CoreTerm.D4_3_2)] == [-1.5, -0.5, 0.5, 1.5]
    with pytest.raises(DomainError):
        CoreLevel(CoreTerm.S5_1_2, 1.5)


@pytest.mark.parametrize('lower', [CoreTerm.S5_1_2, CoreTerm.D4_3_2])
def test_line_strengths_normalised(lower):
    for p in core_sublevels(CoreTerm.P5_1_2):
        total = sum(core_line_strengths(q, p, level) for q in Polarization for level in core_sublevels(lower))
        assert total == pytest.approx(1.0)


def test_line_strength_selection_rules():
    p = CoreLevel(CoreTerm.P5_1_2, 0.5)
    d = CoreLevel(CoreTerm.D4_3_2, 1.5)
    assert core_line_strengths(Polarization.PI, d, p) == 0.0
    assert core_line_strengths(Polarization.SIGMA_MINUS, d, p) == pytest.approx(0.5)
    assert core_line_strengths(Polarization.PI, CoreLevel(CoreTerm.D4_3_2, 0.5), p) == pytest.approx(1 / 3)


def test_wigner_3j_values():
    assert wigner_3j(1, 1, 0, 0, 0, 0) == pytest.approx(-1 / np.sqrt(3))
    assert wigner_3j(1, 1, 2, 1, 1, -2) == pytest.approx(1 / np.sqrt(5))
    assert wigner_3j(1, 1, 0, 1, 0, 0) == 0.0
    assert clebsch_gordan(0.5, 0.5, 0.5, -0.5, 1, 0) == pytest.approx(1 / np.sqrt(2))
    with pytest.raises(ValueError):
        wigner_3j(0.3, 1, 1, 0, 0, 0)
