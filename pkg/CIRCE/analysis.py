"""
Inference chain on SpectrumDatasets.

Least-squares fits of Gaussian multiplets, Rabi lineshapes, (damped) sines and lines use a
damped Gauss-Newton (Levenberg-Marquardt) iteration with Jacobians from jax. On top of the
fits sit the three-step microwave-spectrum analysis, the zero-power extrapolation of Raman
resonances and the fit of the n^-6 law that yields the 4d3/2 quadrupole moment.

Fits run on frequency offsets in kHz from a reference, never on absolute GHz values.
"""
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Tuple

import jax
import jax.numpy as jnp
import numpy as np
from scipy.integrate import trapezoid

from CIRCE.atomic_core import ShiftModel, circular_gradient
from CIRCE.utils.base import BaseClass
from CIRCE.utils.exceptions import ConfigurationError, DomainError, PipelineError
from CIRCE.utils.units import HARTREE_HZ, KHZ_PER_GHZ

jax.config.update("jax_enable_x64", True)

UNCERTAINTY_LABEL = "statistical, local-quadratic"


class ModelKind(str, Enum):
    GAUSSIAN_MULTI = 'gaussian_multi'
    RABI_LINESHAPE = 'rabi_lineshape'
    SINE = 'sine'
    LINEAR = 'linear'


@dataclass(frozen=True)
class FitParameter:
    name: str
    value: float
    fixed: bool = False
    lower: float = -np.inf
    upper: float = np.inf

    def __post_init__(self):
        object.__setattr__(self, 'value', float(self.value))
        if not self.lower <= self.upper:
            raise ConfigurationError("parameter %s has inconsistent bounds [%g, %g]" % (self.name, self.lower, self.upper))
        if not self.lower <= self.value <= self.upper:
            raise ConfigurationError("parameter %s = %g lies outside its bounds" % (self.name, self.value))


@dataclass(frozen=True)
class FitModel:
    kind: ModelKind
    parameters: Tuple[FitParameter, ...]
    n_peaks: int = 1
    # pulse duration of the Rabi lineshape, us
    duration: float = None

    def __post_init__(self):
        object.__setattr__(self, 'kind', ModelKind(self.kind))
        object.__setattr__(self, 'parameters', tuple(self.parameters))
        expected = set(_parameter_names(self.kind, self.n_peaks, self.names))
        if set(self.names) != expected or len(self.names) != len(expected):
            raise ConfigurationError("%s model needs parameters %s, got %s" % (self.kind.value, sorted(expected), self.names))
        if not any(not p.fixed for p in self.parameters):
            raise ConfigurationError("a fit model needs at least one free parameter")
        if self.kind is ModelKind.RABI_LINESHAPE and not (self.duration and self.duration > 0):
            raise ConfigurationError("a Rabi lineshape needs the pulse duration")

    @property
    def names(self):
        return [p.name for p in self.parameters]

    @property
    def free(self):
        return [p.name for p in self.parameters if not p.fixed]

    def parameter(self, name):
        return self.parameters[self.names.index(name)]

    def with_values(self, **values):
        return FitModel(self.kind, tuple(FitParameter(p.name, values.get(p.name, p.value), p.fixed, p.lower, p.upper)
                                         for p in self.parameters), self.n_peaks, self.duration)

    def function(self):
        return model_function(self.kind, self.names, self.n_peaks, self.duration)

    def evaluate(self, x, values=None):
        values = dict({p.name: p.value for p in self.parameters}, **(values or {}))
        return np.asarray(self.function()(jnp.array([values[n] for n in self.names]), jnp.asarray(x, dtype=float)))

    @classmethod
    def gaussian_multi(cls, centers, areas, width, offset=0.0, shared_width=True, fixed_width=False,
                       fixed_centers=(), fit_offset=False):
        """Sum of area-normalised Gaussians of standard deviation `width`."""
        n = len(centers)
        widths = [width] * n if np.ndim(width) == 0 else list(width)
        params = []
        if shared_width:
            params.append(FitParameter('width', widths[0], fixed_width, 1e-9))
        for i in range(n):
            params += [FitParameter('center_%d' % i, centers[i], i in fixed_centers), FitParameter('area_%d' % i, areas[i])]
            if not shared_width:
                params.append(FitParameter('width_%d' % i, widths[i], fixed_width, 1e-9))
        params.append(FitParameter('offset', offset, not fit_offset))
        return cls(ModelKind.GAUSSIAN_MULTI, tuple(params), n)

    @classmethod
    def rabi_lineshape(cls, duration, center, rabi, amplitude=1.0, offset=0.0, free_rabi=False):
        """offset + amplitude * transfer of a square pulse of fixed duration (us) with Rabi frequency rabi (kHz)."""
        return cls(ModelKind.RABI_LINESHAPE, (FitParameter('center', center), FitParameter('rabi', rabi, not free_rabi, 1e-12),
                                              FitParameter('amplitude', amplitude), FitParameter('offset', offset)),
                   duration=duration)

    @classmethod
    def sine(cls, frequency, phase, amplitude, offset=0.0, decay=0.0, fixed_frequency=False, fit_decay=False):
        """offset + amplitude * cos(2 pi frequency x + phase) * exp(-decay x)."""
        return cls(ModelKind.SINE, (FitParameter('frequency', frequency, fixed_frequency), FitParameter('phase', phase),
                                    FitParameter('amplitude', amplitude), FitParameter('offset', offset),
                                    FitParameter('decay', decay, not fit_decay)))

    @classmethod
    def linear(cls, intercept=0.0, slope=0.0):
        return cls(ModelKind.LINEAR, (FitParameter('intercept', intercept), FitParameter('slope', slope)))


def _parameter_names(kind, n_peaks, names):
    if kind is ModelKind.GAUSSIAN_MULTI:
        peaks = ['center_%d' % i for i in range(n_peaks)] + ['area_%d' % i for i in range(n_peaks)]
        widths = ['width'] if 'width' in names else ['width_%d' % i for i in range(n_peaks)]
        return peaks + widths + ['offset']
    return {ModelKind.RABI_LINESHAPE: ['center', 'rabi', 'amplitude', 'offset'],
            ModelKind.SINE: ['frequency', 'phase', 'amplitude', 'offset', 'decay'],
            ModelKind.LINEAR: ['intercept', 'slope']}[kind]


def model_function(kind, names, n_peaks=1, duration=None):
    """jax function f(params, x) with params ordered like `names`."""
    kind = ModelKind(kind)
    idx = {name: i for i, name in enumerate(names)}

    if kind is ModelKind.GAUSSIAN_MULTI:
        def f(p, x):
            y = jnp.zeros_like(x) + p[idx['offset']]
            for i in range(n_peaks):
                width = p[idx['width']] if 'width' in idx else p[idx['width_%d' % i]]
                y = y + p[idx['area_%d' % i]] / (jnp.sqrt(2.0 * jnp.pi) * width) \
                    * jnp.exp(-0.5 * (x - p[idx['center_%d' % i]]) ** 2 / width**2)
            return y
    elif kind is ModelKind.RABI_LINESHAPE:
        def f(p, x):
            rabi2 = p[idx['rabi']] ** 2
            generalized2 = rabi2 + (x - p[idx['center']]) ** 2
            transfer = rabi2 / generalized2 * jnp.sin(jnp.pi * 1e-3 * jnp.sqrt(generalized2) * duration) ** 2
            return p[idx['offset']] + p[idx['amplitude']] * transfer
    elif kind is ModelKind.SINE:
        def f(p, x):
            return p[idx['offset']] + p[idx['amplitude']] * jnp.cos(2.0 * jnp.pi * p[idx['frequency']] * x + p[idx['phase']]) \
                * jnp.exp(-p[idx['decay']] * x)
    else:
        def f(p, x):
            return p[idx['intercept']] + p[idx['slope']] * x
    return f


@dataclass
class FitResult:
    model: FitModel
    values: Dict[str, float]
    errors: Dict[str, float]
    covariance: np.ndarray
    residual_norm: float
    chi2: float
    converged: bool
    iterations: int
    message: str = ''

    @property
    def reliable(self):
        return self.converged

    def __getitem__(self, name):
        return self.values[name]

    def sigma(self, name):
        return self.errors[name]

    def report(self):
        return {
            'kind': self.model.kind.value,
            'converged': self.converged,
            'reliable': self.reliable,
            'message': self.message,
            'iterations': self.iterations,
            'residual_norm': self.residual_norm,
            'chi2': self.chi2,
            'uncertainty': UNCERTAINTY_LABEL,
            'parameters': [{'name': p.name, 'value': self.values[p.name], 'sigma': self.errors[p.name], 'fixed': p.fixed}
                           for p in self.model.parameters],
        }


def numerical_jacobian(fun, p, step=1e-6):
    """Central finite-difference Jacobian of a vector function, test oracle for the jax one."""
    p = np.asarray(p, dtype=float)
    columns = []
    for i in range(len(p)):
        h = step * max(1.0, abs(p[i]))
        up, down = p.copy(), p.copy()
        up[i] += h
        down[i] -= h
        columns.append((np.asarray(fun(up)) - np.asarray(fun(down))) / (2.0 * h))
    return np.stack(columns, axis=-1)


def _weights(errors, n):
    if errors is None:
        return np.ones(n)
    errors = np.asarray(errors, dtype=float)
    if np.all(errors == 0):
        return np.ones(n)
    if np.any(errors <= 0):
        raise ConfigurationError("either all or none of the data errors must be zero")
    return 1.0 / errors


class Fitter(BaseClass):

    def __init__(self, **kwargs):
        super().__init__("Fitter", **kwargs)

        defaulthyperparameters = {
            'max_iterations': 200,
            # relative gradient norm |J^T r| / (|J| |r|)
            'gtol': 1e-10,
            # relative step size
            'xtol': 1e-13,
            'initial_damping': 1e-3,
            'max_damping': 1e16,
        }
        self.update_hyperparameters(defaulthyperparameters, **kwargs)

    def residual_functions(self, model, x, y, errors):
        f = model.function()
        names = model.names
        free_idx = jnp.array([names.index(n) for n in model.free])
        start = jnp.array([p.value for p in model.parameters])
        x = jnp.asarray(x, dtype=float)
        y = jnp.asarray(y, dtype=float)
        w = jnp.asarray(_weights(errors, len(y)))

        def residual(p_free):
            return (f(start.at[free_idx].set(p_free), x) - y) * w

        return jax.jit(residual), jax.jit(jax.jacfwd(residual))

    def fit(self, x, y, model, errors=None):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        n_free = len(model.free)
        if len(y) <= n_free:
            raise DomainError("%d points cannot constrain %d free parameters" % (len(y), n_free))
        hp = self.hyperparameters
        residual, jacobian = self.residual_functions(model, x, y, errors)
        lower = np.array([model.parameter(n).lower for n in model.free])
        upper = np.array([model.parameter(n).upper for n in model.free])
        p = np.array([model.parameter(n).value for n in model.free])
        scale = np.linalg.norm(y * _weights(errors, len(y)))

        self.start('fit')
        r = np.asarray(residual(p))
        cost = float(r @ r)
        damping = hp['initial_damping']
        converged, message, iteration = False, 'iteration cap reached', 0
        for iteration in range(1, hp['max_iterations'] + 1):
            J = np.asarray(jacobian(p))
            g = J.T @ r
            g_rel = np.linalg.norm(g) / max(np.linalg.norm(J) * np.sqrt(cost), 1e-300)
            if g_rel <= hp['gtol'] or np.sqrt(cost) <= 1e-14 * max(scale, 1.0):
                converged, message = True, 'gradient tolerance reached'
                break
            A = J.T @ J
            accepted = False
            while damping <= hp['max_damping']:
                step = np.linalg.solve(A + damping * np.diag(np.maximum(np.diag(A), 1e-300)), -g) \
                    if np.all(np.isfinite(A)) else np.zeros_like(p)
                trial = np.clip(p + step, lower, upper)
                r_trial = np.asarray(residual(trial))
                cost_trial = float(r_trial @ r_trial)
                if np.isfinite(cost_trial) and cost_trial <= cost:
                    accepted = True
                    break
                damping *= 10.0
            if not accepted:
                converged = g_rel <= 1e-6
                message = 'no further decrease of the residual'
                break
            small_step = np.linalg.norm(trial - p) <= hp['xtol'] * (np.linalg.norm(p) + hp['xtol'])
            p, r, cost = trial, r_trial, cost_trial
            damping = max(damping / 10.0, 1e-15)
            if small_step:
                converged, message = True, 'step tolerance reached'
                break
        self.stop('fit', self.logger)

        J = np.asarray(jacobian(p))
        if np.linalg.matrix_rank(J) < n_free:
            converged, message = False, 'degenerate Jacobian'
            covariance = np.full((n_free, n_free), np.nan)
        else:
            covariance = np.linalg.inv(J.T @ J)
        if not converged:
            self.warning("Fit of %s model did not converge: %s", model.kind.value, message)

        values = {prm.name: prm.value for prm in model.parameters}
        errors_out = {prm.name: 0.0 for prm in model.parameters}
        for i, name in enumerate(model.free):
            values[name] = float(p[i])
            errors_out[name] = float(np.sqrt(abs(covariance[i, i]))) if np.isfinite(covariance[i, i]) else float('nan')
        if model.kind is ModelKind.SINE and values['amplitude'] < 0 and not model.parameter('amplitude').fixed:
            values['amplitude'] = -values['amplitude']
            values['phase'] += np.pi
        if model.kind is ModelKind.SINE:
            values['phase'] = float(np.angle(np.exp(1j * values['phase'])))
        return FitResult(model, values, errors_out, covariance, float(np.sqrt(cost)), cost, converged, iteration, message)


def fit(dataset, model, init=None, column=None, reference=0.0, **kwargs):
    """
    Weighted least-squares fit of `model` to a dataset. x is taken from `column` (the scan axis
    by default) as offset from `reference`, converted to kHz for GHz columns.
    """
    if init:
        model = model.with_values(**init)
    x = axis_khz(dataset, column, reference)
    return Fitter(**kwargs).fit(x, dataset.values, model, dataset.errors)


def axis_khz(dataset, column=None, reference=0.0):
    """Column values as offsets from `reference` in kHz. Extra columns are GHz frequencies."""
    column = column or dataset.axis_name
    values = dataset.column(column)
    unit = dataset.axis_unit if column == dataset.axis_name else 'GHz'
    if unit == 'GHz':
        return (values - reference) * KHZ_PER_GHZ
    return values - reference


# seeds


def gaussian_seed(x, y):
    """Center, area and standard deviation of a single peak from its moments."""
    y = np.clip(np.asarray(y, dtype=float), 0.0, None)
    area = trapezoid(y, x)
    if not area > 0:
        raise DomainError("no peak in the data")
    center = trapezoid(x * y, x) / area
    width = np.sqrt(max(trapezoid((x - center) ** 2 * y, x) / area, 1e-12))
    return center, area, width


def sine_seed(x, y, frequency):
    """Amplitude and phase of offset + A cos(2 pi f x + phase) by projection."""
    y = np.asarray(y, dtype=float)
    projection = np.mean((y - y.mean()) * np.exp(-2j * np.pi * frequency * np.asarray(x)))
    return 2.0 * abs(projection), float(np.angle(projection))


def rabi_seed(x, y):
    i = int(np.argmax(y))
    return float(x[i]), float(np.max(y) - np.min(y)), float(np.min(y))


# microwave spectra


def _spectrum_axis(dataset):
    return 'effective_freq' if 'effective_freq' in dataset.columns else dataset.axis_name


def mw_three_step_pipeline(black, red, blue, reference=None, **kwargs):
    """
    1. one free Gaussian on the unpumped spectrum -> nu0, w0, A0
    2. two Gaussians of width w0 on the pumped spectrum -> nu_3/2, nu_1/2, A_3/2, A_1/2
    3. two Gaussians of width w0 centred at nu_3/2 and nu0 on the repumped spectrum -> A'_3/2, A'_0

    Frequencies are returned in GHz, widths and splittings in kHz, areas in kHz (transfer x kHz).
    """
    black_col = black.column(_spectrum_axis(black))
    reference = float(np.median(black_col)) if reference is None else reference
    x_black = axis_khz(black, _spectrum_axis(black), reference)
    x_red = axis_khz(red, _spectrum_axis(red), reference)
    x_blue = axis_khz(blue, _spectrum_axis(blue), reference)
    fitter = Fitter(**kwargs)

    def checked(step, result):
        if not result.converged:
            raise PipelineError(step, "fit did not converge (%s)" % result.message)
        return result

    try:
        center, area, width = gaussian_seed(x_black, black.values)
    except DomainError as e:
        raise PipelineError('step 1', str(e))
    step1 = checked('step 1', fitter.fit(x_black, black.values, FitModel.gaussian_multi([center], [area], width),
                                         black.errors))
    nu0, w0, a0 = step1['center_0'], step1['width'], step1['area_0']

    below, above = x_red < nu0, x_red >= nu0
    if not below.any() or not above.any():
        raise PipelineError('step 2', "the pumped spectrum does not cover both sides of nu0")
    seeds = [float(x_red[below][np.argmax(red.values[below])]), float(x_red[above][np.argmax(red.values[above])])]
    half = 0.5 * trapezoid(np.clip(red.values, 0, None), x_red)
    step2 = checked('step 2', fitter.fit(x_red, red.values,
                                         FitModel.gaussian_multi(seeds, [half, half], w0, fixed_width=True), red.errors))
    nu_3_2, nu_1_2 = step2['center_0'], step2['center_1']

    step3 = checked('step 3', fitter.fit(x_blue, blue.values,
                                         FitModel.gaussian_multi([nu_3_2, nu0], [a0, 0.1 * a0], w0, fixed_width=True,
                                                                 fixed_centers=(0, 1)), blue.errors))

    def ratio(result, name):
        value = result[name] / a0
        sigma = abs(value) * np.sqrt((result.sigma(name) / result[name]) ** 2 + (step1.sigma('area_0') / a0) ** 2) \
            if result[name] != 0 else result.sigma(name) / a0
        return value, sigma

    report = {
        'reference_GHz': reference,
        'nu0_GHz': reference + nu0 / KHZ_PER_GHZ, 'nu0_sigma_kHz': step1.sigma('center_0'),
        'w0_kHz': w0, 'w0_sigma_kHz': step1.sigma('width'),
        'A0': a0, 'A0_sigma': step1.sigma('area_0'),
        'nu_3_2_GHz': reference + nu_3_2 / KHZ_PER_GHZ, 'nu_3_2_sigma_kHz': step2.sigma('center_0'),
        'nu_1_2_GHz': reference + nu_1_2 / KHZ_PER_GHZ, 'nu_1_2_sigma_kHz': step2.sigma('center_1'),
        'splitting_kHz': nu_1_2 - nu_3_2,
        'splitting_sigma_kHz': float(np.hypot(step2.sigma('center_0'), step2.sigma('center_1'))),
    }
    for key, result, name in (('A_3_2/A0', step2, 'area_0'), ('A_1_2/A0', step2, 'area_1'),
                              ("A'_3_2/A0", step3, 'area_0'), ("A'_0/A0", step3, 'area_1')):
        report[key], report[key + '_sigma'] = ratio(result, name)
    report['fits'] = {'step 1': step1.report(), 'step 2': step2.report(), 'step 3': step3.report()}
    return report


# Raman resonances and the n^-6 law


def fit_raman_resonance(dataset, duration, rabi, free_rabi=False, **kwargs):
    """Center (kHz) of a Raman spectrum from a Rabi-lineshape fit with the pulse duration fixed."""
    x = dataset.axis
    center, amplitude, offset = rabi_seed(x, dataset.values)
    model = FitModel.rabi_lineshape(duration, center, rabi, amplitude, offset, free_rabi=free_rabi)
    return Fitter(**kwargs).fit(x, dataset.values, model, dataset.errors)


@dataclass
class ExtrapolationResult:
    intercept: float
    slope: float
    intercept_sigma: float
    slope_sigma: float
    covariance: np.ndarray
    residual_norm: float
    converged: bool = True

    @property
    def reliable(self):
        return self.converged

    def report(self):
        return {'intercept_kHz': self.intercept, 'intercept_sigma_kHz': self.intercept_sigma,
                'slope_kHz_per_power': self.slope, 'slope_sigma_kHz_per_power': self.slope_sigma,
                'residual_norm': self.residual_norm, 'uncertainty': UNCERTAINTY_LABEL}


def light_shift_extrapolate(points):
    """
    Weighted straight line through (power, resonance[, sigma]) points. The intercept is the
    resonance at zero optical power.
    """
    points = [tuple(p) for p in points]
    power = np.array([p[0] for p in points], dtype=float)
    delta = np.array([p[1] for p in points], dtype=float)
    sigma = np.array([p[2] if len(p) > 2 else 0.0 for p in points], dtype=float)
    if len(np.unique(power)) < 2:
        raise DomainError("the extrapolation needs at least two distinct powers")
    w = _weights(sigma, len(points)) ** 2
    design = np.stack([np.ones_like(power), power], axis=1)
    normal = design.T @ (w[:, None] * design)
    coeffs = np.linalg.solve(normal, design.T @ (w * delta))
    residual = delta - design @ coeffs
    covariance = np.linalg.inv(normal)
    if not np.any(sigma > 0) and len(points) > 2:
        # no errors given: scale by the scatter
        covariance = covariance * float(residual @ residual) / (len(points) - 2)
    elif not np.any(sigma > 0):
        covariance = np.zeros_like(covariance)
    return ExtrapolationResult(float(coeffs[0]), float(coeffs[1]), float(np.sqrt(covariance[0, 0])),
                               float(np.sqrt(covariance[1, 1])), covariance, float(np.sqrt(residual @ (w * residual))))


@dataclass
class ThetaResult:
    B: float
    B_sigma: float
    B_sigma_stat: float
    B_sigma_C: float
    theta: float
    theta_sigma: float
    C: float
    C_sigma: float
    n: Tuple[int, ...]
    residuals: Tuple[float, ...] = field(default_factory=tuple)

    def report(self):
        return {'B_kHz': self.B, 'B_sigma_kHz': self.B_sigma, 'B_sigma_stat_kHz': self.B_sigma_stat,
                'B_sigma_C_kHz': self.B_sigma_C, 'theta_au': self.theta, 'theta_sigma_au': self.theta_sigma,
                'C_kHz': self.C, 'C_sigma_kHz': self.C_sigma, 'n': list(self.n), 'residuals_kHz': list(self.residuals),
                'uncertainty': UNCERTAINTY_LABEL}


def fit_B_extract_theta(deltas, C=-2.7, C_sigma=1.0, model_ref=None, include_theta_ref=False, theta_ref_sigma=0.012):
    """
    One-parameter fit of delta_n = B (n_ref/n)^6 + C (n_ref/n)^8 with C fixed, and
    Theta = B / (h circular_gradient(n_ref)). `deltas` holds (n, delta_n[, sigma]) in kHz.

    sigma_B adds the statistical error and the change of B when C moves by C_sigma. The
    uncertainty of the reference Theta enters only with include_theta_ref.
    """
    model_ref = model_ref if model_ref is not None else ShiftModel()
    deltas = [tuple(d) for d in deltas]
    if not deltas:
        raise DomainError("fit_B_extract_theta needs at least one delta_n")
    n = np.array([d[0] for d in deltas], dtype=float)
    if len(np.unique(n)) != len(n):
        raise DomainError("the manifolds of the delta_n values must be distinct")
    y = np.array([d[1] for d in deltas], dtype=float)
    sigma = np.array([d[2] if len(d) > 2 else 0.0 for d in deltas], dtype=float)
    ref = model_ref.reference_n
    x6 = (ref / n) ** 6
    x8 = (ref / n) ** 8
    w = _weights(sigma, len(n)) ** 2

    norm = np.sum(w * x6 * x6)
    B = float(np.sum(w * x6 * (y - C * x8)) / norm)
    residuals = y - B * x6 - C * x8
    if np.any(sigma > 0):
        sigma_stat = float(np.sqrt(1.0 / norm))
    elif len(n) > 1:
        sigma_stat = float(np.sqrt(np.sum(residuals**2) / (len(n) - 1) / norm))
    else:
        sigma_stat = 0.0
    sigma_C = float(abs(C_sigma * np.sum(w * x6 * x8) / norm))
    B_sigma = float(np.hypot(sigma_stat, sigma_C))

    theta = B * 1e3 / (circular_gradient(ref) * HARTREE_HZ)
    theta_sigma = abs(theta) * B_sigma / abs(B) if B != 0 else 0.0
    if include_theta_ref:
        theta_sigma = float(np.hypot(theta_sigma, abs(theta) * theta_ref_sigma / model_ref.theta))
    return ThetaResult(B, B_sigma, sigma_stat, sigma_C, float(theta), float(theta_sigma), C, C_sigma,
                       tuple(int(k) for k in n), tuple(float(r) for r in residuals))
