"""
Time evolution of a density matrix over an enumerated set of composite levels.

All pulses have constant amplitude. Every pulse is evolved by exact exponentiation of its
rotating-frame generator and then transformed into the interaction picture with respect to
the bare level energies (quadrupole shifts included). In that picture free evolution between
pulses is the identity and all phases that matter for Ramsey fringes are carried by the pulse
propagators themselves:

    U_I = D(t0 + tau) expm(-i H_R tau) D(t0)^*,    D(t) = exp(i (E - f) t)

where f are the frame frequencies set by the drive. Units are kHz for frequencies and
microseconds for times, angular frequencies are rad/us.
"""
from dataclasses import dataclass
from functools import lru_cache
from typing import Tuple

import numpy as np
from scipy.linalg import expm

from CIRCE.atomic_core import (CompositeLevel, CoreLevel, CoreTerm, Polarization, RydbergKind, RydbergLevel,
                               core_line_strengths, core_sublevels, total_delta,
                               transition_frequency)
from CIRCE.utils.base import Logger
from CIRCE.utils.exceptions import ConfigurationError, DomainError
from CIRCE.utils.units import KHZ_PER_GHZ, kHz_to_angular

_log = Logger('dynamics')

# p5_1/2 decay branching into 5s1/2 and 4d3/2
BRANCHING_S = 17.0 / 18.0
BRANCHING_D = 1.0 / 18.0

# p5_1/2 natural linewidth Gamma/2pi in MHz (Sr+ literature value)
DEFAULT_GAMMA_P = 21.5

# adiabatic elimination of 5p1/2 is trusted below this ratio of optical Rabi frequency to detuning
RAMAN_VALIDITY_RATIO = 0.1

TRACE_TOL = 1e-9
HERMITIAN_TOL = 1e-12
POSITIVITY_TOL = 1e-9


def marker_level(n):
    """Non-circular contaminant of manifold n. It only serves as a detected population bin."""
    return CompositeLevel(RydbergLevel(n, RydbergKind.ELLIPTICAL_MARKER), CoreLevel(CoreTerm.S5_1_2, 0.5))


def make_basis(manifolds, markers=()):
    """
    Basis of circular states of the given manifolds times all core sublevels, followed by the
    elliptical markers of the manifolds listed in `markers`.
    """
    manifolds = sorted(set(int(n) for n in manifolds))
    if not manifolds:
        raise ConfigurationError("a basis needs at least one Rydberg manifold")
    levels = []
    for n in manifolds:
        for term in (CoreTerm.S5_1_2, CoreTerm.P5_1_2, CoreTerm.D4_3_2):
            levels += [CompositeLevel(RydbergLevel(n), core) for core in core_sublevels(term)]
    levels += [marker_level(n) for n in sorted(set(int(n) for n in markers))]
    return tuple(levels)


def basis_manifolds(basis):
    return sorted(set(level.n for level in basis if level.rydberg.is_circular))


def _index(basis):
    return {level: i for i, level in enumerate(basis)}


@dataclass(frozen=True, eq=False)
class QuantumState:
    basis: Tuple[CompositeLevel, ...]
    rho: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, 'basis', tuple(self.basis))
        rho = np.array(self.rho, dtype=complex)
        dim = len(self.basis)
        if rho.shape != (dim, dim):
            raise ConfigurationError("density matrix of shape %s does not match a basis of %d levels" % (rho.shape, dim))
        rho.setflags(write=False)
        object.__setattr__(self, 'rho', rho)

    @classmethod
    def pure(cls, basis, level):
        return cls.mixture(basis, {level: 1.0})

    @classmethod
    def mixture(cls, basis, weights):
        index = _index(basis)
        rho = np.zeros((len(basis), len(basis)), dtype=complex)
        for level, weight in weights.items():
            if level not in index:
                raise ConfigurationError("level %s is not part of the basis" % level)
            rho[index[level], index[level]] += weight
        total = np.trace(rho).real
        if not total > 0:
            raise DomainError("a mixture needs positive total weight")
        return cls(basis, rho / total)

    @property
    def dim(self):
        return len(self.basis)

    def population(self, level):
        return float(self.rho[_index(self.basis)[level], _index(self.basis)[level]].real)

    def populations(self):
        diag = np.real(np.diag(self.rho))
        return {level: float(p) for level, p in zip(self.basis, diag)}

    def check(self):
        """Raise DomainError if the matrix is not a valid density matrix."""
        trace = np.trace(self.rho)
        if abs(trace - 1.0) > TRACE_TOL:
            raise DomainError("trace of the density matrix is %r" % trace)
        if np.max(np.abs(self.rho - self.rho.conj().T)) > HERMITIAN_TOL:
            raise DomainError("density matrix is not Hermitian")
        eigenvalues = np.linalg.eigvalsh(0.5 * (self.rho + self.rho.conj().T))
        if eigenvalues.min() < -POSITIVITY_TOL:
            raise DomainError("density matrix has a negative eigenvalue %g" % eigenvalues.min())
        return self


@dataclass(frozen=True, eq=False)
class Propagator:
    """
    Unitary (dim x dim) or superoperator (dim^2 x dim^2, row-major vectorisation:
    vec(A rho B) = (A kron B^T) vec(rho)) over a fixed basis.
    """
    basis: Tuple[CompositeLevel, ...]
    matrix: np.ndarray
    kind: str = 'unitary'

    def __post_init__(self):
        if self.kind not in ('unitary', 'superoperator'):
            raise ConfigurationError("unknown propagator kind %r" % self.kind)
        object.__setattr__(self, 'basis', tuple(self.basis))
        matrix = np.array(self.matrix, dtype=complex)
        dim = len(self.basis) if self.kind == 'unitary' else len(self.basis) ** 2
        if matrix.shape != (dim, dim):
            raise ConfigurationError("propagator of shape %s does not match its basis" % (matrix.shape,))
        matrix.setflags(write=False)
        object.__setattr__(self, 'matrix', matrix)

    @classmethod
    def identity(cls, basis):
        return cls(basis, np.eye(len(basis)))

    @property
    def is_unitary(self):
        return self.kind == 'unitary'

    def superoperator(self):
        if self.is_unitary:
            return np.kron(self.matrix, self.matrix.conj())
        return self.matrix

    def then(self, other):
        """Propagator of `self` followed by `other`."""
        if other.basis != self.basis:
            raise ConfigurationError("cannot compose propagators over different bases")
        if self.is_unitary and other.is_unitary:
            return Propagator(self.basis, other.matrix @ self.matrix)
        return Propagator(self.basis, other.superoperator() @ self.superoperator(), 'superoperator')

    def unitarity_error(self):
        if not self.is_unitary:
            raise ConfigurationError("a superoperator has no unitarity error")
        return float(np.max(np.abs(self.matrix.conj().T @ self.matrix - np.eye(len(self.basis)))))


def apply(prop, state):
    if prop.basis != state.basis:
        raise ConfigurationError("propagator and state are defined over different bases")
    if prop.is_unitary:
        rho = prop.matrix @ state.rho @ prop.matrix.conj().T
    else:
        dim = state.dim
        rho = (prop.matrix @ state.rho.reshape(-1)).reshape(dim, dim)
    rho = 0.5 * (rho + rho.conj().T)
    return QuantumState(state.basis, rho).check()


# pulses


@dataclass(frozen=True)
class MicrowavePulse:
    n_a: int
    n_b: int
    # applied source frequency in GHz, doubled for two-photon drives
    source_freq: float
    # Rabi frequency Omega/2pi of the (effective) two-level coupling, kHz
    rabi: float
    duration: float
    two_photon: bool = False
    phase: float = 0.0

    def __post_init__(self):
        if self.n_a == self.n_b:
            raise DomainError("a microwave transition needs two different manifolds")
        if not self.duration > 0:
            raise DomainError("pulse duration must be > 0, got %r" % (self.duration,))
        if self.rabi < 0:
            raise DomainError("rabi must be >= 0, got %r" % (self.rabi,))

    @property
    def effective_freq(self):
        return 2.0 * self.source_freq if self.two_photon else self.source_freq


@dataclass(frozen=True)
class RamanPulse:
    # single-photon detuning from 4d3/2 - 5p1/2, GHz
    big_delta: float
    # frequency difference of the two beams, kHz
    small_delta: float
    # single-beam Rabi frequencies Omega/2pi, kHz
    omega_pi: float
    omega_sigma: float
    duration: float
    scattering_on: bool = False

    def __post_init__(self):
        if self.big_delta == 0:
            raise DomainError("Raman pulses need a non-zero single-photon detuning")
        if not self.duration > 0:
            raise DomainError("pulse duration must be > 0, got %r" % (self.duration,))
        if self.omega_pi < 0 or self.omega_sigma < 0:
            raise DomainError("optical Rabi frequencies must be >= 0")
        ratio = max(self.omega_pi, self.omega_sigma) / abs(self.big_delta * KHZ_PER_GHZ)
        if ratio > RAMAN_VALIDITY_RATIO:
            _log.warning("Raman pulse with Omega/Delta = %.3g, the adiabatic elimination of 5p is not reliable", ratio)


@dataclass(frozen=True)
class OpticalPump422:
    duration: float
    repumper_on: bool = False
    # the repumper stays on this long after the 422 nm light ends
    repumper_overhang: float = 0.0
    # imperfections of the repumped preparation, applied after ideal pumping
    leak: float = 0.0
    loss: float = 0.0

    def __post_init__(self):
        if self.duration < 0 or self.repumper_overhang < 0:
            raise DomainError("pump durations must be >= 0")
        if not (0 <= self.leak <= 1 and 0 <= self.loss <= 1 and self.leak + self.loss <= 1):
            raise DomainError("pump leak and loss must be probabilities with leak + loss <= 1")


@dataclass(frozen=True)
class ProbePulse:
    n_a: int = 51
    n_b: int = 53
    duration: float = 0.2

    def __post_init__(self):
        if not self.duration > 0:
            raise DomainError("probe duration must be > 0")


# generic construction


def _frame(offsets, t):
    return np.exp(1j * offsets * t)


def _interaction_picture_unitary(offsets, hamiltonian, duration, t_start):
    u_rot = expm(-1j * hamiltonian * duration)
    d0 = _frame(offsets, t_start)
    d1 = _frame(offsets, t_start + duration)
    return (d1[:, None] * u_rot) * d0.conj()[None, :]


def _lindbladian(hamiltonian, jumps):
    dim = hamiltonian.shape[0]
    eye = np.eye(dim)
    generator = -1j * (np.kron(hamiltonian, eye) - np.kron(eye, hamiltonian.T))
    for jump in jumps:
        jdj = jump.conj().T @ jump
        generator += np.kron(jump, jump.conj()) - 0.5 * np.kron(jdj, eye) - 0.5 * np.kron(eye, jdj.T)
    return generator


def _interaction_picture_superoperator(offsets, hamiltonian, jumps, duration, t_start):
    s_rot = expm(_lindbladian(hamiltonian, jumps) * duration)
    d0 = _frame(offsets, t_start)
    d1 = _frame(offsets, t_start + duration)
    left = np.kron(d1, d1.conj())
    right = np.kron(d0.conj(), d0)
    return (left[:, None] * s_rot) * right[None, :]


# microwave

# 5p1/2 is never addressed by microwaves
ALL_ADDRESSED_CORES = tuple(core_sublevels(CoreTerm.S5_1_2) + core_sublevels(CoreTerm.D4_3_2))


def mw_propagator(pulse, model, nu0_table, basis, t_start=0.0):
    """
    Unitary of a square microwave pulse. Every core state except 5p1/2 forms its own two-level
    block between the circular states n_a and n_b, detuned by the applied (effective) frequency
    minus the transition frequency of that core state. Markers and 5p1/2 are untouched.
    """
    return _mw_propagator(pulse, model, nu0_table, tuple(basis), float(t_start))


@lru_cache(maxsize=4096)
def _mw_propagator(pulse, model, nu0_table, basis, t_start):
    index = _index(basis)
    dim = len(basis)
    offsets = np.zeros(dim)
    hamiltonian = np.zeros((dim, dim), dtype=complex)
    upper_n, lower_n = max(pulse.n_a, pulse.n_b), min(pulse.n_a, pulse.n_b)
    coupling = np.pi * 1e-3 * pulse.rabi * np.exp(1j * pulse.phase)

    for core in ALL_ADDRESSED_CORES:
        upper = CompositeLevel(RydbergLevel(upper_n), core)
        lower = CompositeLevel(RydbergLevel(lower_n), core)
        if upper not in index or lower not in index:
            raise ConfigurationError("basis misses an endpoint of the %d <-> %d transition" % (upper_n, lower_n))
        nu_t = transition_frequency(upper, lower, model, nu0_table)
        detuning = kHz_to_angular((pulse.effective_freq - nu_t) * KHZ_PER_GHZ)
        iu, il = index[upper], index[lower]
        offsets[il] = detuning
        hamiltonian[il, il] = detuning
        hamiltonian[iu, il] = coupling
        hamiltonian[il, iu] = np.conj(coupling)

    matrix = _interaction_picture_unitary(offsets, hamiltonian, pulse.duration, t_start)
    return Propagator(basis, matrix)


def rabi_transfer(rabi, detuning, duration):
    """Detuned two-level transfer probability, rabi and detuning in kHz, duration in us."""
    rabi = np.asarray(rabi, dtype=float)
    generalized = np.sqrt(rabi**2 + np.asarray(detuning, dtype=float) ** 2)
    with np.errstate(invalid='ignore', divide='ignore'):
        ratio = np.where(generalized > 0, rabi**2 / np.where(generalized > 0, generalized, 1.0) ** 2, 0.0)
    return ratio * np.sin(np.pi * 1e-3 * generalized * duration) ** 2


def pi_pulse_rabi(duration):
    """Rabi frequency (kHz) for which a resonant pulse of the given duration has area pi."""
    return 1.0 / (2e-3 * duration)


# Raman


# Raman path d(+3/2) -sigma-> p(+1/2) -pi-> d(+1/2), the sigma beam is split equally into sigma+ and sigma-
_SIGMA_SHARE = 0.5
_D = {m: CoreLevel(CoreTerm.D4_3_2, m) for m in (-1.5, -0.5, 0.5, 1.5)}
_P = {m: CoreLevel(CoreTerm.P5_1_2, m) for m in (-0.5, 0.5)}
_S = {m: CoreLevel(CoreTerm.S5_1_2, m) for m in (-0.5, 0.5)}

RAMAN_ANGULAR_FACTOR = np.sqrt(core_line_strengths(Polarization.PI, _D[0.5], _P[0.5])
                               * core_line_strengths(Polarization.SIGMA_MINUS, _D[1.5], _P[0.5])
                               * _SIGMA_SHARE)


def _beams(pulse):
    # (polarization, Rabi frequency in kHz, intensity share)
    return ((Polarization.PI, pulse.omega_pi, 1.0),
            (Polarization.SIGMA_PLUS, pulse.omega_sigma, _SIGMA_SHARE),
            (Polarization.SIGMA_MINUS, pulse.omega_sigma, _SIGMA_SHARE))


def raman_light_shift(pulse, m_j):
    """Light shift of the 4d3/2 sublevel m_j in kHz."""
    detuning = pulse.big_delta * KHZ_PER_GHZ
    shift = 0.0
    for polarization, omega, share in _beams(pulse):
        for p in _P.values():
            shift += omega**2 * share * core_line_strengths(polarization, _D[m_j], p) / (4.0 * detuning)
    return shift


def raman_parameters(pulse, model, n):
    """
    Effective two-level parameters of a Raman pulse in manifold n: Rabi frequency, the light
    shifts of |m_j|=3/2 and 1/2 and the light-shifted resonance value of small_delta, all in kHz.
    """
    rabi = pulse.omega_pi * pulse.omega_sigma * RAMAN_ANGULAR_FACTOR / (2.0 * abs(pulse.big_delta * KHZ_PER_GHZ))
    shift_3_2 = raman_light_shift(pulse, 1.5)
    shift_1_2 = raman_light_shift(pulse, 0.5)
    return {
        'rabi': rabi,
        'light_shift_3_2': shift_3_2,
        'light_shift_1_2': shift_1_2,
        'resonance': total_delta(model, n) + shift_3_2 - shift_1_2,
    }


def raman_resonance(pulse, model, n):
    return raman_parameters(pulse, model, n)['resonance']


def raman_beams_for_rabi(target_rabi, big_delta, intensity_ratio=1.3):
    """
    Single-beam Rabi frequencies (omega_pi, omega_sigma) in kHz that produce the effective Rabi
    frequency `target_rabi` with omega_pi^2 / omega_sigma^2 = intensity_ratio.
    """
    if target_rabi < 0 or intensity_ratio <= 0:
        raise DomainError("target Rabi frequency must be >= 0 and the intensity ratio > 0")
    detuning = abs(big_delta * KHZ_PER_GHZ)
    omega_sigma = np.sqrt(2.0 * detuning * target_rabi / (RAMAN_ANGULAR_FACTOR * np.sqrt(intensity_ratio)))
    return float(np.sqrt(intensity_ratio) * omega_sigma), float(omega_sigma)


def raman_scattering_rates(pulse, gamma_p=DEFAULT_GAMMA_P):
    """
    Incoherent transfer rates (1/us) between core sublevels caused by off-resonant excitation of
    5p1/2 and its spontaneous decay: {(from, to): rate}.
    """
    gamma = 2.0 * np.pi * gamma_p
    detuning = pulse.big_delta * KHZ_PER_GHZ
    rates = {}
    for d in _D.values():
        for polarization, omega, share in _beams(pulse):
            for p in _P.values():
                excitation = gamma * omega**2 * share * core_line_strengths(polarization, d, p) / (4.0 * detuning**2)
                if excitation == 0:
                    continue
                for final in list(_S.values()) + list(_D.values()):
                    branch = BRANCHING_S if final.term is CoreTerm.S5_1_2 else BRANCHING_D
                    weight = sum(core_line_strengths(pol, p, final) for pol in Polarization)
                    if weight > 0:
                        rates[(d, final)] = rates.get((d, final), 0.0) + excitation * branch * weight
    return rates


def raman_propagator(pulse, model, basis, t_start=0.0, gamma_p=DEFAULT_GAMMA_P):
    """
    Propagator of a Raman pulse pair. Within every circular manifold |m_j|=3/2 couples to the
    |m_j|=1/2 sublevel of the same sign with the effective Rabi frequency, detuned by
    small_delta - delta_n plus the differential light shift. With scattering_on the result is
    a superoperator including optical pumping through 5p1/2.
    """
    return _raman_propagator(pulse, model, tuple(basis), float(t_start), float(gamma_p))


@lru_cache(maxsize=4096)
def _raman_propagator(pulse, model, basis, t_start, gamma_p):
    if pulse.big_delta == 0:
        raise DomainError("Raman pulses need a non-zero single-photon detuning")
    index = _index(basis)
    dim = len(basis)
    offsets = np.zeros(dim)
    hamiltonian = np.zeros((dim, dim), dtype=complex)
    jumps = []
    manifolds = basis_manifolds(basis)
    rates = raman_scattering_rates(pulse, gamma_p) if pulse.scattering_on else {}

    for n in manifolds:
        levels = {m: CompositeLevel(RydbergLevel(n), d) for m, d in _D.items()}
        if any(level not in index for level in levels.values()):
            raise ConfigurationError("basis misses 4d3/2 sublevels of manifold %d" % n)
        params = raman_parameters(pulse, model, n)
        coupling = kHz_to_angular(0.5 * params['rabi'])
        for sign in (1.0, -1.0):
            i3, i1 = index[levels[1.5 * sign]], index[levels[0.5 * sign]]
            detuning = kHz_to_angular(pulse.small_delta - total_delta(model, n))
            offsets[i1] = detuning
            hamiltonian[i3, i3] = kHz_to_angular(params['light_shift_3_2'])
            hamiltonian[i1, i1] = detuning + kHz_to_angular(params['light_shift_1_2'])
            hamiltonian[i3, i1] = coupling
            hamiltonian[i1, i3] = coupling
        for (d, final), rate in rates.items():
            target = CompositeLevel(RydbergLevel(n), final)
            if target not in index:
                raise ConfigurationError("basis misses %s needed for scattering" % target)
            jump = np.zeros((dim, dim), dtype=complex)
            jump[index[target], index[levels[d.m_j]]] = np.sqrt(rate)
            jumps.append(jump)

    if not pulse.scattering_on:
        return Propagator(basis, _interaction_picture_unitary(offsets, hamiltonian, pulse.duration, t_start))
    matrix = _interaction_picture_superoperator(offsets, hamiltonian, jumps, pulse.duration, t_start)
    return Propagator(basis, matrix, 'superoperator')


# optical pumping


DEFAULT_PUMP_RATE = 10.0
DEFAULT_REPUMP_RATE = 10.0


def _pump_rates(basis, gamma_p, pump_rate, repump_rate, pump_on, repump_on):
    """Rate matrix M with dp/dt = M p for the populations of all circular manifolds."""
    index = _index(basis)
    dim = len(basis)
    rates = np.zeros((dim, dim))
    gamma = 2.0 * np.pi * gamma_p

    def add(a, b, rate):
        if rate > 0:
            rates[index[b], index[a]] += rate
            rates[index[a], index[a]] -= rate

    for n in basis_manifolds(basis):
        ryd = RydbergLevel(n)
        level = {core: CompositeLevel(ryd, core) for core in list(_S.values()) + list(_P.values()) + list(_D.values())}
        missing = [str(lvl) for lvl in level.values() if lvl not in index]
        if missing:
            raise ConfigurationError("optical pumping needs all core sublevels of manifold %d, missing %s" % (n, missing))
        for p in _P.values():
            for s in _S.values():
                strength = core_line_strengths(Polarization.PI, s, p)
                if pump_on:
                    add(level[s], level[p], pump_rate * strength)
                    add(level[p], level[s], pump_rate * strength)
                add(level[p], level[s], gamma * BRANCHING_S * sum(core_line_strengths(q, p, s) for q in Polarization))
            for d in _D.values():
                strength = core_line_strengths(Polarization.PI, d, p)
                if repump_on:
                    add(level[d], level[p], repump_rate * strength)
                    add(level[p], level[d], repump_rate * strength)
                add(level[p], level[d], gamma * BRANCHING_D * sum(core_line_strengths(q, p, d) for q in Polarization))
    return rates


def _rate_superoperator(rates, duration):
    dim = rates.shape[0]
    transfer = expm(rates * duration)
    loss = -np.diag(rates)
    damping = np.exp(-0.5 * (loss[:, None] + loss[None, :]) * duration)
    superop = np.diag(damping.reshape(-1)).astype(complex)
    diag = np.arange(dim) * (dim + 1)
    superop[np.ix_(diag, diag)] = transfer
    return superop


def _imperfection_superoperator(basis, leak, loss):
    """
    Kraus map moving a fraction `leak` of every 4d3/2 population to 5s1/2 (split evenly) and a
    fraction `loss` into the non-circular marker of the same manifold.
    """
    index = _index(basis)
    dim = len(basis)
    keep = np.eye(dim, dtype=complex)
    kraus = []
    for n in basis_manifolds(basis):
        ryd = RydbergLevel(n)
        d_levels = [CompositeLevel(ryd, d) for d in _D.values()]
        for level in d_levels:
            keep[index[level], index[level]] = np.sqrt(1.0 - leak - loss)
            for s in _S.values():
                op = np.zeros((dim, dim), dtype=complex)
                op[index[CompositeLevel(ryd, s)], index[level]] = np.sqrt(0.5 * leak)
                kraus.append(op)
            if loss > 0:
                marker = marker_level(n)
                if marker not in index:
                    raise ConfigurationError("pump loss needs the marker level of manifold %d in the basis" % n)
                op = np.zeros((dim, dim), dtype=complex)
                op[index[marker], index[level]] = np.sqrt(loss)
                kraus.append(op)
    kraus.append(keep)
    return sum(np.kron(k, k.conj()) for k in kraus)


def pump_propagator(pulse, basis, gamma_p=DEFAULT_GAMMA_P, pump_rate=DEFAULT_PUMP_RATE, repump_rate=DEFAULT_REPUMP_RATE):
    return _pump_propagator(pulse, tuple(basis), float(gamma_p), float(pump_rate), float(repump_rate))


@lru_cache(maxsize=256)
def _pump_propagator(pulse, basis, gamma_p, pump_rate, repump_rate):
    if not gamma_p > 0:
        raise ConfigurationError("gamma_p must be > 0, got %r" % gamma_p)
    superop = _rate_superoperator(_pump_rates(basis, gamma_p, pump_rate, repump_rate, True, pulse.repumper_on), pulse.duration)
    if pulse.repumper_on and pulse.repumper_overhang > 0:
        overhang = _pump_rates(basis, gamma_p, pump_rate, repump_rate, False, True)
        superop = _rate_superoperator(overhang, pulse.repumper_overhang) @ superop
    if pulse.repumper_on and (pulse.leak > 0 or pulse.loss > 0):
        superop = _imperfection_superoperator(basis, pulse.leak, pulse.loss) @ superop
    return Propagator(basis, superop, 'superoperator')


def pump_evolution(pulse, initial, gamma_p=DEFAULT_GAMMA_P, pump_rate=DEFAULT_PUMP_RATE, repump_rate=DEFAULT_REPUMP_RATE):
    """
    Rate-equation evolution under the 422 nm light (pi, 5s <-> 5p) and optionally the pi-polarised
    1092 nm repumper (4d m_j=+-1/2 <-> 5p), with 5p decaying 17:1 into 5s and 4d. Optical
    coherences are not kept, coherences between levels decay with the mean loss rate.

    Without the repumper the 4d3/2 sublevels end up equally populated only for an unpolarised 5s
    start such as prepare('51c,5s'). A single 5s sublevel leaves a small tilt towards its own
    sign: m = +1/2 gives about 0.239, 0.247, 0.254, 0.261 for m_j = -3/2 .. +3/2.
    """
    if pulse.duration == 0 and not (pulse.repumper_on and pulse.repumper_overhang > 0):
        return initial
    return apply(pump_propagator(pulse, initial.basis, gamma_p, pump_rate, repump_rate), initial)
