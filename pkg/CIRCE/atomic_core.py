"""
Level structure of a two-electron strontium atom with one electron in a circular Rydberg state
and the other one in the ionic core (5s1/2, 5p1/2 or 4d3/2).

The Rydberg electron creates an electric field gradient at the position of the core. The 4d3/2
quadrupole moment couples to it and splits the core sublevels: |m_j| = 3/2 is shifted up by
delta_n / 2 and |m_j| = 1/2 down by delta_n / 2. All transition frequencies used by the dynamics
are derived here.

Internal quantities are in atomic units, public quantities in kHz (shifts) and GHz (transitions).
"""
from dataclasses import dataclass
from enum import Enum
from typing import Mapping

import numpy as np
from scipy import integrate

from CIRCE.utils.angular import wigner_3j
from CIRCE.utils.exceptions import ConfigurationError, DomainError
from CIRCE.utils.units import HARTREE_HZ, KHZ_PER_GHZ, hydrogenic_frequency_ghz


class RydbergKind(str, Enum):
    CIRCULAR = 'circular'
    # non-circular states of a manifold, they are detected but never addressed by pulses
    ELLIPTICAL_MARKER = 'elliptical_marker'


class CoreTerm(str, Enum):
    S5_1_2 = 's5_1/2'
    P5_1_2 = 'p5_1/2'
    D4_3_2 = 'd4_3/2'

    @property
    def j(self):
        return 1.5 if self is CoreTerm.D4_3_2 else 0.5

    @property
    def short(self):
        return {'s5_1/2': '5s', 'p5_1/2': '5p', 'd4_3/2': '4d'}[self.value]


class Polarization(str, Enum):
    PI = 'pi'
    SIGMA_PLUS = 'sigma_plus'
    SIGMA_MINUS = 'sigma_minus'

    @property
    def q(self):
        return {'pi': 0, 'sigma_plus': 1, 'sigma_minus': -1}[self.value]


@dataclass(frozen=True, order=True)
class RydbergLevel:
    n: int
    kind: RydbergKind = RydbergKind.CIRCULAR

    def __post_init__(self):
        object.__setattr__(self, 'kind', RydbergKind(self.kind))
        if int(self.n) != self.n:
            raise DomainError("principal quantum number must be an integer, got %r" % (self.n,))
        if self.kind is RydbergKind.CIRCULAR and self.n < 2:
            raise DomainError("circular states need n >= 2, got n=%d" % self.n)
        if self.n < 1:
            raise DomainError("principal quantum number must be >= 1, got n=%d" % self.n)

    @property
    def l(self):
        if self.kind is not RydbergKind.CIRCULAR:
            return None
        return self.n - 1

    @property
    def m(self):
        return self.l

    @property
    def is_circular(self):
        return self.kind is RydbergKind.CIRCULAR


@dataclass(frozen=True, order=True)
class CoreLevel:
    term: CoreTerm
    m_j: float

    def __post_init__(self):
        object.__setattr__(self, 'term', CoreTerm(self.term))
        object.__setattr__(self, 'm_j', float(self.m_j))
        j = self.term.j
        if abs(self.m_j) > j or (j - self.m_j) != int(j - self.m_j):
            raise DomainError("m_j=%g is not a sublevel of %s" % (self.m_j, self.term.value))

    def __str__(self):
        return "%s,%+g/2" % (self.term.short, 2 * self.m_j)


@dataclass(frozen=True, order=True)
class CompositeLevel:
    rydberg: RydbergLevel
    core: CoreLevel

    @property
    def n(self):
        return self.rydberg.n

    @property
    def label(self):
        tag = 'c' if self.rydberg.is_circular else 'e'
        return "%d%s,%s" % (self.n, tag, self.core)

    def __str__(self):
        return self.label


def composite(n, term, m_j, kind=RydbergKind.CIRCULAR):
    return CompositeLevel(RydbergLevel(n, kind), CoreLevel(CoreTerm(term), m_j))


def core_sublevels(term):
    term = CoreTerm(term)
    j = term.j
    return [CoreLevel(term, m) for m in np.arange(-j, j + 1)]


class ShiftMode(str, Enum):
    EXACT_HYDROGENIC = 'exact_hydrogenic'
    POWER_LAW = 'power_law'


@dataclass(frozen=True)
class ShiftModel:
    # core quadrupole moment of 4d3/2 in atomic units
    theta: float = 2.029
    # second-order dipole contribution at the reference n, kHz
    dipole_C: float = -2.7
    # its uncertainty, carried for error propagation only
    dipole_C_sigma: float = 1.0
    reference_n: int = 51
    mode: ShiftMode = ShiftMode.EXACT_HYDROGENIC
    # power-law amplitude at the reference n, kHz
    B: float = None

    def __post_init__(self):
        try:
            object.__setattr__(self, 'mode', ShiftMode(self.mode))
        except ValueError:
            raise ConfigurationError("unknown shift model mode %r" % (self.mode,))
        if not self.theta > 0:
            raise ConfigurationError("theta must be positive, got %r" % (self.theta,))
        if int(self.reference_n) != self.reference_n or self.reference_n < 2:
            raise ConfigurationError("reference_n must be an integer >= 2, got %r" % (self.reference_n,))
        if self.dipole_C_sigma < 0:
            raise ConfigurationError("dipole_C_sigma must be >= 0")
        if self.mode is ShiftMode.POWER_LAW and (self.B is None or not self.B > 0):
            raise ConfigurationError("power_law mode needs B > 0, got %r" % (self.B,))

    @classmethod
    def power_law(cls, B, C=-2.7, **kwargs):
        return cls(mode=ShiftMode.POWER_LAW, B=B, dipole_C=C, **kwargs)


def _check_n(n):
    if int(n) != n or n < 2:
        raise DomainError("circular states need an integer n >= 2, got %r" % (n,))
    return int(n)


def circular_gradient(n):
    """
    |<dE_z/dz>| created by a circular Rydberg electron at the nucleus, atomic units.

    <3cos^2(theta) - 1> over Y_{l,l} is -2l/(2l+3) and the hydrogenic <r^-3> is
    1/(n^3 l (l+1/2) (l+1)). With l = n-1 both combine to 4 / (n^4 (4n^2 - 1)).
    """
    n = _check_n(n)
    return 4.0 / (float(n) ** 4 * (4.0 * n * n - 1.0))


def circular_gradient_quadrature(n):
    """
    Same quantity from direct numerical integration of the hydrogenic circular wavefunction,
    |psi|^2 ~ r^(2n-2) exp(-2r/n) sin^(2n-2)(theta).
    """
    n = _check_n(n)
    l = n - 1

    # angular part, u = cos(theta), weight (1-u^2)^l
    def ang_weight(u):
        return (1.0 - u * u) ** l

    opts = dict(epsabs=0.0, epsrel=1e-13, limit=500)
    num = integrate.quad(lambda u: ang_weight(u) * (3.0 * u * u - 1.0), -1.0, 1.0, points=[0.0], **opts)[0]
    den = integrate.quad(ang_weight, -1.0, 1.0, points=[0.0], **opts)[0]
    angular = num / den

    # radial part with x = 2r/n, weights scaled by their peak to stay finite for large n
    k = 2 * n
    peak = k * np.log(k) - k

    def rad_weight(x):
        return np.exp(k * np.log(x) - x - peak)

    upper = k + 60.0 * np.sqrt(k) + 100.0
    num = sum(integrate.quad(lambda x: rad_weight(x) / x**3, a, b, **opts)[0] for a, b in ((0.0, k), (k, upper)))
    den = sum(integrate.quad(rad_weight, a, b, **opts)[0] for a, b in ((0.0, k), (k, upper)))
    r_minus_3 = 8.0 / n**3 * num / den

    return abs(angular * r_minus_3)


def quadrupole_delta(n, theta):
    """
    First-order splitting delta_n between |m_j|=3/2 and |m_j|=1/2 of 4d3/2, in kHz.
    """
    if theta < 0:
        raise DomainError("theta must be >= 0, got %r" % (theta,))
    return circular_gradient(n) * theta * HARTREE_HZ * 1e-3


def total_delta(model, n):
    """
    delta_n in kHz including the second-order dipole term C (n_ref/n)^8.
    """
    n = _check_n(n)
    ratio = model.reference_n / n
    if model.mode is ShiftMode.EXACT_HYDROGENIC:
        return quadrupole_delta(n, model.theta) + model.dipole_C * ratio**8
    if model.mode is ShiftMode.POWER_LAW:
        return model.B * ratio**6 + model.dipole_C * ratio**8
    raise ConfigurationError("unknown shift model mode %r" % (model.mode,))


def level_shift(level, model):
    """
    Energy shift of a composite level in kHz: +delta_n/2 for 4d |m_j|=3/2, -delta_n/2 for
    4d |m_j|=1/2, zero for 5s. Non-circular levels are not shifted.
    """
    term = level.core.term
    if term is CoreTerm.P5_1_2:
        raise DomainError("the quadrupole shift of 5p1/2 is not modeled")
    if term is CoreTerm.S5_1_2 or not level.rydberg.is_circular:
        return 0.0
    delta = total_delta(model, level.n)
    return 0.5 * delta if abs(level.core.m_j) == 1.5 else -0.5 * delta


class Nu0Table(Mapping):
    """
    Bare frequencies of core-preserving Rydberg transitions, GHz, keyed by (n_upper, n_lower).
    Two-photon transitions are stored with their total (two-photon) frequency.
    """

    def __init__(self, entries=None):
        self._entries = {}
        for key, value in dict(entries or {}).items():
            self._entries[self._key(key)] = float(value)

    @staticmethod
    def _key(key):
        if isinstance(key, str):
            key = tuple(int(k) for k in key.replace('->', '-').split('-'))
        a, b = (int(k) for k in key)
        if a == b:
            raise ConfigurationError("a Rydberg transition needs two different n, got %r" % (key,))
        return (max(a, b), min(a, b))

    def __getitem__(self, key):
        return self._entries[self._key(key)]

    def __iter__(self):
        return iter(self._entries)

    def __len__(self):
        return len(self._entries)

    def __hash__(self):
        return hash(tuple(sorted(self._entries.items())))

    def __eq__(self, other):
        return isinstance(other, Nu0Table) and self._entries == other._entries

    def lookup(self, n_a, n_b):
        try:
            return self[(n_a, n_b)]
        except KeyError:
            raise ConfigurationError("no bare frequency configured for the %d <-> %d transition" % (n_a, n_b))

    def shifted(self, offset_ghz):
        return Nu0Table({k: v + offset_ghz for k, v in self._entries.items()})

    def as_dict(self):
        return {"%d-%d" % k: v for k, v in sorted(self._entries.items())}


# measured bare frequencies, everything else falls back to the hydrogenic value
MEASURED_NU0_GHZ = {(51, 49): 105.357546, (51, 50): 51.098516}


def default_nu0_table(manifolds, overrides=None):
    manifolds = sorted(set(int(n) for n in manifolds))
    entries = {}
    for i, upper in enumerate(manifolds):
        for lower in manifolds[:i]:
            entries[(upper, lower)] = MEASURED_NU0_GHZ.get((upper, lower), hydrogenic_frequency_ghz(upper, lower))
    table = Nu0Table(entries)
    if overrides:
        merged = dict(table._entries)
        merged.update(Nu0Table(overrides)._entries)
        table = Nu0Table(merged)
    return table


def transition_frequency(a, b, model, nu0_table):
    """
    Frequency of the a <-> b transition in GHz (always positive for Rydberg transitions).

    Microwave transitions must preserve the core state, optical/Raman transitions preserve n.
    In the latter case the bare part is zero and only the shift difference a - b remains.
    """
    if a.n != b.n:
        if a.core != b.core:
            raise ConfigurationError("microwave transition %s -> %s changes the core state" % (a, b))
        upper, lower = (a, b) if a.n > b.n else (b, a)
        bare = nu0_table.lookup(upper.n, lower.n)
        return bare + (level_shift(upper, model) - level_shift(lower, model)) / KHZ_PER_GHZ
    return (level_shift(a, model) - level_shift(b, model)) / KHZ_PER_GHZ


def core_line_strengths(polarization, level_from, level_to):
    """
    Relative strength of a core dipole transition, normalised such that the decay weights of an
    upper (5p) sublevel into all sublevels of one lower term sum to one.

    The 5p1/2 sublevel is the upper level, polarization is defined for absorption from the lower
    level: q = m_upper - m_lower. Forbidden combinations return 0.
    """
    polarization = Polarization(polarization)
    terms = {level_from.term, level_to.term}
    if CoreTerm.P5_1_2 not in terms or len(terms) != 2:
        return 0.0
    upper, lower = (level_from, level_to) if level_from.term is CoreTerm.P5_1_2 else (level_to, level_from)
    q = upper.m_j - lower.m_j
    if q != polarization.q:
        return 0.0
    j_u, j_l = upper.term.j, lower.term.j
    return (2 * j_u + 1) * wigner_3j(j_l, 1, j_u, lower.m_j, q, -upper.m_j) ** 2
