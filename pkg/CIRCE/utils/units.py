# Physical constants and unit conversions. Internal computations use atomic units for the
# level structure, kHz and microseconds for the dynamics (kHz * us = 1e-3 cycles).
import numpy as np
from scipy import constants

# 1 Hartree / h in Hz
HARTREE_HZ = 6.579683920e15

# Rydberg constant corrected for the 88Sr reduced mass, in GHz
SR88_MASS_U = 87.9056125
RYDBERG_SR_GHZ = constants.Rydberg * constants.c / (1.0 + constants.m_e / (SR88_MASS_U * constants.m_u)) * 1e-9

KHZ_PER_GHZ = 1e6


def kHz_to_angular(f_khz):
    # frequency in kHz to angular frequency in rad/us
    return 2.0 * np.pi * 1e-3 * np.asarray(f_khz)


def hydrogenic_frequency_ghz(n_upper, n_lower):
    # bare frequency between two circular levels of a hydrogen-like Rydberg electron
    return RYDBERG_SR_GHZ * (1.0 / n_lower**2 - 1.0 / n_upper**2)
