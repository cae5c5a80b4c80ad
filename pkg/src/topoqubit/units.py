"""Unit conversions used at the configuration boundary.

Internally every energy is an angular frequency in rad/s (hbar = 1).
"""

import math

from scipy import constants

_EV_TO_RAD_PER_S = constants.e / constants.hbar


def hz_to_rad(f_hz: float) -> float:
    return 2.0 * math.pi * f_hz


def rad_to_hz(omega: float) -> float:
    return omega / (2.0 * math.pi)


def ueV_to_rad(energy_ueV: float) -> float:
    """Energy in micro-electronvolts to angular frequency."""
    return energy_ueV * 1e-6 * _EV_TO_RAD_PER_S


def rad_to_ueV(omega: float) -> float:
    return omega / _EV_TO_RAD_PER_S * 1e6
