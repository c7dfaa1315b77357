# Angular momentum algebra for the ionic core transitions.
# Wigner 3j symbols follow the Racah formula, with floats for half-integer arguments. Adapted
# from wigner.py of the GWFrames project (MIT license, M. Boyle and U. Krohn), itself based on
# Wigner3j.m by David Terr (BSD license).
from scipy.special import factorial
from numpy import floor, sqrt, arange


def _is_half_integer(x):
    return 2 * x == floor(2 * x)


def wigner_3j(j1, j2, j3, m1, m2, m3):
    R""" Compute the Wigner 3j symbol:

     / j1 j2 j3 \
     |          |
     \ m1 m2 m3 /

    Selection rules that are not met give 0. Arguments that are not half-integers raise.
    """
    for x in (j1, j2, j3, m1, m2, m3):
        if not _is_half_integer(x):
            raise ValueError('All arguments must be integers or half-integers.')

    if m1 + m2 + m3 != 0:
        return 0.0
    if (j1 - m1 != floor(j1 - m1)) or (j2 - m2 != floor(j2 - m2)) or (j3 - m3 != floor(j3 - m3)):
        return 0.0
    if (j3 > j1 + j2) or (j3 < abs(j1 - j2)):
        return 0.0
    if abs(m1) > j1 or abs(m2) > j2 or abs(m3) > j3:
        return 0.0

    t1 = j2 - m1 - j3
    t2 = j1 + m2 - j3
    t3 = j1 + j2 - j3
    t4 = j1 - m1
    t5 = j2 + m2

    tmin = max(0, max(t1, t2))
    tmax = min(t3, min(t4, t5))

    wigner = 0.0
    for t in arange(tmin, tmax + 1, 1):
        wigner += (-1) ** t / (
            factorial(t)
            * factorial(t - t1)
            * factorial(t - t2)
            * factorial(t3 - t)
            * factorial(t4 - t)
            * factorial(t5 - t)
        )

    triangle = factorial(j1 + j2 - j3) * factorial(j1 - j2 + j3) * factorial(-j1 + j2 + j3) / factorial(j1 + j2 + j3 + 1)
    norm = factorial(j1 + m1) * factorial(j1 - m1) * factorial(j2 + m2) * factorial(j2 - m2) * factorial(j3 + m3) * factorial(j3 - m3)

    return float(wigner * (-1) ** int(round(j1 - j2 - m3)) * sqrt(triangle * norm))


def clebsch_gordan(j1, m1, j2, m2, j, m):
    """<j1, m1; j2, m2|j, m>, zero if m1 + m2 != m."""
    if m != m1 + m2:
        return 0.0
    return (-1) ** int(round(j1 - j2 + m)) * sqrt(2 * j + 1) * wigner_3j(j1, j2, j, m1, m2, -m)
