"""Bessel functions of integer order for real, non-negative arguments.

Only what the forward models need: J_m with its derivative, Y_0 and the
Hankel function H_0^(1) = J_0 + i Y_0.

Strategy
--------
* Ascending power series when ``x**2 / 4 <= m + 1``. The terms then decrease
  monotonically, so there is no cancellation.
* Miller's backward recurrence, normalised with ``J_0 + 2 sum J_2k = 1``,
  for moderate arguments. Gives every order up to ``mmax`` in one sweep.
* Hankel's asymptotic expansion for ``x > ASYMPTOTIC_X`` (orders 0 and 1,
  then upward recurrence while ``m < x``).

Y_0 uses the Neumann series ``Y_0 = (2/pi)(ln(x/2) + gamma) J_0
- (4/pi) sum (-1)^k J_2k / k`` on top of the Miller sweep, and the
asymptotic expansion for large arguments.
"""

import math

import numpy as np

__all__ = [
    "bessel_j",
    "bessel_j_array",
    "bessel_j_prime",
    "bessel_y0",
    "hankel1_0",
]

EULER_GAMMA = 0.57721566490153286061
ASYMPTOTIC_X = 25.0

_RESCALE = 1e250


def _check_order(order):
    if int(order) != order or order < 0:
        raise ValueError(f"order must be a non-negative integer, got {order!r}")
    return int(order)


def _series_j(m, x):
    """Power series sum_k (-1)^k (x/2)^(2k+m) / (k! (k+m)!)."""
    half = 0.5 * x
    term = 1.0
    for j in range(1, m + 1):
        term *= half / j
    q = -half * half
    total = term
    k = 0
    while True:
        k += 1
        term *= q / (k * (k + m))
        total += term
        if abs(term) <= 1e-17 * abs(total):
            return total


def _miller(mmax, x):
    """J_0..J_mmax by backward recurrence (x > 0)."""
    top = max(mmax, int(x)) + 1
    start = top + 16 + int(math.sqrt(60.0 * top))
    start += start % 2
    out = np.zeros(mmax + 1)
    j_next, j_cur = 0.0, 1e-30
    norm = 0.0
    for n in range(start, 0, -1):
        # j_cur holds J_n, produce J_{n-1}
        j_prev = (2.0 * n / x) * j_cur - j_next
        j_next, j_cur = j_cur, j_prev
        if n - 1 <= mmax:
            out[n - 1] = j_cur
        if (n - 1) % 2 == 0 and n - 1 > 0:
            norm += 2.0 * j_cur
        if abs(j_cur) > _RESCALE:
            j_cur /= _RESCALE
            j_next /= _RESCALE
            out /= _RESCALE
            norm /= _RESCALE
    norm += j_cur
    return out / norm


def _hankel_pq(nu, x):
    """Asymptotic P(nu, x), Q(nu, x) of Hankel's expansion."""
    mu = 4.0 * nu * nu
    eight_x = 8.0 * x
    p, q = 1.0, 0.0
    term = 1.0
    prev = math.inf
    k = 0
    while True:
        k += 1
        term *= (mu - (2 * k - 1) ** 2) / (k * eight_x)
        if abs(term) >= prev or term == 0.0:
            break
        prev = abs(term)
        if k % 2 == 1:
            q += term if (k // 2) % 2 == 0 else -term
        else:
            p += -term if (k // 2) % 2 == 1 else term
        if abs(term) < 1e-17:
            break
    return p, q


def _asymptotic_jy(nu, x):
    p, q = _hankel_pq(nu, x)
    chi = x - (0.5 * nu + 0.25) * math.pi
    amp = math.sqrt(2.0 / (math.pi * x))
    c, s = math.cos(chi), math.sin(chi)
    return amp * (p * c - q * s), amp * (p * s + q * c)


def bessel_j_array(mmax, x):
    """Return ``[J_0(x), ..., J_mmax(x)]`` as a float array.

    Parameters
    ----------
    mmax : int
        Highest order, ``mmax >= 0``.
    x : float
        Argument, ``x >= 0``.
    """
    mmax = _check_order(mmax)
    x = float(x)
    if not x >= 0.0:
        raise ValueError(f"bessel_j requires x >= 0, got {x!r}")
    if x == 0.0:
        out = np.zeros(mmax + 1)
        out[0] = 1.0
        return out
    if x > ASYMPTOTIC_X and mmax < x:
        out = np.empty(mmax + 1)
        out[0] = _asymptotic_jy(0, x)[0]
        if mmax >= 1:
            out[1] = _asymptotic_jy(1, x)[0]
        for m in range(1, mmax):
            out[m + 1] = (2.0 * m / x) * out[m] - out[m - 1]
        return out
    if 0.25 * x * x <= 1.0:
        return np.array([_series_j(m, x) for m in range(mmax + 1)])
    out = _miller(mmax, x)
    # rescaling in the sweep can flush deep-tail orders towards underflow
    for m in np.flatnonzero(np.abs(out) < 1e-200):
        if 0.25 * x * x <= m + 1:
            out[m] = _series_j(int(m), x)
    return out


def bessel_j(order, x):
    """Bessel function of the first kind J_order(x) for x >= 0."""
    order = _check_order(order)
    x = float(x)
    if not x >= 0.0:
        raise ValueError(f"bessel_j requires x >= 0, got {x!r}")
    if x == 0.0:
        return 1.0 if order == 0 else 0.0
    if 0.25 * x * x <= order + 1:
        return _series_j(order, x)
    if x > ASYMPTOTIC_X and order <= 1:
        return _asymptotic_jy(order, x)[0]
    return float(bessel_j_array(order, x)[order])


def bessel_j_prime(order, x):
    """Derivative d/dx J_order(x).

    Uses ``J_0' = -J_1`` and ``J_m' = J_{m-1} - (m/x) J_m``; the latter needs
    ``x > 0``.
    """
    order = _check_order(order)
    x = float(x)
    if order == 0:
        if not x >= 0.0:
            raise ValueError(f"bessel_j_prime requires x >= 0, got {x!r}")
        return -bessel_j(1, x)
    if not x > 0.0:
        raise ValueError(f"bessel_j_prime of order {order} requires x > 0, got {x!r}")
    js = bessel_j_array(order, x)
    return js[order - 1] - (order / x) * js[order]


def bessel_y0(x):
    """Bessel function of the second kind of order zero, x > 0."""
    x = float(x)
    if not x > 0.0:
        raise ValueError(f"bessel_y0 requires x > 0 (log singularity at 0), got {x!r}")
    if x > ASYMPTOTIC_X:
        return _asymptotic_jy(0, x)[1]
    # Neumann series needs J_2k until the terms die out
    kmax = int(0.5 * x + 3.0 * math.sqrt(x)) + 10
    js = bessel_j_array(2 * kmax, x)
    tail = 0.0
    for k in range(kmax, 0, -1):
        tail += (-1.0) ** k * js[2 * k] / k
    return (2.0 / math.pi) * ((math.log(0.5 * x) + EULER_GAMMA) * js[0] - 2.0 * tail)


def hankel1_0(x):
    """Hankel function of the first kind H_0^(1)(x) = J_0(x) + i Y_0(x)."""
    y0 = bessel_y0(x)
    return complex(bessel_j(0, x), y0)
