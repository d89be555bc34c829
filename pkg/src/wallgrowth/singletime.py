"""Fixed-time correlation kernel, implemented on an independent evaluation route.

At a single observation time the evolution factor folds into the character
function (the time parameter shifts delta), and the kernel reduces to data on
one time slice.  This module evaluates that reduced kernel with machinery
deliberately disjoint from the multi-time path: the outer integral is done by
trapezoidal quadrature in the angle variable y = cos(theta) (the Jacobi weight
turns into 1 or (1 - cos theta), and the even periodic extension makes the
trapezoid rule spectrally accurate), and the inner contour integral is resolved
by series coefficients assembled locally.  It exists to cross-examine the
multi-time kernel at equal times; agreement is part of the acceptance gate.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .orthopoly import CharacterParam, jacobi_norm_const, jacobi_taylor_at_one

__all__ = ["single_time_kernel"]


@lru_cache(maxsize=2048)
def _poly_series(s: int, a_num: int, order: int) -> tuple[float, ...]:
    """Normalized-polynomial Taylor coefficients at 1, zero-padded to `order`."""
    raw = jacobi_taylor_at_one(s, Fraction(a_num, 2), Fraction(-1, 2), min(s, order))
    ck = jacobi_norm_const(s)
    out = [float(c / ck) for c in raw]
    out.extend(0.0 for _ in range(order + 1 - len(out)))
    return tuple(out)


def _series_mul(a: list[float], b: list[float], order: int) -> list[float]:
    out = [0.0] * (order + 1)
    for i, ai in enumerate(a):
        if ai == 0.0:
            continue
        top = min(order - i, len(b) - 1)
        for j in range(top + 1):
            out[i + j] += ai * b[j]
    return out


def _inv_character_series(omega: CharacterParam, order: int) -> list[float]:
    """Coefficients of 1/E(1+h) in powers of h."""
    out = [0.0] * (order + 1)
    g = -omega.gamma
    term = 1.0
    for j in range(order + 1):
        out[j] = term
        term *= g / (j + 1)
    for av in omega.alpha:
        c = av - av * av / 2
        out = [out[j] + (c * out[j - 1] if j else 0.0) for j in range(order + 1)]
    for bv in omega.beta:
        c = bv - bv * bv / 2
        geo = [(-c) ** j for j in range(order + 1)]
        out = _series_mul(out, geo, order)
    return out


def _theta_grid(points: int):
    theta = np.linspace(0.0, math.pi, points + 1)
    w = np.full(points + 1, math.pi / points)
    w[0] /= 2
    w[-1] /= 2
    return np.cos(theta), w


def _character_values(omega: CharacterParam, y: np.ndarray) -> np.ndarray:
    out = np.exp(omega.gamma * (y - 1.0))
    for bv in omega.beta:
        out *= 1.0 - (bv - bv * bv / 2) * (1.0 - y)
    for av in omega.alpha:
        out /= 1.0 - (av - av * av / 2) * (1.0 - y)
    return out


def _poly_values(s: int, a: float, y: np.ndarray) -> np.ndarray:
    """Normalized Jacobi values through the recurrence, local to this module."""
    ck = float(jacobi_norm_const(s))
    if s == 0:
        return np.ones_like(y)
    p_prev = np.ones_like(y)
    b = -0.5
    p = ((a + b + 2) * y + (a - b)) / 2
    for n in range(1, s):
        c1 = 2 * (n + 1) * (n + a + b + 1) * (2 * n + a + b)
        c2 = (2 * n + a + b + 1) * (a * a - b * b)
        c3 = (2 * n + a + b) * (2 * n + a + b + 1) * (2 * n + a + b + 2)
        c4 = 2 * (n + a) * (n + b) * (2 * n + a + b + 2)
        p, p_prev = ((c2 + c3 * y) * p - c4 * p_prev) / c1, p
    return p / ck


def single_time_kernel(
    n1: int,
    a1: float,
    s1: int,
    n2: int,
    a2: float,
    s2: int,
    t: float,
    omega: CharacterParam | None = None,
    theta_points: int = 0,
) -> float:
    """Kernel of the fixed-time determinantal process at two sites of one time slice.

    The time enters only through the shifted character (delta -> delta + t).
    `theta_points` defaults to a resolution adequate for the polynomial degrees
    involved.
    """
    omega = (omega or CharacterParam()).shifted(t)
    if theta_points <= 0:
        theta_points = max(512, 4 * (s1 + s2) + 64)
    y, wq = _theta_grid(theta_points)
    if a1 > 0:
        wq = wq * (1.0 - y)
    w_pref = (2.0 if (s1 > 0 and a1 < 0) else 1.0) / math.pi
    psi = _poly_values(s1, a1, y) * _character_values(omega, y)

    order = n2 + max(48, s2 + 8)
    series = _series_mul(
        list(_poly_series(s2, int(2 * a2), order)), _inv_character_series(omega, order), order
    )

    if 2 * n1 + a1 >= 2 * n2 + a2:
        total = np.zeros_like(y)
        for j in range(n2):
            total += series[j] * (y - 1.0) ** (n1 - n2 + j)
        return w_pref * math.fsum((wq * psi * total).tolist())

    h = y - 1.0
    quotient = np.empty_like(y)
    near = np.abs(h) < 0.3
    if near.any():
        hn = h[near]
        acc = np.zeros_like(hn)
        for j in range(order, n2 - 1, -1):
            acc = acc * hn + series[j]
        quotient[near] = acc
    far = ~near
    if far.any():
        yf = y[far]
        direct = _poly_values(s2, a2, yf) / _character_values(omega, yf)
        head = np.zeros_like(yf)
        for j in range(n2 - 1, -1, -1):
            head = head * (yf - 1.0) + series[j]
        quotient[far] = (direct - head) / (yf - 1.0) ** n2
    return -w_pref * math.fsum((wq * psi * h**n1 * quotient).tolist())
