"""Multi-time correlation kernel of the interlaced growth process and its determinants.

The kernel at a pair of space-time points (n1, a1, t1, s1), (n2, a2, t2, s2)
is a weighted double integral: an outer integral over y in [-1, 1] against the
Jacobi weight (1-y)^{a1} (1+y)^{-1/2} and an inner positively oriented contour
integral in u around [-1, 1], plus a single-integral correction attached when
the first point does not come later in the space-like order.  The inner
integrand's only singularities inside the contour are the simple pole at u = y
and the order-n2 pole at u = 1, so the contour integral equals an explicit
residue sum.  Both evaluation routes are implemented:

* ``method="residue"`` (default): exact residue decomposition of the inner
  integral; the single-integral correction cancels the u = y residue
  analytically, leaving only smooth polynomial moments (stable up to very
  large s2, which the occupation sum rule needs).
* ``method="contour"``: trapezoidal rule on a circle of configurable radius
  (spectrally accurate for these analytic integrands), following the classic
  recipe; kept as a cross-check and for experiments with the contour.

Both routes share the adjudicated normalization: the second-slot Jacobi factor
is the *normalized* polynomial and the single-integral term is attached on the
weak order (first point weakly above and weakly earlier, including equal
points).  The raw variant with the unnormalized polynomial and the strict
order is available as ``normalized_second=False`` for the validation report;
it fails the packed-start and degeneration oracles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .orthopoly import (
    CharacterParam,
    character_poles,
    character_zeros,
    e_omega,
    gauss_jacobi_rule,
    jacobi_eval,
    jacobi_norm_const,
    jacobi_taylor_at_one,
    normalized_jacobi,
    weight_w,
)

__all__ = [
    "SpaceTimePoint",
    "KernelConfig",
    "KernelError",
    "QuadratureConvergenceError",
    "NotSpaceLikeError",
    "precedes",
    "kernel",
    "corr_fn",
    "rho1",
]

HALF = 0.5


class KernelError(RuntimeError):
    pass


class QuadratureConvergenceError(KernelError):
    """Refining the quadrature moved the result by more than the tolerance."""


class NotSpaceLikeError(ValueError):
    """The requested family of points is not pairwise comparable."""


@dataclass(frozen=True)
class SpaceTimePoint:
    """One observation point: level (n, a), time t, site s."""

    n: int
    a: float
    t: float
    s: int

    def __post_init__(self):
        if self.n < 1 or self.a not in (-0.5, 0.5) or self.t < 0 or self.s < 0:
            raise ValueError(f"invalid space-time point {self}")

    @property
    def flat(self) -> int:
        return int(2 * self.n - 0.5 + self.a)

    @property
    def triple(self) -> tuple[int, float, float]:
        return (self.flat, self.a, self.t)


def precedes(p: tuple[int, float, float], q: tuple[int, float, float]) -> bool:
    """Strict partial order on (n, a, t): lower-or-equal level, later-or-equal time, not equal.

    Accepts (n, a, t) triples or SpaceTimePoint instances (site ignored).
    """
    if isinstance(p, SpaceTimePoint):
        p = (p.n, p.a, p.t)
    if isinstance(q, SpaceTimePoint):
        q = (q.n, q.a, q.t)
    n1, a1, t1 = p
    n2, a2, t2 = q
    if (n1, a1, t1) == (n2, a2, t2):
        return False
    return 2 * n1 + a1 <= 2 * n2 + a2 and t1 >= t2


@dataclass(frozen=True)
class KernelConfig:
    """Evaluation parameters; immutable and shareable across threads."""

    omega: CharacterParam = field(default_factory=CharacterParam)
    quad_size: int = 64
    contour_radius: float = 2.0
    contour_points: int = 256
    method: str = "residue"
    normalized_second: bool = True

    def __post_init__(self):
        if self.contour_radius <= 1:
            raise ValueError("contour radius must exceed 1")
        if self.method not in ("residue", "contour"):
            raise ValueError(f"unknown kernel method {self.method!r}")
        if not self.omega.is_trivial:
            for z in character_poles(self.omega):
                if abs(z) <= 1 + 1e-6:
                    raise ValueError(f"character pole at {z:.6g} touches [-1, 1]")
            zeros = character_zeros(self.omega)
            for z in zeros:
                if abs(z) <= 1 + 1e-6:
                    raise ValueError(f"character zero at {z:.6g} touches [-1, 1]")
                if self.method == "contour" and abs(z) <= self.contour_radius:
                    raise ValueError(
                        f"contour of radius {self.contour_radius} would encircle "
                        f"the character zero at {z:.6g}"
                    )
            if self.method == "contour":
                u = self.contour_radius * np.exp(2j * np.pi * np.arange(512) / 512)
                margin = np.min(np.abs(e_omega(self.omega, u)))
                if margin <= 1e-8:
                    raise ValueError(
                        f"character modulus only {margin:.2e} on the radius-"
                        f"{self.contour_radius} contour"
                    )


@lru_cache(maxsize=128)
def _rule(size: int, a1: float):
    return gauss_jacobi_rule(size, a1, -HALF)


@lru_cache(maxsize=4096)
def _jacobi_taylor_float(s: int, a1_num: int, m_max: int, normalized: bool) -> tuple[float, ...]:
    cs = jacobi_taylor_at_one(s, Fraction(a1_num, 2), Fraction(-1, 2), m_max)
    if normalized:
        ck = jacobi_norm_const(s)
        cs = [c / ck for c in cs]
    return tuple(float(c) for c in cs)


def _one_over_e_taylor(omega: CharacterParam, order: int) -> np.ndarray:
    """Taylor coefficients of 1/E at u = 1:  exp(-gamma h) times affine/geometric factors."""
    out = np.zeros(order + 1)
    g = -omega.gamma
    fact = 1.0
    for j in range(order + 1):
        out[j] = fact
        fact *= g / (j + 1)
    for av in omega.alpha:  # numerator factors of 1/E are affine
        c = av - av * av / 2
        shifted = np.concatenate(([0.0], out[:-1]))
        out = out + c * shifted
    for bv in omega.beta:  # denominator factors expand geometrically
        c = bv - bv * bv / 2
        geo = (-c) ** np.arange(order + 1)
        out = _conv(out, geo, order)
    return out


def _conv(a: np.ndarray, b: np.ndarray, order: int) -> np.ndarray:
    return np.convolve(a, b)[: order + 1]


def _b_taylor(s2: int, a2: float, t2: float, omega: CharacterParam, order: int, normalized: bool) -> np.ndarray:
    """Taylor coefficients at u = 1 of the second-slot factor
    X_{s2}(u) e^{-t2 (u-1)} / E(u), X normalized or raw."""
    jac = np.zeros(order + 1)
    tayl = _jacobi_taylor_float(s2, int(2 * a2), min(s2, order), normalized)
    jac[: len(tayl)] = tayl
    expc = np.zeros(order + 1)
    fact = 1.0
    for j in range(order + 1):
        expc[j] = fact
        fact *= -t2 / (j + 1)
    out = _conv(jac, expc, order)
    if not omega.is_trivial:
        out = _conv(out, _one_over_e_taylor(omega, order), order)
    return out


def _tail_radius(omega: CharacterParam) -> float:
    """Largest |u-1| within which the Taylor series of 1/E converges."""
    r = math.inf
    for bv in omega.beta:
        c = bv - bv * bv / 2
        if c != 0:
            r = min(r, 1.0 / abs(c))
    return r


def _second_slot_direct(s2: int, a2: float, t2: float, omega: CharacterParam, y, normalized: bool):
    x = normalized_jacobi(s2, a2, -HALF, y) if normalized else jacobi_eval(s2, a2, -HALF, y)
    out = x * np.exp(-t2 * (y - 1.0))
    if not omega.is_trivial:
        out = out / e_omega(omega, y)
    return out


def _analytic_quotient(
    nodes: np.ndarray,
    n2: int,
    s2: int,
    a2: float,
    t2: float,
    omega: CharacterParam,
    normalized: bool,
) -> np.ndarray:
    """Stable values of [B(y) - T_{n2-1}B(y)] / (y-1)^{n2} on the quadrature nodes.

    Away from y = 1 the explicit difference is fine; near y = 1 the difference
    cancels catastrophically, so the Taylor tail series is summed instead.
    """
    delta = min(0.35, 0.45 * _tail_radius(omega))
    order = n2 + max(40, min(s2, 2 * s2))
    coeffs = _b_taylor(s2, a2, t2, omega, order, normalized)
    h = nodes - 1.0
    out = np.empty_like(nodes)
    far = np.abs(h) >= delta
    if far.any():
        yb = nodes[far]
        head = np.zeros(far.sum())
        for j in range(n2 - 1, -1, -1):
            head = head * (yb - 1.0) + coeffs[j]
        out[far] = (_second_slot_direct(s2, a2, t2, omega, yb, normalized) - head) / (yb - 1.0) ** n2
    near = ~far
    if near.any():
        hn = h[near]
        tail = np.zeros(near.sum())
        for j in range(order, n2 - 1, -1):
            tail = tail * hn + coeffs[j]
        out[near] = tail
    return out


def _psi_values(p1: SpaceTimePoint, omega: CharacterParam, nodes: np.ndarray) -> np.ndarray:
    vals = normalized_jacobi(p1.s, p1.a, -HALF, nodes) * np.exp(p1.t * (nodes - 1.0))
    if not omega.is_trivial:
        vals = vals * e_omega(omega, nodes)
    return vals


def _weak_after(k1: SpaceTimePoint, k2: SpaceTimePoint) -> bool:
    """First point weakly above and weakly earlier (single-integral term attaches)."""
    return 2 * k1.n + k1.a >= 2 * k2.n + k2.a and k1.t <= k2.t


def _effective_quad(cfg: KernelConfig, k1: SpaceTimePoint) -> int:
    return max(cfg.quad_size, (k1.s + k1.n) // 2 + 32)


def _fdot(weights: np.ndarray, values: np.ndarray) -> float:
    """Exactly rounded weighted sum; keeps large-magnitude entries at ~1e-16 relative."""
    return math.fsum((weights * values).tolist())


def _kernel_residue(k1: SpaceTimePoint, k2: SpaceTimePoint, cfg: KernelConfig, quad: int) -> float:
    rule = _rule(quad, k1.a)
    psi = _psi_values(k1, cfg.omega, rule.nodes)
    w_pref = weight_w(k1.s, k1.a) / math.pi
    if _weak_after(k1, k2):
        coeffs = _b_taylor(k2.s, k2.a, k2.t, cfg.omega, k2.n - 1, cfg.normalized_second)
        shifted = rule.nodes - 1.0
        residue_part = np.zeros_like(rule.nodes)
        for j in range(k2.n):
            residue_part += coeffs[j] * shifted ** (k1.n - k2.n + j)
        base = w_pref * _fdot(rule.weights, psi * residue_part)
        if not cfg.normalized_second:
            # raw variant: the strict-order display drops the equal-point term
            if (k1.n, k1.a, k1.t) == (k2.n, k2.a, k2.t):
                base -= w_pref * _fdot(
                    rule.weights,
                    normalized_jacobi(k1.s, k1.a, -HALF, rule.nodes)
                    * jacobi_eval(k2.s, k2.a, -HALF, rule.nodes),
                )
        return base
    quotient = _analytic_quotient(
        rule.nodes, k2.n, k2.s, k2.a, k2.t, cfg.omega, cfg.normalized_second
    )
    return -w_pref * _fdot(rule.weights, psi * (rule.nodes - 1.0) ** k1.n * quotient)


def _kernel_contour(k1: SpaceTimePoint, k2: SpaceTimePoint, cfg: KernelConfig, quad: int) -> float:
    rule = _rule(quad, k1.a)
    psi = _psi_values(k1, cfg.omega, rule.nodes)
    w_pref = weight_w(k1.s, k1.a) / math.pi
    p = cfg.contour_points
    u = cfg.contour_radius * np.exp(2j * np.pi * np.arange(p) / p)
    f = jacobi_eval(k2.s, k2.a, -HALF, u)
    if cfg.normalized_second:
        f = f / float(jacobi_norm_const(k2.s))
    f = f * np.exp(-k2.t * (u - 1.0)) / (u - 1.0) ** k2.n
    if not cfg.omega.is_trivial:
        f = f / e_omega(cfg.omega, u)
    f = f * u / p  # trapezoid weights for (1/2 pi i) * contour integral
    inner = (f[None, :] / (rule.nodes[:, None] - u[None, :])).sum(axis=1)
    val = w_pref * np.dot(rule.weights, psi * (rule.nodes - 1.0) ** k1.n * inner)
    attach = _weak_after(k1, k2) if cfg.normalized_second else (
        _weak_after(k1, k2) and (k1.n, k1.a, k1.t) != (k2.n, k2.a, k2.t)
    )
    if attach:
        x2 = normalized_jacobi(k2.s, k2.a, -HALF, rule.nodes) if cfg.normalized_second else jacobi_eval(
            k2.s, k2.a, -HALF, rule.nodes
        )
        single = (
            normalized_jacobi(k1.s, k1.a, -HALF, rule.nodes)
            * x2
            * np.exp((k1.t - k2.t) * (rule.nodes - 1.0))
            * (rule.nodes - 1.0) ** (k1.n - k2.n)
        )
        val = val + w_pref * rule.integrate(single)
    re, im = float(np.real(val)), float(np.imag(val))
    if abs(im) >= 1e-8 * (1 + abs(re)):
        raise KernelError(f"kernel imaginary part {im:.3e} too large for K{k1} {k2}")
    return re


def kernel(k1: SpaceTimePoint, k2: SpaceTimePoint, cfg: KernelConfig | None = None, check: bool = False) -> float:
    """Correlation kernel K(k1, k2).

    With ``check=True`` the quadrature sizes are doubled and a
    QuadratureConvergenceError is raised if the value moves by more than 1e-7.
    """
    cfg = cfg or KernelConfig()
    quad = _effective_quad(cfg, k1)
    evaluate = _kernel_residue if cfg.method == "residue" else _kernel_contour
    if cfg.method == "contour":
        val = evaluate(k1, k2, cfg, quad)
        if check:
            refined = _kernel_contour(
                k1,
                k2,
                KernelConfig(
                    cfg.omega, cfg.quad_size, cfg.contour_radius, 2 * cfg.contour_points,
                    cfg.method, cfg.normalized_second,
                ),
                2 * quad,
            )
            if abs(refined - val) > 1e-7:
                raise QuadratureConvergenceError(f"contour kernel moved by {abs(refined - val):.2e}")
        return val
    val = evaluate(k1, k2, cfg, quad)
    if check:
        refined = evaluate(k1, k2, cfg, 2 * quad)
        if abs(refined - val) > 1e-7:
            raise QuadratureConvergenceError(f"kernel moved by {abs(refined - val):.2e}")
    return val


def rho1(n: int, a: float, t: float, s: int, cfg: KernelConfig | None = None) -> float:
    """One-point correlation function: probability a particle of level (n, a) sits at s."""
    p = SpaceTimePoint(n, a, t, s)
    return kernel(p, p, cfg)


def corr_fn(points: list[SpaceTimePoint], cfg: KernelConfig | None = None) -> float:
    """Correlation function of a space-like family as a kernel determinant."""
    cfg = cfg or KernelConfig()
    m = len(points)
    if m == 0:
        return 1.0
    if m > 12:
        raise ValueError("at most 12 points supported")
    for i in range(m):
        for j in range(i + 1, m):
            ti, tj = points[i].triple, points[j].triple
            pi, pj = (points[i].n, points[i].a, points[i].t), (points[j].n, points[j].a, points[j].t)
            if ti != tj and not (precedes(pi, pj) or precedes(pj, pi)):
                raise NotSpaceLikeError(f"points {points[i]} and {points[j]} are not comparable")
    mat = np.empty((m, m))
    for i in range(m):
        for j in range(m):
            mat[i, j] = kernel(points[i], points[j], cfg)
    return float(np.linalg.det(mat))
