"""Jacobi polynomials, Gauss-Jacobi quadrature and the multiplicative character function.

This is the numerical substrate shared by the correlation-kernel and
asymptotics layers: three-term-recurrence evaluation of Jacobi polynomials
(real or complex argument), the double-factorial normalization constants,
the occupation weights W, Gauss-Jacobi rules found by Newton iteration from
Chebyshev-type initial guesses, and the character function E parameterized
by (alpha, beta, delta).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

__all__ = [
    "jacobi_eval",
    "jacobi_deriv",
    "jacobi_norm_const",
    "normalized_jacobi",
    "jacobi_taylor_at_one",
    "weight_w",
    "QuadratureRule",
    "gauss_jacobi_rule",
    "CharacterParam",
    "CharacterPoleError",
    "NodeConvergenceError",
    "e_omega",
]


def jacobi_eval(k: int, a: float, b: float, x):
    """Evaluate the k-th Jacobi polynomial with parameters (a, b) at x.

    Standard normalization (value binom(k+a, k) at x=1), computed by the
    three-term recurrence, which is stable on [-1, 1] and on the contours
    of moderate radius used by the kernel integrals.  `x` may be a real or
    complex scalar or a numpy array; evaluation outside [-1, 1] is allowed.
    """
    if k < 0:
        raise ValueError("polynomial degree must be nonnegative")
    one = x * 0 + 1.0
    if k == 0:
        return one
    p_prev = one
    p = ((a + b + 2) * x + (a - b)) / 2
    for n in range(1, k):
        c1 = 2 * (n + 1) * (n + a + b + 1) * (2 * n + a + b)
        c2 = (2 * n + a + b + 1) * (a * a - b * b)
        c3 = (2 * n + a + b) * (2 * n + a + b + 1) * (2 * n + a + b + 2)
        c4 = 2 * (n + a) * (n + b) * (2 * n + a + b + 2)
        p, p_prev = ((c2 + c3 * x) * p - c4 * p_prev) / c1, p
    return p


def jacobi_deriv(k: int, a: float, b: float, x):
    """Derivative of the k-th Jacobi polynomial: (k+a+b+1)/2 * J_{k-1}^{(a+1,b+1)}."""
    if k == 0:
        return x * 0.0
    return 0.5 * (k + a + b + 1) * jacobi_eval(k - 1, a + 1, b + 1, x)


def jacobi_norm_const(k: int) -> Fraction:
    """Normalization constant: (2k-1)!!/(2k)!! for k > 0 and 1 for k = 0."""
    c = Fraction(1)
    for i in range(1, k + 1):
        c *= Fraction(2 * i - 1, 2 * i)
    return c


def normalized_jacobi(k: int, a: float, b: float, x):
    """Jacobi polynomial divided by its normalization constant.

    For (a, b) = (-1/2, -1/2) this is exactly the Chebyshev polynomial of
    the first kind; for (1/2, -1/2) it is sin((2k+1)t/2)/sin(t/2) at x=cos t.
    """
    return jacobi_eval(k, a, b, x) / float(jacobi_norm_const(k))


def _binom_frac(top: Fraction, k: int) -> Fraction:
    out = Fraction(1)
    for i in range(1, k + 1):
        out *= (top - k + i) / i
    return out


def _pochhammer(q: Fraction, m: int) -> Fraction:
    out = Fraction(1)
    for i in range(m):
        out *= q + i
    return out


def jacobi_taylor_at_one(k: int, a: Fraction, b: Fraction, m_max: int | None = None) -> list[Fraction]:
    """Exact Taylor coefficients of J_k^{(a,b)} around x = 1.

    Returns coefficients of (x-1)^m for m = 0..min(k, m_max), as Fractions
    (a and b must be given as Fractions, e.g. Fraction(-1, 2)).  Derived from
    the terminating hypergeometric representation of the Jacobi polynomial;
    all coefficients are positive.
    """
    a = Fraction(a)
    b = Fraction(b)
    top = min(k, m_max) if m_max is not None else k
    lead = _binom_frac(a + k, k)
    coeffs = []
    for m in range(top + 1):
        falling = Fraction(math.factorial(k), math.factorial(k - m))
        num = _pochhammer(k + a + b + 1, m)
        den = _pochhammer(a + 1, m) * math.factorial(m) * 2**m
        coeffs.append(lead * falling * num / den)
    return coeffs


def weight_w(k: int, a: float, b: float = -0.5) -> int:
    """Occupation weight W(k) for the Jacobi parameter pairs used by the model."""
    if b != -0.5:
        raise ValueError(f"unsupported Jacobi parameters (a={a}, b={b})")
    if a == -0.5:
        return 2 if k > 0 else 1
    if a == 0.5:
        return 1
    raise ValueError(f"unsupported Jacobi parameters (a={a}, b={b})")


class NodeConvergenceError(RuntimeError):
    """Newton iteration for a quadrature node failed to converge."""


@dataclass(frozen=True)
class QuadratureRule:
    """Gauss-Jacobi rule: integrates f(x)(1-x)^a (1+x)^b over [-1, 1].

    Immutable after construction; exact for polynomial f of degree <= 2n-1.
    """

    nodes: np.ndarray
    weights: np.ndarray
    a: float
    b: float

    def __post_init__(self):
        self.nodes.setflags(write=False)
        self.weights.setflags(write=False)

    def integrate(self, f) -> float:
        """Apply the rule to a callable or to an array of node values."""
        vals = f(self.nodes) if callable(f) else np.asarray(f)
        return float(np.dot(self.weights, vals))

    def __len__(self) -> int:
        return len(self.nodes)


def gauss_jacobi_rule(n: int, a: float, b: float, tol: float = 1e-14, max_iter: int = 100) -> QuadratureRule:
    """n-point Gauss-Jacobi rule for the weight (1-x)^a (1+x)^b, a, b > -1.

    Nodes are the roots of J_n^{(a,b)}, found by Newton iteration started
    from Chebyshev-type angle guesses (exact for the (±1/2, -1/2) and
    (-1/2, -1/2) weights used throughout); weights come from the standard
    derivative formula.
    """
    if n < 1:
        raise ValueError("rule size must be positive")
    if a <= -1 or b <= -1:
        raise ValueError("Jacobi exponents must exceed -1")
    ks = np.arange(1, n + 1)
    theta = (ks + a / 2 - 0.25) * math.pi / (n + (a + b + 1) / 2)
    x = np.cos(theta)
    for _ in range(max_iter):
        p = jacobi_eval(n, a, b, x)
        dp = jacobi_deriv(n, a, b, x)
        dx = p / dp
        x = x - dx
        if np.max(np.abs(dx)) < tol:
            break
    else:
        raise NodeConvergenceError(f"Gauss-Jacobi nodes (n={n}, a={a}, b={b}) did not converge")
    x = np.sort(x)
    if np.any(np.diff(x) <= 0) or x[0] <= -1 or x[-1] >= 1:
        raise NodeConvergenceError(f"Gauss-Jacobi nodes (n={n}, a={a}, b={b}) collapsed")
    # 2^{a+b+1} Gamma(n+a+1) Gamma(n+b+1) / (n! Gamma(n+a+b+1)), accumulated as
    # exp(fsum of log1p terms): the naive lgamma difference of ~n log n sized
    # values costs ~n eps relative accuracy, visible in large kernel entries.
    log_terms = [
        (a + b + 1) * math.log(2),
        math.lgamma(a + 1),
        math.lgamma(b + 2),
        -math.lgamma(a + b + 2),
    ]
    for i in range(1, n + 1):
        log_terms.append(math.log1p(a / i))
        if i >= 2:
            log_terms.append(math.log1p(-a / (i + a + b)))
    c = math.exp(math.fsum(log_terms))
    dp = jacobi_deriv(n, a, b, x)
    w = c / ((1 - x * x) * dp * dp)
    return QuadratureRule(nodes=x, weights=w, a=a, b=b)


class CharacterPoleError(ZeroDivisionError):
    """The character function was evaluated at (or too close to) a pole."""


@dataclass(frozen=True)
class CharacterParam:
    """Parameter triple (alpha, beta, delta) of the character function.

    Only the finitely many stored entries exist; alpha and beta must be
    nonincreasing and nonnegative and their total mass must not exceed delta.
    """

    alpha: tuple[float, ...] = ()
    beta: tuple[float, ...] = ()
    delta: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "alpha", tuple(float(v) for v in self.alpha))
        object.__setattr__(self, "beta", tuple(float(v) for v in self.beta))
        for name, seq in (("alpha", self.alpha), ("beta", self.beta)):
            if any(v < 0 for v in seq):
                raise ValueError(f"{name} entries must be nonnegative")
            if any(seq[i] < seq[i + 1] for i in range(len(seq) - 1)):
                raise ValueError(f"{name} must be nonincreasing")
        if sum(self.alpha) + sum(self.beta) > self.delta + 1e-12:
            raise ValueError("sum(alpha) + sum(beta) must not exceed delta")

    @property
    def gamma(self) -> float:
        """Exponential drift: delta minus the total alpha/beta mass."""
        return self.delta - sum(self.alpha) - sum(self.beta)

    def shifted(self, extra_delta: float) -> "CharacterParam":
        """Same alpha/beta with delta increased (folds a time factor into E)."""
        return CharacterParam(self.alpha, self.beta, self.delta + extra_delta)

    @property
    def is_trivial(self) -> bool:
        return not self.alpha and not self.beta and self.delta == 0.0


def character_zeros(w: CharacterParam) -> list[float]:
    """Real zeros of E (one per beta entry with b != 0, 2; always outside (-1, 1))."""
    zeros = []
    for bv in w.beta:
        c = bv - bv * bv / 2
        if c != 0:
            zeros.append(1.0 - 1.0 / c)
    return zeros


def character_poles(w: CharacterParam) -> list[float]:
    """Real poles of E, one per alpha entry with a != 0, 2."""
    poles = []
    for av in w.alpha:
        c = av - av * av / 2
        if c != 0:
            poles.append(1.0 - 1.0 / c)
    return poles


def e_omega(w: CharacterParam, x, pole_tol: float = 1e-14):
    """Character function E at x (real or complex scalar, or numpy array).

    exp(gamma (x-1)) times the product over stored entries of
    [1 - b(1-x) + b^2 (1-x)/2] / [1 - a(1-x) + a^2 (1-x)/2];  E(1) = 1 for
    every parameter.  Raises CharacterPoleError when a denominator factor
    vanishes at x, reporting the offending alpha entry.
    """
    one_minus = 1.0 - x
    out = np.exp(w.gamma * (x - 1.0))
    for bv in w.beta:
        out = out * (1.0 - (bv - bv * bv / 2.0) * one_minus)
    for av in w.alpha:
        den = 1.0 - (av - av * av / 2.0) * one_minus
        small = np.min(np.abs(den)) if isinstance(den, np.ndarray) else abs(den)
        if small < pole_tol:
            raise CharacterPoleError(f"character denominator vanishes at x={x!r} for alpha={av}")
        out = out / den
    return out
