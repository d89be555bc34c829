"""States and the non-commutative random walk on the skew-symmetric matrix algebra.

Generators F_ij = E_ij - E_{-j,-i} (i != -j) act on an (N+1)-dimensional space
whose rows and columns are labeled -n..n (the label 0 present only for odd
N+1).  The state at parameter t of an ordered product of generators is the
set-partition moment sum

    <F_{i1 j1} ... F_{im jm}>_t = sum over partitions pi of {1..m} of
        t^{|pi|} * prod over blocks B of Tr(prod_{b in B, ascending} F_{ib jb}),

and the Markov operator acts by splitting each monomial over subsets,
P_t X = sum_S X_S <X_{S^c}>_t.  Everything is exact over rationals when t is
rational.  The quadratic and quartic central elements are built from their
explicit tabulated expansions, with the shift constants rho_m folded into the
coefficients.

State parameter versus process time: the particle process at time t pairs
with the state at parameter t/2 (`state_time`); only bridge helpers convert.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import product as iproduct

import numpy as np

__all__ = [
    "so_indices",
    "rho_shift",
    "generator_matrix",
    "trace_product",
    "NCPoly",
    "set_partitions",
    "state",
    "markov_operator",
    "CentralElement",
    "build_phi",
    "semigroup_check",
    "markov_shift_report",
    "state_time",
    "shifted_moment",
    "expected_power_sum",
]

MAX_DEGREE = 12

Pair = tuple[int, int]
Monomial = tuple[Pair, ...]


def so_indices(n_plus_1: int) -> tuple[int, ...]:
    """Row/column labels: -n..n with 0 present exactly when N+1 is odd."""
    if n_plus_1 < 2:
        raise ValueError("need a matrix size of at least 2")
    n = n_plus_1 // 2
    if n_plus_1 % 2 == 1:
        return tuple(range(-n, n + 1))
    return tuple(i for i in range(-n, n + 1) if i != 0)


def rho_shift(m: int, n_plus_1: int) -> Fraction:
    """Half-sum shift: -m+1 for even N+1, -m+1/2 for odd."""
    return Fraction(-m + 1) if n_plus_1 % 2 == 0 else Fraction(-2 * m + 1, 2)


@lru_cache(maxsize=None)
def _index_pos(n_plus_1: int) -> dict[int, int]:
    return {idx: pos for pos, idx in enumerate(so_indices(n_plus_1))}


@lru_cache(maxsize=None)
def generator_matrix(i: int, j: int, n_plus_1: int):
    """Dense integer matrix of F_ij = E_ij - E_{-j,-i}; the zero matrix when i = -j."""
    pos = _index_pos(n_plus_1)
    if i not in pos or j not in pos:
        raise ValueError(f"indices ({i}, {j}) invalid for size {n_plus_1}")
    mat = np.zeros((n_plus_1, n_plus_1), dtype=np.int64)
    if i == -j:
        return mat
    mat[pos[i], pos[j]] += 1
    mat[pos[-j], pos[-i]] -= 1
    mat.setflags(write=False)
    return mat


@lru_cache(maxsize=250_000)
def trace_product(mono: Monomial, n_plus_1: int) -> int:
    """Trace of the ordered product of generator matrices (an exact integer)."""
    if not mono:
        return n_plus_1
    acc = generator_matrix(*mono[0], n_plus_1)
    for pair in mono[1:]:
        acc = acc @ generator_matrix(*pair, n_plus_1)
    return int(np.trace(acc))


class NCPoly:
    """Formal linear combination of ordered generator monomials plus a constant.

    Terms live in a dict keyed by the monomial tuple (the empty tuple is the
    constant term); coefficients are Fractions unless floats are introduced.
    """

    __slots__ = ("terms",)

    def __init__(self, terms: dict[Monomial, Fraction] | None = None):
        self.terms = {}
        if terms:
            for mono, coeff in terms.items():
                if coeff != 0:
                    self.terms[mono] = coeff

    @classmethod
    def constant(cls, value) -> "NCPoly":
        return cls({(): Fraction(value) if not isinstance(value, float) else value})

    @classmethod
    def monomial(cls, pairs: Monomial, coeff=1) -> "NCPoly":
        return cls({tuple(pairs): Fraction(coeff) if not isinstance(coeff, float) else coeff})

    def __add__(self, other: "NCPoly") -> "NCPoly":
        out = dict(self.terms)
        for mono, coeff in other.terms.items():
            newc = out.get(mono, 0) + coeff
            if newc == 0:
                out.pop(mono, None)
            else:
                out[mono] = newc
        return NCPoly(out)

    def __sub__(self, other: "NCPoly") -> "NCPoly":
        return self + other.scale(-1)

    def scale(self, factor) -> "NCPoly":
        return NCPoly({m: c * factor for m, c in self.terms.items()})

    def __matmul__(self, other: "NCPoly") -> "NCPoly":
        """Non-commutative product: concatenates monomials."""
        out: dict[Monomial, Fraction] = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                key = m1 + m2
                out[key] = out.get(key, 0) + c1 * c2
        return NCPoly(out)

    def degree(self) -> int:
        return max((len(m) for m in self.terms), default=0)

    def __eq__(self, other) -> bool:
        return isinstance(other, NCPoly) and self.terms == other.terms

    def __repr__(self) -> str:
        return f"NCPoly({len(self.terms)} terms, degree {self.degree()})"


def set_partitions(m: int):
    """Yield all partitions of {0..m-1} as tuples of ascending blocks."""
    if m == 0:
        yield ()
        return
    for part in set_partitions(m - 1):
        head = m - 1
        for i in range(len(part)):
            yield part[:i] + (part[i] + (head,),) + part[i + 1 :]
        yield part + ((head,),)


def _state_monomial(mono: Monomial, t, n_plus_1: int):
    m = len(mono)
    if m == 0:
        return Fraction(1) if not isinstance(t, float) else 1.0
    if m > MAX_DEGREE:
        raise ValueError(f"monomial degree {m} exceeds the partition cap {MAX_DEGREE}")
    total = 0
    for part in set_partitions(m):
        prod = 1
        for block in part:
            tr = trace_product(tuple(mono[b] for b in block), n_plus_1)
            if tr == 0:
                prod = 0
                break
            prod *= tr
        if prod:
            total += t ** len(part) * prod
    return total


def state(x: NCPoly | Monomial, t, n_plus_1: int):
    """The moment state at parameter t, extended linearly; <1>_t = 1."""
    if not isinstance(x, NCPoly):
        return _state_monomial(tuple(x), t, n_plus_1)
    total = 0
    for mono, coeff in x.terms.items():
        total += coeff * _state_monomial(mono, t, n_plus_1)
    return total


def markov_operator(x: NCPoly | Monomial, t, n_plus_1: int) -> NCPoly:
    """Random-walk operator: split each monomial over subsets, closing the
    complement with the state at parameter t."""
    if not isinstance(x, NCPoly):
        x = NCPoly.monomial(tuple(x))
    out = NCPoly()
    for mono, coeff in x.terms.items():
        m = len(mono)
        if m > MAX_DEGREE:
            raise ValueError(f"monomial degree {m} exceeds the partition cap {MAX_DEGREE}")
        for mask in range(1 << m):
            kept = tuple(mono[i] for i in range(m) if mask >> i & 1)
            closed = tuple(mono[i] for i in range(m) if not mask >> i & 1)
            weight = _state_monomial(closed, t, n_plus_1)
            if weight:
                out = out + NCPoly.monomial(kept, coeff * weight)
    return out


def _shifted_diag(m: int, n_plus_1: int) -> NCPoly:
    """The factor (F_mm + rho_m) as a two-term polynomial."""
    return NCPoly.monomial(((m, m),)) + NCPoly.constant(rho_shift(m, n_plus_1))


def _pair_factor(i: int, j: int, delta_rho: Fraction | None = None) -> NCPoly:
    """F_ij (zero when i = -j), optionally plus a delta_{ij} shift."""
    out = NCPoly()
    if i != -j:
        out = out + NCPoly.monomial(((i, j),))
    if delta_rho is not None and i == j:
        out = out + NCPoly.constant(delta_rho)
    return out


def _inner(m: int, n_plus_1: int) -> list[int]:
    return [i for i in so_indices(n_plus_1) if -m < i < m]


@dataclass(frozen=True)
class CentralElement:
    """A central generator: its expansion and the exponent of its image
    (one half of the element maps to the power sum of degree 2k in the
    shifted coordinates l_i = lambda_i + rho_i)."""

    k: int
    n_plus_1: int
    poly: NCPoly

    def hc_value(self, lam: tuple[int, ...]) -> Fraction:
        """Scalar by which the element acts for highest weight lam (image is
        2 * sum l_i^{2k})."""
        n = self.n_plus_1 // 2
        if len(lam) != n:
            raise ValueError(f"expected a weight of length {n}")
        return 2 * sum((Fraction(li) + rho_shift(i + 1, self.n_plus_1)) ** (2 * self.k) for i, li in enumerate(lam))


def build_phi(k: int, n_plus_1: int) -> CentralElement:
    """Quadratic (k=1) or quartic (k=2) central element.

    Built by the path-monomial (graphical) construction, which reproduces the
    tabulated quadratic expansion exactly; the published quartic table drops
    several walk families that only exist for ranks >= 2 (see
    `_phi4_printed`), so the graphical construction is authoritative.  Both
    elements are verified to act as scalars in the defining representation by
    the test suite.
    """
    if k == 1:
        return CentralElement(1, n_plus_1, _phi2(n_plus_1))
    if k == 2:
        return CentralElement(2, n_plus_1, _phi_graphical(2, n_plus_1))
    raise ValueError("only the quadratic and quartic elements are supported")


@lru_cache(maxsize=None)
def _phi_graphical(k: int, n_plus_1: int) -> NCPoly:
    """Central element of degree 2k as a sum over closed walks.

    For each m, walks of length 2k from m to m on the complete graph over the
    labels -m..m, with edge (i, j) carrying F_ij + delta_ij rho_m, each walk
    weighted by 2k / (number of returns to m); walks avoiding -m are counted
    twice (they also live in the reflection-reduced copy, whose sign cancels
    at even degree).
    """
    n = n_plus_1 // 2
    labels_all = so_indices(n_plus_1)
    total = NCPoly()
    for m in range(1, n + 1):
        rho = rho_shift(m, n_plus_1)
        verts = [i for i in labels_all if -m <= i <= m]
        for interior in iproduct(verts, repeat=2 * k - 1):
            walk = (m,) + interior + (m,)
            returns = sum(1 for v in walk[1:] if v == m)
            weight = Fraction(2 * k, returns)
            if -m not in interior:
                weight *= 2
            mono = NCPoly.constant(weight)
            for a, b in zip(walk, walk[1:]):
                mono = mono @ _pair_factor(a, b, delta_rho=rho if a == b else None)
                if not mono.terms:
                    break
            total = total + mono
    return total


@lru_cache(maxsize=None)
def _phi2(n_plus_1: int) -> NCPoly:
    n = n_plus_1 // 2
    total = NCPoly()
    for m in range(1, n + 1):
        diag = _shifted_diag(m, n_plus_1)
        term = diag @ diag
        for i in _inner(m, n_plus_1):
            term = term + (_pair_factor(m, i) @ _pair_factor(i, m)).scale(2)
        total = total + term
    return total.scale(2)


@lru_cache(maxsize=None)
def _phi4_printed(n_plus_1: int) -> NCPoly:
    n = n_plus_1 // 2
    total = NCPoly()
    for m in range(1, n + 1):
        rho = rho_shift(m, n_plus_1)
        diag = _shifted_diag(m, n_plus_1)
        inner = _inner(m, n_plus_1)
        term = diag @ diag @ diag @ diag
        for i, j in iproduct(inner, inner):
            fmi, fim = _pair_factor(m, i), _pair_factor(i, m)
            fmj, fjm = _pair_factor(m, j), _pair_factor(j, m)
            fij = _pair_factor(i, j, delta_rho=rho)
            fji = _pair_factor(j, i, delta_rho=rho)
            term = term + (fmi @ fim @ fmj @ fjm).scale(2)
            term = term + (diag @ fmi @ fij @ fjm).scale(2)
            term = term + (fmi @ fij @ fjm @ diag).scale(2)
            term = term + (fmi @ fij @ fji @ fim).scale(4)
        for i in inner:
            fmi, fim = _pair_factor(m, i), _pair_factor(i, m)
            term = term + (fmi @ _pair_factor(i, -m) @ _pair_factor(-m, i) @ fim).scale(2)
            sandwich = (fmi @ fim @ diag @ diag) + (diag @ diag @ fmi @ fim) + (diag @ fmi @ fim @ diag)
            term = term + sandwich.scale(Fraction(4, 3))
        total = total + term
    return total.scale(2)


def semigroup_check(k: int, s, t, n_plus_1: int):
    """|<P_t Phi>_s - <Phi>_{s+t}|, exact (zero) for rational s, t."""
    phi = build_phi(k, n_plus_1).poly
    lhs = state(markov_operator(phi, t, n_plus_1), s, n_plus_1)
    rhs = state(phi, s + t, n_plus_1)
    return abs(lhs - rhs)


def markov_shift_report(t, n_plus_1: int, s_values=(0, Fraction(1, 2), 1, 2)) -> dict:
    """Evaluate the drift of the central elements under the walk.

    Reports <P_t Phi_2 - Phi_2>_s on an s grid (constant; the constant has no
    published closed form and is reported rather than asserted), the quartic
    drift with the exact coefficient (8(N+1)-4) t (constant), and the quartic
    drift with the published leading-order coefficient 16 t n (linear in s,
    never constant: the published value is off by -+4).
    """
    n = n_plus_1 // 2
    phi2, phi4 = _phi2(n_plus_1), _phi_graphical(2, n_plus_1)
    c = quartic_drift_coefficient(n_plus_1)
    drift2 = markov_operator(phi2, t, n_plus_1) - phi2
    p4 = markov_operator(phi4, t, n_plus_1) - phi4
    drift4 = p4 - phi2.scale(c * t)
    drift4_published = p4 - phi2.scale(16 * t * n)
    vals2 = [state(drift2, s, n_plus_1) for s in s_values]
    vals4 = [state(drift4, s, n_plus_1) for s in s_values]
    vals4_pub = [state(drift4_published, s, n_plus_1) for s in s_values]
    return {
        "s_values": list(s_values),
        "quadratic_drift": vals2,
        "quartic_drift": vals4,
        "quartic_drift_published_coefficient": vals4_pub,
        "quadratic_constant": vals2[0],
        "quartic_constant": vals4[0],
        "drift_coefficient": c,
        "s_independent": len(set(vals2)) == 1 and len(set(vals4)) == 1,
        "published_coefficient_s_independent": len(set(vals4_pub)) == 1,
    }


def state_time(t_process) -> Fraction | float:
    """State parameter pairing with particle-process time t (one half)."""
    return Fraction(t_process) / 2 if not isinstance(t_process, float) else t_process / 2


def shifted_moment(xs, n: int, a: float, k: int) -> float:
    """Level-centered power sum: sum (x_i - n + 3/4 - a/2)^{2k}.

    This is the observable whose large-scale fluctuations the residue
    covariance formulas describe (its shift centers the coordinates at the
    macroscopic half-level, matching the height-field derivation).
    """
    shift = -n + 0.75 - a / 2
    return float(sum((x + shift) ** (2 * k) for x in xs))


def casimir_power_sum(xs, n: int, a: float, k: int) -> float:
    """Power sum in the coordinates where the central elements act: sum (x_i + 1/4 + a/2)^{2k}.

    The walk/process bridge <Phi_{2k}/2>_{t/2} = E[...] holds for this shift
    (x for even-size levels, x + 1/2 for odd), as the defining-representation
    scalars confirm; the level-centered variant does not satisfy it.
    """
    shift = 0.25 + a / 2
    return float(sum((x + shift) ** (2 * k) for x in xs))


def expected_power_sum(n: int, a: float, k: int, t_process, exact: bool = False):
    """Predicted mean of the Casimir power sum at process time t:
    one half of the central element's state at parameter t/2."""
    n_plus_1 = int(2 * n + 0.5 + a)
    phi = build_phi(k, n_plus_1).poly
    val = state(phi, state_time(t_process), n_plus_1) / 2
    return val if exact else float(val)


def quartic_drift_coefficient(n_plus_1: int) -> int:
    """Exact coefficient c in P_t Phi_4 = Phi_4 + c t Phi_2 + const.

    Equals 8(N+1) - 4; the published leading-order value 16n differs from it
    by -4 (odd N+1) or +4 (even N+1) and is exact for no size.
    """
    return 8 * n_plus_1 - 4
