"""Event-driven continuous-time simulation of the interlaced particle system with a wall.

Levels are indexed by the flat label N = 1, 2, ... which alternates between
the (n, -1/2) and (n, +1/2) tags via N = 2n - 1/2 + a; level (n, a) carries n
particles with strictly decreasing integer positions x_1 > ... > x_n >= 0.
Each particle carries two independent rate-1/2 clocks (left / right).  A jump
attempt is blocked when it would violate interlacing against the level below;
an unblocked jump drags along the maximal chain of particles above that sit at
the minimal admissible distance; a left attempt at the wall is converted into
a right attempt.  All moves are unit steps in x (two lattice units for the
vertical coordinate y = 2x + a + 1/2).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

__all__ = [
    "LevelIndex",
    "ParticleSystem",
    "Snapshot",
    "new_densely_packed",
    "advance_to",
    "snapshot",
    "height",
    "level_of_flat",
    "flat_of_level",
    "check_interlacing",
    "generator_oracle",
    "replica_seed",
    "dump_trajectory_line",
]

_BUF = 8192


def level_of_flat(flat: int) -> tuple[int, float]:
    """Map flat level label N >= 1 to the pair (n, a)."""
    if flat < 1:
        raise ValueError("flat level label must be >= 1")
    n = (flat + 1) // 2
    a = -0.5 if flat % 2 == 1 else 0.5
    return n, a


def flat_of_level(n: int, a: float) -> int:
    """Map (n, a) to the flat level label 2n - 1/2 + a."""
    flat = int(2 * n - 0.5 + a)
    if flat < 1:
        raise ValueError(f"invalid level ({n}, {a})")
    return flat


@dataclass(frozen=True)
class LevelIndex:
    n: int
    a: float

    def __post_init__(self):
        if self.n < 1 or self.a not in (-0.5, 0.5):
            raise ValueError(f"invalid level ({self.n}, {self.a})")

    @property
    def flat(self) -> int:
        return flat_of_level(self.n, self.a)


class ParticleSystem:
    """Live Markov-chain state: one position list per level, plus the RNG stream.

    A system is confined to one worker at a time; replicas each get their own
    instance and seed stream.
    """

    __slots__ = (
        "levels",
        "clock",
        "n_max",
        "_rng",
        "_pending",
        "_lookup",
        "_exp_buf",
        "_exp_pos",
        "_idx_buf",
        "_idx_pos",
    )

    def __init__(self, levels: list[list[int]], seed_seq: np.random.SeedSequence):
        self.levels = levels
        self.clock = 0.0
        self.n_max = len(levels)
        self._rng = np.random.Generator(np.random.PCG64(seed_seq))
        self._pending: float | None = None
        self._lookup = [(l, k) for l, lev in enumerate(levels) for k in range(len(lev))]
        self._exp_buf = np.empty(0)
        self._exp_pos = 0
        self._idx_buf = np.empty(0, dtype=np.int64)
        self._idx_pos = 0

    @property
    def total_rate(self) -> float:
        """Total jump rate: two rate-1/2 clocks per particle."""
        return float(len(self._lookup))

    def _next_exp(self) -> float:
        if self._exp_pos >= len(self._exp_buf):
            self._exp_buf = self._rng.standard_exponential(_BUF)
            self._exp_pos = 0
        v = self._exp_buf[self._exp_pos]
        self._exp_pos += 1
        return float(v)

    def _next_idx(self) -> int:
        if self._idx_pos >= len(self._idx_buf):
            self._idx_buf = self._rng.integers(0, 2 * len(self._lookup), size=_BUF)
            self._idx_pos = 0
        v = self._idx_buf[self._idx_pos]
        self._idx_pos += 1
        return int(v)


@dataclass(frozen=True)
class Snapshot:
    """Deep, immutable copy of the particle positions at a fixed time."""

    time: float
    positions: tuple[tuple[int, ...], ...]

    def level(self, n: int, a: float) -> tuple[int, ...]:
        return self.positions[flat_of_level(n, a) - 1]


def new_densely_packed(n_max: int, seed: int) -> ParticleSystem:
    """Fresh system with every level packed against the wall: x_k = n - k."""
    if n_max < 1:
        raise ValueError("need at least one level")
    levels = []
    for flat in range(1, n_max + 1):
        n, _ = level_of_flat(flat)
        levels.append([n - k for k in range(1, n + 1)])
    return ParticleSystem(levels, np.random.SeedSequence(seed))


def replica_seed(master_seed: int, replica: int) -> np.random.SeedSequence:
    """Independent, individually reproducible stream for one replica."""
    return np.random.SeedSequence(entropy=master_seed, spawn_key=(replica,))


def _attempt_right(levels: list[list[int]], l: int, k: int) -> bool:
    """Apply a right attempt at level index l (0-based), particle k (0-based)."""
    level = levels[l]
    if k > 0:
        below = levels[l - 1]
        if l % 2 == 1:  # (n,+): bound is x_k + 1 == x_{k-1} one level down
            if level[k] + 1 == below[k - 1]:
                return False
        else:  # (n,-): bound is x_k == x_{k-1} on the (n-1,+) level
            if level[k] == below[k - 1]:
                return False
    chain = [(l, k)]
    cur = l
    while cur + 1 < len(levels):
        up = levels[cur + 1]
        here = levels[cur][k]
        if cur % 2 == 0:  # (n,-) -> (n,+): pushed if sitting at the same x
            if up[k] != here:
                break
        else:  # (n,+) -> (n+1,-): pushed if sitting at x + 1
            if up[k] != here + 1:
                break
        chain.append((cur + 1, k))
        cur += 1
    for lv, kk in chain:
        levels[lv][kk] += 1
    return True


def _attempt_left(levels: list[list[int]], l: int, k: int) -> bool:
    level = levels[l]
    n = len(level)
    if l % 2 == 0 and k == n - 1 and level[k] == 0:
        return _attempt_right(levels, l, k)  # reflected at the wall
    if l % 2 == 1:  # (n,+): blocked when level with the (n,-) particle below
        if level[k] == levels[l - 1][k]:
            return False
    else:  # (n,-): blocked when one above the (n-1,+) particle below
        if l > 0 and k < n - 1 and level[k] == levels[l - 1][k] + 1:
            return False
    chain = [(l, k)]
    cur, kk = l, k
    while cur + 1 < len(levels):
        up = levels[cur + 1]
        if kk + 1 >= len(up):
            break
        here = levels[cur][kk]
        if cur % 2 == 0:  # (n,-) -> (n,+): dragged if sitting at x - 1
            if up[kk + 1] != here - 1:
                break
        else:  # (n,+) -> (n+1,-): dragged if sitting at the same x
            if up[kk + 1] != here:
                break
        chain.append((cur + 1, kk + 1))
        cur, kk = cur + 1, kk + 1
    for lv, kx in chain:
        levels[lv][kx] -= 1
    return True


def apply_event(levels: list[list[int]], l: int, k: int, direction: int) -> bool:
    """Apply one clock ring (direction 0 = right, 1 = left); returns whether anything moved."""
    if direction == 0:
        return _attempt_right(levels, l, k)
    return _attempt_left(levels, l, k)


def advance_to(
    sys: ParticleSystem,
    t_target: float,
    event_log: list | None = None,
    validate: bool = False,
) -> ParticleSystem:
    """Run the event-driven chain from the current clock up to t_target (in place).

    The absolute time of the next ring is drawn once and kept pending across
    calls, so trajectories do not depend on how the advance is split into
    steps.  `event_log`, if given, collects (time, level, particle, direction)
    tuples; `validate` re-checks interlacing after every event.
    """
    if t_target < sys.clock:
        raise ValueError(f"target time {t_target} precedes current clock {sys.clock}")
    rate = len(sys._lookup)
    if sys._pending is None:
        sys._pending = sys.clock + sys._next_exp() / rate
    while sys._pending <= t_target:
        sys.clock = sys._pending
        r = sys._next_idx()
        l, k = sys._lookup[r >> 1]
        apply_event(sys.levels, l, k, r & 1)
        if event_log is not None:
            event_log.append((sys.clock, l, k, r & 1))
        if validate:
            check_interlacing(sys.levels)
        sys._pending = sys.clock + sys._next_exp() / rate
    sys.clock = t_target
    return sys


def snapshot(sys: ParticleSystem) -> Snapshot:
    return Snapshot(time=sys.clock, positions=tuple(tuple(lev) for lev in sys.levels))


def check_interlacing(levels) -> None:
    """Raise AssertionError unless every within- and between-level constraint holds."""
    for l, lev in enumerate(levels):
        n_expect = (l + 2) // 2
        assert len(lev) == n_expect, f"level {l + 1} has wrong particle count"
        for k in range(len(lev) - 1):
            assert lev[k] > lev[k + 1], f"level {l + 1} not strictly decreasing"
        assert lev[-1] >= 0, f"level {l + 1} crossed the wall"
        if l == 0:
            continue
        below = levels[l - 1]
        if l % 2 == 1:  # (n,-) -> (n,+)
            for k in range(len(lev)):
                assert lev[k] >= below[k], f"levels {l}/{l + 1}: lower bound broken at {k}"
                if k >= 1:
                    assert lev[k] < below[k - 1], f"levels {l}/{l + 1}: upper bound broken at {k}"
        else:  # (n,+) -> (n+1,-)
            for k in range(len(below)):
                assert lev[k] > below[k], f"levels {l}/{l + 1}: lower bound broken at {k}"
                assert lev[k + 1] <= below[k], f"levels {l}/{l + 1}: upper bound broken at {k}"


def height(snap: Snapshot, u: int, flat: int) -> int:
    """Number of particles on flat level N whose vertical coordinate is >= u."""
    n, a = level_of_flat(flat)
    xs = snap.positions[flat - 1]
    shift = int(a + 0.5)  # y = 2x + a + 1/2
    return sum(1 for x in xs if 2 * x + shift >= u)


def dump_trajectory_line(snap: Snapshot) -> str:
    """One JSON-lines trajectory record for a snapshot."""
    levels = []
    for flat0, xs in enumerate(snap.positions):
        n, a = level_of_flat(flat0 + 1)
        levels.append({"n": n, "a": "+" if a > 0 else "-", "x": list(xs)})
    return json.dumps({"t": snap.time, "levels": levels})


# --- exact-law oracle -------------------------------------------------------
#
# Independent reimplementation of the block/push/reflect rules as an explicit
# rate matrix on an enumerated (truncated) state space, exponentiated with
# scipy.  Used to validate the Monte Carlo law for one and two levels.


class StateSpaceTooLarge(ValueError):
    pass


def _oracle_states(n_max: int, x_cap: int) -> list[tuple[int, ...]]:
    if n_max == 1:
        return [(x,) for x in range(x_cap + 1)]
    if n_max == 2:
        return [(x0, x1) for x0 in range(x_cap + 1) for x1 in range(x0, x_cap + 1)]
    raise StateSpaceTooLarge("oracle supports n_max <= 2")


def _oracle_moves(state: tuple[int, ...], n_max: int):
    """Yield (target_state, rate) pairs; blocked rings are dropped (self-loops)."""
    if n_max == 1:
        (x,) = state
        yield (x + 1,), 0.5  # right clock
        if x == 0:
            yield (x + 1,), 0.5  # left clock reflected into a right jump
        else:
            yield (x - 1,), 0.5
        return
    x0, x1 = state
    # level (1,-) particle, right clock: pushes the (1,+) particle sitting on it
    if x1 == x0:
        yield (x0 + 1, x1 + 1), 0.5
    else:
        yield (x0 + 1, x1), 0.5
    # level (1,-) particle, left clock: reflected at the wall, else free
    if x0 == 0:
        if x1 == x0:
            yield (x0 + 1, x1 + 1), 0.5
        else:
            yield (x0 + 1, x1), 0.5
    else:
        yield (x0 - 1, x1), 0.5
    # level (1,+) particle, right clock: never blocked, nothing above
    yield (x0, x1 + 1), 0.5
    # level (1,+) particle, left clock: blocked when level with (1,-)
    if x1 > x0:
        yield (x0, x1 - 1), 0.5


def generator_oracle(n_max: int, x_cap: int, t: float, max_states: int = 10_000):
    """Distribution at time t from the packed start, via the matrix exponential.

    Returns (states, probabilities).  Moves beyond the cap are frozen, so the
    truncation error is the escape mass, negligible when x_cap >> t.
    """
    import scipy.sparse as sp
    from scipy.sparse.linalg import expm_multiply

    states = _oracle_states(n_max, x_cap)
    if len(states) > max_states:
        raise StateSpaceTooLarge(f"{len(states)} states exceeds cap {max_states}")
    index = {s: i for i, s in enumerate(states)}
    rows, cols, vals = [], [], []
    for i, s in enumerate(states):
        out = 0.0
        for target, rate in _oracle_moves(s, n_max):
            if max(target) > x_cap:
                continue  # frozen at the truncation boundary
            j = index[target]
            rows.append(j)
            cols.append(i)
            vals.append(rate)
            out += rate
        rows.append(i)
        cols.append(i)
        vals.append(-out)
    q = sp.csc_matrix((vals, (rows, cols)), shape=(len(states), len(states)))
    packed = tuple(0 for _ in range(n_max))
    v = np.zeros(len(states))
    v[index[packed]] = 1.0
    probs = expm_multiply(t * q, v)
    return states, probs
