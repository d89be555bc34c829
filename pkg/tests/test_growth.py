import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wallgrowth.growth import (
    ParticleSystem,
    advance_to,
    apply_event,
    check_interlacing,
    dump_trajectory_line,
    flat_of_level,
    generator_oracle,
    height,
    level_of_flat,
    new_densely_packed,
    replica_seed,
    snapshot,
)


class TestLevels:
    def test_flat_roundtrip(self):
        assert level_of_flat(1) == (1, -0.5)
        assert level_of_flat(2) == (1, 0.5)
        assert level_of_flat(3) == (2, -0.5)
        assert level_of_flat(4) == (2, 0.5)
        for flat in range(1, 12):
            n, a = level_of_flat(flat)
            assert flat_of_level(n, a) == flat

    def test_packed_small(self):
        sys1 = new_densely_packed(1, seed=0)
        assert sys1.levels == [[0]]
        sys4 = new_densely_packed(4, seed=0)
        assert sys4.levels == [[0], [0], [1, 0], [1, 0]]

    def test_packed_interlaces(self):
        for n_max in (1, 3, 7, 12):
            check_interlacing(new_densely_packed(n_max, seed=1).levels)

    def test_total_rate_counts_particles(self):
        sys = new_densely_packed(6, seed=0)
        assert sys.total_rate == sum((l + 2) // 2 for l in range(6))


class TestDynamics:
    def test_interlacing_preserved_along_trajectory(self):
        sys = new_densely_packed(5, seed=42)
        advance_to(sys, 8.0, validate=True)  # raises on any violation

    @given(st.integers(min_value=0, max_value=2**32 - 1), st.integers(min_value=1, max_value=6))
    @settings(max_examples=25, deadline=None)
    def test_interlacing_property(self, seed, n_max):
        sys = new_densely_packed(n_max, seed=seed)
        advance_to(sys, 3.0, validate=True)

    def test_determinism(self):
        a = new_densely_packed(4, seed=123)
        b = new_densely_packed(4, seed=123)
        advance_to(a, 5.0)
        advance_to(b, 5.0)
        assert snapshot(a) == snapshot(b)

    def test_schedule_invariance(self):
        a = new_densely_packed(4, seed=9)
        b = new_densely_packed(4, seed=9)
        advance_to(a, 5.0)
        for t in (0.7, 1.3, 2.2, 5.0):
            advance_to(b, t)
        assert snapshot(a) == snapshot(b)

    def test_rejects_backward_time(self):
        sys = new_densely_packed(2, seed=0)
        advance_to(sys, 1.0)
        with pytest.raises(ValueError):
            advance_to(sys, 0.5)

    def test_autonomy_of_lower_levels(self):
        # Replaying only the level <= 3 events of a 5-level run into a fresh
        # 3-level system must reproduce those levels exactly: blocking looks
        # down, pushing propagates up, so the truncation is exact.
        big = new_densely_packed(5, seed=777)
        log: list = []
        advance_to(big, 6.0, event_log=log)
        small = new_densely_packed(3, seed=0).levels
        for _, l, k, direction in log:
            if l < 3:
                apply_event(small, l, k, direction)
        assert small == big.levels[:3]
        check_interlacing(small)

    def test_wall_reflection_moves_right(self):
        levels = [[0]]
        moved = apply_event(levels, 0, 0, 1)  # left ring at the wall
        assert moved and levels == [[1]]

    def test_push_chain_right(self):
        # packed column: a right move at the bottom drags the whole chain
        levels = [[0], [0], [1, 0], [1, 0]]
        apply_event(levels, 0, 0, 0)
        assert levels == [[1], [1], [2, 0], [2, 0]]
        check_interlacing(levels)

    def test_left_block_against_lower_level(self):
        # (1,+) sitting on top of (1,-) cannot move left
        levels = [[0], [0]]
        moved = apply_event(levels, 1, 0, 1)
        assert not moved and levels == [[0], [0]]

    def test_left_push_drags_diagonal(self):
        # left move of x^{1,+} drags the index-2 particle of (2,-) sitting at
        # the same x (the diagonal chain increments the index per level)
        levels = [[0], [1], [2, 1]]
        check_interlacing(levels)
        moved = apply_event(levels, 1, 0, 1)  # left ring at (1,+)
        assert moved
        check_interlacing(levels)
        assert levels == [[0], [0], [2, 0]]


class TestSnapshotsAndHeight:
    def test_snapshot_at_zero_is_packed(self):
        sys = new_densely_packed(3, seed=5)
        snap = snapshot(sys)
        assert snap.time == 0.0
        assert snap.positions == ((0,), (0,), (1, 0))
        assert snap.level(2, -0.5) == (1, 0)

    def test_snapshot_is_deep(self):
        sys = new_densely_packed(2, seed=5)
        snap = snapshot(sys)
        advance_to(sys, 4.0)
        assert snap.positions == ((0,), (0,))

    def test_repeated_snapshot_equal(self):
        sys = new_densely_packed(2, seed=5)
        advance_to(sys, 1.0)
        assert snapshot(sys) == snapshot(sys)

    def test_height_packed_examples(self):
        snap = snapshot(new_densely_packed(3, seed=0))
        assert height(snap, u=0, flat=3) == 2
        assert height(snap, u=3, flat=3) == 0
        for flat in (1, 2, 3):
            n, _ = level_of_flat(flat)
            assert height(snap, u=0, flat=flat) == n

    def test_trajectory_record_schema(self):
        import json

        snap = snapshot(new_densely_packed(3, seed=0))
        rec = json.loads(dump_trajectory_line(snap))
        assert set(rec) == {"t", "levels"}
        assert rec["levels"][0] == {"n": 1, "a": "-", "x": [0]}
        assert rec["levels"][1]["a"] == "+"


class TestGeneratorOracle:
    def test_delta_at_zero(self):
        states, probs = generator_oracle(2, x_cap=6, t=0.0)
        packed = states.index((0, 0))
        assert probs[packed] == pytest.approx(1.0, abs=1e-14)

    def test_probabilities_sum_to_one(self):
        for n_max in (1, 2):
            _, probs = generator_oracle(n_max, x_cap=25, t=1.0)
            assert probs.sum() == pytest.approx(1.0, abs=1e-10)
            assert np.all(probs >= -1e-14)

    def test_single_level_is_reflected_bessel_walk(self):
        # closed form: P(x=s) = W(s) e^{-t} I_s(t)
        from scipy.special import ive

        t = 1.3
        states, probs = generator_oracle(1, x_cap=40, t=t)
        for s in range(8):
            want = (2 if s > 0 else 1) * ive(s, t)
            assert probs[states.index((s,))] == pytest.approx(want, abs=1e-10)

    def test_second_moment_is_t(self):
        # state identity E[x(t)^2] = t for the single-level walk
        states, probs = generator_oracle(1, x_cap=30, t=1.0)
        m2 = sum(p * s[0] ** 2 for s, p in zip(states, probs))
        assert m2 == pytest.approx(1.0, abs=1e-6)

    def test_rejects_oversized_space(self):
        from wallgrowth.growth import StateSpaceTooLarge

        with pytest.raises(StateSpaceTooLarge):
            generator_oracle(2, x_cap=400, t=1.0)

    def test_monte_carlo_matches_oracle_two_levels(self):
        # chi-squared at the 1% level, pooling states with small expectation
        t, reps = 0.8, 20_000
        states, probs = generator_oracle(2, x_cap=12, t=t)
        counts = {}
        for r in range(reps):
            sys = ParticleSystem(new_densely_packed(2, 0).levels, replica_seed(2024, r))
            advance_to(sys, t)
            key = (sys.levels[0][0], sys.levels[1][0])
            counts[key] = counts.get(key, 0) + 1
        merged: list[tuple[float, int]] = []
        small_e, small_o = 0.0, 0
        for s, p in zip(states, probs):
            e, o = p * reps, counts.get(s, 0)
            if e < 5:
                small_e += e
                small_o += o
            else:
                merged.append((e, o))
        merged.append((small_e, small_o))
        chi2 = sum((o - e) ** 2 / e for e, o in merged if e > 0)
        from scipy.stats import chi2 as chi2_dist

        assert chi2 < chi2_dist.ppf(0.99, df=len(merged) - 1)

    def test_monte_carlo_second_moment(self):
        reps, t = 20_000, 1.0
        vals = np.empty(reps)
        for r in range(reps):
            sys = ParticleSystem([[0]], replica_seed(7, r))
            advance_to(sys, t)
            vals[r] = sys.levels[0][0] ** 2
        se = vals.std(ddof=1) / math.sqrt(reps)
        assert abs(vals.mean() - t) < 3 * se
