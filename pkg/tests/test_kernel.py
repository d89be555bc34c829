import math

import numpy as np
import pytest
import scipy.sparse as sp
from scipy.sparse.linalg import expm_multiply
from scipy.special import ive

from wallgrowth.growth import _oracle_moves, _oracle_states
from wallgrowth.kernel import (
    KernelConfig,
    NotSpaceLikeError,
    QuadratureConvergenceError,
    SpaceTimePoint,
    corr_fn,
    kernel,
    precedes,
    rho1,
)
from wallgrowth.orthopoly import CharacterParam
from wallgrowth.singletime import single_time_kernel

P = SpaceTimePoint
CFG = KernelConfig()


def two_level_generator(cap=35):
    states = _oracle_states(2, cap)
    idx = {s: i for i, s in enumerate(states)}
    rows, cols, vals = [], [], []
    for i, s in enumerate(states):
        out = 0.0
        for tgt, rate in _oracle_moves(s, 2):
            if max(tgt) > cap:
                continue
            rows.append(idx[tgt])
            cols.append(i)
            vals.append(rate)
            out += rate
        rows.append(i)
        cols.append(i)
        vals.append(-out)
    q = sp.csc_matrix((vals, (rows, cols)), shape=(len(states), len(states)))
    return states, idx, q


class TestPrecedes:
    def test_examples(self):
        assert precedes((1, -0.5, 1.0), (2, -0.5, 0.5))
        assert not precedes((2, -0.5, 0.5), (1, -0.5, 1.0))
        assert not precedes((1, -0.5, 1.0), (1, -0.5, 1.0))

    def test_accepts_points(self):
        assert precedes(P(1, -0.5, 1.0, 0), P(2, -0.5, 0.5, 3))

    def test_level_ordering_uses_flat_label(self):
        # (1,+) sits above (1,-): flat labels 2 vs 1
        assert precedes((1, -0.5, 1.0), (1, 0.5, 1.0))
        assert not precedes((1, 0.5, 1.0), (1, -0.5, 1.0))


class TestPackedStart:
    def test_occupancy_is_indicator(self):
        for n, a in [(1, -0.5), (1, 0.5), (2, -0.5), (2, 0.5), (3, -0.5)]:
            for s in range(6):
                want = 1.0 if s < n else 0.0
                assert rho1(n, a, 0.0, s, CFG) == pytest.approx(want, abs=1e-8)

    def test_two_point_packed(self):
        val = corr_fn([P(1, 0.5, 0.0, 0), P(1, -0.5, 0.0, 0)], CFG)
        assert val == pytest.approx(1.0, abs=1e-8)
        val = corr_fn([P(2, -0.5, 0.0, 1), P(2, -0.5, 0.0, 0)], CFG)
        assert val == pytest.approx(1.0, abs=1e-8)


class TestExactLaws:
    def test_single_level_diagonal_is_bessel(self):
        # level (1,-) is the reflected rate-1 walk: rho1(s) = W(s) e^{-t} I_s(t)
        for t in (0.5, 1.0, 2.0):
            for s in range(10):
                want = (2 if s > 0 else 1) * ive(s, t)
                assert rho1(1, -0.5, t, s, CFG) == pytest.approx(want, abs=1e-12)

    def test_two_time_single_level_joint(self):
        t1, t2 = 0.5, 1.0
        dt = t2 - t1
        for s1 in range(3):
            for s2 in range(3):
                p1 = (2 if s1 > 0 else 1) * ive(s1, t1)
                trans = ive(s1, dt) if s2 == 0 else ive(s2 - s1, dt) + ive(s2 + s1, dt)
                got = corr_fn([P(1, -0.5, t1, s1), P(1, -0.5, t2, s2)], CFG)
                assert got == pytest.approx(p1 * trans, abs=1e-12)

    def test_cross_level_equal_time_joint(self):
        states, idx, q = two_level_generator()
        t = 0.9
        v = np.zeros(len(states))
        v[idx[(0, 0)]] = 1.0
        pt = expm_multiply(t * q, v)
        for s1 in range(3):
            for s2 in range(3):
                exact = sum(pt[idx[st]] for st in states if st[1] == s1 and st[0] == s2)
                got = corr_fn([P(1, 0.5, t, s1), P(1, -0.5, t, s2)], CFG)
                assert got == pytest.approx(exact, abs=1e-11)

    def test_cross_level_cross_time_joint(self):
        # space-like pair: upper level observed earlier
        states, idx, q = two_level_generator()
        t1, t2 = 0.6, 1.2
        v = np.zeros(len(states))
        v[idx[(0, 0)]] = 1.0
        pt1 = expm_multiply(t1 * q, v)
        for s1 in range(3):
            for s2 in range(3):
                mask = np.array([1.0 if st[1] == s1 else 0.0 for st in states])
                pt2 = expm_multiply((t2 - t1) * q, pt1 * mask)
                exact = sum(pt2[idx[st]] for st in states if st[0] == s2)
                got = corr_fn([P(1, 0.5, t1, s1), P(1, -0.5, t2, s2)], CFG)
                assert got == pytest.approx(exact, abs=1e-11)


class TestDegeneration:
    def test_equal_time_matches_single_time_route(self):
        worst = 0.0
        for t in (0.5, 1.0, 2.0):
            for n1, a1 in [(1, -0.5), (1, 0.5), (2, -0.5), (3, 0.5)]:
                for n2, a2 in [(1, -0.5), (2, 0.5), (3, -0.5)]:
                    for s1 in (0, 3, 8):
                        for s2 in (0, 3, 8):
                            st = single_time_kernel(n1, a1, s1, n2, a2, s2, t)
                            mt = kernel(P(n1, a1, t, s1), P(n2, a2, t, s2), CFG)
                            worst = max(worst, abs(st - mt))
        assert worst < 1e-10

    def test_contour_agrees_with_residue(self):
        cfg_c = KernelConfig(method="contour")
        for k1, k2 in [
            (P(1, -0.5, 1.0, 2), P(1, -0.5, 1.0, 3)),
            (P(2, 0.5, 0.5, 1), P(1, -0.5, 1.0, 0)),
            (P(1, -0.5, 1.5, 0), P(2, -0.5, 0.5, 2)),
            (P(3, -0.5, 0.7, 4), P(2, 0.5, 0.7, 1)),
        ]:
            assert kernel(k1, k2, CFG) == pytest.approx(kernel(k1, k2, cfg_c), abs=1e-8)

    def test_refinement_check_passes_at_defaults(self):
        val = kernel(P(2, -0.5, 1.0, 1), P(2, -0.5, 1.0, 1), CFG, check=True)
        assert 0 <= val <= 1


class TestSumRule:
    @pytest.mark.parametrize("n,a", [(1, -0.5), (1, 0.5), (2, -0.5)])
    @pytest.mark.parametrize("t", [0.5, 1.0])
    def test_occupation_sums_to_particle_count(self, n, a, t):
        total = sum(rho1(n, a, t, s, CFG) for s in range(201))
        assert abs(total - n) < 1e-6


class TestCorrFn:
    def test_single_point_equals_kernel(self):
        p = P(2, -0.5, 0.8, 1)
        assert corr_fn([p], CFG) == pytest.approx(kernel(p, p, CFG), abs=1e-14)

    def test_rejects_non_comparable(self):
        # lower level strictly earlier: neither order holds
        with pytest.raises(NotSpaceLikeError):
            corr_fn([P(1, -0.5, 0.5, 0), P(2, -0.5, 1.0, 1)], CFG)

    def test_rejects_too_many_points(self):
        pts = [P(1, -0.5, 1.0, s) for s in range(13)]
        with pytest.raises(ValueError):
            corr_fn(pts, CFG)

    def test_probability_bounds_and_monotonicity(self):
        t = 1.0
        for s1 in range(4):
            r1 = rho1(2, -0.5, t, s1, CFG)
            assert -1e-6 <= r1 <= 1 + 1e-6
            for s2 in range(4):
                r1b = rho1(1, -0.5, t + 0.5, s2, CFG)
                r2 = corr_fn([P(2, -0.5, t, s1), P(1, -0.5, t + 0.5, s2)], CFG)
                assert -1e-6 <= r2 <= 1 + 1e-6
                assert r2 <= min(r1, r1b) + 1e-6

    def test_same_triple_multiple_sites(self):
        # equal (n,a,t) triples are always allowed together
        val = corr_fn([P(2, -0.5, 0.0, 0), P(2, -0.5, 0.0, 1)], CFG)
        assert val == pytest.approx(1.0, abs=1e-8)


class TestAdjudication:
    def test_raw_display_variant_fails_packed_occupancy(self):
        # the unnormalized second-slot variant is kept for the validation
        # report; it provably disagrees with the packed-start law
        raw = KernelConfig(normalized_second=False)
        vals = [rho1(1, -0.5, 0.0, s, raw) for s in (1, 2)]
        assert max(abs(v) for v in vals) > 0.3  # truth is 0 at these sites

    def test_raw_variant_scales_by_norm_constant_off_diagonal(self):
        from wallgrowth.orthopoly import jacobi_norm_const

        k1, k2 = P(2, -0.5, 0.8, 1), P(1, -0.5, 1.2, 3)
        raw = KernelConfig(normalized_second=False)
        want = kernel(k1, k2, CFG) * float(jacobi_norm_const(3))
        assert kernel(k1, k2, raw) == pytest.approx(want, rel=1e-10)


class TestCharacterKernel:
    def test_nontrivial_character_methods_agree(self):
        om = CharacterParam(alpha=(0.3,), beta=(0.2,), delta=1.0)
        cfg_r = KernelConfig(omega=om)
        cfg_c = KernelConfig(omega=om, method="contour")
        for k1, k2 in [
            (P(1, -0.5, 0.5, 1), P(1, -0.5, 0.5, 1)),
            (P(2, -0.5, 0.4, 2), P(1, 0.5, 0.9, 1)),
            (P(1, 0.5, 1.0, 0), P(2, -0.5, 0.5, 1)),
        ]:
            assert kernel(k1, k2, cfg_r) == pytest.approx(kernel(k1, k2, cfg_c), abs=1e-8)

    def test_nontrivial_character_sum_rule(self):
        om = CharacterParam(alpha=(0.25,), beta=(0.15,), delta=0.8)
        cfg = KernelConfig(omega=om)
        total = sum(rho1(1, -0.5, 0.5, s, cfg) for s in range(80))
        assert total == pytest.approx(1.0, abs=1e-7)

    def test_contour_validation_rejects_encircled_zero(self):
        # beta = 0.8 puts a character zero at 1 - 1/0.48 = -1.083: inside a
        # radius-2 circle (contour invalid) but clear of [-1, 1] (residue fine)
        om = CharacterParam(beta=(0.8,), delta=1.0)
        with pytest.raises(ValueError):
            KernelConfig(omega=om, method="contour", contour_radius=2.0)
        KernelConfig(omega=om, method="residue")  # acceptable

    def test_zero_touching_interval_rejected_everywhere(self):
        om = CharacterParam(beta=(1.0,), delta=1.0)  # zero at exactly -1
        for method in ("residue", "contour"):
            with pytest.raises(ValueError):
                KernelConfig(omega=om, method=method)

    def test_config_rejects_small_radius(self):
        with pytest.raises(ValueError):
            KernelConfig(contour_radius=0.9)
