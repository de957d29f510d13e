import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import mean_sumsq_exact
from resd.exceptions import InvalidValueError, InvalidWindowError
from resd.window import ResidualBuffer, WindowStats, init_stats, slide

finite = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False, allow_infinity=False)


def close(a, b, rel=1e-9, abs_=1e-12):
    return math.isclose(a, b, rel_tol=rel, abs_tol=abs_)


class TestInitStats:
    def test_small_known(self):
        s = init_stats([1.0, 2.0, 3.0, 4.0])
        assert s.size == 4
        assert s.mean == 2.5
        assert s.sum_sq == pytest.approx(5.0)
        assert s.variance == pytest.approx(5.0 / 3)

    def test_constant_is_exactly_zero(self):
        s = init_stats(np.full(50, 7.3))
        assert s.sum_sq == 0.0
        assert s.mean == pytest.approx(7.3)

    def test_large_offset_against_exact(self):
        x = 1e9 + np.random.default_rng(0).normal(0, 1e-3, 100)
        m, ss = mean_sumsq_exact(x)
        s = init_stats(x)
        assert close(s.mean, m, rel=1e-15)
        assert close(s.sum_sq, ss, rel=1e-6)

    @pytest.mark.parametrize("bad", [[], [1.0]])
    def test_too_short(self, bad):
        with pytest.raises(InvalidWindowError):
            init_stats(bad)

    def test_non_finite(self):
        with pytest.raises(InvalidValueError):
            init_stats([1.0, float("nan"), 2.0])

    @given(st.lists(finite, min_size=2, max_size=60))
    def test_matches_exact_rational(self, xs):
        m, ss = mean_sumsq_exact(xs)
        s = init_stats(xs)
        scale = max(1.0, max(abs(v) for v in xs))
        assert abs(s.mean - m) <= 1e-12 * scale
        assert abs(s.sum_sq - ss) <= 1e-9 * ss + 1e-12 * scale * scale * len(xs)


class TestSlide:
    def test_single_slide(self):
        s = slide(init_stats([1.0, 2.0, 3.0]), 1.0, 10.0)
        ref = init_stats([2.0, 3.0, 10.0])
        assert s.mean == pytest.approx(ref.mean)
        assert s.sum_sq == pytest.approx(ref.sum_sq)

    def test_identity_slide_is_noop(self):
        s0 = init_stats([4.0, 1.0, 9.0, 2.0])
        s1 = slide(s0, 4.0, 4.0)
        assert s1 == s0

    def test_never_negative(self):
        s = WindowStats(3, 1.0, 0.0)
        assert slide(s, 1.0, 1.0 + 1e-17).sum_sq >= 0.0

    @settings(max_examples=200)
    @given(st.lists(finite, min_size=2, max_size=30), st.lists(finite, min_size=1, max_size=30))
    def test_sequence_matches_recompute(self, start, incoming):
        w = len(start)
        buf = list(start)
        s = init_stats(buf)
        for x in incoming:
            s = slide(s, buf[0], x)
            buf = buf[1:] + [x]
        m, ss = mean_sumsq_exact(buf)
        scale = max(1.0, max(abs(v) for v in start + incoming))
        assert abs(s.mean - m) <= 1e-9 * scale
        # recursion error grows with the squared data scale, not with ss
        assert abs(s.sum_sq - ss) <= 1e-9 * ss + 1e-10 * scale * scale * w

    def test_long_run_long_double_oracle(self):
        rng = np.random.default_rng(42)
        w = 64
        x = rng.normal(5.0, 2.0, w + 100_000)
        s = init_stats(x[:w])
        acc_sum = np.longdouble(np.sum(x[:w], dtype=np.longdouble))
        for i in range(100_000):
            s = slide(s, x[i], x[i + w])
            acc_sum += np.longdouble(x[i + w]) - np.longdouble(x[i])
        tail = x[-w:].astype(np.longdouble)
        ref_m = tail.mean()
        ref_ss = float(((tail - ref_m) ** 2).sum())
        assert close(s.mean, float(ref_m), rel=1e-12)
        assert close(s.sum_sq, ref_ss, rel=1e-9)


class TestResidualBuffer:
    def test_order_and_slots(self):
        b = ResidualBuffer([1.0, 2.0, 3.0], timestamps=["a", "b", "c"])
        assert b.push(4.0, "d") == 0
        assert b.push(5.0, "e") == 1
        np.testing.assert_array_equal(b.ordered(), [3.0, 4.0, 5.0])
        np.testing.assert_array_equal(b.slots(), [2, 0, 1])
        assert b.timestamps() == ["c", "d", "e"]
        assert b.oldest == 3.0
        assert len(b) == 3

    def test_stats_track_contents(self):
        rng = np.random.default_rng(3)
        b = ResidualBuffer(rng.normal(size=10))
        for v in rng.normal(size=37):
            b.push(float(v))
        ref = init_stats(b.ordered())
        assert b.stats.mean == pytest.approx(ref.mean, rel=1e-12, abs=1e-15)
        assert b.stats.sum_sq == pytest.approx(ref.sum_sq, rel=1e-12)

    def test_reanchor(self):
        b = ResidualBuffer([0.0, 1.0], reanchor_every=2)
        b.push(1e8)
        b.push(1.0)
        assert b.stats == init_stats(b.ordered())

    def test_rejects_non_finite(self):
        b = ResidualBuffer([0.0, 1.0])
        with pytest.raises(InvalidValueError):
            b.push(float("inf"))
        np.testing.assert_array_equal(b.ordered(), [0.0, 1.0])

    def test_timestamp_length_mismatch(self):
        with pytest.raises(InvalidWindowError):
            ResidualBuffer([0.0, 1.0], timestamps=[1])

    def test_bad_reanchor(self):
        with pytest.raises(InvalidWindowError):
            ResidualBuffer([0.0, 1.0], reanchor_every=0)
