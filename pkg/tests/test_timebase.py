"""Clock, sync-classification, and error-budget arithmetic."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from slsync.errors import ConfigError
from slsync.timebase import (
    NS_PER_MS,
    NS_PER_S,
    DriftingClock,
    SyncBudget,
    SyncLevel,
    classify_sync,
    delta_sync_ns,
    flight_time_ns,
    max_legacy_range_m,
    total_sync_error_ns,
)


class TestDriftingClock:
    def test_identity_clock(self):
        c = DriftingClock()
        for t in (0, 1, 12345, 10**15):
            assert c.local_time(t) == t

    def test_positive_drift_10ppm_over_500s(self):
        c = DriftingClock(0, 10.0, 0)
        assert c.local_time(500 * NS_PER_S) == 500 * NS_PER_S + 5 * NS_PER_MS

    def test_negative_drift_cancels_offset(self):
        # -5 ppm over 200 s exactly eats a +1 ms head start
        c = DriftingClock(NS_PER_MS, -5.0, 100 * NS_PER_S)
        assert c.local_time(300 * NS_PER_S) == 300 * NS_PER_S

    def test_resync_is_exact(self):
        c = DriftingClock(123_456, 33.3, 77)
        t = 5_000_000_001
        c2 = c.resync(t, 42)
        assert c2.local_time(t) - t == 42

    def test_resync_to_zero_roundtrip(self):
        c = DriftingClock(99, -12.5, 3)
        t = 10**12 + 7
        assert c.resync(t, 0).local_time(t) == t

    def test_adjust_shifts_reading(self):
        c = DriftingClock(10, 5.0, 0)
        t = 10**9
        c2 = c.adjust(t, -25)
        assert c2.local_time(t) == c.local_time(t) - 25

    def test_extreme_drift_rejected(self):
        with pytest.raises(ConfigError):
            DriftingClock(0, 1e6, 0)

    @given(
        st.integers(min_value=-10**6, max_value=10**6),
        st.floats(min_value=-100.0, max_value=100.0),
        st.integers(min_value=0, max_value=10**13),
        st.integers(min_value=0, max_value=10**13),
    )
    @settings(max_examples=200)
    def test_drift_linearity(self, offset, ppm, t, dt):
        c = DriftingClock(offset, ppm, 0)
        growth = c.local_time(t + dt) - c.local_time(t)
        ideal = dt + ppm * dt / 1e6
        assert abs(growth - ideal) <= 1.0 + 1e-6 * abs(ideal)

    @given(
        st.integers(min_value=-10**6, max_value=10**6),
        st.floats(min_value=-100.0, max_value=100.0),
        st.integers(min_value=0, max_value=10**13),
    )
    @settings(max_examples=200)
    def test_global_for_local_inverts(self, offset, ppm, t):
        c = DriftingClock(offset, ppm, 0)
        local = c.local_time(t)
        g = c.global_for_local(local)
        assert c.local_time(g) >= local
        assert c.local_time(g - 1) < local

    def test_monotone_under_negative_drift(self):
        c = DriftingClock(0, -500.0, 0)
        prev = -1
        for t in range(0, 5_000_000, 997):
            cur = c.local_time(t)
            assert cur >= prev
            prev = cur


class TestClassifySync:
    T_CP = 4_690
    T_SLSW = 5 * NS_PER_MS

    def test_zero_is_fine(self):
        assert classify_sync(0, self.T_CP, self.T_SLSW) is SyncLevel.FINE

    @pytest.mark.parametrize(
        "delta,expected",
        [
            (4_689, SyncLevel.FINE),
            (4_690, SyncLevel.COARSE),          # boundary -> coarse
            (1 * NS_PER_MS, SyncLevel.COARSE),
            (5 * NS_PER_MS, SyncLevel.COARSE),  # upper boundary inclusive
            (5 * NS_PER_MS + 1, SyncLevel.OUT_OF_SYNC),
            (6 * NS_PER_MS, SyncLevel.OUT_OF_SYNC),
        ],
    )
    def test_partition(self, delta, expected):
        assert classify_sync(delta, self.T_CP, self.T_SLSW) is expected

    def test_partition_is_contiguous(self):
        # walking delta upward never goes back to a finer level
        order = [SyncLevel.FINE, SyncLevel.COARSE, SyncLevel.OUT_OF_SYNC]
        last = 0
        for delta in range(0, 6 * NS_PER_MS, 9973):
            level = classify_sync(delta, self.T_CP, self.T_SLSW)
            assert order.index(level) >= last
            last = order.index(level)

    def test_bad_bounds_rejected(self):
        with pytest.raises(ConfigError):
            classify_sync(0, 10, 5)
        with pytest.raises(ConfigError):
            classify_sync(-1, self.T_CP, self.T_SLSW)


class TestBudget:
    def test_all_zero(self):
        assert total_sync_error_ns(SyncBudget()) == 0

    def test_five_ppm_pair_over_500s_reaches_5ms(self):
        b = SyncBudget(x_src_ppm=5.0, x_dst_ppm=5.0, t_coarse_ns=500 * NS_PER_S)
        assert total_sync_error_ns(b) == 5 * NS_PER_MS

    def test_component_sum(self):
        b = SyncBudget(
            eps_coarse_ns=NS_PER_MS,
            x_src_ppm=10.0,
            x_dst_ppm=10.0,
            t_coarse_ns=100 * NS_PER_S,
            t_d_ns=33_300,
        )
        assert total_sync_error_ns(b) == NS_PER_MS + 2 * NS_PER_MS + 33_300

    @given(
        st.integers(min_value=0, max_value=10**7),
        st.floats(min_value=0, max_value=50),
        st.floats(min_value=0, max_value=50),
        st.integers(min_value=0, max_value=10**12),
        st.integers(min_value=0, max_value=10**6),
    )
    @settings(max_examples=100)
    def test_monotone_in_every_field(self, eps, xs, xd, tc, td):
        base = SyncBudget(eps, xs, xd, tc, td)
        v = total_sync_error_ns(base)
        assert total_sync_error_ns(SyncBudget(eps + 1, xs, xd, tc, td)) >= v
        assert total_sync_error_ns(SyncBudget(eps, xs + 1, xd, tc, td)) >= v
        assert total_sync_error_ns(SyncBudget(eps, xs, xd + 1, tc, td)) >= v
        assert total_sync_error_ns(SyncBudget(eps, xs, xd, tc + 10**9, td)) >= v
        assert total_sync_error_ns(SyncBudget(eps, xs, xd, tc, td + 1)) >= v

    def test_invalid_budget(self):
        with pytest.raises(ConfigError):
            SyncBudget(eps_coarse_ns=-1)
        with pytest.raises(ConfigError):
            SyncBudget(t_cp_ns=10 * NS_PER_MS, t_slsw_ns=5 * NS_PER_MS)


class TestRangeAndFlight:
    def test_normal_cp_gives_legacy_limit(self):
        # one-way flight filling a 4.69 us cyclic prefix
        assert max_legacy_range_m(4_690) == pytest.approx(1406.0, abs=0.5)

    def test_zero_cp(self):
        assert max_legacy_range_m(0) == 0.0

    def test_ten_microseconds(self):
        assert max_legacy_range_m(10_000) == pytest.approx(2997.92458, rel=1e-9)

    @pytest.mark.parametrize("d,expect", [(0.0, 0), (1406.0, 4690), (299.792458, 1000)])
    def test_flight_time(self, d, expect):
        assert abs(flight_time_ns(d) - expect) <= 1

    def test_flight_rejects_negative(self):
        with pytest.raises(ConfigError):
            flight_time_ns(-1.0)


def test_delta_sync_is_symmetric_absolute():
    a = DriftingClock(1000, 3.0, 0)
    b = DriftingClock(-500, -3.0, 0)
    t = 10**10
    assert delta_sync_ns(a, b, t) == delta_sync_ns(b, a, t) >= 0
