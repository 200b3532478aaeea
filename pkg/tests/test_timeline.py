import pytest

from puikit.errors import InvalidSpecError, TimelineError
from puikit.timeline import (
    EffectConstants,
    StatusSegment,
    TreatmentInterval,
    layer_intervals,
    mrf_offset,
    relative_status,
    rows_from_segments,
    segment_offset,
)

C = EffectConstants()


def iv(drug, start, end, status, sid="s1"):
    return TreatmentInterval(sid, drug, start, end, status)


class TestLayerIntervals:
    def test_single_segment(self):
        segs = layer_intervals([iv("statin", 0, 10, 1)], [iv("antihypertensive", 0, 10, 0)], 10)
        assert segs == [StatusSegment(0, 10, 1, 0)]

    def test_breakpoints_from_both_drugs(self):
        statin = [iv("statin", 0, 5, 0), iv("statin", 5, 10, 1)]
        ah = [iv("antihypertensive", 0, 7, 1), iv("antihypertensive", 7, 10, 0)]
        segs = layer_intervals(statin, ah, 10)
        assert [(s.start, s.end, s.a_stat, s.a_ah) for s in segs] == [
            (0, 5, 0, 1),
            (5, 7, 1, 1),
            (7, 10, 1, 0),
        ]

    def test_equal_status_segments_merge(self):
        statin = [iv("statin", 0, 5, 1), iv("statin", 5, 10, 1)]
        ah = [iv("antihypertensive", 0, 10, 0)]
        segs = layer_intervals(statin, ah, 10)
        assert len(segs) == 1
        assert (segs[0].start, segs[0].end) == (0, 10)

    def test_overlap_rejected(self):
        statin = [iv("statin", 0, 6, 1), iv("statin", 5, 10, 0)]
        with pytest.raises(TimelineError):
            layer_intervals(statin, [iv("antihypertensive", 0, 10, 0)], 10)

    def test_gap_rejected(self):
        statin = [iv("statin", 0, 4, 1), iv("statin", 5, 10, 0)]
        with pytest.raises(TimelineError):
            layer_intervals(statin, [iv("antihypertensive", 0, 10, 0)], 10)

    def test_wrong_followup_end_rejected(self):
        with pytest.raises(TimelineError):
            layer_intervals([iv("statin", 0, 8, 0)], [iv("antihypertensive", 0, 10, 0)], 10)

    def test_partition_preserved(self):
        statin = [iv("statin", 0, 3, 1), iv("statin", 3, 8, 0), iv("statin", 8, 10, 1)]
        ah = [iv("antihypertensive", 0, 2, 0), iv("antihypertensive", 2, 10, 1)]
        segs = layer_intervals(statin, ah, 10)
        assert segs[0].start == 0 and segs[-1].end == 10
        for a, b in zip(segs, segs[1:]):
            assert a.end == b.start
            assert (a.a_stat, a.a_ah) != (b.a_stat, b.a_ah)


class TestRelativeStatus:
    def test_on_at_baseline_and_still_on(self):
        segs = relative_status([StatusSegment(0, 10, 1, 0)], 1, 0)
        assert segs[0].ar_stat == 0

    def test_started_during_followup(self):
        segs = relative_status([StatusSegment(0, 10, 0, 1)], 0, 0)
        assert segs[0].ar_ah == 1

    def test_stopped_during_followup(self):
        segs = relative_status([StatusSegment(0, 10, 0, 0)], 0, 1)
        assert segs[0].ar_ah == -1

    def test_invalid_baseline(self):
        with pytest.raises(InvalidSpecError):
            relative_status([StatusSegment(0, 10, 0, 0)], 2, 0)


class TestSegmentOffset:
    def test_absolute_statin_only(self):
        assert segment_offset(StatusSegment(0, 1, 1, 0), C, "absolute") == -0.3102413

    def test_relative_null_when_on_baseline_strategy(self):
        seg = StatusSegment(0, 1, 1, 1, ar_stat=0, ar_ah=0)
        assert segment_offset(seg, C, "relative") == 0.0

    def test_relative_antihypertensive_start(self):
        seg = StatusSegment(0, 1, 0, 1, ar_stat=0, ar_ah=1)
        assert segment_offset(seg, C, "relative") == -0.3245535

    def test_unknown_mode(self):
        with pytest.raises(InvalidSpecError):
            segment_offset(StatusSegment(0, 1, 0, 0), C, "both")

    def test_absolute_minus_relative_is_baseline_constant(self):
        for a_stat0, a_ah0 in [(0, 0), (1, 0), (0, 1), (1, 1)]:
            for a_stat, a_ah in [(0, 0), (1, 0), (0, 1), (1, 1)]:
                seg = relative_status([StatusSegment(0, 1, a_stat, a_ah)], a_stat0, a_ah0)[0]
                diff = segment_offset(seg, C, "absolute") - segment_offset(seg, C, "relative")
                assert diff == pytest.approx(a_stat0 * C.b_stat + a_ah0 * C.b_ah, abs=1e-15)


class TestMrfOffset:
    def test_zero_at_targets(self):
        assert mrf_offset(120, 25, 2.6, C) == 0.0

    def test_zero_below_targets(self):
        assert mrf_offset(110, 20, 2.0, C) == 0.0

    def test_above_target_arithmetic(self):
        expected = 20 * C.b_sbp + 5 * C.b_bmi + 2.4 * C.b_nonhdl
        assert mrf_offset(140, 30, 5.0, C) == pytest.approx(expected, abs=1e-12)
        assert mrf_offset(140, 30, 5.0, C) == pytest.approx(1.05999, abs=1e-5)

    def test_monotone_and_convex_in_each_factor(self):
        import numpy as np

        grid = np.linspace(100, 200, 41)
        vals = [mrf_offset(s, 25, 2.6, C) for s in grid]
        assert all(b >= a for a, b in zip(vals, vals[1:]))
        second = np.diff(vals, 2)
        assert np.all(second >= -1e-12)

    def test_non_finite_rejected(self):
        with pytest.raises(InvalidSpecError):
            mrf_offset(float("nan"), 25, 2.6, C)


class TestRowsFromSegments:
    COV = {"age": 60.0}

    def test_single_segment_event(self):
        rows = rows_from_segments("s1", self.COV, [StatusSegment(0, 10, 1, 0)], 10, True, C, "absolute")
        assert len(rows) == 1
        assert rows[0].event is True
        assert rows[0].offset == C.b_stat

    def test_censored_multi_segment(self):
        segs = relative_status(
            [StatusSegment(0, 3, 0, 0), StatusSegment(3, 7, 0, 1), StatusSegment(7, 10, 0, 0)], 0, 0
        )
        rows = rows_from_segments("s1", self.COV, segs, 10, False, C, "relative")
        assert [r.event for r in rows] == [False, False, False]
        assert [(r.tstart, r.tstop) for r in rows] == [(0, 3), (3, 7), (7, 10)]
        assert [r.offset for r in rows] == [0.0, C.b_ah, 0.0]

    def test_truncation_at_event_time(self):
        segs = [StatusSegment(0, 3, 0, 0), StatusSegment(3, 10, 0, 1)]
        rows = rows_from_segments("s1", self.COV, segs, 5.5, True, C, "absolute")
        assert [(r.tstart, r.tstop) for r in rows] == [(0, 3), (3, 5.5)]
        assert rows[-1].event is True

    def test_event_outside_followup(self):
        with pytest.raises(TimelineError):
            rows_from_segments("s1", self.COV, [StatusSegment(0, 10, 0, 0)], 12, True, C, "absolute")

    def test_extra_offset_added_per_row(self):
        rows = rows_from_segments("s1", self.COV, [StatusSegment(0, 10, 0, 0)], 10, False, C,
                                  "absolute", extra_offset=0.25)
        assert rows[0].offset == 0.25


def test_constants_validation():
    with pytest.raises(InvalidSpecError):
        EffectConstants(b_ah=float("inf"))
    with pytest.raises(InvalidSpecError):
        EffectConstants(sbp_target=-1.0)
