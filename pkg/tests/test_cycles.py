import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fleetdeg.cycles import (
    FULL,
    HALF,
    CycleLedger,
    CycleRecord,
    ExponentialStress,
    RationalStress,
    current_switching_point,
    default_bin_edges,
    dod_histogram,
    push_soc,
    rainflow_offline,
    stress,
    total_degradation,
    tracker_init,
    turning_points,
)
from fleetdeg.errors import DomainError, NumericalDomainError, ValidationError


def stream(trace, capacity):
    """Run a tracker over ``trace``; return (online records, residual records)."""
    tr = tracker_init(trace[0])
    online = []
    for t, s in enumerate(trace[1:], start=1):
        online += push_soc(tr, s, t, capacity)
    return online, tr.residual(len(trace) - 1, capacity), tr


def multiset(records):
    return Counter((r.kind, r.amplitude) for r in records)


soc_traces = st.integers(1, 20).flatmap(
    lambda cap: st.tuples(st.just(cap), st.lists(st.integers(0, cap), min_size=2, max_size=200))
)


class TestTracker:
    def test_init(self):
        assert current_switching_point(tracker_init(5)) == 5
        assert current_switching_point(tracker_init(0)) == 0

    def test_flat_push(self):
        tr = tracker_init(5)
        assert push_soc(tr, 5, 1, 10) == []
        assert tr.switching_point == 5 and tr.direction == 0

    def test_monotone_rise_keeps_initial(self):
        online, _, tr = stream([0, 1, 2, 3], 3)
        assert online == [] and tr.switching_point == 0

    def test_reversal_exposes_peak(self):
        _, _, tr = stream([0, 4, 1], 4)
        assert tr.switching_point == 4

    def test_extraction_moves_switching_point_back(self):
        tr = tracker_init(0)
        for t, s in enumerate([4, 1, 3], start=1):
            push_soc(tr, s, t, 4)
        assert tr.switching_point == 1
        out = push_soc(tr, 0, 4, 4)
        full = [r for r in out if r.kind == FULL]
        assert len(full) == 1 and full[0].depth == 0.5
        assert tr.switching_point == 4

    def test_triangle_has_no_full_cycle(self):
        online, residual, _ = stream([0, 2, 0], 2)
        assert not [r for r in online + residual if r.kind == FULL]
        assert sorted(r.depth for r in online + residual) == [1.0, 1.0]

    def test_out_of_range(self):
        with pytest.raises(DomainError):
            push_soc(tracker_init(0), 5, 1, 4)

    @settings(max_examples=200, deadline=None)
    @given(soc_traces)
    def test_fully_reduced_after_push(self, ct):
        cap, trace = ct
        tr = tracker_init(trace[0])
        for t, s in enumerate(trace[1:], start=1):
            push_soc(tr, s, t, cap)
            pts = tr.points + [tr.last_soc]
            if len(pts) >= 3:
                assert abs(pts[-1] - pts[-2]) < abs(pts[-2] - pts[-3])

    def test_copy_is_independent(self):
        tr = tracker_init(2)
        push_soc(tr, 4, 1, 5)
        cp = tr.copy()
        push_soc(cp, 1, 2, 5)
        assert tr.points == [2] and tr.last_soc == 4
        assert cp.points == [4] and cp.last_soc == 1


class TestOffline:
    def test_textbook_example(self):
        ledger = rainflow_offline([0, 4, 1, 3, 0], 4)
        assert multiset(ledger.records) == Counter({(FULL, 2): 1, (HALF, 4): 2})
        assert [r.depth for r in ledger.records if r.kind == FULL] == [0.5]

    def test_constant_trace(self):
        assert len(rainflow_offline([2, 2, 2], 4)) == 0

    def test_single_excursion(self):
        (rec,) = rainflow_offline([0, 3], 3).records
        assert rec.kind == HALF and rec.depth == 1.0

    def test_too_short(self):
        with pytest.raises(ValidationError):
            rainflow_offline([1], 3)

    def test_turning_points(self):
        assert turning_points([0, 1, 2, 2, 1, 3, 3]) == [(0, 0), (2, 2), (4, 1), (5, 3)]

    @settings(max_examples=300, deadline=None)
    @given(soc_traces)
    def test_stream_matches_batch(self, ct):
        cap, trace = ct
        online, residual, _ = stream(trace, cap)
        assert multiset(online + residual) == multiset(rainflow_offline(trace, cap).records)

    @settings(max_examples=200, deadline=None)
    @given(soc_traces)
    def test_total_range_conserved(self, ct):
        # each half cycle traverses its range once, a full cycle twice
        cap, trace = ct
        recs = rainflow_offline(trace, cap).records
        travel = sum(abs(b - a) for a, b in zip(trace, trace[1:]))
        assert sum(r.amplitude * (2 if r.kind == FULL else 1) for r in recs) == travel

    @settings(max_examples=100, deadline=None)
    @given(st.integers(1, 10).map(lambda h: 2 * h).flatmap(
        lambda cap: st.tuples(st.just(cap), st.lists(st.integers(0, cap), min_size=2, max_size=80))))
    def test_mirror_invariance(self, ct):
        cap, trace = ct
        a = multiset(rainflow_offline(trace, cap).records)
        b = multiset(rainflow_offline([cap - s for s in trace], cap).records)
        assert a == b


class TestRainflowPackageOracle:
    @settings(max_examples=300, deadline=None)
    # the package reports a zero-range half cycle for constant or two-sample series
    @given(soc_traces.filter(lambda ct: len(ct[1]) >= 3 and len(set(ct[1])) > 1))
    def test_agrees_with_rainflow_package(self, ct):
        rainflow = pytest.importorskip("rainflow")
        cap, trace = ct
        ours = Counter()
        for r in rainflow_offline(trace, cap).records:
            ours[(float(r.amplitude), 1.0 if r.kind == FULL else 0.5)] += 1
        theirs = Counter()
        for rng_, _mean, count, _i0, _i1 in rainflow.extract_cycles(list(map(float, trace))):
            theirs[(rng_, count)] += 1
        assert ours == theirs


class TestStress:
    def test_exponential_values(self):
        m = ExponentialStress(0.01, 1.0)
        assert stress(m, 1.0) == pytest.approx(0.01 * math.e)
        assert stress(m, 1e-12) == pytest.approx(0.01)

    def test_rational_at_full_depth(self):
        assert stress(RationalStress(), 1.0) == pytest.approx(1 / 17_000)
        assert stress(RationalStress(), 1.0) == pytest.approx(5.882e-5, rel=1e-3)

    @pytest.mark.parametrize("depth", [0.0, -0.1, 1.01])
    def test_domain(self, depth):
        with pytest.raises(DomainError):
            stress(ExponentialStress(), depth)

    def test_rational_construction_rejects_bad_constants(self):
        with pytest.raises(ValidationError):
            RationalStress(1.0, -0.5, -2.0)

    def test_rational_numerical_domain(self):
        m = RationalStress.__new__(RationalStress)
        object.__setattr__(m, "k1", 1.0)
        object.__setattr__(m, "k2", 1.0)
        object.__setattr__(m, "k3", -2.0)
        with pytest.raises(NumericalDomainError):
            stress(m, 0.5)

    @pytest.mark.parametrize("model", [ExponentialStress(), RationalStress()])
    def test_monotone_in_depth(self, model):
        vals = [stress(model, d) for d in np.linspace(0.01, 1.0, 200)]
        assert all(b > a for a, b in zip(vals, vals[1:]))


class TestDegradation:
    def test_empty(self):
        assert total_degradation(CycleLedger(), ExponentialStress()) == 0

    def test_single_full(self):
        led = CycleLedger([CycleRecord(0.5, FULL, 1)])
        assert total_degradation(led, ExponentialStress()) == pytest.approx(0.01649, abs=1e-5)

    def test_full_plus_half(self):
        led = CycleLedger([CycleRecord(0.5, FULL, 1), CycleRecord(1.0, HALF, 2)])
        assert total_degradation(led, ExponentialStress()) == pytest.approx(0.03008, abs=1e-5)

    @settings(max_examples=50, deadline=None)
    @given(soc_traces, soc_traces)
    def test_additive(self, a, b):
        la, lb = rainflow_offline(a[1], a[0]), rainflow_offline(b[1], b[0])
        for m in (ExponentialStress(), RationalStress()):
            whole = total_degradation(la + lb, m)
            assert whole == pytest.approx(total_degradation(la, m) + total_degradation(lb, m))

    def test_half_weight_validated(self):
        with pytest.raises(ValidationError):
            CycleLedger([], 0.0)


class TestHistogram:
    edges = [0, 0.25, 0.5, 0.75, 1.0]

    def test_full_on_edge_goes_left(self):
        counts, overflow = dod_histogram(CycleLedger([CycleRecord(0.5, FULL, 1)]), self.edges)
        assert counts.tolist() == [0, 1, 0, 0] and overflow == 0

    def test_empty(self):
        counts, _ = dod_histogram(CycleLedger(), self.edges)
        assert counts.tolist() == [0, 0, 0, 0]

    def test_half_weighted(self):
        counts, _ = dod_histogram(CycleLedger([CycleRecord(1.0, HALF, 1)]), self.edges)
        assert counts.tolist() == [0, 0, 0, 0.5]

    def test_overflow_reported(self):
        counts, overflow = dod_histogram(CycleLedger([CycleRecord(0.1, FULL, 1)]), [0.2, 0.6, 1.0])
        assert counts.sum() == 0 and overflow == 1

    def test_default_edges(self):
        assert np.allclose(default_bin_edges(10), np.arange(11) / 10)

    def test_bad_edges(self):
        with pytest.raises(ValidationError):
            dod_histogram(CycleLedger(), [0, 0.5, 0.5, 1])

    @settings(max_examples=100, deadline=None)
    @given(soc_traces)
    def test_mass_equals_weighted_count(self, ct):
        cap, trace = ct
        led = rainflow_offline(trace, cap)
        counts, overflow = dod_histogram(led, default_bin_edges(10))
        assert overflow == 0
        assert counts.sum() == pytest.approx(led.weighted_count())
