import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from khopsim.faults import (FaultEvent, FaultModelParams, FaultTimeline, TraceParseError,
                            dump_trace, gpu_fault_prob_from_node, inheritance_probability,
                            load_trace, node_fault_prob, normalize_trace_8to4, read_trace_header,
                            synthesize_trace)
from oracles import bisect_root, subset_fault_prob


def test_overlapping_events_merge():
    tl = load_trace("node_id,start,end\n3,0,10\n3,5,20\n1,2,4\n")
    assert [(e.node_id, e.start, e.end) for e in tl.events] == [(3, 0, 20), (1, 2, 4)]


def test_empty_trace():
    tl = load_trace("")
    assert tl.events == () and tl.faulty_at(0) == frozenset() and tl.faulty_at(1e9) == frozenset()


def test_end_before_start_names_line():
    with pytest.raises(TraceParseError, match="line 3"):
        load_trace("node_id,start,end\n0,1,2\n1,9,5\n")


def test_unknown_node_and_bad_fields():
    with pytest.raises(TraceParseError, match="unknown node"):
        load_trace("5,0,1\n", node_count=4)
    with pytest.raises(TraceParseError, match="line 1"):
        load_trace("a,b,c\n")
    with pytest.raises(TraceParseError, match="3 fields"):
        load_trace("1,2\n")


def test_half_open_intervals():
    tl = load_trace("0,10,20\n")
    assert tl.faulty_at(10) == {0} and tl.faulty_at(19.9) == {0} and tl.faulty_at(20) == frozenset()


def test_dump_load_roundtrip():
    tl = load_trace("0,0,5\n2,3,9\n", node_count=4, horizon=12)
    buf = io.StringIO()
    dump_trace(tl, buf)
    text = buf.getvalue()
    meta = read_trace_header(text)
    back = load_trace(text, node_count=int(meta["nodes"]), horizon=meta["horizon"])
    assert back == tl


def test_segments_cover_horizon():
    tl = load_trace("0,0,5\n1,3,9\n0,7,8\n", horizon=10)
    segs = tl.segments()
    assert segs[0][0] == 0 and segs[-1][1] == 10
    for t0, t1, F in segs:
        assert F == tl.faulty_at(t0)
    assert [F for *_, F in segs] == [{0}, {0, 1}, {1}, {0, 1}, {1}, set()]


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 5), st.integers(0, 50), st.integers(1, 20)), max_size=15),
       st.tuples(st.integers(0, 5), st.integers(0, 50), st.integers(1, 20)),
       st.floats(0, 70))
def test_adding_events_never_shrinks_faulty_set(evs, extra, t):
    base = [FaultEvent(u, s, s + d) for u, s, d in evs]
    tl = FaultTimeline.from_events(base, 6)
    tl2 = FaultTimeline.from_events(base + [FaultEvent(extra[0], extra[1], extra[1] + extra[2])], 6)
    assert tl.faulty_at(t) <= tl2.faulty_at(t)


def test_gpu_prob_examples():
    assert gpu_fault_prob_from_node(0.0233, 8) == pytest.approx(0.0029, abs=5e-5)
    p = gpu_fault_prob_from_node(0.0722, 8)
    # solve 1-(1-p)^8 = 7.22% independently
    assert p == pytest.approx(bisect_root(lambda x: 1 - (1 - x) ** 8 - 0.0722, 0, 1), rel=1e-9)
    assert p == pytest.approx(0.00933, abs=5e-5)
    assert gpu_fault_prob_from_node(0.0, 4) == 0.0
    with pytest.raises(ValueError):
        gpu_fault_prob_from_node(1.0, 4)


def test_node_prob_examples():
    # 1.17% comes from the unrounded per-GPU rate; the rounded 0.29% lands at 1.155%
    assert node_fault_prob(gpu_fault_prob_from_node(0.0233, 8), 4) == pytest.approx(0.0117, abs=5e-5)
    assert node_fault_prob(0.0029, 4) == pytest.approx(0.0117, abs=2e-4)
    assert node_fault_prob(0.00933, 4) == pytest.approx(0.0368, abs=5e-5)
    assert node_fault_prob(0.0, 8) == 0.0


@settings(max_examples=100)
@given(st.floats(0, 0.99), st.sampled_from([1, 2, 4, 8]))
def test_prob_conversions_invert(P, R):
    assert node_fault_prob(gpu_fault_prob_from_node(P, R), R) == pytest.approx(P, rel=1e-12, abs=1e-15)


def test_inheritance_probability_matches_enumeration():
    p = gpu_fault_prob_from_node(0.0233, 8)
    assert inheritance_probability(0.0233) == pytest.approx(subset_fault_prob(p, 4, 8), rel=1e-12)
    # frozen oracle value
    assert inheritance_probability(0.0233) == pytest.approx(0.502947, abs=1e-6)


def test_synthesize_edge_cases():
    assert synthesize_trace(FaultModelParams(0.0, 4), 50, 20, seed=1).events == ()
    full = synthesize_trace(FaultModelParams(1.0, 4), 7, 5, seed=1)
    assert all(full.faulty_at(t) == set(range(7)) for t in range(5))


def test_synthesize_concentration_and_determinism():
    params = FaultModelParams.from_node_prob(0.05, 4)
    a = synthesize_trace(params, 1000, 100, seed=7)
    assert abs(a.mean_fault_ratio() - 0.05) < 0.005
    assert synthesize_trace(params, 1000, 100, seed=7) == a


def test_normalize_forced_probability():
    tl = FaultTimeline.from_events([FaultEvent(2, 0, 5)], 4, 10)
    out = normalize_trace_8to4(tl, seed=0, probability=1.0)
    assert out.node_count == 8
    assert out.faulty_at(1) == {4, 5}
    assert normalize_trace_8to4(tl, seed=0, probability=0.0).events == ()


def test_normalize_child_fraction():
    evs = [FaultEvent(i % 1000, i // 1000 * 10, i // 1000 * 10 + 1) for i in range(100_000)]
    tl = FaultTimeline.from_events(evs, 1000)
    out = normalize_trace_8to4(tl, seed=3, probability=0.5021)
    frac = len(out.events) / (2 * len(tl.events))
    assert abs(frac - 0.5021) < 0.005


def test_normalize_is_seed_deterministic():
    tl = synthesize_trace(FaultModelParams.from_node_prob(0.05, 8), 50, 30, seed=2)
    assert normalize_trace_8to4(tl, 9) == normalize_trace_8to4(tl, 9)


def test_remap_and_fixed_repair():
    tl = load_trace("0,0,4\n5,2,10\n", node_count=6)
    r = tl.remap(4)
    assert r.node_count == 4 and r.faulty_at(3) == {0, 1}
    assert "mod 4" in r.metadata["node_mapping"]
    fixed = tl.with_fixed_repair()
    assert all(e.duration == pytest.approx(6.0) for e in fixed.events)


def test_stats_mean_and_p99():
    # node 0 down for 10% of the horizon, node 1 never
    tl = load_trace("0,0,10\n", node_count=2, horizon=100)
    s = tl.stats()
    assert s["mean"] == pytest.approx(0.05)
    assert s["p50"] == 0.0 and s["p99"] == 0.5
