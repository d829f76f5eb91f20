import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from khopsim.config import ClusterConfig, ConfigError
from khopsim.topology import (InfeasibleRingError, build_alltoall_topology, build_deployment,
                              build_khop_topology, form_ring, parse_edge_list)
from oracles import brute_edges


def test_line_n10_k2():
    t = build_khop_topology(ClusterConfig(n=10, K=2))
    assert len(t.edges) == 17
    assert [t.degree(u) for u in range(10)] == [2, 3, 4, 4, 4, 4, 4, 4, 3, 2]


def test_ring_n10_k2():
    t = build_khop_topology(ClusterConfig(n=10, K=2, ring_closed=True))
    assert len(t.edges) == 20
    assert {t.degree(u) for u in range(10)} == {4}


def test_path_n5_k1():
    t = build_khop_topology(ClusterConfig(n=5, K=1))
    assert sorted(t.edges) == [(0, 1), (1, 2), (2, 3), (3, 4)]


def test_k_above_r_rejected():
    with pytest.raises(ConfigError):
        build_khop_topology(ClusterConfig(n=10, R=4, K=5))


@settings(max_examples=60, deadline=None)
@given(n=st.integers(2, 64), K=st.integers(1, 4), closed=st.booleans())
def test_edges_match_enumeration(n, K, closed):
    if closed and n < 2 * K + 1:
        return
    t = build_khop_topology(ClusterConfig(n=n, R=4, K=K, ring_closed=closed))
    assert set(t.edges) == brute_edges(n, range(1, K + 1), closed)
    expected = K * n if closed else K * n - K * (K + 1) // 2
    if n > K:
        assert len(t.edges) == expected
    assert max(t.degree(u) for u in range(n)) <= 2 * K


@settings(max_examples=60, deadline=None)
@given(n=st.integers(2, 64), K=st.integers(1, 4), closed=st.booleans())
def test_alltoall_edges_and_degree(n, K, closed):
    if closed and n < 2 * K + 1:
        return
    t = build_alltoall_topology(ClusterConfig(n=n, R=4, K=K, ring_closed=closed))
    assert set(t.edges) == brute_edges(n, [2**k for k in range(K)], closed)
    assert max(t.degree(u) for u in range(n)) <= 2 * K


def test_alltoall_examples():
    ring = build_alltoall_topology(ClusterConfig(n=8, R=4, K=3, ring_closed=True))
    assert set(ring.neighbors(0)) == {1, 7, 2, 6, 4}
    one = build_alltoall_topology(ClusterConfig(n=4, R=4, K=1, ring_closed=True))
    assert one.edges == build_khop_topology(ClusterConfig(n=4, R=4, K=1, ring_closed=True)).edges
    line = build_alltoall_topology(ClusterConfig(n=16, R=4, K=3))
    assert set(line.neighbors(0)) == {1, 2, 4}


def test_deployment_examples():
    d = build_deployment(ClusterConfig(n=8, K=1, p=2))
    assert list(d.s_deploy) == [0, 2, 4, 6, 1, 3, 5, 7]
    assert list(build_deployment(ClusterConfig(n=6, K=2, p=1)).s_deploy) == list(range(6))
    d9 = build_deployment(ClusterConfig(n=9, p=2))
    assert d9.subline_length == 4 and len(d9.s_deploy) == 8 and d9.residual == (8,)


def test_deployed_neighbours_sit_under_other_tors():
    cfg = ClusterConfig(n=24, K=2, p=4)
    d = build_deployment(cfg)
    topo = d.topology()
    assert all(topo.tor_of(u) != topo.tor_of(v) for u, v in d.e_deploy)
    # inside a sub-line the main link joins n and n + p
    assert (0, 4) in d.e_deploy and (0, 8) in d.e_deploy and (0, 1) not in d.e_deploy


@settings(max_examples=40, deadline=None)
@given(n=st.integers(1, 80), p=st.integers(1, 8), K=st.integers(1, 4))
def test_deployment_is_permutation(n, p, K):
    if p > n:
        return
    d = build_deployment(ClusterConfig(n=n, R=4, K=K, p=p))
    allnodes = list(d.s_deploy) + list(d.residual)
    assert sorted(allnodes) == list(range(n))
    pos = {u: i for i, u in enumerate(d.s_deploy)}
    assert d.e_deploy == {tuple(sorted((d.s_deploy[i], d.s_deploy[j])))
                          for i in range(len(d.s_deploy)) for j in range(i + 1, len(d.s_deploy))
                          if j - i <= K}
    assert all(abs(pos[u] - pos[v]) <= K for u, v in d.e_deploy)


def test_form_ring_bypasses_fault():
    t = build_khop_topology(ClusterConfig(n=8, R=4, K=2))
    ring = form_ring([1, 3], t)
    assert len(ring) == 8
    assert ring.activated_links == ((1, 3),)
    assert ring.loopback_nodes == (1, 3)


def test_form_ring_single_node():
    t = build_khop_topology(ClusterConfig(n=8, R=4, K=2))
    ring = form_ring([5], t)
    assert len(ring) == 4 and ring.activated_links == () and ring.loopback_nodes == (5, 5)


def test_form_ring_gap_too_wide():
    t = build_khop_topology(ClusterConfig(n=8, R=4, K=2))
    with pytest.raises(InfeasibleRingError, match="1 and node 4"):
        form_ring([1, 4], t)
    with pytest.raises(InfeasibleRingError):
        form_ring([], t)


@settings(max_examples=40, deadline=None)
@given(start=st.integers(0, 20), steps=st.lists(st.integers(1, 3), min_size=0, max_size=6),
       R=st.sampled_from([4, 8]))
def test_ring_is_single_cycle(start, steps, R):
    t = build_khop_topology(ClusterConfig(n=64, R=R, K=3))
    nodes = [start]
    for s in steps:
        nodes.append(nodes[-1] + s)
    ring = form_ring(nodes, t)
    seen = []
    g = ring.gpu_order[0]
    for _ in range(len(nodes) * R):
        seen.append(g)
        g = ring.successor(g)
    assert g == ring.gpu_order[0]
    assert sorted(seen) == sorted((u, r) for u in nodes for r in range(R))
    assert len(ring.activated_links) == len(nodes) - 1
    assert all(e in t.edges for e in ring.activated_links)


def test_edge_list_roundtrip():
    t = build_khop_topology(ClusterConfig(n=12, K=3, ring_closed=True))
    text = t.edge_list_text()
    assert parse_edge_list(text.splitlines()) == t.edges
    assert text.splitlines()[0] == "0 1"
