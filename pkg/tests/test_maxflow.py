"""Max-flow solver and kernel equivalence."""

import itertools

import numpy as np
import pytest

from trackcut.maxflow import BACKEND, FlowNetwork, _pure

try:
    from trackcut.maxflow import _speed
except ImportError:
    _speed = None


def enumerate_min_cut(num_nodes, source, sink, edges):
    """Exhaustive minimum s-t cut over all node bipartitions."""
    others = [i for i in range(num_nodes) if i not in (source, sink)]
    best = float("inf")
    for bits in itertools.product([0, 1], repeat=len(others)):
        side = {source: 1, sink: 0}
        side.update(dict(zip(others, bits)))
        value = sum(c for u, v, c in edges if side[u] and not side[v])
        best = min(best, value)
    return best


def random_network(rng, max_nodes=10):
    n = int(rng.integers(2, max_nodes + 1))
    source, sink = 0, n - 1
    edges = []
    for u in range(n):
        for v in range(n):
            if u != v and rng.random() < 0.4:
                edges.append((u, v, float(rng.uniform(0.0, 5.0))))
    return n, source, sink, edges


def solve(n, source, sink, edges):
    network = FlowNetwork(num_nodes=n, source=source, sink=sink)
    for u, v, c in edges:
        network.add_edge(u, v, c)
    flow, side = network.solve()
    return network, flow, side


class TestFlowNetwork:
    def test_single_edge(self):
        _, flow, side = solve(2, 0, 1, [(0, 1, 3.0)])
        assert flow == pytest.approx(3.0)
        assert side[0] and not side[1]

    def test_diamond(self):
        edges = [(0, 1, 2.0), (0, 2, 2.0), (1, 3, 1.0), (2, 3, 3.0)]
        _, flow, _ = solve(4, 0, 3, edges)
        assert flow == pytest.approx(3.0)

    def test_disconnected(self):
        _, flow, side = solve(3, 0, 2, [(0, 1, 4.0)])
        assert flow == 0.0
        assert not side[2]

    def test_flow_equals_enumerated_cut(self):
        rng = np.random.default_rng(12)
        for _ in range(40):
            n, source, sink, edges = random_network(rng, max_nodes=8)
            _, flow, _ = solve(n, source, sink, edges)
            assert flow == pytest.approx(
                enumerate_min_cut(n, source, sink, edges), abs=1e-9
            )

    def test_cut_value_matches_flow(self):
        rng = np.random.default_rng(13)
        for _ in range(40):
            n, source, sink, edges = random_network(rng, max_nodes=8)
            network, flow, side = solve(n, source, sink, edges)
            assert network.cut_value(side) == pytest.approx(flow, abs=1e-9)

    def test_source_side_contains_source(self):
        rng = np.random.default_rng(14)
        for _ in range(20):
            n, source, sink, edges = random_network(rng)
            _, _, side = solve(n, source, sink, edges)
            assert side[source]
            assert not side[sink]

    def test_negative_capacity_rejected(self):
        network = FlowNetwork(num_nodes=2, source=0, sink=1)
        with pytest.raises(ValueError):
            network.add_edge(0, 1, -1.0)

    def test_self_loop_rejected(self):
        network = FlowNetwork(num_nodes=3, source=0, sink=2)
        with pytest.raises(ValueError):
            network.add_edge(1, 1, 1.0)

    def test_reverse_capacity(self):
        network = FlowNetwork(num_nodes=2, source=0, sink=1)
        network.add_edge(1, 0, 0.0, reverse_capacity=5.0)
        flow, _ = network.solve()
        assert flow == pytest.approx(5.0)


@pytest.mark.skipif(_speed is None, reason="compiled kernel not built")
class TestKernelEquivalence:
    def _arrays(self, network):
        n = network.num_nodes
        m = network.num_edge_slots
        edge_to = np.asarray(network._to, dtype=np.int32)
        edge_cap = np.asarray(network._cap, dtype=np.float64)
        tails = edge_to[np.arange(m, dtype=np.int64) ^ 1]
        order = np.argsort(tails, kind="stable").astype(np.int32)
        counts = np.bincount(tails, minlength=n)
        adj_end = np.cumsum(counts).astype(np.int32)
        adj_start = (adj_end - counts).astype(np.int32)
        return n, edge_to, edge_cap, adj_start, adj_end, order

    def test_backends_agree_on_flow_and_cut(self):
        rng = np.random.default_rng(21)
        for _ in range(60):
            n, source, sink, edges = random_network(rng)
            network = FlowNetwork(num_nodes=n, source=source, sink=sink)
            for u, v, c in edges:
                network.add_edge(u, v, c)
            nn, edge_to, edge_cap, adj_start, adj_end, order = self._arrays(network)

            cap_pure = edge_cap.tolist()
            reach_pure = [0] * nn
            flow_pure = _pure.compute_max_flow(
                nn, source, sink, edge_to.tolist(), cap_pure,
                adj_start.tolist(), adj_end.tolist(), order.tolist(), reach_pure,
            )
            cap_fast = edge_cap.copy()
            reach_fast = np.zeros(nn, dtype=np.int8)
            flow_fast = _speed.compute_max_flow(
                nn, source, sink, edge_to, cap_fast,
                adj_start, adj_end, order, reach_fast,
            )
            assert flow_pure == pytest.approx(flow_fast, abs=1e-9)
            np.testing.assert_array_equal(
                np.asarray(reach_pure, dtype=np.int8), reach_fast
            )
            np.testing.assert_allclose(cap_pure, cap_fast, atol=1e-9)


def test_backend_constant_is_valid():
    assert BACKEND in ("pure", "compiled")
