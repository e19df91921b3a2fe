"""Compare the pure-Python and compiled max-flow kernels.

Builds seeded random grid graphs shaped like the expansion-move graphs
the segmentation stage solves (terminal links per node, nonnegative
pairwise links between 4-neighbours), runs both kernels on identical
inputs, checks the flows agree, and reports wall times. Run as:

    python benchmarks/bench_maxflow.py
"""

from __future__ import annotations

import time

import numpy as np

from trackcut.maxflow import FlowNetwork, _pure

try:
    from trackcut.maxflow import _speed
except ImportError:
    _speed = None


def build_network(side: int, seed: int) -> FlowNetwork:
    rng = np.random.default_rng(seed)
    n = side * side
    network = FlowNetwork(num_nodes=n + 2, source=n, sink=n + 1)
    for i in range(n):
        network.add_edge(n, i, float(rng.uniform(0.0, 2.0)))
        network.add_edge(i, n + 1, float(rng.uniform(0.0, 2.0)))
    for y in range(side):
        for x in range(side):
            i = y * side + x
            if x + 1 < side:
                w = float(rng.uniform(0.0, 1.0))
                network.add_edge(i, i + 1, w, reverse_capacity=w)
            if y + 1 < side:
                w = float(rng.uniform(0.0, 1.0))
                network.add_edge(i, i + side, w, reverse_capacity=w)
    return network


def prepare_arrays(network: FlowNetwork):
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


def run_pure(network: FlowNetwork, arrays) -> tuple[float, float]:
    n, edge_to, edge_cap, adj_start, adj_end, order = arrays
    cap = edge_cap.tolist()
    reachable = [0] * n
    start = time.perf_counter()
    value = _pure.compute_max_flow(
        n, network.source, network.sink, edge_to.tolist(), cap,
        adj_start.tolist(), adj_end.tolist(), order.tolist(), reachable,
    )
    return float(value), time.perf_counter() - start


def run_compiled(network: FlowNetwork, arrays) -> tuple[float, float]:
    n, edge_to, edge_cap, adj_start, adj_end, order = arrays
    cap = edge_cap.copy()
    reachable = np.zeros(n, dtype=np.int8)
    start = time.perf_counter()
    value = _speed.compute_max_flow(
        n, network.source, network.sink, edge_to, cap,
        adj_start, adj_end, order, reachable,
    )
    return float(value), time.perf_counter() - start


def main() -> None:
    sides = (8, 16, 32, 64, 96)
    repeats = 3
    if _speed is None:
        print("compiled kernel not built; benchmarking pure only")
    header = f"{'nodes':>8} {'edge slots':>11} {'pure (s)':>10}"
    if _speed is not None:
        header += f" {'compiled (s)':>13} {'speedup':>8}"
    print(header)
    for side in sides:
        network = build_network(side, seed=side)
        arrays = prepare_arrays(network)
        pure_times, compiled_times = [], []
        for _ in range(repeats):
            flow_pure, t = run_pure(network, arrays)
            pure_times.append(t)
            if _speed is not None:
                flow_compiled, t = run_compiled(network, arrays)
                compiled_times.append(t)
                if abs(flow_pure - flow_compiled) > 1e-9 * max(1.0, flow_pure):
                    raise AssertionError(
                        f"kernel mismatch at side={side}: "
                        f"{flow_pure} vs {flow_compiled}"
                    )
        line = f"{side * side + 2:>8} {network.num_edge_slots:>11} {min(pure_times):>10.4f}"
        if _speed is not None:
            line += (
                f" {min(compiled_times):>13.4f}"
                f" {min(pure_times) / min(compiled_times):>7.1f}x"
            )
        print(line)


if __name__ == "__main__":
    main()
