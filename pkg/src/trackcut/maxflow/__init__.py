"""Minimum s-t cut solver with interchangeable kernels.

The compiled kernel (Cython) is used when it was built; otherwise the
pure-Python twin takes over. Set TRACKCUT_MAXFLOW=pure or =compiled to
force one side; the default "auto" prefers compiled. Both kernels share
the residual layout and return bit-identical cuts.
"""

from __future__ import annotations

import os

import numpy as np

from trackcut.maxflow import _pure


def _select_backend() -> tuple:
    choice = os.environ.get("TRACKCUT_MAXFLOW", "auto")
    if choice not in ("auto", "pure", "compiled"):
        raise RuntimeError(
            f"TRACKCUT_MAXFLOW must be auto, pure or compiled, got {choice!r}"
        )
    if choice != "pure":
        try:
            from trackcut.maxflow import _speed

            return _speed.compute_max_flow, "compiled"
        except ImportError:
            if choice == "compiled":
                raise RuntimeError(
                    "compiled max-flow kernel requested but not built"
                ) from None
    return _pure.compute_max_flow, "pure"


_KERNEL, BACKEND = _select_backend()


class FlowNetwork:
    """Directed flow network with float capacities.

    Edges come in residual pairs: add_edge(u, v, c, rc) stores u -> v
    with capacity c and v -> u with capacity rc at adjacent slots, so
    slot k and slot k ^ 1 are mutual reverses. solve() returns the max
    flow value together with the source side of the canonical minimum
    cut (the nodes still reachable in the residual graph, which is the
    same set for every maximum flow).
    """

    def __init__(self, num_nodes: int, source: int, sink: int):
        if num_nodes < 2:
            raise ValueError("a flow network needs at least two nodes")
        if not 0 <= source < num_nodes or not 0 <= sink < num_nodes:
            raise ValueError("source and sink must be node indices")
        if source == sink:
            raise ValueError("source and sink must differ")
        self.num_nodes = num_nodes
        self.source = source
        self.sink = sink
        self._to: list[int] = []
        self._cap: list[float] = []
        self.residual: np.ndarray | None = None

    def add_edge(self, u: int, v: int, capacity: float, reverse_capacity: float = 0.0):
        if not 0 <= u < self.num_nodes or not 0 <= v < self.num_nodes:
            raise ValueError("edge endpoints must be node indices")
        if u == v:
            raise ValueError("self-loops carry no flow")
        if capacity < 0.0 or reverse_capacity < 0.0:
            raise ValueError("capacities must be non-negative")
        self._to.append(v)
        self._cap.append(float(capacity))
        self._to.append(u)
        self._cap.append(float(reverse_capacity))

    @property
    def num_edge_slots(self) -> int:
        return len(self._to)

    def solve(self) -> tuple[float, np.ndarray]:
        n = self.num_nodes
        m = len(self._to)
        edge_to = np.asarray(self._to, dtype=np.int32)
        edge_cap = np.asarray(self._cap, dtype=np.float64)
        # Slot k leaves the node its reverse slot points to.
        tails = edge_to[np.arange(m, dtype=np.int64) ^ 1] if m else edge_to
        order = np.argsort(tails, kind="stable").astype(np.int32)
        counts = np.bincount(tails, minlength=n) if m else np.zeros(n, dtype=np.int64)
        adj_end = np.cumsum(counts).astype(np.int32)
        adj_start = (adj_end - counts).astype(np.int32)

        if BACKEND == "compiled":
            reachable = np.zeros(n, dtype=np.int8)
            value = _KERNEL(n, self.source, self.sink, edge_to, edge_cap,
                            adj_start, adj_end, order, reachable)
            self.residual = edge_cap
            return float(value), reachable.astype(bool)

        cap_list = edge_cap.tolist()
        reachable_list = [0] * n
        value = _KERNEL(n, self.source, self.sink, edge_to.tolist(), cap_list,
                        adj_start.tolist(), adj_end.tolist(), order.tolist(),
                        reachable_list)
        self.residual = np.asarray(cap_list, dtype=np.float64)
        return float(value), np.asarray(reachable_list, dtype=bool)

    def cut_value(self, source_side: np.ndarray) -> float:
        """Total original capacity crossing from source side to sink side."""
        total = 0.0
        for slot in range(0, len(self._to), 2):
            u = self._to[slot ^ 1]
            v = self._to[slot]
            if source_side[u] and not source_side[v]:
                total += self._cap[slot]
            if source_side[v] and not source_side[u]:
                total += self._cap[slot ^ 1]
        return total
