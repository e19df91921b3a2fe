# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled max-flow kernel.

Line-level twin of trackcut.maxflow._pure; keep the two in step. Same
paired-edge residual layout, same Dinic phases, same saturation
threshold, so both backends return identical flows and cuts.
"""

import numpy as np


cdef double RESIDUAL_EPS = 1e-12


cdef bint _build_levels(int num_nodes, int source, int sink,
                        int[::1] edge_to, double[::1] edge_cap,
                        int[::1] adj_start, int[::1] adj_end, int[::1] adj_edges,
                        int[::1] level, int[::1] queue) noexcept nogil:
    cdef int i, u, v, k, e, head, tail
    for i in range(num_nodes):
        level[i] = -1
    level[source] = 0
    queue[0] = source
    head = 0
    tail = 1
    while head < tail:
        u = queue[head]
        head += 1
        for k in range(adj_start[u], adj_end[u]):
            e = adj_edges[k]
            v = edge_to[e]
            if level[v] < 0 and edge_cap[e] > RESIDUAL_EPS:
                level[v] = level[u] + 1
                queue[tail] = v
                tail += 1
    return level[sink] >= 0


cdef double _blocking_flow(int source, int sink,
                           int[::1] edge_to, double[::1] edge_cap,
                           int[::1] adj_end, int[::1] adj_edges,
                           int[::1] level, int[::1] work, int[::1] path) noexcept nogil:
    cdef double total = 0.0
    cdef double bottleneck
    cdef int depth = 0
    cdef int node = source
    cdef int k, e, v, retreat
    cdef bint advanced
    while True:
        if node == sink:
            bottleneck = edge_cap[path[0]]
            for k in range(1, depth):
                if edge_cap[path[k]] < bottleneck:
                    bottleneck = edge_cap[path[k]]
            for k in range(depth):
                e = path[k]
                edge_cap[e] -= bottleneck
                edge_cap[e ^ 1] += bottleneck
            total += bottleneck
            retreat = depth
            for k in range(depth):
                if edge_cap[path[k]] <= RESIDUAL_EPS:
                    retreat = k
                    break
            depth = retreat
            node = source if depth == 0 else edge_to[path[depth - 1]]
            continue
        advanced = False
        while work[node] < adj_end[node]:
            e = adj_edges[work[node]]
            v = edge_to[e]
            if edge_cap[e] > RESIDUAL_EPS and level[v] == level[node] + 1:
                path[depth] = e
                depth += 1
                node = v
                advanced = True
                break
            work[node] += 1
        if advanced:
            continue
        level[node] = -1
        if depth == 0:
            break
        depth -= 1
        e = path[depth]
        node = edge_to[e ^ 1]
        work[node] += 1
    return total


def compute_max_flow(int num_nodes, int source, int sink,
                     int[::1] edge_to, double[::1] edge_cap,
                     int[::1] adj_start, int[::1] adj_end, int[::1] adj_edges,
                     signed char[::1] reachable):
    """Run Dinic to completion.

    edge_to/edge_cap hold paired directed edges (edge k's reverse is
    k ^ 1); adj_start/adj_end/adj_edges is a packed adjacency table.
    edge_cap is rewritten into residual capacities, reachable is filled
    with 1 on the source side of the induced minimum cut, and the total
    flow value is returned.
    """
    cdef int[::1] level = np.empty(num_nodes, dtype=np.int32)
    cdef int[::1] work = np.empty(num_nodes, dtype=np.int32)
    cdef int[::1] queue = np.empty(num_nodes, dtype=np.int32)
    cdef int[::1] path = np.empty(num_nodes, dtype=np.int32)
    cdef double total = 0.0
    cdef int i
    with nogil:
        while _build_levels(num_nodes, source, sink, edge_to, edge_cap,
                            adj_start, adj_end, adj_edges, level, queue):
            for i in range(num_nodes):
                work[i] = adj_start[i]
            total += _blocking_flow(source, sink, edge_to, edge_cap,
                                    adj_end, adj_edges, level, work, path)
        # The loop exits right after a level build that failed to reach
        # the sink, so level >= 0 marks exactly the residual-reachable
        # nodes.
        for i in range(num_nodes):
            reachable[i] = 1 if level[i] >= 0 else 0
    return total
