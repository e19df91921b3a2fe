"""Exact max-flow on a paired-edge residual graph.

Dinic's algorithm: breadth-first level phases followed by depth-first
blocking flow with advance/retreat pointers. Capacities are floats; a
residual at or below RESIDUAL_EPS counts as saturated. This module is
the pure-Python twin of the compiled kernel in _speed.pyx; keep the two
in step line for line.
"""

RESIDUAL_EPS = 1e-12


def _build_levels(num_nodes, source, sink, edge_to, edge_cap,
                  adj_start, adj_end, adj_edges, level, queue):
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


def _blocking_flow(source, sink, edge_to, edge_cap,
                   adj_end, adj_edges, level, work, path):
    total = 0.0
    depth = 0
    node = source
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


def compute_max_flow(num_nodes, source, sink, edge_to, edge_cap,
                     adj_start, adj_end, adj_edges, reachable):
    """Run Dinic to completion.

    edge_to/edge_cap hold paired directed edges (edge k's reverse is
    k ^ 1); adj_start/adj_end/adj_edges is a packed adjacency table.
    edge_cap is rewritten into residual capacities, reachable is filled
    with 1 on the source side of the induced minimum cut, and the total
    flow value is returned.
    """
    level = [-1] * num_nodes
    work = [0] * num_nodes
    queue = [0] * num_nodes
    path = [0] * num_nodes
    total = 0.0
    while _build_levels(num_nodes, source, sink, edge_to, edge_cap,
                        adj_start, adj_end, adj_edges, level, queue):
        for i in range(num_nodes):
            work[i] = adj_start[i]
        total += _blocking_flow(source, sink, edge_to, edge_cap,
                                adj_end, adj_edges, level, work, path)
    # The loop exits right after a level build that failed to reach the
    # sink, so level >= 0 marks exactly the residual-reachable nodes.
    for i in range(num_nodes):
        reachable[i] = 1 if level[i] >= 0 else 0
    return total
