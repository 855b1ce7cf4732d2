"""Exact integer min-cost max-flow via successive shortest augmenting paths.

The solver keeps Johnson potentials so every Dijkstra runs on nonnegative
reduced costs. The inner loop is a numba kernel over CSR arrays; all state
is local to one invocation, so concurrent solves are safe.
"""

import numpy as np
from numba import njit

_INF = np.int64(1) << np.int64(62)


@njit(cache=True)
def _ssp_kernel(n_nodes, indptr, adj, to, cap, cost, source, sink, need):
    pot = np.zeros(n_nodes, np.int64)
    dist = np.empty(n_nodes, np.int64)
    done = np.empty(n_nodes, np.uint8)
    parent = np.empty(n_nodes, np.int64)
    heap_cap = adj.size + 4
    hkey = np.empty(heap_cap, np.int64)
    hval = np.empty(heap_cap, np.int64)
    INF = np.int64(1) << np.int64(62)
    flow = np.int64(0)
    total = np.int64(0)
    while flow < need:
        for i in range(n_nodes):
            dist[i] = INF
            done[i] = 0
            parent[i] = -1
        dist[source] = 0
        hkey[0] = 0
        hval[0] = source
        hsize = 1
        while hsize > 0:
            u = hval[0]
            hsize -= 1
            hkey[0] = hkey[hsize]
            hval[0] = hval[hsize]
            i = 0
            while True:
                left = 2 * i + 1
                right = left + 1
                smallest = i
                if left < hsize and hkey[left] < hkey[smallest]:
                    smallest = left
                if right < hsize and hkey[right] < hkey[smallest]:
                    smallest = right
                if smallest == i:
                    break
                hkey[i], hkey[smallest] = hkey[smallest], hkey[i]
                hval[i], hval[smallest] = hval[smallest], hval[i]
                i = smallest
            if done[u]:
                continue
            done[u] = 1
            du = dist[u]
            for idx in range(indptr[u], indptr[u + 1]):
                a = adj[idx]
                if cap[a] <= 0:
                    continue
                v = to[a]
                if done[v]:
                    continue
                nd = du + cost[a] + pot[u] - pot[v]
                if nd < dist[v]:
                    dist[v] = nd
                    parent[v] = a
                    i = hsize
                    hkey[i] = nd
                    hval[i] = v
                    hsize += 1
                    while i > 0:
                        p = (i - 1) // 2
                        if hkey[p] <= hkey[i]:
                            break
                        hkey[i], hkey[p] = hkey[p], hkey[i]
                        hval[i], hval[p] = hval[p], hval[i]
                        i = p
        if dist[sink] >= INF:
            break
        for i in range(n_nodes):
            if dist[i] < INF:
                pot[i] += dist[i]
        bottleneck = INF
        v = sink
        while v != source:
            a = parent[v]
            if cap[a] < bottleneck:
                bottleneck = cap[a]
            v = to[a ^ 1]
        v = sink
        while v != source:
            a = parent[v]
            cap[a] -= bottleneck
            cap[a ^ 1] += bottleneck
            total += bottleneck * cost[a]
            v = to[a ^ 1]
        flow += bottleneck
    return flow, total


def min_cost_flow(n_nodes, tail, head, cap, cost, source, sink, need):
    """Min-cost flow of value up to `need` on unit-style integer arcs.

    Returns (flow, total_cost, flows) where flows[i] is the flow on input
    arc i. If flow < need no flow of the required value exists; total_cost
    then refers to the maximal flow found.
    """
    tail = np.asarray(tail, dtype=np.int64)
    head = np.asarray(head, dtype=np.int64)
    cap = np.asarray(cap, dtype=np.int64)
    cost = np.asarray(cost, dtype=np.int64)
    m = tail.size
    to = np.empty(2 * m, np.int64)
    to[0::2] = head
    to[1::2] = tail
    res_cap = np.empty(2 * m, np.int64)
    res_cap[0::2] = cap
    res_cap[1::2] = 0
    res_cost = np.empty(2 * m, np.int64)
    res_cost[0::2] = cost
    res_cost[1::2] = -cost
    frm = np.empty(2 * m, np.int64)
    frm[0::2] = tail
    frm[1::2] = head
    order = np.argsort(frm, kind="stable").astype(np.int64)
    counts = np.bincount(frm, minlength=n_nodes)
    indptr = np.zeros(n_nodes + 1, np.int64)
    np.cumsum(counts, out=indptr[1:])
    flow, total = _ssp_kernel(
        np.int64(n_nodes), indptr, order, to, res_cap, res_cost,
        np.int64(source), np.int64(sink), np.int64(need),
    )
    flows = cap - res_cap[0::2]
    return int(flow), int(total), flows
