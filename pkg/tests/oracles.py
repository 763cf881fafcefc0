"""Independent brute-force oracles used to pin expected values.

These deliberately avoid the library's algorithms: betweenness is computed
by enumerating every simple path with DFS and keeping the shortest ones.
"""
from __future__ import annotations


def all_simple_paths(succ, s, t):
    """Every simple path from s to t as a list of node lists."""
    paths = []
    stack = [(s, [s])]
    while stack:
        v, path = stack.pop()
        if v == t:
            paths.append(path)
            continue
        for w in succ[v]:
            if w not in path:
                stack.append((w, path + [w]))
    return paths


def bruteforce_betweenness(nodes, edges, normalized=False):
    """Betweenness by shortest-path enumeration over all ordered pairs."""
    nodes = list(nodes)
    succ = {v: [] for v in nodes}
    for u, v in edges:
        succ[u].append(v)
    scores = {v: 0.0 for v in nodes}
    for s in nodes:
        for t in nodes:
            if s == t:
                continue
            paths = all_simple_paths(succ, s, t)
            if not paths:
                continue
            shortest = min(len(p) for p in paths)
            geodesics = [p for p in paths if len(p) == shortest]
            sigma = len(geodesics)
            for v in nodes:
                if v in (s, t):
                    continue
                through = sum(1 for p in geodesics if v in p)
                scores[v] += through / sigma
    if normalized:
        n = len(nodes)
        denom = (n - 1) * (n - 2)
        scores = {v: (x / denom if denom else 0.0) for v, x in scores.items()}
    return scores


def random_digraph(rng, n, p):
    """Edge list of a directed G(n, p) over string ids v0..v{n-1}."""
    nodes = [f"v{i}" for i in range(n)]
    edges = [
        (nodes[i], nodes[j])
        for i in range(n)
        for j in range(n)
        if i != j and rng.random() < p
    ]
    return nodes, edges
