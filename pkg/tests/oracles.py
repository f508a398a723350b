"""Independent oracles used to derive expected values.

These deliberately avoid the library's own algorithms: the topological
enumerator backtracks over every valid order, and the tie-break oracle
repeatedly scans a sorted ready list instead of using a heap.
"""

from __future__ import annotations


def topological_orders(nodes, edges):
    """Yield every topological order of the graph (source depends on
    target, so targets must precede sources)."""
    nodes = list(nodes)
    blockers = {node: set() for node in nodes}  # node -> targets it waits on
    for source, target in edges:
        blockers[source].add(target)

    def backtrack(prefix, done, remaining):
        if not remaining:
            yield list(prefix)
            return
        for node in sorted(remaining):
            if blockers[node] <= done:
                prefix.append(node)
                done.add(node)
                remaining.remove(node)
                yield from backtrack(prefix, done, remaining)
                prefix.pop()
                done.discard(node)
                remaining.add(node)

    yield from backtrack([], set(), set(nodes))


def is_topological(order, nodes, edges) -> bool:
    if sorted(order) != sorted(nodes):
        return False
    index = {name: i for i, name in enumerate(order)}
    return all(index[target] < index[source] for source, target in edges)


def greedy_lexicographic(nodes, edges):
    """The unique order produced by always deploying the lexicographically
    smallest ready component next."""
    remaining = set(nodes)
    done: set = set()
    blockers = {node: set() for node in nodes}
    for source, target in edges:
        blockers[source].add(target)
    order = []
    while remaining:
        ready = sorted(node for node in remaining if blockers[node] <= done)
        if not ready:
            raise ValueError("graph has a cycle")
        pick = ready[0]
        order.append(pick)
        done.add(pick)
        remaining.remove(pick)
    return order
