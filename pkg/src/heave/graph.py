"""Hierarchies, orderings, constraint matrices and acyclicity checks.

Adjacency convention: ``adj[i, j] == 1`` is an edge ``i -> j``. Nodes are
0-based positions. Diagonal entries (self-loops) are always permitted and are
ignored by every acyclicity notion in this module.
"""
from __future__ import annotations

from collections.abc import Sequence

import numpy as np


class InvalidInputError(ValueError):
    """Raised for malformed graphs, hierarchies or orderings."""


class CycleError(ValueError):
    """Raised when an operation needs a DAG but got a cyclic graph."""

    def __init__(self, cycle: list[int]):
        self.cycle = cycle
        super().__init__("graph contains a cycle: " + " -> ".join(map(str, cycle + cycle[:1])))


def as_adjacency(adj) -> np.ndarray:
    a = np.asarray(adj)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InvalidInputError(f"adjacency must be square, got shape {a.shape}")
    if a.size and not np.isin(a, (0, 1)).all():
        raise InvalidInputError("adjacency entries must be 0 or 1")
    return a.astype(bool)


def off_diagonal(adj) -> np.ndarray:
    a = np.array(adj, dtype=bool)
    np.fill_diagonal(a, False)
    return a


def constraint_from_hierarchy(levels: Sequence[int]) -> np.ndarray:
    """Permissible-link mask for a hierarchy: ``i -> j`` allowed iff level(i) > level(j).

    The diagonal is always 1. Only relative levels matter.
    """
    h = np.asarray(levels)
    if h.ndim != 1 or h.size == 0:
        raise InvalidInputError("hierarchy must be a non-empty 1-d list of levels")
    mask = h[:, None] > h[None, :]
    np.fill_diagonal(mask, True)
    return mask.astype(np.int8)


def validate_ordering(perm: Sequence[int], n: int | None = None) -> np.ndarray:
    o = np.asarray(perm, dtype=np.int64)
    n = o.size if n is None else n
    if o.ndim != 1 or o.size != n or not np.array_equal(np.sort(o), np.arange(n)):
        raise InvalidInputError(f"not a permutation of 0..{n - 1}: {list(o)}")
    return o


def ordering_positions(perm: Sequence[int]) -> np.ndarray:
    """Inverse permutation: ``pos[node]`` is the node's index in the ordering."""
    o = validate_ordering(perm)
    pos = np.empty_like(o)
    pos[o] = np.arange(o.size)
    return pos


def constraint_from_ordering(perm: Sequence[int]) -> np.ndarray:
    """Permissible-link mask for an ordering: ``i -> j`` allowed iff i precedes j."""
    pos = ordering_positions(perm)
    mask = pos[:, None] < pos[None, :]
    np.fill_diagonal(mask, True)
    return mask.astype(np.int8)


def find_cycle(adj) -> list[int] | None:
    """Return the nodes of one directed cycle (diagonal ignored), or None.

    Iterative three-colour DFS so deep graphs don't hit the recursion limit.
    """
    a = off_diagonal(as_adjacency(adj))
    n = a.shape[0]
    succ = [np.flatnonzero(a[i]).tolist() for i in range(n)]
    state = [0] * n  # 0 unvisited, 1 on stack, 2 done
    parent = [-1] * n
    for root in range(n):
        if state[root]:
            continue
        stack = [(root, iter(succ[root]))]
        state[root] = 1
        while stack:
            v, it = stack[-1]
            for u in it:
                if state[u] == 0:
                    state[u] = 1
                    parent[u] = v
                    stack.append((u, iter(succ[u])))
                    break
                if state[u] == 1:
                    cycle = [v]
                    while cycle[-1] != u:
                        cycle.append(parent[cycle[-1]])
                    return cycle[::-1]
            else:
                state[v] = 2
                stack.pop()
    return None


def is_acyclic(adj) -> bool:
    return find_cycle(adj) is None


def topological_order(adj) -> list[int]:
    """Kahn's algorithm over the off-diagonal part; raises CycleError."""
    a = off_diagonal(as_adjacency(adj))
    indeg = a.sum(axis=0)
    ready = [int(i) for i in np.flatnonzero(indeg == 0)]
    order = []
    while ready:
        v = ready.pop()
        order.append(v)
        for u in np.flatnonzero(a[v]):
            indeg[u] -= 1
            if indeg[u] == 0:
                ready.append(int(u))
    if len(order) < a.shape[0]:
        raise CycleError(find_cycle(a))
    return order


def canonicalize(adj) -> np.ndarray:
    """Lowest positive-integer hierarchy consistent with a DAG.

    Sinks sit at level 1; every other node sits one above its highest
    successor (longest path to a sink, plus one).
    """
    a = off_diagonal(as_adjacency(adj))
    levels = np.ones(a.shape[0], dtype=np.int64)
    for v in reversed(topological_order(a)):
        succ = np.flatnonzero(a[v])
        if succ.size:
            levels[v] = levels[succ].max() + 1
    return levels


def is_consistent(adj, levels: Sequence[int]) -> bool:
    """True iff every off-diagonal edge i -> j has level(i) > level(j)."""
    a = off_diagonal(as_adjacency(adj))
    h = np.asarray(levels)
    if h.shape != (a.shape[0],):
        raise InvalidInputError(f"hierarchy length {h.size} does not match {a.shape[0]} nodes")
    return bool(np.all(h[:, None] > h[None, :], where=a))


def edges(adj) -> list[list[int]]:
    a = off_diagonal(as_adjacency(adj))
    return [[int(i), int(j)] for i, j in zip(*np.nonzero(a))]


def from_edges(n: int, edge_list) -> np.ndarray:
    a = np.zeros((n, n), dtype=np.int8)
    for i, j in edge_list:
        if not (0 <= i < n and 0 <= j < n):
            raise InvalidInputError(f"edge ({i}, {j}) out of range for {n} nodes")
        a[i, j] = 1
    return a


def graph_to_json(adj, node_names: Sequence[str] | None = None) -> dict:
    a = as_adjacency(adj)
    n = a.shape[0]
    names = list(node_names) if node_names is not None else [str(i) for i in range(n)]
    return {"n": n, "edges": edges(a), "node_names": names}


def graph_from_json(obj: dict) -> tuple[np.ndarray, list[str]]:
    n = int(obj["n"])
    names = list(obj.get("node_names") or [str(i) for i in range(n)])
    if len(names) != n:
        raise InvalidInputError("node_names length does not match n")
    return from_edges(n, obj["edges"]), names
