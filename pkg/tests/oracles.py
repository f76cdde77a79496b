"""Independent brute-force reference implementations for test oracles.

Everything here is written against the stated definitions rather than
the production code paths: quadratic dependency chains, exhaustive
enumerations, reference BFS over coordinate tuples, and library-based
geometry.  Keep these slow and obvious.
"""

from __future__ import annotations

import itertools
import math
from collections import deque

from shapely.geometry import LineString


def longest_chain_layers(gates_ops: list[tuple[int, ...]]) -> list[int]:
    """O(G^2) dependency chain: layer of gate j is one past the deepest
    earlier gate sharing any operand with it."""
    layers: list[int] = []
    for j, ops in enumerate(gates_ops):
        best = 0
        s = set(ops)
        for i in range(j):
            if s & set(gates_ops[i]):
                best = max(best, layers[i])
        layers.append(best + 1)
    return layers


def longest_chain(gates_ops: list[tuple[int, ...]]) -> int:
    layers = longest_chain_layers(gates_ops)
    return max(layers, default=0)


def reference_bfs_length(
    width: int,
    height: int,
    occupied: set[tuple[int, int]],
    src: tuple[int, int],
    dst: tuple[int, int],
) -> int | None:
    """Shortest free 4-connected path length in cells, or None."""
    if src in occupied or dst in occupied:
        return None
    dist = {src: 1}
    dq = deque([src])
    while dq:
        x, y = dq.popleft()
        if (x, y) == dst:
            return dist[(x, y)]
        for nx, ny in sorted(((x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1))):
            if 0 <= nx < width and 0 <= ny < height and (nx, ny) not in occupied:
                if (nx, ny) not in dist:
                    dist[(nx, ny)] = dist[(x, y)] + 1
                    dq.append((nx, ny))
    return None


def crossing_oracle(segments: list[tuple[tuple[int, int], tuple[int, int], int, int]]) -> int:
    """Count intersecting closed-segment pairs, excluding shared endpoints.

    ``segments`` entries are (p1, p2, u, v): coordinates plus endpoint
    vertex ids.  Uses shapely for the geometric predicate.
    """
    count = 0
    for (p1, p2, u1, v1), (p3, p4, u2, v2) in itertools.combinations(segments, 2):
        if {u1, v1} & {u2, v2}:
            continue
        if LineString([p1, p2]).intersects(LineString([p3, p4])):
            count += 1
    return count


def min_balanced_cut(
    n: int, edges: list[tuple[int, int, float]], tolerance: float = 0.1
) -> float:
    """Exhaustive minimum cut over splits within the balance tolerance
    (unit vertex weights)."""
    best = math.inf
    limit = max(1, int(math.floor(n * tolerance))) if n % 2 == 0 else max(1, (n + 1) // 2 - n // 2)
    for bits in range(1, 2 ** (n - 1)):
        side = [(bits >> i) & 1 for i in range(n)]
        a = sum(side)
        if abs(2 * a - n) > max(n * tolerance, n % 2):
            continue
        cut = sum(w for u, v, w in edges if side[u] != side[v])
        best = min(best, cut)
    return best


def min_assignment_cost(cost: list[list[float]]) -> float:
    """Exhaustive minimum-cost perfect assignment on a square matrix."""
    n = len(cost)
    best = math.inf
    for perm in itertools.permutations(range(n)):
        total = sum(cost[i][perm[i]] for i in range(n))
        best = min(best, total)
    return best


def pearson_two_pass(xs: list[float], ys: list[float]) -> float:
    """Textbook two-pass Pearson correlation."""
    n = len(xs)
    mx = sum(xs) / n
    my = sum(ys) / n
    cov = sum((x - mx) * (y - my) for x, y in zip(xs, ys))
    vx = sum((x - mx) ** 2 for x in xs)
    vy = sum((y - my) ** 2 for y in ys)
    return cov / math.sqrt(vx * vy)
