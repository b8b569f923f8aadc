"""Symmetry reduction: distance-profile equivalence classes and shells"""
from typing import Dict, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np
from loguru import logger

from utils.errors import ShellStructureError
from .builders import laplacian
from .models import EquivalencePartition, GraphSpec, ShellDescriptor

UNREACHABLE = -1


def distance_matrix(g: GraphSpec) -> np.ndarray:
    """Breadth-first hop distances, UNREACHABLE between components"""
    dist = np.full((g.n, g.n), UNREACHABLE, dtype=int)
    for source, lengths in nx.all_pairs_shortest_path_length(g.to_networkx()):
        for target, hops in lengths.items():
            dist[source, target] = hops
    return dist


def _relabel(signatures: Sequence[tuple]) -> List[int]:
    order = {sig: idx for idx, sig in enumerate(sorted(set(signatures)))}
    return [order[sig] for sig in signatures]


def reduce(g: GraphSpec, initial: Optional[EquivalencePartition] = None) -> EquivalencePartition:
    """
    Coarsest partition refining marked/unmarked in which every node of a
    class sees the same multiset of distances to every class.

    Refinement starts from the marked flag (or from `initial`) and repeats
    until the class count stops changing.
    """
    dist = distance_matrix(g)
    marked = [v in g.marked for v in range(g.n)]

    if initial is None:
        colors = _relabel([(flag,) for flag in marked])
    else:
        colors = _relabel([(marked[v], initial.class_of[v]) for v in range(g.n)])

    rounds = 0
    while True:
        rounds += 1
        n_colors = max(colors) + 1
        members: List[List[int]] = [[] for _ in range(n_colors)]
        for v, color in enumerate(colors):
            members[color].append(v)
        signatures = [
            (colors[v],) + tuple(tuple(sorted(dist[v, members[c]])) for c in range(n_colors))
            for v in range(g.n)
        ]
        refined = _relabel(signatures)
        if max(refined) + 1 == n_colors:
            break
        colors = refined

    partition = _ordered_partition(g, colors, dist, marked)
    logger.debug(f"Reduced '{g.name}' (n={g.n}) to {len(partition)} classes in {rounds} refinement rounds")
    return partition


def _ordered_partition(
    g: GraphSpec,
    colors: Sequence[int],
    dist: np.ndarray,
    marked: Sequence[bool],
) -> EquivalencePartition:
    groups: Dict[int, List[int]] = {}
    for v, color in enumerate(colors):
        groups.setdefault(color, []).append(v)

    marked_nodes = sorted(g.marked)

    def to_marked(v: int) -> int:
        hops = [dist[v, m] for m in marked_nodes if dist[v, m] != UNREACHABLE]
        return min(hops) if hops else g.n

    def sort_key(nodes: List[int]) -> Tuple[int, int, int]:
        return (0 if marked[nodes[0]] else 1, to_marked(nodes[0]), nodes[0])

    ordered = sorted((sorted(nodes) for nodes in groups.values()), key=sort_key)
    return EquivalencePartition(
        classes=tuple(tuple(nodes) for nodes in ordered),
        marked_flag=tuple(marked[nodes[0]] for nodes in ordered),
    )


def quotient_laplacian(g: GraphSpec, partition: EquivalencePartition) -> np.ndarray:
    """Q_ab = sum over nodes v of class b of L[rep(a), v]"""
    lap = laplacian(g)
    q = np.zeros((len(partition), len(partition)))
    for a, rep in enumerate(partition.representatives):
        for b, members in enumerate(partition.classes):
            q[a, b] = lap[rep, list(members)].sum()
    return q


def shell_descriptor(g: GraphSpec) -> ShellDescriptor:
    """
    Describe a shell-regular graph by its diameter, forward edge counts
    c_i and shell sizes n_i around the single marked node.

    Transitivity is not checked; instead every node of shell i must have
    exactly c_i forward edges, c_{i-1} n_{i-1}/n_i backward edges and
    c_0 - back - c_i edges inside its shell.
    """
    if g.n_marked != 1:
        raise ShellStructureError(f"shell description needs exactly one marked node, got {g.n_marked}")
    if g.n < 2:
        raise ShellStructureError("graph not shell-regular: a single node has no shells")

    (source,) = tuple(g.marked)
    graph = g.to_networkx()
    depth = nx.single_source_shortest_path_length(graph, source)
    if len(depth) != g.n:
        raise ShellStructureError("graph not shell-regular: graph is disconnected")

    d = max(depth.values())
    nshell = [0] * (d + 1)
    for v in depth.values():
        nshell[v] += 1

    counts: List[set] = [set() for _ in range(d + 1)]
    for v in range(g.n):
        i = depth[v]
        back = sum(1 for w in graph.neighbors(v) if depth[w] == i - 1)
        same = sum(1 for w in graph.neighbors(v) if depth[w] == i)
        fwd = sum(1 for w in graph.neighbors(v) if depth[w] == i + 1)
        counts[i].add((back, same, fwd))

    for i, seen in enumerate(counts):
        if len(seen) != 1:
            raise ShellStructureError(f"graph not shell-regular: shell {i} has nodes with edge profiles {sorted(seen)}")

    c = tuple(next(iter(counts[i]))[2] for i in range(d))
    for i in range(d + 1):
        back, same, fwd = next(iter(counts[i]))
        if i > 0:
            expected_back = c[i - 1] * nshell[i - 1] / nshell[i]
            if expected_back != int(expected_back) or back != expected_back:
                raise ShellStructureError(
                    f"graph not shell-regular: shell {i} has {back} back edges per node, "
                    f"c_{i - 1} n_{i - 1} / n_{i} = {expected_back}"
                )
        if back + same + fwd != c[0]:
            raise ShellStructureError(
                f"graph not shell-regular: shell {i} nodes have degree {back + same + fwd}, expected c_0 = {c[0]}"
            )

    shells = ShellDescriptor(d=d, c=c, nshell=tuple(nshell))
    logger.debug(f"Shells of '{g.name}': d={shells.d}, c={shells.c}, n_i={shells.nshell}")
    return shells


def complete_quotient_laplacian(n: int, n_marked: int) -> np.ndarray:
    """Quotient of the complete graph on (marked, unmarked): the two-class operator without building K_n"""
    if not 1 <= n_marked < n:
        raise ShellStructureError(f"complete-graph quotient needs 1 <= N < n, got n={n}, N={n_marked}")
    return np.array([
        [n_marked - n, n - n_marked],
        [n_marked, -n_marked],
    ], dtype=float)
