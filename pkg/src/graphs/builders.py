"""Graph generators, the edge-list reader and the Laplacian"""
from pathlib import Path
from typing import Callable, Dict, Iterable

import networkx as nx
import numpy as np
from loguru import logger

from utils.errors import ConfigError, GraphError
from .models import GraphSpec


def _marked_set(n: int, marked: Iterable[int]) -> frozenset:
    marked = frozenset(int(v) for v in marked)
    if not 1 <= len(marked) <= n:
        raise ConfigError(f"need 1 <= |marked| <= n, got |marked| = {len(marked)} for n = {n}")
    return marked


def _from_networkx(graph: nx.Graph, marked: frozenset, name: str) -> GraphSpec:
    return GraphSpec(
        n=graph.number_of_nodes(),
        edges=frozenset((int(a), int(b)) for a, b in graph.edges()),
        marked=marked,
        name=name,
    )


def build_complete(n: int, marked: Iterable[int]) -> GraphSpec:
    """Every node joined to every other by a unique edge"""
    if n < 2:
        raise ConfigError(f"complete graph needs n >= 2, got {n}")
    return _from_networkx(nx.complete_graph(n), _marked_set(n, marked), "complete")


def build_cycle(n: int, marked: Iterable[int]) -> GraphSpec:
    """Ring 0-1-...-(n-1)-0"""
    if n < 3:
        raise ConfigError(f"cycle graph needs n >= 3, got {n}")
    return _from_networkx(nx.cycle_graph(n), _marked_set(n, marked), "cycle")


GENERATORS: Dict[str, Callable[[int, Iterable[int]], GraphSpec]] = {
    "complete": build_complete,
    "cycle": build_cycle,
}


def build_graph(name: str, n: int, marked: Iterable[int]) -> GraphSpec:
    """Build a graph from a generator name"""
    try:
        generator = GENERATORS[name.lower()]
    except KeyError:
        raise ConfigError(f"unknown graph generator '{name}' (known: {', '.join(GENERATORS)})")
    return generator(n, marked)


def load_edge_list(path: str | Path) -> GraphSpec:
    """
    Read a graph from a plain-text edge list

    Format::

        n N
        a b
        ...
        marked: i j ...

    Blank lines and lines starting with '#' are skipped.
    """
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"edge list not found: {path}")

    header = None
    edges = []
    marked = None
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        try:
            if header is None:
                n_str, big_n_str = line.split()
                header = (int(n_str), int(big_n_str), lineno)
            elif line.lower().startswith("marked:"):
                marked = [int(tok) for tok in line.split(":", 1)[1].replace(",", " ").split()]
            else:
                a, b = line.split()
                edges.append((int(a), int(b)))
        except ValueError:
            raise ConfigError(f"cannot parse '{line}' in {path.name}", line=lineno)

    if header is None:
        raise ConfigError(f"{path.name} is empty")
    if marked is None:
        raise ConfigError(f"{path.name} has no 'marked:' line")
    n, n_marked, header_line = header
    if len(set(marked)) != n_marked:
        raise ConfigError(
            f"header declares N = {n_marked} but {len(set(marked))} nodes are marked",
            line=header_line,
        )

    try:
        graph = GraphSpec(n=n, edges=frozenset(edges), marked=frozenset(marked), name=path.stem)
    except GraphError as e:
        raise ConfigError(f"{path.name}: {e}")

    logger.info(f"Loaded graph '{graph.name}' from {path}: n={graph.n}, {len(graph.edges)} edges, N={graph.n_marked}")
    return graph


def laplacian(g: GraphSpec) -> np.ndarray:
    """
    L = A - D, the adjacency matrix minus the degree diagonal

    networkx returns D - A, so the sign is flipped.
    """
    graph = g.to_networkx()
    return -nx.laplacian_matrix(graph, nodelist=range(g.n)).toarray().astype(int)
