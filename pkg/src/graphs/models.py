from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Tuple

import networkx as nx
import numpy as np

from utils.errors import GraphError


Edge = Tuple[int, int]


@dataclass(frozen=True)
class GraphSpec:
    """Undirected, unweighted graph with a marked node subset"""
    n: int
    edges: FrozenSet[Edge]
    marked: FrozenSet[int]
    name: str = "custom"

    def __post_init__(self):
        if self.n < 1:
            raise GraphError(f"node count must be positive, got {self.n}")

        normalized = set()
        for a, b in self.edges:
            if a == b:
                raise GraphError(f"self-loop on node {a}")
            if not (0 <= a < self.n and 0 <= b < self.n):
                raise GraphError(f"edge ({a}, {b}) references a node outside 0..{self.n - 1}")
            pair = (min(a, b), max(a, b))
            if pair in normalized:
                raise GraphError(f"duplicate edge ({pair[0]}, {pair[1]})")
            normalized.add(pair)
        object.__setattr__(self, "edges", frozenset(normalized))

        if not self.marked:
            raise GraphError("at least one node must be marked")
        bad = [v for v in self.marked if not 0 <= v < self.n]
        if bad:
            raise GraphError(f"marked nodes outside 0..{self.n - 1}: {sorted(bad)}")
        object.__setattr__(self, "marked", frozenset(self.marked))

    @property
    def n_marked(self) -> int:
        return len(self.marked)

    @property
    def n_unmarked(self) -> int:
        """N^perp = n - N"""
        return self.n - len(self.marked)

    def degree(self, node: int) -> int:
        return sum(1 for a, b in self.edges if node in (a, b))

    def to_networkx(self) -> nx.Graph:
        graph = nx.Graph()
        graph.add_nodes_from(range(self.n))
        graph.add_edges_from(sorted(self.edges))
        return graph


@dataclass(frozen=True)
class EquivalencePartition:
    """
    Ordered partition of the nodes into equivalence classes

    Marked classes come first, then classes by increasing distance to the
    nearest marked node, ties broken by smallest node index.
    """
    classes: Tuple[Tuple[int, ...], ...]
    marked_flag: Tuple[bool, ...]
    class_of: Dict[int, int] = field(init=False, compare=False)

    def __post_init__(self):
        if len(self.classes) != len(self.marked_flag):
            raise GraphError("one marked flag per class is required")
        object.__setattr__(
            self, "class_of",
            {node: idx for idx, members in enumerate(self.classes) for node in members}
        )

    def __len__(self) -> int:
        return len(self.classes)

    @property
    def n_nodes(self) -> int:
        return len(self.class_of)

    @property
    def multiplicity(self) -> np.ndarray:
        return np.array([len(members) for members in self.classes], dtype=int)

    @property
    def representatives(self) -> List[int]:
        return [members[0] for members in self.classes]

    def lift(self, class_values: np.ndarray) -> np.ndarray:
        """Copy one value per class onto every node of that class"""
        class_values = np.asarray(class_values)
        index = np.array([self.class_of[v] for v in range(self.n_nodes)])
        return class_values[index]

    def project(self, node_values: np.ndarray) -> np.ndarray:
        """Read one value per class from its representative node"""
        node_values = np.asarray(node_values)
        return node_values[self.representatives]


@dataclass(frozen=True)
class ShellDescriptor:
    """Distance shells around the single marked node of a shell-regular graph"""
    d: int
    c: Tuple[int, ...]
    nshell: Tuple[int, ...]

    def __post_init__(self):
        if self.d < 1:
            raise GraphError(f"diameter must be at least 1, got {self.d}")
        if len(self.c) != self.d or len(self.nshell) != self.d + 1:
            raise GraphError("expected d forward-edge counts and d + 1 shell sizes")
        if self.nshell[0] != 1:
            raise GraphError("shell 0 holds exactly the marked node")

    @property
    def n(self) -> int:
        return sum(self.nshell)

    @property
    def forward(self) -> np.ndarray:
        """c_i with c_d = 0"""
        return np.array(list(self.c) + [0], dtype=float)

    @property
    def backward(self) -> np.ndarray:
        """c_{i-1} n_{i-1} / n_i with c_{-1} = 0"""
        back = np.zeros(self.d + 1)
        for i in range(1, self.d + 1):
            back[i] = self.c[i - 1] * self.nshell[i - 1] / self.nshell[i]
        return back

    @property
    def intra(self) -> np.ndarray:
        """Edges from a shell-i node to its own shell"""
        return self.c[0] - self.backward - self.forward

    @property
    def multiplicity(self) -> np.ndarray:
        return np.array(self.nshell, dtype=int)

    @property
    def marked_flag(self) -> Tuple[bool, ...]:
        return (True,) + (False,) * self.d

    def quotient_laplacian(self) -> np.ndarray:
        """Reduced Laplacian acting on one amplitude per shell"""
        size = self.d + 1
        back, fwd = self.backward, self.forward
        q = np.zeros((size, size))
        for i in range(size):
            q[i, i] = -(back[i] + fwd[i])
            if i > 0:
                q[i, i - 1] = back[i]
            if i < self.d:
                q[i, i + 1] = fwd[i]
        return q
