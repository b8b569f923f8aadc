from .models import GraphSpec, EquivalencePartition, ShellDescriptor
from .builders import build_complete, build_cycle, build_graph, load_edge_list, laplacian
from .reduction import (
    reduce,
    shell_descriptor,
    quotient_laplacian,
    complete_quotient_laplacian,
    distance_matrix,
)

__all__ = [
    'GraphSpec',
    'EquivalencePartition',
    'ShellDescriptor',
    'build_complete',
    'build_cycle',
    'build_graph',
    'load_edge_list',
    'laplacian',
    'reduce',
    'shell_descriptor',
    'quotient_laplacian',
    'complete_quotient_laplacian',
    'distance_matrix',
]
