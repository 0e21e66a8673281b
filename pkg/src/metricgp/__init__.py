"""Matrix-valued covariance kernels and Gaussian fields on graphs with Euclidean edges."""
from . import _backend
from .graph import GraphEE, GraphError, Point, parse_graph

__version__ = "0.1.0"
BACKEND = _backend.NAME

__all__ = ["GraphEE", "GraphError", "Point", "parse_graph", "BACKEND", "__version__"]
