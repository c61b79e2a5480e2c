"""Hamilton cycle packings in regular tripartite tournaments and dense tripartite digraphs."""

__version__ = "0.1.0"
