"""Vertex-time localization toolkit.

Projection operators on discretized vertex-time domains, localization
trade-off regions, maximally concentrated atom constructions, dictionary
learning for vertex-time signal reconstruction, and concentration-driven
graph topology inference.
"""

__version__ = "0.1.0"
