"""Finite-horizon estimators for proximal cells, dynamic balls and inner-distal measures.

Submodules: ``spaces``, ``systems``, ``proximal``, ``circle``, ``measures``,
``experiments`` and the ``cli`` entry point.
"""

__version__ = "0.1.0"
