"""
Graph package: chaining, estimation, triplet precompute, search and connectivity
"""

from .search import Planner, plan
from .triplets import precompute

__all__ = ['Planner', 'plan', 'precompute']
