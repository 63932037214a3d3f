"""
bbtime - A journey planner for integrated ground and air public transport
"""

__version__ = '0.2.0'
