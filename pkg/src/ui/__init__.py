"""
Rendering of plan results
"""

from .itinerary_view import ItineraryView, render_result

__all__ = ['ItineraryView', 'render_result']
