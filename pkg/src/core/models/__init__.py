"""
Network, trip and triplet models
"""

from .departures import Block, DepartureList, Event, encode_departures
from .hop import Hop, Mode
from .itinerary import CostWeights, Itinerary, Leg, PlanResult, Query, SearchStats
from .network import Network
from .station import Station
from .triplet import Triplet, TripletMatrix, TripletStore

__all__ = ['Block', 'DepartureList', 'Event', 'encode_departures', 'Hop', 'Mode',
           'CostWeights', 'Itinerary', 'Leg', 'PlanResult', 'Query', 'SearchStats',
           'Network', 'Station', 'Triplet', 'TripletMatrix', 'TripletStore']
