"""
Abstract interfaces for network sources.
These interfaces keep GTFS feeds and synthetic generators interchangeable
when a network file is built.
"""
from abc import ABC, abstractmethod
from typing import TYPE_CHECKING, Dict, Any

if TYPE_CHECKING:
    from ...data.builder import NetworkBuilder


class NetworkSource(ABC):
    """Abstract base class for anything that contributes stations and hops"""

    @abstractmethod
    def describe(self) -> str:
        """Short human-readable description for logs and reports"""
        pass

    @abstractmethod
    def load(self) -> 'NetworkBuilder':
        """Read the source into a mutable partial network"""
        pass

    def info(self) -> Dict[str, Any]:
        """Metadata recorded with the built network"""
        return {'source': self.describe()}
