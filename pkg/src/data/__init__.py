"""
Data handling components: feed importers, the synthetic generator,
multimodal edge synthesis and the network file format
"""

from .builder import NetworkBuilder
from .network_file import read_network_file, write_network_file

__all__ = ['NetworkBuilder', 'read_network_file', 'write_network_file']
