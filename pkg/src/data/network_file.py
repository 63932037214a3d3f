"""
BBT1 network file: a sectioned little-endian binary container.

Layout: the magic ``BBT1`` followed by sections, each a 4-byte ASCII tag,
a u64 payload length and the payload. Readers skip unknown tags.

  STAT  u32 n; n x (f64 lat, f64 lon, u32 tz_index, i32 cluster or -1, str name, str code)
  TZON  u32 n; n x (i32 base_offset, u32 k, k x (i64 switch_utc, i32 offset))
  HOPS  u32 n; n x (u32 from, u32 to, u32 route, u8 mode letter, u32 fixed duration or 0,
        f64 route distance, f64 fare or NaN, str route name, str agency,
        u32 first block, u32 block count)
  DEPS  u32 n; n x (i64 base_utc, u32 period, u32 count, u32 duration)
  XFER  u32 n; n x (u32 station, u32 seconds)
  HRZN  i64 begin, i64 end
  TRP0, TRP1, TRP2  triplets for one transfer count:
        u32 pairs; pairs x (u32 dep node, u32 arr node, u16 k,
        k x (u8 v, v x u32 via, u8 h, h x u32 hop, u32 typical, u32 min))
  MESH  f64 cell_deg, u32 n; n x (i32 lat_a, i32 lon_a, i32 lat_b, i32 lon_b, u8 bound)
  PREC  UTF-8 JSON with precompute parameters and report

Strings are u16 byte length plus UTF-8. Event identity for overlays is the
ordinal within a hop's decoded departure list. Output is byte-identical for
identical content.
"""
import io
import json
import logging
import math
import os
import struct
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from ..core.errors import LoadError
from ..core.models.departures import Block, DepartureList
from ..core.models.hop import Hop, Mode
from ..core.models.network import Network
from ..core.models.station import Station
from ..core.models.triplet import Triplet, TripletMatrix, TripletStore
from ..core.timezones import UtcOffsetSchedule
from ..graph.connectivity import MeshTable

logger = logging.getLogger(__name__)

MAGIC = b"BBT1"
SUPPORTED_VERSIONS = (b"1",)

BLOCK_DTYPE = np.dtype([('base', '<i8'), ('period', '<u4'), ('count', '<u4'), ('duration', '<u4')])
MODE_BY_LETTER = {m.letter: m for m in Mode}


@dataclass
class NetworkFile:
    """Contents of a network file"""
    network: Network
    triplets: Optional[TripletStore] = None
    mesh: Optional[MeshTable] = None
    precompute: Dict[str, Any] = field(default_factory=dict)


class _Writer:
    def __init__(self):
        self.buffer = io.BytesIO()

    def pack(self, fmt: str, *values):
        self.buffer.write(struct.pack('<' + fmt, *values))

    def string(self, text: str):
        data = text.encode('utf-8')
        if len(data) > 0xFFFF:
            data = data[:0xFFFF]
        self.pack('H', len(data))
        self.buffer.write(data)

    def raw(self, data: bytes):
        self.buffer.write(data)

    def getvalue(self) -> bytes:
        return self.buffer.getvalue()


class _Reader:
    def __init__(self, data: bytes, tag: str):
        self.data = memoryview(data)
        self.offset = 0
        self.tag = tag

    def unpack(self, fmt: str) -> Tuple:
        fmt = '<' + fmt
        size = struct.calcsize(fmt)
        if self.offset + size > len(self.data):
            raise LoadError(f"Section {self.tag} is truncated")
        values = struct.unpack_from(fmt, self.data, self.offset)
        self.offset += size
        return values

    def one(self, fmt: str):
        return self.unpack(fmt)[0]

    def string(self) -> str:
        length = self.one('H')
        if self.offset + length > len(self.data):
            raise LoadError(f"Section {self.tag} is truncated")
        text = bytes(self.data[self.offset:self.offset + length]).decode('utf-8')
        self.offset += length
        return text

    def take(self, size: int) -> bytes:
        if self.offset + size > len(self.data):
            raise LoadError(f"Section {self.tag} is truncated")
        chunk = bytes(self.data[self.offset:self.offset + size])
        self.offset += size
        return chunk


# ----------------------------------------------------------------------
# Section encoders
# ----------------------------------------------------------------------

def _stations_section(network: Network) -> bytes:
    w = _Writer()
    w.pack('I', network.station_count)
    for s in network.stations:
        w.pack('ddIi', s.lat, s.lon, s.tz_index, -1 if s.cluster_id is None else s.cluster_id)
        w.string(s.name)
        w.string(s.code)
    return w.getvalue()


def _timezones_section(network: Network) -> bytes:
    w = _Writer()
    w.pack('I', len(network.timezones))
    for tz in network.timezones:
        w.pack('iI', tz.base_offset_seconds, len(tz.switches))
        for switch, offset in tz.switches:
            w.pack('qi', switch, offset)
    return w.getvalue()


def _hops_sections(network: Network) -> Tuple[bytes, bytes]:
    hops, blocks = _Writer(), []
    hops.pack('I', network.hop_count)
    for hop in network.hops:
        hop_blocks = hop.departures.blocks if hop.departures is not None else ()
        hops.pack('IIIBIdd', hop.from_station, hop.to_station, hop.route_id, ord(hop.mode.letter),
                  hop.fixed_duration_seconds or 0, hop.route_distance_m,
                  math.nan if hop.fare_estimate is None else hop.fare_estimate)
        hops.string(hop.route_name)
        hops.string(hop.agency)
        hops.pack('II', len(blocks), len(hop_blocks))
        blocks.extend(hop_blocks)
    deps = _Writer()
    deps.pack('I', len(blocks))
    deps.raw(np.array([tuple(b) for b in blocks], dtype=BLOCK_DTYPE).tobytes())
    return hops.getvalue(), deps.getvalue()


def _transfers_section(network: Network) -> bytes:
    w = _Writer()
    w.pack('I', len(network.transfer_overrides))
    for station, seconds in sorted(network.transfer_overrides.items()):
        w.pack('II', station, seconds)
    return w.getvalue()


def _horizon_section(network: Network) -> bytes:
    return struct.pack('<qq', *network.horizon)


def _triplet_section(matrix: TripletMatrix) -> bytes:
    w = _Writer()
    w.pack('I', matrix.pair_count)
    for (dep, arr), triplets in matrix.pairs():
        w.pack('IIH', dep, arr, len(triplets))
        for t in triplets:
            w.pack('B', len(t.via_stations))
            for via in t.via_stations:
                w.pack('I', via)
            w.pack('B', len(t.hop_sequence))
            for hop_id in t.hop_sequence:
                w.pack('I', hop_id)
            w.pack('II', t.typical_e2e_seconds, t.min_e2e_seconds)
    return w.getvalue()


def _mesh_section(mesh: MeshTable) -> bytes:
    w = _Writer()
    w.pack('dI', mesh.cell_deg, len(mesh.entries))
    for (a, b), value in sorted(mesh.entries.items()):
        w.pack('iiiiB', a[0], a[1], b[0], b[1], min(255, value))
    return w.getvalue()


def encode_network_file(content: NetworkFile) -> bytes:
    """Serialize network, triplets, mesh and precompute info"""
    network = content.network
    hops, deps = _hops_sections(network)
    sections: List[Tuple[bytes, bytes]] = [
        (b"STAT", _stations_section(network)),
        (b"TZON", _timezones_section(network)),
        (b"HOPS", hops),
        (b"DEPS", deps),
        (b"XFER", _transfers_section(network)),
        (b"HRZN", _horizon_section(network)),
    ]
    if content.triplets is not None:
        for t in content.triplets.levels:
            sections.append((f"TRP{t}".encode('ascii'), _triplet_section(content.triplets.layers[t])))
    if content.mesh is not None:
        sections.append((b"MESH", _mesh_section(content.mesh)))
    if content.precompute:
        sections.append((b"PREC", json.dumps(content.precompute, sort_keys=True).encode('utf-8')))

    out = io.BytesIO()
    out.write(MAGIC)
    for tag, payload in sections:
        out.write(tag)
        out.write(struct.pack('<Q', len(payload)))
        out.write(payload)
    return out.getvalue()


# ----------------------------------------------------------------------
# Section decoders
# ----------------------------------------------------------------------

def _read_stations(r: _Reader) -> List[Station]:
    stations = []
    for index in range(r.one('I')):
        lat, lon, tz_index, cluster = r.unpack('ddIi')
        name = r.string()
        code = r.string()
        stations.append(Station(index, name, lat, lon, tz_index, None if cluster < 0 else cluster, code))
    return stations


def _read_timezones(r: _Reader) -> List[UtcOffsetSchedule]:
    schedules = []
    for _ in range(r.one('I')):
        base, count = r.unpack('iI')
        switches = tuple(r.unpack('qi') for _ in range(count))
        schedules.append(UtcOffsetSchedule(base, switches))
    return schedules


def _read_blocks(r: _Reader) -> np.ndarray:
    count = r.one('I')
    return np.frombuffer(r.take(count * BLOCK_DTYPE.itemsize), dtype=BLOCK_DTYPE)


def _read_hops(r: _Reader, blocks: np.ndarray) -> List[Hop]:
    hops = []
    for index in range(r.one('I')):
        from_station, to_station, route, letter, fixed, distance, fare = r.unpack('IIIBIdd')
        route_name = r.string()
        agency = r.string()
        first, count = r.unpack('II')
        mode = MODE_BY_LETTER.get(chr(letter))
        if mode is None:
            raise LoadError(f"Hop {index} has unknown mode letter {chr(letter)!r}")
        departures = None
        if not fixed:
            chunk = blocks[first:first + count]
            departures = DepartureList([Block(int(b['base']), int(b['period']), int(b['count']), int(b['duration']))
                                        for b in chunk])
        hops.append(Hop(index, from_station, to_station, route, mode, departures,
                        fixed or None, distance, route_name, agency, None if math.isnan(fare) else fare))
    return hops


def _read_triplets(r: _Reader, node_count: int) -> TripletMatrix:
    entries: Dict[Tuple[int, int], List[Triplet]] = {}
    for _ in range(r.one('I')):
        dep, arr, count = r.unpack('IIH')
        triplets = []
        for _ in range(count):
            vias = tuple(r.one('I') for _ in range(r.one('B')))
            hop_ids = tuple(r.one('I') for _ in range(r.one('B')))
            typical, minimum = r.unpack('II')
            triplets.append(Triplet(vias, hop_ids, typical, minimum))
        entries[(dep, arr)] = triplets
    return TripletMatrix(node_count, entries)


def _read_mesh(r: _Reader) -> MeshTable:
    cell_deg, count = r.unpack('dI')
    entries = {}
    for _ in range(count):
        lat_a, lon_a, lat_b, lon_b, value = r.unpack('iiiiB')
        entries[((lat_a, lon_a), (lat_b, lon_b))] = value
    return MeshTable(cell_deg, entries)


def split_sections(data: bytes) -> Dict[str, bytes]:
    """Map of section tag to payload; validates the magic"""
    if len(data) < 4 or data[:3] != MAGIC[:3]:
        raise LoadError("Not a BBT network file (bad magic)")
    if data[3:4] not in SUPPORTED_VERSIONS:
        raise LoadError(f"Unsupported network file version {data[3:4].decode('ascii', 'replace')}")
    sections: Dict[str, bytes] = {}
    offset = 4
    while offset < len(data):
        if offset + 12 > len(data):
            raise LoadError("Truncated section header")
        tag = data[offset:offset + 4].decode('ascii', 'replace')
        (length,) = struct.unpack_from('<Q', data, offset + 4)
        offset += 12
        if offset + length > len(data):
            raise LoadError(f"Section {tag} is truncated")
        sections[tag] = data[offset:offset + length]
        offset += length
    return sections


def decode_network_file(data: bytes) -> NetworkFile:
    sections = split_sections(data)
    for tag in ("STAT", "HOPS", "DEPS", "HRZN"):
        if tag not in sections:
            raise LoadError(f"Network file lacks the {tag} section")

    stations = _read_stations(_Reader(sections["STAT"], "STAT"))
    timezones = _read_timezones(_Reader(sections["TZON"], "TZON")) if "TZON" in sections else []
    blocks = _read_blocks(_Reader(sections["DEPS"], "DEPS"))
    hops = _read_hops(_Reader(sections["HOPS"], "HOPS"), blocks)
    overrides = {}
    if "XFER" in sections:
        r = _Reader(sections["XFER"], "XFER")
        for _ in range(r.one('I')):
            station, seconds = r.unpack('II')
            overrides[station] = seconds
    horizon = _Reader(sections["HRZN"], "HRZN").unpack('qq')
    network = Network(stations, hops, horizon, overrides, timezones or [UtcOffsetSchedule()])

    triplets = None
    levels = sorted(int(tag[3]) for tag in sections if tag.startswith("TRP") and tag[3:].isdigit())
    if levels:
        triplets = TripletStore(network.node_count)
        for t in levels:
            triplets.set_layer(t, _read_triplets(_Reader(sections[f"TRP{t}"], f"TRP{t}"), network.node_count))
    mesh = _read_mesh(_Reader(sections["MESH"], "MESH")) if "MESH" in sections else None
    precompute = json.loads(sections["PREC"].decode('utf-8')) if "PREC" in sections else {}
    return NetworkFile(network, triplets, mesh, precompute)


def write_network_file(path: str, network: Network, triplets: Optional[TripletStore] = None,
                       mesh: Optional[MeshTable] = None, precompute: Optional[Dict[str, Any]] = None):
    """Write a network file atomically"""
    data = encode_network_file(NetworkFile(network, triplets, mesh, precompute or {}))
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    temp = path + ".tmp"
    with open(temp, 'wb') as f:
        f.write(data)
    os.replace(temp, path)
    logger.info("Wrote %s (%d bytes, %d stations, %d hops)", path, len(data),
                network.station_count, network.hop_count)


def read_network_file(path: str) -> NetworkFile:
    """Read a network file, raising LoadError with the path on failure"""
    try:
        with open(path, 'rb') as f:
            data = f.read()
    except OSError as e:
        raise LoadError(f"Cannot read network file: {e}", path=path) from e
    try:
        content = decode_network_file(data)
    except LoadError as e:
        raise LoadError(str(e), path=path) from e
    except (struct.error, UnicodeDecodeError, ValueError) as e:
        raise LoadError(f"Corrupt network file: {e}", path=path) from e
    logger.info("Loaded %s: %d stations, %d hops", path, content.network.station_count, content.network.hop_count)
    return content
