"""
Plain-text trip reports.

Times are local to the station they refer to and written as
``YYYYMMDD.hmm`` (hours x 100 + minutes, no padding). Legs are numbered;
a station change inside a cluster is shown as a ``within`` line before the
leg that boards there.
"""
import logging
from typing import List, Optional

from ..core.models.itinerary import Itinerary, Leg, PlanResult, SearchStats
from ..core.models.network import Network
from ..core.timezones import local_datetime

logger = logging.getLogger(__name__)


def format_local_time(utc_seconds: int, network: Network, station: int) -> str:
    moment = local_datetime(utc_seconds, network.offset_schedule(station))
    return f"{moment:%Y%m%d}.{moment.hour * 100 + moment.minute}"


def format_duration(seconds: float) -> str:
    """'8 hours 2 min', '1 hour', '45 min'"""
    minutes = int(round(seconds / 60.0))
    hours, minutes = divmod(minutes, 60)
    parts = []
    if hours:
        parts.append(f"{hours} hour" + ("" if hours == 1 else "s"))
    if minutes or not hours:
        parts.append(f"{minutes} min")
    return " ".join(parts)


def format_distance(meters: float) -> str:
    """'990 m', '3.83 Km', '776.3 Km'"""
    if meters < 1000:
        return f"{int(round(meters))} m"
    km = meters / 1000.0
    if km < 10:
        return f"{km:.2f} Km"
    return f"{km:.1f} Km"


def format_count(value: int, unit: str) -> str:
    scale = {'K': 1e3, 'M': 1e6}[unit]
    return f"{value / scale:.2f} {unit}"


class ItineraryView:
    """Renders plan results against the network they were planned on"""

    def __init__(self, network: Network):
        self.network = network

    def _station(self, station: int) -> str:
        s = self.network.stations[station]
        return f"{s.name} {s.lat:.7f},{s.lon:.7f}"

    def _within(self, station: int, meters: float) -> str:
        return f"{self._station(station)} within {int(round(meters / 10.0)) * 10} m"

    def _ride_line(self, leg: Leg) -> str:
        hop = self.network.hops[leg.hop_id]
        parts = [hop.label, format_duration(leg.duration_seconds), format_distance(leg.distance_m)]
        line = " ".join(p for p in parts if p)
        if not hop.scheduled:
            direct = self.network.distance_m(leg.board_station, leg.alight_station)
            line += f" (direct {format_distance(direct)})"
        if leg.fare is not None:
            line += f" fare {leg.fare:.2f}"
        return line

    def summary_line(self, itinerary: Itinerary, next_itinerary: Optional[Itinerary] = None) -> str:
        distance = sum(leg.distance_m for leg in itinerary.legs)
        line = (f"summary: {itinerary.signature} {format_duration(itinerary.elapsed_seconds)} "
                f"{format_distance(distance)} {len(itinerary.legs) - 1} stops")
        if next_itinerary is not None and next_itinerary.depart_utc > itinerary.depart_utc:
            line += f" next in {format_duration(next_itinerary.depart_utc - itinerary.depart_utc)}"
        return line

    def stats_line(self, stats: SearchStats) -> str:
        line = (f"evaluated {format_count(stats.alternatives_evaluated, 'K')} alternatives with "
                f"{format_count(stats.departures_scanned, 'M')} departure times in "
                f"{int(round(stats.elapsed_ms))} milliseconds")
        if stats.time_limited:
            line += " (time limited)"
        return line

    def legs(self, itinerary: Itinerary) -> List[str]:
        lines: List[str] = []
        for number, leg in enumerate(itinerary.legs, start=1):
            board = format_local_time(leg.board_utc, self.network, leg.board_station)
            if number == 1:
                lines.append(f"{number}. {board} {self._station(leg.board_station)}")
            else:
                if leg.displacement_m > 0:
                    lines.append("")
                    lines.append(self._within(leg.board_station, leg.displacement_m))
                wait = leg.wait_before_seconds
                tail = f" with {format_duration(wait)} transfer time" if wait >= 60 else ""
                lines.append(f"{number}. {board} continue{tail}")
            lines.append(self._ride_line(leg))
            alight = format_local_time(leg.alight_utc, self.network, leg.alight_station)
            lines.append(f"{alight} {self._station(leg.alight_station)}")
        return lines

    def render(self, result: PlanResult) -> str:
        """Full report: endpoints, summary, numbered legs and the stats footer"""
        query = result.query
        dep = self.network.stations[query.dep_station]
        arr = self.network.stations[query.arr_station]
        lines = [f"From: {dep.name}", f"{dep.lat:.6f},{dep.lon:.6f}",
                 f"To: {arr.name}", f"{arr.lat:.6f},{arr.lon:.6f}", ""]
        itinerary = result.itinerary
        if itinerary is None:
            lines.append(f"no route: {result.no_route_reason}")
        else:
            runner_up = result.alternatives[0] if result.alternatives else None
            lines.append(self.summary_line(itinerary, runner_up))
            lines.append("")
            lines.extend(self.legs(itinerary))
            if itinerary.final_displacement_m > 0:
                lines.append("")
                lines.append(self._within(query.arr_station, itinerary.final_displacement_m))
        lines.append("")
        lines.append(self.stats_line(result.stats))
        return "\n".join(lines) + "\n"


def render_result(network: Network, result: PlanResult) -> str:
    return ItineraryView(network).render(result)
