"""
Small hand-built networks with known answers.
"""
from src.core.models.hop import Mode
from src.data.builder import NetworkBuilder
from src.data.synthetic import GeneratorSpec, generate_synthetic

T0 = 1450051200  # Monday 2015-12-14 00:00 UTC
DAY = 86400

# Hop ids of the corridor network (hops are numbered by from, to, route)
LOCAL_AB = 0
EXPRESS_AC = 1
LOCAL_BC = 2


def corridor_builder(express_days: int = 1) -> NetworkBuilder:
    """
    Three stations on one street. Local buses A->B every 10 min and B->C every
    15 min from 01:00 and 01:05, 10 min rides; one express A->C at 02:00 a day.
    """
    builder = NetworkBuilder()
    a = builder.add_station("Alder Street", 39.29, -76.61, code="A", key="A")
    b = builder.add_station("Birch Square", 39.29, -76.58, code="B", key="B")
    c = builder.add_station("Cedar Park", 39.29, -76.55, code="C", key="C")
    local_ab = builder.add_route("r1", "001", "Metro")
    local_bc = builder.add_route("r2", "002", "Metro")
    express = builder.add_route("r3", "X9", "Metro")
    builder.add_events(local_ab, a, b, Mode.BUS, [(T0 + 3600 + k * 600, 600) for k in range(20)])
    builder.add_events(local_bc, b, c, Mode.BUS, [(T0 + 3900 + k * 900, 600) for k in range(20)])
    builder.add_events(express, a, c, Mode.BUS, [(T0 + 7200 + d * DAY, 900) for d in range(express_days)])
    builder.extend_horizon(T0, T0 + 3 * DAY)
    return builder


def corridor_network(express_days: int = 1):
    return corridor_builder(express_days).build()


def island_network():
    """The corridor plus a station nothing serves"""
    builder = corridor_builder()
    builder.add_station("Lonely Pier", 39.40, -76.40, key="L")
    return builder.build()


def two_zone_network():
    """
    One train from a UTC station to a station whose feed runs five hours
    behind UTC.
    """
    from src.core.timezones import UtcOffsetSchedule

    builder = NetworkBuilder()
    east = builder.add_timezone(UtcOffsetSchedule(-5 * 3600))
    a = builder.add_station("Union Station", 39.30, -76.60, tz_index=0, key="U")
    b = builder.add_station("Penn Station", 39.31, -76.62, tz_index=east, key="P")
    route = builder.add_route("t1", "Northeast", "Amtrak")
    builder.add_events(route, a, b, Mode.TRAIN, [(T0 + 36000, 1800)])
    builder.extend_horizon(T0, T0 + DAY)
    return builder.build()


FAMILY_SPECS = {
    'line': GeneratorSpec(topology='line', stations=8, days=2, headways=(1800, 3600), spacing_m=1500.0),
    'grid': GeneratorSpec(topology='grid', stations=9, days=2, headways=(1800, 3600), spacing_m=1500.0,
                          irregularity=0.3),
    'hub': GeneratorSpec(topology='hub', stations=7, days=2, headways=(1800, 3600), spacing_m=2000.0),
    'random': GeneratorSpec(topology='random', stations=12, days=2, headways=(1800, 3600), spacing_m=1500.0,
                            irregularity=0.5),
    'multimodal': GeneratorSpec(topology='multimodal', stations=9, cities=3, days=2, headways=(1800, 3600),
                                spacing_m=1500.0, intercity_m=200_000.0),
}


def family_network(name: str, seed: int = 7):
    if name == 'grid+walk':
        from src.core.settings import MultimodalConfig
        from src.data.multimodal import add_walk_edges
        return add_walk_edges(generate_synthetic(FAMILY_SPECS['grid'], seed), MultimodalConfig(max_walk_pair_m=1600.0))
    return generate_synthetic(FAMILY_SPECS[name], seed)


def cluster_network():
    """
    The corridor with a second Birch stop 150 m away, served by its own bus
    to Cedar Park, and the two Birch stops clustered into one node.
    """
    from src.graph.clustering import cluster_stations

    builder = corridor_builder()
    annex = builder.add_station("Birch Annex", 39.29135, -76.58, key="B2")
    c = builder.station_id("C")
    shuttle = builder.add_route("r4", "S1", "Metro")
    builder.add_events(shuttle, annex, c, Mode.BUS, [(T0 + 4500 + k * 1200, 480) for k in range(12)])
    return cluster_stations(builder.build(), 300.0)


def daily_service_network(with_local: bool = False):
    """
    A long-haul train once a day at 22:00 from Harbor to Summit; optionally a
    slow hourly local chain Harbor -> Mill -> Summit.
    """
    builder = NetworkBuilder()
    harbor = builder.add_station("Harbor", 39.28, -76.60, key="H")
    mill = builder.add_station("Mill", 39.60, -76.90, key="M")
    summit = builder.add_station("Summit", 39.95, -77.20, key="S")
    train = builder.add_route("lh", "Limited", "Rail")
    first = builder.add_route("l1", "11", "County")
    second = builder.add_route("l2", "12", "County")
    builder.add_events(train, harbor, summit, Mode.TRAIN, [(T0 + 22 * 3600 + d * DAY, 3600) for d in range(3)])
    if with_local:
        builder.add_events(first, harbor, mill, Mode.BUS, [(T0 + h * 3600, 5400) for h in range(72)])
        builder.add_events(second, mill, summit, Mode.BUS, [(T0 + h * 3600 + 1800, 5400) for h in range(72)])
    builder.extend_horizon(T0, T0 + 4 * DAY)
    return builder.build()
