"""
Command-line surface: build, precompute, plan, diagnose and serve.

Exit codes:
    0  success
    1  internal error
    2  invalid input (bad flags, unknown or ambiguous station, unreadable file)
    3  no route found
"""
import argparse
import json
import logging
import sys
from typing import Any, Dict, List, Optional, Sequence, TextIO

from .core.data_service import NetworkService
from .core.errors import AmbiguousStationError, ValidationError
from .core.logging_setup import configure_logging
from .core.path_manager import path_manager
from .core.settings import Settings, load_settings

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_VALIDATION = 2
EXIT_NO_ROUTE = 3


def _levels(text: str) -> List[int]:
    try:
        return sorted({int(t) for t in text.split(',') if t.strip()})
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a list like '1,2', got '{text}'")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='bbtime', description="Journey planner for ground and air transport")
    parser.add_argument('--config', help="settings file (default: config/settings.json)")
    parser.add_argument('--log-level', help="DEBUG, INFO, WARNING or ERROR")
    commands = parser.add_subparsers(dest='command', required=True)

    build = commands.add_parser('build', help="build a network file from feeds or a generator spec")
    build.add_argument('--gtfs', action='append', default=[], metavar='FEED',
                       help="GTFS directory, optionally 'path,offset=-18000,days=14,...' (repeatable)")
    build.add_argument('--generator', metavar='SPEC', help="synthetic generator spec file")
    build.add_argument('--seed', type=int, help="generator seed, overrides the spec")
    build.add_argument('--walk', action=argparse.BooleanOptionalAction, default=True,
                       help="add walk hops between nearby stations")
    build.add_argument('--max-walk-pair', type=float, metavar='M', help="walk hop threshold in meters")
    build.add_argument('--taxi', action=argparse.BooleanOptionalAction, default=None,
                       help="enable generated taxi hops")
    build.add_argument('--cluster-radius', type=float, default=0.0, metavar='M',
                       help="group stations within this distance into one node")
    build.add_argument('-o', '--out', required=True, help="network file to write")

    precompute = commands.add_parser('precompute', help="add triplets and the mesh table to a network file")
    precompute.add_argument('network', nargs='?', help="network file (default: $BBTIME_NET)")
    precompute.add_argument('--levels', type=_levels, default=[1, 2], metavar='T,...',
                            help="transfer levels to precompute (default 1,2)")
    precompute.add_argument('--seed', type=int, help="estimator seed")
    precompute.add_argument('--samples', type=int, help="estimator sample count")
    precompute.add_argument('--workers', type=int, default=1, help="worker processes")
    precompute.add_argument('--mesh-cell', type=float, help="mesh cell size in degrees")
    precompute.add_argument('--no-mesh', action='store_true', help="skip the mesh table")
    precompute.add_argument('-o', '--out', help="output file (default: update in place)")

    plan = commands.add_parser('plan', help="plan a journey")
    plan.add_argument('network', nargs='?', help="network file (default: $BBTIME_NET)")
    plan.add_argument('--from', dest='origin', required=True, help="station id, name or 'lat,lon'")
    plan.add_argument('--to', dest='destination', required=True, help="station id, name or 'lat,lon'")
    plan.add_argument('--dep-after', help="earliest departure, ISO 8601 (default: start of horizon)")
    plan.add_argument('--max-walk', type=float, metavar='M', help="walking allowance in meters")
    plan.add_argument('--budget-ms', type=int, help="search time budget in milliseconds")
    plan.add_argument('--tmax', type=int, help="maximum transfers (0..7)")
    plan.add_argument('--window', type=int, metavar='S', help="initial window in seconds")
    plan.add_argument('--flex', action=argparse.BooleanOptionalAction, default=True,
                      help="widen the window when results look poor")
    plan.add_argument('--no-air', action='store_true', help="exclude flights")
    plan.add_argument('--no-taxi', action='store_true', help="exclude taxi hops")
    plan.add_argument('--weights', help="cost weights as k=v,... (transfer, walk, taxi, wait, fare)")
    plan.add_argument('--overlay', metavar='FILE', help="annotation feed applied before planning")
    plan.add_argument('--json', action='store_true', help="print the machine-readable result")

    diagnose = commands.add_parser('diagnose', help="report network connectivity")
    diagnose.add_argument('network', nargs='?', help="network file (default: $BBTIME_NET)")

    serve = commands.add_parser('serve', help="answer plan requests over HTTP")
    serve.add_argument('network', nargs='?', help="network file (default: $BBTIME_NET)")
    serve.add_argument('--host', default='127.0.0.1')
    serve.add_argument('--port', type=int, default=8765)
    return parser


# ----------------------------------------------------------------------
# Commands
# ----------------------------------------------------------------------
def cmd_build(args, settings: Settings, out: TextIO) -> int:
    from .data.builder import NetworkBuilder
    from .data.gtfs_parser import FeedConfig, GtfsFeed
    from .data.multimodal import add_taxi_edges, add_walk_edges
    from .data.network_file import write_network_file
    from .data.synthetic import SyntheticSource, load_generator_spec
    from .graph.clustering import cluster_stations

    sources = [GtfsFeed(FeedConfig.parse(text)) for text in args.gtfs]
    if args.generator:
        sources.append(SyntheticSource(load_generator_spec(args.generator), args.seed))
    if not sources:
        raise ValidationError("build needs at least one --gtfs feed or a --generator spec")

    builder = NetworkBuilder()
    for source in sources:
        logger.info("Loading %s", source.describe())
        builder.merge(source.load())
    network = builder.build()

    multimodal = settings.multimodal
    if args.max_walk_pair is not None:
        multimodal.max_walk_pair_m = args.max_walk_pair
    if args.taxi is not None:
        multimodal.generated_taxi.enabled = args.taxi
    if args.walk:
        network = add_walk_edges(network, multimodal)
    network = add_taxi_edges(network, multimodal)
    if args.cluster_radius > 0:
        network = cluster_stations(network, args.cluster_radius)

    write_network_file(args.out, network)
    path_manager.save_last_network({'path': args.out, 'sources': [s.info() for s in sources]})
    summary = network.summary()
    out.write(f"stations: {summary['stations']}  hops: {summary['hops']}  events: {summary['events']}  "
              f"blocks: {summary['blocks']}  nodes: {summary['nodes']}\n")
    return EXIT_OK


def cmd_precompute(args, settings: Settings, out: TextIO) -> int:
    from .data.network_file import read_network_file, write_network_file
    from .graph.triplets import precompute

    path = path_manager.resolve_network_file(args.network)
    content = read_network_file(path)
    estimator = settings.estimator
    if args.seed is not None:
        estimator.rng_seed = args.seed
    if args.samples is not None:
        estimator.sample_count = args.samples
    cell = None if args.no_mesh else (args.mesh_cell or settings.mesh.cell_deg)

    result = precompute(content.network, args.levels, estimator, settings.search,
                        workers=max(1, args.workers), mesh_cell_deg=cell)
    target = args.out or path
    write_network_file(target, content.network, result.triplets, result.mesh, result.report.to_dict())

    report = result.report.to_text()
    report_path = path_manager.get_report_path('precompute')
    with open(report_path, 'w', encoding='utf-8') as f:
        f.write(report)
    logger.info("Saved precompute report to %s", report_path)
    path_manager.cleanup_old_runs()
    out.write(report)
    return EXIT_OK


def plan_request_from_args(args) -> Dict[str, Any]:
    """The request dictionary a server line would carry for the same flags"""
    request: Dict[str, Any] = {
        'from': args.origin,
        'to': args.destination,
        'flex': args.flex,
        'allow_air': not args.no_air,
        'allow_taxi': not args.no_taxi,
    }
    optional = {'dep_after': args.dep_after, 'max_walk': args.max_walk, 'budget_ms': args.budget_ms,
                'tmax': args.tmax, 'window': args.window, 'weights': args.weights}
    request.update({k: v for k, v in optional.items() if v is not None})
    return request


def cmd_plan(args, settings: Settings, out: TextIO) -> int:
    from .ui.itinerary_view import render_result

    service = NetworkService(settings).load(path_manager.resolve_network_file(args.network))
    if args.overlay:
        service.apply_feed(args.overlay)
    result = service.plan_request(plan_request_from_args(args))
    if args.json:
        out.write(json.dumps(result.to_dict(), sort_keys=True) + "\n")
    else:
        out.write(render_result(service.network, result))
    return EXIT_OK if result.found else EXIT_NO_ROUTE


def cmd_diagnose(args, settings: Settings, out: TextIO) -> int:
    from .data.network_file import read_network_file
    from .graph.connectivity import connectivity_report

    content = read_network_file(path_manager.resolve_network_file(args.network))
    out.write(connectivity_report(content.network))
    return EXIT_OK


def cmd_serve(args, settings: Settings, out: TextIO) -> int:
    from web_app import create_app

    service = NetworkService(settings).load(path_manager.resolve_network_file(args.network))
    app = create_app(service)
    logger.info("Serving %s on http://%s:%d", service.network, args.host, args.port)
    app.run(host=args.host, port=args.port, threaded=True, use_reloader=False)
    return EXIT_OK


COMMANDS = {
    'build': cmd_build,
    'precompute': cmd_precompute,
    'plan': cmd_plan,
    'diagnose': cmd_diagnose,
    'serve': cmd_serve,
}


def main(argv: Optional[Sequence[str]] = None, out: Optional[TextIO] = None, err: Optional[TextIO] = None) -> int:
    """Run one command and return its exit code"""
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_VALIDATION

    try:
        settings = load_settings(args.config)
        configure_logging(settings.logging, args.log_level)
        return COMMANDS[args.command](args, settings, out)
    except AmbiguousStationError as e:
        err.write(f"error: {e}\n")
        for candidate in e.candidates:
            err.write(f"  {candidate}\n")
        return EXIT_VALIDATION
    except ValidationError as e:
        err.write(f"error: {e}\n")
        return EXIT_VALIDATION
    except OSError as e:
        err.write(f"error: {e}\n")
        return EXIT_VALIDATION
    except Exception as e:
        logger.exception("Command %s failed", args.command)
        err.write(f"internal error: {e}\n")
        return EXIT_INTERNAL
