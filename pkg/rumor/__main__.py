# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at http://mozilla.org/MPL/2.0/.
"""Audit and attack gossip protocols from the command line."""
import argparse
import logging
import os
import sys

from . import config
from . import error
from . import experiment
from . import export
from . import graph
from . import inversion
from . import struct

logger = logging.getLogger(__name__)

# Subcommands that run exactly one experiment kind.
COMMANDS = {
    "audit": "avg-audit",
    "attack-avg": "avg-attack",
    "attack-dgd": "dgd-attack",
}
SWEEPS = (
    "er-sweep",
    "dgd-line",
    "florentine",
    "lr-sweep",
    "geometric-saturation",
)
ANALYSES = ("centrality", "relationship")

EXIT_SUCCESS, EXIT_RUNTIME, EXIT_CONFIG = 0, 1, 2


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--config",
        metavar="PATH",
        help="Read key = value settings from PATH before any --set.",
    )
    common.add_argument(
        "--set",
        metavar="KEY=VALUE",
        action="append",
        default=[],
        help="Override one setting; may be repeated.",
    )
    common.add_argument(
        "--seed", metavar="N", type=int, help="Root seed for all randomness."
    )
    common.add_argument(
        "--out", metavar="DIR", help="Directory receiving every output."
    )
    common.add_argument(
        "--format",
        default="csv,json",
        help="Comma-separated output formats among {}.".format(
            ", ".join(export.FORMATS)
        ),
    )
    common.add_argument(
        "--verbose", action="store_true", help="Log progress and detail."
    )

    parser = argparse.ArgumentParser(prog="rumor", description=__doc__)
    commands = parser.add_subparsers(dest="command", metavar="COMMAND")
    commands.required = True
    for name, kind in COMMANDS.items():
        command = commands.add_parser(
            name, parents=[common], help="Run {}.".format(kind)
        )
        if name == "attack-dgd":
            command.add_argument(
                "--dump",
                action="store_true",
                help="Also write the trace, gradient estimates, and "
                "recovered inputs.",
            )
    sweep = commands.add_parser(
        "sweep", parents=[common], help="Run a preset experiment."
    )
    sweep.add_argument("preset", choices=SWEEPS)
    analyze = commands.add_parser(
        "analyze", parents=[common], help="Correlate graph structure."
    )
    analyze.add_argument("analysis", choices=ANALYSES)
    commands.add_parser(
        "gen-graph",
        parents=[common],
        help="Write the configured graph as an edge list and DOT.",
    )
    again = commands.add_parser(
        "export", parents=[common], help="Re-export a saved JSON record."
    )
    again.add_argument("record", metavar="RECORD.json")
    return parser


def _configuration(arguments) -> config.ExperimentConfig:
    cfg = config.ExperimentConfig()
    if arguments.config:
        cfg = config.load(arguments.config)
    cfg = config.override(
        cfg, dict(config.parse_assignment(x) for x in arguments.set)
    )
    flags = {"seed": arguments.seed, "out": arguments.out}
    return cfg._replace(**{k: v for k, v in flags.items() if v is not None})


def _formats(text: str):
    formats = [x.strip() for x in text.split(",") if x.strip()]
    for fmt in formats:
        if fmt not in export.FORMATS:
            raise error.ConfigError(
                "Unknown format {!r}; choose from {}".format(
                    fmt, export.FORMATS
                )
            )
    return formats


def _dump(record, cfg):
    """Rerun the D-GD attack behind record and write its internals."""
    graph_seed, trial_seed = experiment.seeds(cfg.seed, 2)
    g = experiment.make_graph(cfg, graph_seed)
    attackers = experiment.attacker_sets(cfg.attackers, g, cfg.seed)[0]
    trace, estimate, inputs = experiment.dgd_attack(
        cfg, g, attackers, trial_seed
    )
    truth = None
    if cfg.model == "synthetic" and not cfg.sigma:
        truth = trace.gradients[0]
    paths = [
        os.path.join(cfg.out, "{}-{}.csv".format(record.experiment, part))
        for part in ("trace", "estimate", "recovered")
    ]
    export.write_trace(trace, paths[0])
    export.write_estimate(estimate, paths[1], truth)

    recovered = inversion.reconstruct_inputs(estimate, cfg.classes)
    nodes = [v for v, datum in recovered.items() if datum is not None]
    export.write_vectors(
        [recovered[v].input for v in nodes],
        [recovered[v].label for v in nodes],
        paths[2],
    )
    if not cfg.data:
        guesses = experiment.recovered_inputs(estimate, inputs, cfg.classes)
        for v, guess in guesses.items():
            paths.append(
                os.path.join(cfg.out, "recovered-{}.pgm".format(v))
            )
            export.write_pgm(guess, paths[-1], cfg.side)
    return paths


def _dispatch(arguments) -> None:
    formats = _formats(arguments.format)
    if arguments.command == "export":
        record = export.read_json(arguments.record)
        out = arguments.out or os.path.dirname(arguments.record) or "."
        for fmt in formats:
            print(export.export(record, fmt, out))
        return

    cfg = _configuration(arguments)
    if arguments.command == "gen-graph":
        config.validate(cfg)
        g = experiment.make_graph(cfg, cfg.seed)
        os.makedirs(cfg.out, exist_ok=True)
        path = os.path.join(cfg.out, "graph.edges")
        graph.save_edge_list(g, path)
        with open(os.path.join(cfg.out, "graph.dot"), "w") as stream:
            stream.write(graph.to_dot(g))
        print(path)
        return

    kind = COMMANDS.get(arguments.command)
    if arguments.command == "sweep":
        kind = arguments.preset
    elif arguments.command == "analyze":
        kind = arguments.analysis
    record = experiment.run(cfg._replace(kind=kind))
    if getattr(arguments, "dump", False):
        for path in _dump(record, cfg._replace(kind=kind)):
            print(path)
    for fmt in formats:
        if fmt == "dot" and record.graph is None:
            logger.warning("main: {} has no graph for DOT".format(kind))
            continue
        print(export.export(record, fmt, cfg.out))
    summary = record._replace(rows=(), graph=None, coloring=None)
    logger.info("main: {}".format(struct.brief(summary)))


def main(args=None) -> int:
    arguments = _parser().parse_args(args)
    logging.basicConfig(
        level=logging.DEBUG if arguments.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        _dispatch(arguments)
    except error.ConfigError as cause:
        print("rumor: configuration error: {}".format(cause), file=sys.stderr)
        return EXIT_CONFIG
    except (error.RumorError, OSError) as cause:
        print("rumor: {}".format(cause), file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_SUCCESS


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
