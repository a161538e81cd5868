# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at http://mozilla.org/MPL/2.0/.
"""Writers (and a JSON reader) for records, traces, estimates, and inputs."""
import contextlib
import csv
import json
import logging
import os
import typing

import numpy as np

from . import error
from . import graph
from . import struct

logger = logging.getLogger(__name__)

FORMATS = ("csv", "json", "dot")

# Node fill colors for verdicts.  Numeric colorings blend HIDDEN to LEAKY.
COLORS = {
    "attacker": "red",
    "reconstructed": "purple",
    "leaked": "yellow",
    "hidden": "green",
}
HIDDEN = (0x2E, 0x8B, 0x57)
LEAKY = (0x80, 0x00, 0x80)


@contextlib.contextmanager
def _writing(path: str):
    try:
        directory = os.path.dirname(path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        with open(path, "w", newline="") as stream:
            yield stream
    except OSError as cause:
        raise error.RumorError(
            "unwritable path {} ({})".format(path, cause)
        ) from cause


def write_csv(record: struct.ResultRecord, path: str) -> None:
    """Header of columns then one line per row, in stored order."""
    with _writing(path) as stream:
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(record.columns)
        writer.writerows(record.rows)


def _encode_graph(g):
    if g is None:
        return None
    return {
        "n": g.n,
        "edges": sorted(list(e) for e in g.edges),
        "labels": None if g.labels is None else list(g.labels),
        "positions": None if g.positions is None else g.positions.tolist(),
    }


def _decode_graph(encoded):
    if encoded is None:
        return None
    positions = encoded.get("positions")
    return graph.new_graph(
        encoded["n"],
        (tuple(e) for e in encoded["edges"]),
        labels=encoded.get("labels"),
        positions=None if positions is None else np.array(positions),
    )


def _plain(o):
    if isinstance(o, np.generic):
        return o.item()
    raise TypeError("Cannot encode {!r}".format(o))


def to_json(record: struct.ResultRecord) -> str:
    """Every record field but elapsed, with coloring keys as strings.

    Wall-clock time stays out so replays serialize byte-identically."""
    document = record._asdict()
    del document["elapsed"]
    document["columns"] = list(record.columns)
    document["rows"] = [list(row) for row in record.rows]
    document["graph"] = _encode_graph(record.graph)
    if record.coloring is not None:
        document["coloring"] = {
            str(k): v for k, v in sorted(record.coloring.items())
        }
    text = json.dumps(document, indent=1, sort_keys=True, default=_plain)
    return text + "\n"


def write_json(record: struct.ResultRecord, path: str) -> None:
    with _writing(path) as stream:
        stream.write(to_json(record))


def from_json(text: str) -> struct.ResultRecord:
    """Inverse of to_json(...)."""
    try:
        document = json.loads(text)
        coloring = document.get("coloring")
        return struct.ResultRecord(
            experiment=document["experiment"],
            config_hash=document["config_hash"],
            seed=document["seed"],
            columns=tuple(document["columns"]),
            rows=tuple(tuple(row) for row in document["rows"]),
            elapsed=0.0,
            graph=_decode_graph(document.get("graph")),
            coloring=None
            if coloring is None
            else {int(k): v for k, v in coloring.items()},
        )
    except (ValueError, KeyError, TypeError) as cause:
        raise error.RumorError(
            "Malformed record ({})".format(cause)
        ) from cause


def read_json(path: str) -> struct.ResultRecord:
    try:
        with open(path) as stream:
            return from_json(stream.read())
    except OSError as cause:
        raise error.RumorError(
            "Cannot read record {} ({})".format(path, cause)
        ) from cause


def color(value: typing.Union[str, float]) -> str:
    """Fill color for a verdict or for a score in [0, 1]."""
    if isinstance(value, str):
        return COLORS.get(value, "white")
    s = min(1.0, max(0.0, float(value)))
    mixed = (round(lo + s * (hi - lo)) for lo, hi in zip(HIDDEN, LEAKY))
    return "#{:02x}{:02x}{:02x}".format(*mixed)


def write_dot(record: struct.ResultRecord, path: str) -> None:
    if record.graph is None:
        raise error.RumorError(
            "Record {} carries no graph".format(record.experiment)
        )
    colors = {v: color(c) for v, c in (record.coloring or {}).items()}
    with _writing(path) as stream:
        stream.write(
            graph.to_dot(
                record.graph, colors, name=record.experiment.replace("-", "_")
            )
        )


WRITERS = {"csv": write_csv, "json": write_json, "dot": write_dot}


def export(record: struct.ResultRecord, fmt: str, out: str) -> str:
    """Write record into directory out as <experiment>.<fmt>."""
    if fmt not in FORMATS:
        raise error.RumorError(
            "Unknown format {!r}; choose from {}".format(fmt, FORMATS)
        )
    path = os.path.join(out, "{}.{}".format(record.experiment, fmt))
    WRITERS[fmt](record, path)
    logger.info("export: wrote {}".format(path))
    return path


def write_trace(
    trace: typing.Union[struct.GossipTrace, struct.DgdTrace], path: str
) -> None:
    """Columnar (kind, iteration, node, coordinate, value) dump."""
    parts = [("theta", trace.theta)]
    if isinstance(trace, struct.DgdTrace):
        parts.append(("half", trace.half_steps))
    with _writing(path) as stream:
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(("kind", "iteration", "node", "coordinate", "value"))
        for kind, states in parts:
            states = np.asarray(states, dtype=float)
            for (t, v, c), value in np.ndenumerate(states):
                writer.writerow((kind, t, v, c, repr(float(value))))


def write_estimate(
    estimate: struct.GradientEstimate,
    path: str,
    truth: typing.Optional[np.ndarray] = None,
) -> None:
    """Columnar (node, coordinate, estimate, truth, abs_error) dump.

    Truth rows are indexed by node id; both trailing columns are blank
    without it."""
    values = np.asarray(estimate.values, dtype=float)
    with _writing(path) as stream:
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(
            ("node", "coordinate", "estimate", "truth", "abs_error")
        )
        for i, node in enumerate(estimate.nodes):
            for c, value in enumerate(values[i]):
                row = [node, c, repr(float(value)), "", ""]
                if truth is not None:
                    expected = float(truth[node][c])
                    gap = abs(float(value) - expected)
                    row[3:] = [repr(expected), repr(gap)]
                writer.writerow(row)


def write_vectors(
    inputs: np.ndarray, labels: typing.Sequence[int], path: str
) -> None:
    """Rows of 'label, x_1, ..., x_p' as read by dataset.load_vectors."""
    with _writing(path) as stream:
        writer = csv.writer(stream, lineterminator="\n")
        for label, x in zip(labels, np.asarray(inputs, dtype=float)):
            writer.writerow([int(label)] + [repr(float(v)) for v in x])


def write_pgm(image: np.ndarray, path: str, side: int) -> None:
    """Plain (P2) greyscale image from values in [0, 1]."""
    pixels = np.asarray(image, dtype=float).reshape(side, -1)
    levels = np.rint(255 * np.clip(pixels, 0.0, 1.0)).astype(int)
    with _writing(path) as stream:
        stream.write("P2\n{} {}\n255\n".format(levels.shape[1], side))
        for row in levels:
            stream.write(" ".join(str(v) for v in row) + "\n")
