# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at http://mozilla.org/MPL/2.0/.
"""Experiment configuration from flat key = value files and overrides.

Every key has a default whose type decides how text is coerced.  Tuples
are written comma-separated, e.g. ``etas = 1e-5, 1e-3``."""
import collections
import configparser
import hashlib
import json
import logging
import typing

from . import error

logger = logging.getLogger(__name__)

KINDS = (
    "avg-audit",
    "avg-attack",
    "dgd-attack",
    "er-sweep",
    "dgd-line",
    "florentine",
    "lr-sweep",
    "geometric-saturation",
    "centrality",
    "relationship",
)
GRAPHS = ("er", "line", "geometric", "florentine", "edges")

# Name, coercion, and default for every key.  A seed has no default.
FIELDS = collections.OrderedDict(
    [
        ("kind", (str, "avg-audit")),
        ("graph", (str, "er")),
        ("nodes", (int, 20)),
        ("probability", (float, 0.2)),
        ("radius", (float, 0.2)),
        ("connected", (int, 1)),
        ("edges", (str, "")),
        ("scheme", (str, "metropolis")),
        ("attackers", (str, "0")),
        ("iterations", (int, 0)),
        ("window_start", (str, "0")),
        ("mode", (str, "float")),
        ("model", (str, "synthetic")),
        ("method", (str, "ols")),
        ("eta", (float, 1e-4)),
        ("sigma", (float, 0.0)),
        ("classes", (int, 10)),
        ("side", (int, 8)),
        ("data", (str, "")),
        ("dimension", (int, 1)),
        ("repetitions", (int, 10)),
        ("graphs", (int, 20)),
        ("grid_nodes", ("ints", (20, 50, 100))),
        ("grid_probabilities", ("floats", (0.05, 0.1, 0.2, 0.4))),
        ("grid_attackers", ("ints", (1, 2, 3))),
        ("etas", ("floats", (1e-5, 1e-4, 1e-3, 1e-2, 1e-1))),
        ("horizons", ("ints", (1, 4, 8, 16))),
        ("policy", (str, "fixed")),
        ("seed", (int, None)),
        ("out", (str, ".")),
        ("workers", (int, 1)),
    ]
)

# Fields that never influence results and so stay out of the hash.
UNHASHED = ("out", "workers")

ExperimentConfig = collections.namedtuple(
    "ExperimentConfig",
    tuple(FIELDS),
    defaults=tuple(default for _, default in FIELDS.values()),
)

_SECTION = "experiment"


def _coerce(key: str, value: typing.Any) -> typing.Any:
    kind, _ = FIELDS[key]
    if not isinstance(value, str):
        return value
    value = value.strip()
    try:
        if kind == "ints":
            return tuple(int(x) for x in value.split(",") if x.strip())
        if kind == "floats":
            return tuple(float(x) for x in value.split(",") if x.strip())
        return kind(value)
    except ValueError as cause:
        raise error.ConfigError(
            "Cannot read {} from {!r} ({})".format(key, value, cause)
        ) from cause


def _key(name: str) -> str:
    key = name.strip().replace("-", "_")
    if key not in FIELDS:
        raise error.ConfigError("Unknown configuration key {!r}".format(name))
    return key


def parse_assignment(text: str) -> typing.Tuple[str, str]:
    """Split 'key=value' as given to --set."""
    key, sep, value = text.partition("=")
    if not sep:
        raise error.ConfigError("Expected key=value, not {!r}".format(text))
    return _key(key), value


def override(
    cfg: ExperimentConfig, values: typing.Mapping[str, typing.Any]
) -> ExperimentConfig:
    """Replace fields, coercing any text by the field's declared type."""
    return cfg._replace(
        **{_key(k): _coerce(_key(k), v) for k, v in values.items()}
    )


def loads(text: str, source: str = "<string>") -> ExperimentConfig:
    """Configuration from key = value lines under an implicit section."""
    parser = configparser.ConfigParser(
        interpolation=None, inline_comment_prefixes=("#", ";")
    )
    try:
        parser.read_string("[{}]\n{}".format(_SECTION, text), source=source)
    except configparser.Error as cause:
        raise error.ConfigError(
            "{}: {}".format(source, cause.message)
        ) from cause
    return override(ExperimentConfig(), dict(parser[_SECTION]))


def load(path: str) -> ExperimentConfig:
    """Configuration from a file."""
    try:
        with open(path) as stream:
            text = stream.read()
    except OSError as cause:
        raise error.ConfigError(
            "Cannot read configuration {} ({})".format(path, cause)
        ) from cause
    logger.info("load: configuration from {}".format(path))
    return loads(text, source=path)


def validate(cfg: ExperimentConfig) -> ExperimentConfig:
    """Check a configuration is complete and self-consistent."""
    if cfg.kind not in KINDS:
        raise error.ConfigError(
            "Unknown kind {!r}; choose from {}".format(cfg.kind, KINDS)
        )
    if cfg.graph not in GRAPHS:
        raise error.ConfigError(
            "Unknown graph {!r}; choose from {}".format(cfg.graph, GRAPHS)
        )
    if (cfg.graph == "edges") != bool(cfg.edges):
        raise error.ConfigError(
            "Exactly one graph source: set graph=edges together with edges"
        )
    if cfg.seed is None:
        raise error.ConfigError("A seed is required for every experiment")
    if cfg.mode not in ("float", "exact"):
        raise error.ConfigError("Unknown mode {!r}".format(cfg.mode))
    if cfg.model not in ("synthetic", "logistic"):
        raise error.ConfigError("Unknown model {!r}".format(cfg.model))
    if cfg.window_start != "auto" and not cfg.window_start.isdigit():
        raise error.ConfigError(
            "window_start must be 'auto' or an iteration, not {!r}".format(
                cfg.window_start
            )
        )
    if cfg.repetitions < 1 or cfg.graphs < 1 or cfg.workers < 1:
        raise error.ConfigError(
            "repetitions, graphs, and workers must be positive"
        )
    return cfg


def config_hash(cfg: ExperimentConfig) -> str:
    """SHA-256 over the canonical JSON of every result-bearing field."""
    fields = {
        k: v for k, v in cfg._asdict().items() if k not in UNHASHED
    }
    canonical = json.dumps(fields, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()
