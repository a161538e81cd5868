# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at http://mozilla.org/MPL/2.0/.
"""Preset experiments producing ResultRecords from an ExperimentConfig.

Independent trials run in a bounded process pool and results are kept
in trial order so that (config, seed) decides every exported byte."""
import collections
import concurrent.futures
import logging
import time
import typing

import numpy as np

from . import analysis
from . import averaging
from . import config
from . import dataset
from . import descent
from . import echelon
from . import error
from . import graph
from . import inversion
from . import models
from . import protocol
from . import struct

logger = logging.getLogger(__name__)

Row = typing.Tuple[typing.Any, ...]


def seeds(seed: int, count: int) -> typing.List[int]:
    """Independent child seeds derived from one root seed."""
    children = np.random.SeedSequence(seed).spawn(count)
    return [int(child.generate_state(1)[0]) for child in children]


def trials(
    function: typing.Callable, jobs: typing.Sequence, workers: int = 1
) -> typing.List:
    """Map function over jobs, in processes when workers > 1."""
    if workers <= 1 or len(jobs) <= 1:
        return [function(job) for job in jobs]
    with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(function, jobs))


def make_graph(cfg: config.ExperimentConfig, seed: int) -> struct.Graph:
    """The graph named by cfg, drawn with seed when random."""
    if cfg.graph == "er":
        return graph.gen_erdos_renyi(
            cfg.nodes, cfg.probability, seed, bool(cfg.connected)
        )
    if cfg.graph == "line":
        return graph.gen_line(cfg.nodes)
    if cfg.graph == "geometric":
        return graph.gen_random_geometric(cfg.nodes, cfg.radius, seed)
    if cfg.graph == "florentine":
        return graph.gen_florentine()
    return graph.load_edge_list(cfg.edges)


def attacker_sets(
    spec: str, g: struct.Graph, seed: int
) -> typing.List[typing.Tuple[int, ...]]:
    """Parse '0,3' (explicit), 'random-k', or 'rotate' (each node alone)."""
    spec = spec.strip()
    if spec == "rotate":
        return [(v,) for v in range(g.n)]
    if spec.startswith("random-"):
        try:
            k = int(spec[len("random-"):])
        except ValueError as cause:
            raise error.ConfigError(
                "Bad attacker count in {!r}".format(spec)
            ) from cause
        if not 1 <= k <= g.n:
            raise error.ConfigError(
                "Cannot pick {} attackers among {} nodes".format(k, g.n)
            )
        rng = np.random.default_rng(seed)
        return [tuple(int(v) for v in rng.choice(g.n, k, replace=False))]
    try:
        chosen = tuple(int(v) for v in spec.split(",") if v.strip())
    except ValueError as cause:
        raise error.ConfigError(
            "Bad attackers {!r}; use ids, random-k, or rotate".format(spec)
        ) from cause
    if not chosen:
        raise error.ConfigError("At least one attacker is required")
    return [chosen]


def horizon(cfg: config.ExperimentConfig, g: struct.Graph) -> int:
    """Configured iteration count or roughly the diameter."""
    return cfg.iterations or protocol.default_iterations(g)


def _record(cfg, experiment, columns, rows, started, **kwargs):
    return struct.ResultRecord(
        experiment=experiment,
        config_hash=config.config_hash(cfg),
        seed=cfg.seed,
        columns=tuple(columns),
        rows=tuple(tuple(row) for row in rows),
        elapsed=time.perf_counter() - started,
        **kwargs
    )


def verify_replay(
    record: struct.ResultRecord, cfg: config.ExperimentConfig
) -> bool:
    """Confirm record came from cfg, raising RumorError otherwise."""
    expected = config.config_hash(cfg)
    if record.config_hash != expected or record.seed != cfg.seed:
        raise error.RumorError(
            "Replay mismatch: record {} (seed {}), config {} (seed {})".format(
                record.config_hash[:12], record.seed, expected[:12], cfg.seed
            )
        )
    return True


def _verdicts(audit, a, n):
    result = {}
    for v in range(n):
        if v in a.attackers:
            result[v] = "attacker"
        elif v in audit.reconstructible:
            result[v] = "reconstructed"
        elif v in audit.leaked:
            result[v] = "leaked"
        else:
            result[v] = "hidden"
    return result


def run_audit(cfg: config.ExperimentConfig) -> struct.ResultRecord:
    """Data-free audit for one attacker set or a leakage map for all."""
    started = time.perf_counter()
    g = make_graph(cfg, cfg.seed)
    w = graph.build_gossip_matrix(g, cfg.scheme)
    iterations = horizon(cfg, g)
    if cfg.attackers.strip() == "rotate":
        leaks = averaging.leakage_map(w, iterations, cfg.mode)
        return _record(
            cfg,
            "avg-audit",
            ("attacker", "reconstructed"),
            sorted(leaks.items()),
            started,
            graph=g,
            coloring={v: c / max(1, g.n - 1) for v, c in leaks.items()},
        )

    a = graph.attacker_set(g, attacker_sets(cfg.attackers, g, cfg.seed)[0])
    audit = averaging.audit_static(w, a, iterations, cfg.mode)
    first = {}
    for t, members in enumerate(audit.history, start=1):
        for v in members:
            first.setdefault(v, t)
    verdicts = _verdicts(audit, a, g.n)
    rows = [(v, verdicts[v], first.get(v, "")) for v in range(g.n)]
    return _record(
        cfg,
        "avg-audit",
        ("node", "verdict", "first_iteration"),
        rows,
        started,
        graph=g,
        coloring=verdicts,
    )


def run_avg_attack(cfg: config.ExperimentConfig) -> struct.ResultRecord:
    """Simulate averaging on random private values then attack it."""
    started = time.perf_counter()
    graph_seed, value_seed = seeds(cfg.seed, 2)
    g = make_graph(cfg, graph_seed)
    w = graph.build_gossip_matrix(g, cfg.scheme)
    a = graph.attacker_set(g, attacker_sets(cfg.attackers, g, cfg.seed)[0])
    iterations = horizon(cfg, g)

    x = np.random.default_rng(value_seed).normal(size=(g.n, cfg.dimension))
    trace = protocol.run_gossip_averaging(w, x, iterations)
    observed = protocol.observe(trace, a, iterations=iterations)
    k = averaging.build_knowledge_matrix_avg(
        w, a, iterations, exact=cfg.mode == "exact"
    )
    report = averaging.reconstruct_values(
        echelon.rref(k, cfg.mode), observed, truth=x
    )
    logger.info(
        "run_avg_attack: {} reconstructed, {} residual relations".format(
            len(report.reconstructible), len(report.relations)
        )
    )
    audit = struct.Audit(report.reconstructible, (), (), report.leaked)
    verdicts = _verdicts(audit, a, g.n)
    rows = [
        (v, verdicts[v], report.errors.get(v, "")) for v in range(g.n)
    ]
    return _record(
        cfg,
        "avg-attack",
        ("node", "verdict", "abs_error"),
        rows,
        started,
        graph=g,
        coloring=verdicts,
    )


def make_problem(
    cfg: config.ExperimentConfig, g: struct.Graph, seed: int
) -> typing.Tuple[struct.ModelSpec, np.ndarray, np.ndarray]:
    """Model, true per-node inputs, and the shared starting parameters.

    Synthetic constants are each node's eta-scaled logistic gradient at
    the start so both variants can be inverted back to inputs."""
    if cfg.data:
        inputs, labels = dataset.load_vectors(cfg.data)
        if len(labels) < g.n:
            raise error.RumorError(
                "{} vectors for {} nodes".format(len(labels), g.n)
            )
        inputs, labels = inputs[: g.n], labels[: g.n]
    else:
        inputs, labels = dataset.synthetic_dataset(
            g.n, cfg.side, cfg.classes, seed
        )
    logistic = models.logistic_model(inputs, labels, cfg.classes)
    theta0 = np.zeros(models.Logistic.parameters(logistic))
    if cfg.model == "logistic":
        return logistic, inputs, theta0
    constants = models.Logistic.gradients(
        logistic, np.tile(theta0, (g.n, 1)), cfg.eta, 0.0, None
    )
    return models.synthetic_model(constants), inputs, theta0


def _distances(g, attackers):
    return np.min(
        [analysis.shortest_path_lengths(g, v) for v in attackers], axis=0
    )


def dgd_attack(
    cfg: config.ExperimentConfig,
    g: struct.Graph,
    attackers: typing.Sequence[int],
    seed: int,
) -> typing.Tuple[struct.DgdTrace, struct.GradientEstimate, np.ndarray]:
    """Simulate D-GD as cfg describes and attack it from attackers.

    Returns the trace, the gradient estimate, and the true inputs."""
    spec, inputs, theta0 = make_problem(cfg, g, seed)
    w = graph.build_gossip_matrix(g, cfg.scheme)
    a = graph.attacker_set(g, attackers)
    window = horizon(cfg, g)
    auto = cfg.window_start == "auto"
    start = "auto" if auto else int(cfg.window_start)
    total = (protocol.CONVERGENCE_CAP if auto else start) + window
    exact = cfg.mode == "exact"
    trace = protocol.run_dgd(
        w,
        struct.DgdConfig(
            eta=cfg.eta,
            iterations=total,
            theta0=theta0,
            model=spec,
            noise_sigma=cfg.sigma,
            seed=seed,
            exact=exact,
        ),
    )
    estimate = descent.attack_dgd_pipeline(
        trace,
        w,
        a,
        start=start,
        iterations=window,
        method=cfg.method,
        sigma=cfg.sigma,
        exact=exact,
    )
    return trace, estimate, inputs


def recovered_inputs(
    estimate: struct.GradientEstimate, inputs: np.ndarray, classes: int
) -> typing.Dict[int, np.ndarray]:
    """Best guess in [0, 1] for every target, blank when uninvertible."""
    result = {}
    for node, datum in inversion.reconstruct_inputs(
        estimate, classes
    ).items():
        guess = np.zeros_like(inputs[node])
        if datum is not None:
            guess = np.clip(datum.input, 0.0, 1.0)
        result[node] = guess
    return result


def dgd_trial(job: typing.Tuple) -> typing.List[Row]:
    """One D-GD run and attack: (node, distance, psnr, rsd) per target.

    Targets whose gradient cannot be inverted score as a blank image."""
    cfg, g, attackers, seed = job
    _, estimate, inputs = dgd_attack(cfg, g, attackers, seed)
    distances = _distances(g, attackers)
    rows = []
    for node, guess in recovered_inputs(
        estimate, inputs, cfg.classes
    ).items():
        rows.append(
            (
                node,
                float(distances[node]),
                inversion.psnr(guess, inputs[node]),
                inversion.relative_square_distance(guess, inputs[node]),
            )
        )
    return rows


def run_dgd_attack(cfg: config.ExperimentConfig) -> struct.ResultRecord:
    """A single D-GD attack on any graph source."""
    started = time.perf_counter()
    graph_seed, trial_seed = seeds(cfg.seed, 2)
    g = make_graph(cfg, graph_seed)
    attackers = attacker_sets(cfg.attackers, g, cfg.seed)[0]
    rows = dgd_trial((cfg, g, attackers, trial_seed))
    return _record(
        cfg,
        "dgd-attack",
        ("node", "distance", "psnr", "relative_square_distance"),
        rows,
        started,
        graph=g,
        coloring={
            node: "reconstructed"
            if psnr > inversion.SUCCESS_PSNR
            else "hidden"
            for node, _, psnr, _ in rows
        },
    )


def _summary(values):
    values = np.asarray(values, dtype=float)
    return float(np.mean(values)), float(np.std(values))


def run_dgd_line(cfg: config.ExperimentConfig) -> struct.ResultRecord:
    """Reconstruction quality by distance from an attacker at the end of a
    line, over repeated draws of the private data.

    Each distance also reports the float sensitivity of its estimate,
    which bounds how far float recovery can reach along the line."""
    started = time.perf_counter()
    g = graph.gen_line(cfg.nodes)
    # Node d sits at distance d from the attacker
    amplification = descent.sensitivity(
        graph.build_gossip_matrix(g, cfg.scheme),
        graph.attacker_set(g, (0,)),
        horizon(cfg, g),
    )
    jobs = [(cfg, g, (0,), s) for s in seeds(cfg.seed, cfg.repetitions)]
    by_distance = collections.defaultdict(lambda: ([], []))
    for rows in trials(dgd_trial, jobs, cfg.workers):
        for _, distance, psnr, rsd in rows:
            by_distance[int(distance)][0].append(inversion.clipped(psnr))
            by_distance[int(distance)][1].append(rsd)

    table = []
    for distance in sorted(by_distance):
        psnrs, rsds = by_distance[distance]
        table.append(
            (distance,)
            + _summary(psnrs)
            + (float(np.median(psnrs)),)
            + _summary(rsds)
            + (float(np.log10(amplification[distance])),)
        )
    return _record(
        cfg,
        "dgd-line",
        (
            "distance",
            "psnr_mean",
            "psnr_std",
            "psnr_median",
            "rsd_mean",
            "rsd_std",
            "log10_sensitivity",
        ),
        table,
        started,
        graph=g,
    )


def run_florentine(cfg: config.ExperimentConfig) -> struct.ResultRecord:
    """Every family attacks alone; success rate over its targets."""
    started = time.perf_counter()
    g = graph.gen_florentine()
    degree = graph.degrees(g)
    repetitions = seeds(cfg.seed, cfg.repetitions)
    jobs = [(cfg, g, (v,), s) for v in range(g.n) for s in repetitions]
    results = trials(dgd_trial, jobs, cfg.workers)

    rows, coloring = [], {}
    for v in range(g.n):
        runs = results[v * len(repetitions) : (v + 1) * len(repetitions)]
        rate = float(
            np.mean(
                [
                    inversion.success_rate(psnr for _, _, psnr, _ in run)
                    for run in runs
                ]
            )
        )
        coloring[v] = rate
        rows.append((v, g.labels[v], int(degree[v]), rate))
    return _record(
        cfg,
        "florentine",
        ("attacker", "family", "degree", "success_rate"),
        rows,
        started,
        graph=g,
        coloring=coloring,
    )


def run_lr_sweep(cfg: config.ExperimentConfig) -> struct.ResultRecord:
    """Per-node PSNR against the learning rate for one Florentine attacker.

    Runs always use the logistic model so larger steps change the
    gradient within the attack window."""
    started = time.perf_counter()
    cfg = cfg._replace(model="logistic")
    g = graph.gen_florentine()
    attackers = attacker_sets(cfg.attackers, g, cfg.seed)[0]
    repetitions = seeds(cfg.seed, cfg.repetitions)
    jobs = [
        (cfg._replace(eta=eta), g, attackers, s)
        for eta in cfg.etas
        for s in repetitions
    ]
    results = trials(dgd_trial, jobs, cfg.workers)

    rows = []
    for i, eta in enumerate(cfg.etas):
        per_node = collections.defaultdict(list)
        distance = {}
        for run in results[i * len(repetitions) : (i + 1) * len(repetitions)]:
            for node, d, psnr, _ in run:
                per_node[node].append(inversion.clipped(psnr))
                distance[node] = int(d)
        for node in sorted(per_node):
            rows.append(
                (eta, distance[node], node, float(np.mean(per_node[node])))
            )
    return _record(
        cfg, "lr-sweep", ("eta", "distance", "node", "psnr"), rows, started
    )


def er_trial(job: typing.Tuple) -> typing.List[float]:
    """Fractions of all nodes reconstructed by nested attacker prefixes."""
    cfg, n, p, seed = job
    g = graph.gen_erdos_renyi(n, p, seed)
    w = graph.build_gossip_matrix(g, cfg.scheme)
    result = []
    for k in cfg.grid_attackers:
        audit = averaging.audit_static(
            w,
            graph.attacker_set(g, range(min(k, n))),
            cfg.iterations or n,
            cfg.mode,
            history=False,
        )
        result.append(len(audit.reconstructible) / n)
    return result


def run_er_sweep(cfg: config.ExperimentConfig) -> struct.ResultRecord:
    """Mean and deviation of the fraction reconstructed over ER graphs."""
    started = time.perf_counter()
    cells = [(n, p) for n in cfg.grid_nodes for p in cfg.grid_probabilities]
    draws = seeds(cfg.seed, len(cells) * cfg.graphs)
    jobs = [
        (cfg, n, p, draws[i * cfg.graphs + j])
        for i, (n, p) in enumerate(cells)
        for j in range(cfg.graphs)
    ]
    results = trials(er_trial, jobs, cfg.workers)

    rows = []
    for i, (n, p) in enumerate(cells):
        fractions = np.array(results[i * cfg.graphs : (i + 1) * cfg.graphs])
        for column, k in enumerate(cfg.grid_attackers):
            rows.append((n, p, k) + _summary(fractions[:, column]))
        logger.info("run_er_sweep: finished n={} p={}".format(n, p))
    return _record(
        cfg,
        "er-sweep",
        (
            "nodes",
            "probability",
            "attackers",
            "fraction_mean",
            "fraction_std",
        ),
        rows,
        started,
    )


def geometric_trial(job: typing.Tuple) -> typing.List[Row]:
    """Reconstructible sets for one geometric draw at every horizon.

    One audit runs until the knowledge stops growing, which takes at most
    n iterations, so each row also carries that draw's saturation
    horizon."""
    cfg, index, seed = job
    g = graph.gen_random_geometric(cfg.nodes, cfg.radius, seed)
    attacker = int(np.random.default_rng(seed).integers(g.n))
    a = graph.attacker_set(g, [attacker])
    w = graph.build_gossip_matrix(g, cfg.scheme)
    horizons = sorted(cfg.horizons)
    audit = averaging.audit_static(
        w, a, max(horizons[-1], g.n), cfg.mode
    )
    sets = [audit.history[t - 1] for t in horizons]
    rows = []
    for i, t in enumerate(horizons):
        nested = i == 0 or sets[i - 1] <= sets[i]
        saturated = i > 0 and sets[i - 1] == sets[i]
        rows.append(
            (
                index,
                attacker,
                t,
                len(sets[i]),
                int(nested),
                int(saturated),
                audit.saturation,
            )
        )
    return rows


def run_geometric_saturation(
    cfg: config.ExperimentConfig,
) -> struct.ResultRecord:
    """Growth of the reconstructible set with T on geometric graphs."""
    started = time.perf_counter()
    jobs = [
        (cfg, i, s) for i, s in enumerate(seeds(cfg.seed, cfg.graphs))
    ]
    results = trials(geometric_trial, jobs, cfg.workers)
    rows = [row for run in results for row in run]
    return _record(
        cfg,
        "geometric-saturation",
        (
            "draw",
            "attacker",
            "iterations",
            "reconstructed",
            "nested",
            "saturated",
            "saturation",
        ),
        rows,
        started,
    )


def sample_graphs(cfg: config.ExperimentConfig) -> typing.List[struct.Graph]:
    """cfg.graphs random draws, or the one fixed graph otherwise."""
    if cfg.graph in ("er", "geometric"):
        return [make_graph(cfg, s) for s in seeds(cfg.seed, cfg.graphs)]
    return [make_graph(cfg, cfg.seed)]


def run_centrality(cfg: config.ExperimentConfig) -> struct.ResultRecord:
    """Spearman between attacker centrality and the fraction leaked."""
    started = time.perf_counter()
    correlations = analysis.correlate_centrality_vs_leakage(
        sample_graphs(cfg),
        cfg.iterations or None,
        policy=cfg.policy,
        mode=cfg.mode,
    )
    rows = [
        (measure, c.coefficient, int(c.degenerate))
        for measure, c in correlations.items()
    ]
    return _record(
        cfg, "centrality", ("measure", "coefficient", "degenerate"), rows,
        started,
    )


def run_relationship(cfg: config.ExperimentConfig) -> struct.ResultRecord:
    """Kendall between attacker-target relationships and leakage."""
    started = time.perf_counter()
    try:
        attacker = int(cfg.attackers.split(",")[0])
    except ValueError as cause:
        raise error.ConfigError(
            "Relationships need an explicit attacker id, not {!r}".format(
                cfg.attackers
            )
        ) from cause
    aggregates = analysis.correlate_relationship_vs_leakage(
        sample_graphs(cfg),
        cfg.iterations or None,
        attacker=attacker,
        mode=cfg.mode,
    )
    rows = [
        (measure, x.mean, x.std, x.count) for measure, x in aggregates.items()
    ]
    return _record(
        cfg, "relationship", ("measure", "mean", "std", "graphs"), rows,
        started,
    )


PRESETS = collections.OrderedDict(
    [
        ("avg-audit", run_audit),
        ("avg-attack", run_avg_attack),
        ("dgd-attack", run_dgd_attack),
        ("er-sweep", run_er_sweep),
        ("dgd-line", run_dgd_line),
        ("florentine", run_florentine),
        ("lr-sweep", run_lr_sweep),
        ("geometric-saturation", run_geometric_saturation),
        ("centrality", run_centrality),
        ("relationship", run_relationship),
    ]
)


def run(cfg: config.ExperimentConfig) -> struct.ResultRecord:
    """Validate cfg then run the preset it names."""
    config.validate(cfg)
    logger.info(
        "run: {} with seed {} ({})".format(
            cfg.kind, cfg.seed, config.config_hash(cfg)[:12]
        )
    )
    record = PRESETS[cfg.kind](cfg)
    logger.info(
        "run: {} produced {} rows in {:.2f}s".format(
            cfg.kind, len(record.rows), record.elapsed
        )
    )
    return record