"""Experiment runners and CSV output.

Each runner is a pure function of (config, master seed): every Monte Carlo
cell draws from a substream addressed by the experiment kind, the cell
coordinates and a chunk index, and rows are emitted in a deterministic
order, so rerunning with the same inputs reproduces the output bytes.
"""

from __future__ import annotations

import csv
import math
from dataclasses import replace

import numpy as np

from .config import ScenarioConfig, make_coding, make_constraints, make_pathloss, make_topology
from .diversity import diversity_sweep
from .netmodel import (
    NodePosition,
    Topology,
    distance,
    link_mean_gains,
    mean_gain,
    rng_for,
)
from .outage import (
    LineAsymptoticParams,
    OutageEstimate,
    fixed_selector,
    monte_carlo_events,
    monte_carlo_outage,
)
from .placement import GeneralPlacementProblem, LinePlacementProblem, general_optimum, line_optimum, line_rate, placement_objective
from .sccode import CodingConfig, ThresholdRates, config_for_rates, rates_for_split, threshold_rates
from .selection import (
    PowerConstraints,
    Selection,
    allocate_power,
    best_gains_block,
    multiple_fan_out,
    random_subsets_block,
    single_fan_out,
)

COLUMNS = (
    "kind",
    "algorithm",
    "m",
    "snr_db",
    "k",
    "beta_relay",
    "p1",
    "p2",
    "ci95_p1",
    "ci95_p2",
    "rate_nats",
    "rate_bits",
    "trials",
    "seed",
)
EXTRA_COLUMNS = ("pos_x", "pos_y")

_KIND_CODE = {
    "rate_vs_m": 1,
    "power_alloc": 2,
    "snr_power_ratio": 3,
    "snr_beta_split": 4,
    "diversity": 5,
    "place": 6,
}
_ALGO_CODE = {
    "best_gains": 1,
    "single_fan_out": 2,
    "multiple_fan_out": 3,
    "random_relays": 4,
    "equal_power": 5,
    "optimal_power": 6,
}


class ExperimentError(ValueError):
    """Experiment kind and configuration do not fit together."""


def _require_integer_mu(cfg: ScenarioConfig) -> int:
    if cfg.mu != int(cfg.mu):
        raise ExperimentError("proximity selection needs an integer path loss exponent")
    return int(cfg.mu)


def _line_problem(cfg: ScenarioConfig, coding: CodingConfig, rates: ThresholdRates, d_tr: float, relay_power: float) -> LinePlacementProblem:
    model = make_pathloss(cfg)
    return LinePlacementProblem(
        d_tr=d_tr,
        mu=_require_integer_mu(cfg),
        params=LineAsymptoticParams.from_rates(rates, coding.beta, coding.snr),
        power_ratio=coding.p_t / relay_power,
        rates=rates,
        chi=model.chi,
    )


def _general_problem(cfg: ScenarioConfig, coding: CodingConfig, rates: ThresholdRates, d_tr: float, m: int, relay_power: float) -> GeneralPlacementProblem:
    return GeneralPlacementProblem(
        m=m,
        d_tr=d_tr,
        model=make_pathloss(cfg),
        config=coding,
        rates=rates,
        power_per_relay=relay_power,
    )


def _row(kind: str, **fields) -> dict:
    row = {c: None for c in COLUMNS}
    row["kind"] = kind
    row.update(fields)
    if row.get("rate_nats") is not None:
        row["rate_bits"] = row["rate_nats"] / math.log(2.0)
    return row


def _mc_row(kind: str, est: OutageEstimate, rates: ThresholdRates, **fields) -> dict:
    return _row(
        kind,
        p1=est.p1,
        p2=est.p2,
        ci95_p1=est.ci95_p1,
        ci95_p2=est.ci95_p2,
        rate_nats=est.expected_rate,
        trials=est.trials,
        **fields,
    )


def _selection_for(
    algorithm: str,
    cfg: ScenarioConfig,
    topology: Topology,
    coding: CodingConfig,
    rates: ThresholdRates,
    constraints: PowerConstraints,
    m: int,
    seed: int,
) -> Selection:
    d_tr = distance(topology.source, topology.destination)
    relay_power = constraints.p_max / m
    if algorithm == "single_fan_out":
        problem = _line_problem(cfg, coding, rates, d_tr, relay_power)
        return single_fan_out(topology, m, line_optimum(problem), constraints)
    if algorithm == "multiple_fan_out":
        problem = _general_problem(cfg, coding, rates, d_tr, m, relay_power)
        targets = general_optimum(problem, seed=seed)
        return multiple_fan_out(topology, m, targets, constraints)
    raise ExperimentError(f"{algorithm!r} is not a geometry-based selection rule")


def _estimate_cell(
    algorithm: str,
    cfg: ScenarioConfig,
    topology: Topology,
    coding: CodingConfig,
    rates: ThresholdRates,
    constraints: PowerConstraints,
    m: int,
    trials: int,
    rng: np.random.Generator,
) -> OutageEstimate:
    """Monte Carlo expected rate of one (algorithm, m) cell.

    Geometry-based rules select once; the greedy and random rules reselect
    on every realization.
    """
    if algorithm == "best_gains":
        def selector(g_rd, modes, chunk_rng):
            return best_gains_block(g_rd, modes != 0, m, constraints.p_max)
    elif algorithm == "random_relays":
        k = topology.n_relays

        def selector(g_rd, modes, chunk_rng):
            return random_subsets_block(g_rd.shape[0], k, m, constraints.p_max, chunk_rng)
    else:
        selection = _selection_for(algorithm, cfg, topology, coding, rates, constraints, m, seed=0)
        selector = fixed_selector(topology, selection)
    return monte_carlo_events(topology, model_of(cfg), coding, selector, trials, rng, rates)


_MODEL_CACHE: dict[tuple, object] = {}


def model_of(cfg: ScenarioConfig):
    key = (cfg.f_c_hz, cfg.lambda_c_m, cfg.d0_m, cfg.mu)
    if key not in _MODEL_CACHE:
        _MODEL_CACHE[key] = make_pathloss(cfg)
    return _MODEL_CACHE[key]


def _run_rate_vs_m(cfg: ScenarioConfig, trials: int, seed: int) -> list[dict]:
    topology = make_topology(cfg)
    coding = make_coding(cfg)
    rates = threshold_rates(coding)
    constraints = make_constraints(cfg)
    rows = []
    for m in cfg.m_list:
        if m > topology.n_relays:
            raise ExperimentError(f"m={m} exceeds the {topology.n_relays} candidate relays")
        for algorithm in cfg.algorithms:
            rng = rng_for(seed, _KIND_CODE["rate_vs_m"], _ALGO_CODE[algorithm], m)
            est = _estimate_cell(algorithm, cfg, topology, coding, rates, constraints, m, trials, rng)
            rows.append(
                _mc_row("rate_vs_m", est, rates, algorithm=algorithm, m=m, beta_relay=coding.relay_split, seed=seed)
            )
    return rows


def _run_power_alloc(cfg: ScenarioConfig, trials: int, seed: int) -> list[dict]:
    coding = make_coding(cfg)
    rates = threshold_rates(coding)
    constraints = make_constraints(cfg)
    model = model_of(cfg)
    rows = []
    for m in cfg.m_list:
        rng_topo = rng_for(cfg.topology_seed, _KIND_CODE["power_alloc"], m)
        x0, x1, y0, y1 = cfg.region
        relays = tuple(
            NodePosition(float(x), float(y))
            for x, y in zip(rng_topo.uniform(x0, x1, m), rng_topo.uniform(y0, y1, m))
        )
        topology = Topology(NodePosition(*cfg.source), NodePosition(*cfg.destination), relays)
        ids = tuple(range(1, m + 1))
        equal = Selection(ids, {i: constraints.p_max / m for i in ids}).check(constraints)
        optimal = allocate_power("optimal", topology, model, coding, rates, equal, constraints, seed=seed)
        for algorithm, selection in (("equal_power", equal), ("optimal_power", optimal)):
            rng = rng_for(seed, _KIND_CODE["power_alloc"], _ALGO_CODE[algorithm], m)
            est = monte_carlo_outage(topology, model, coding, selection, trials, rng, rates)
            rows.append(
                _mc_row("power_alloc", est, rates, algorithm=algorithm, m=m, beta_relay=coding.relay_split, seed=seed)
            )
    return rows


def _received_snr_points(cfg: ScenarioConfig, topology: Topology) -> list[tuple[float, float]]:
    """(received snr dB, source power dBm) pairs for the sweep grids."""
    model = model_of(cfg)
    d_sd = distance(topology.source, topology.destination)
    gain = mean_gain(model, d_sd)
    sigma2 = make_coding(cfg).sigma2
    points = []
    for rx_db in cfg.received_snr_db:
        p_t = 10.0 ** (rx_db / 10.0) * sigma2 / gain
        points.append((rx_db, 10.0 * math.log10(p_t)))
    return points


def _run_snr_power_ratio(cfg: ScenarioConfig, trials: int, seed: int) -> list[dict]:
    topology = make_topology(cfg)
    m = cfg.m
    if m > topology.n_relays:
        raise ExperimentError(f"m={m} exceeds the {topology.n_relays} candidate relays")
    rows = []
    for pt_idx, (rx_db, p_t_dbm) in enumerate(_received_snr_points(cfg, topology)):
        coding = make_coding(cfg, p_t_dbm=p_t_dbm)
        rates = threshold_rates(coding)
        for ratio_idx, ratio in enumerate(cfg.power_ratios):
            relay_power = ratio * coding.p_t
            constraints = PowerConstraints(p_max=m * relay_power)
            selection = _selection_for(cfg.selector, cfg, topology, coding, rates, constraints, m, seed=0)
            rng = rng_for(seed, _KIND_CODE["snr_power_ratio"], pt_idx, ratio_idx)
            est = monte_carlo_outage(topology, model_of(cfg), coding, selection, trials, rng, rates)
            rows.append(
                _mc_row(
                    "snr_power_ratio",
                    est,
                    rates,
                    algorithm=cfg.selector,
                    m=m,
                    snr_db=rx_db,
                    k=ratio,
                    beta_relay=coding.relay_split,
                    seed=seed,
                )
            )
    return rows


def _run_snr_beta_split(cfg: ScenarioConfig, trials: int, seed: int) -> list[dict]:
    """Expected rate against received SNR for several relay power splits.

    The operating rates follow the relay split (the refinement layer gains
    rate as the relays put more power on it); the decode thresholds are
    re-derived from those rates under the source split so classification
    stays consistent.
    """
    topology = make_topology(cfg)
    m = cfg.m
    if m > topology.n_relays:
        raise ExperimentError(f"m={m} exceeds the {topology.n_relays} candidate relays")
    constraints = make_constraints(cfg)
    rows = []
    for pt_idx, (rx_db, p_t_dbm) in enumerate(_received_snr_points(cfg, topology)):
        base = make_coding(cfg, p_t_dbm=p_t_dbm)
        for split_idx, split in enumerate(cfg.beta_splits):
            rates = rates_for_split(base, split)
            coding = replace(config_for_rates(base, rates), beta_relay=split)
            selection = _selection_for(cfg.selector, cfg, topology, coding, rates, constraints, m, seed=0)
            rng = rng_for(seed, _KIND_CODE["snr_beta_split"], pt_idx, split_idx)
            est = monte_carlo_outage(topology, model_of(cfg), coding, selection, trials, rng, rates)
            rows.append(
                _mc_row(
                    "snr_beta_split",
                    est,
                    rates,
                    algorithm=cfg.selector,
                    m=m,
                    snr_db=rx_db,
                    beta_relay=split,
                    seed=seed,
                )
            )
    return rows


def _run_diversity(cfg: ScenarioConfig, trials: int, seed: int, closed_form: bool) -> list[dict]:
    topology = make_topology(cfg)
    coding = make_coding(cfg)
    rates = threshold_rates(coding)
    report = diversity_sweep(
        topology,
        model_of(cfg),
        coding,
        rates,
        m=cfg.m,
        k=cfg.k,
        snr_grid_db=cfg.snr_grid_db,
        trials=trials,
        master_seed=seed,
        closed_form=closed_form,
    )
    rows = []
    for point in report.outage_points:
        rows.append(
            _row(
                "diversity",
                algorithm="closed_form" if closed_form else "monte_carlo",
                m=cfg.m,
                snr_db=point.snr_db,
                k=cfg.k,
                p1=point.p1,
                p2=point.p2,
                rate_nats=None,
                trials=point.trials or None,
                seed=seed,
            )
        )
    return rows


def _run_place(cfg: ScenarioConfig, seed: int) -> list[dict]:
    topology = make_topology(cfg)
    coding = make_coding(cfg)
    rates = threshold_rates(coding)
    constraints = make_constraints(cfg)
    d_tr = distance(topology.source, topology.destination)
    m = cfg.m
    relay_power = constraints.p_max / m
    line_prob = _line_problem(cfg, coding, rates, d_tr, relay_power)
    d_bar = line_optimum(line_prob)
    rows = [
        _row(
            "place",
            algorithm="line_optimum",
            m=m,
            rate_nats=line_rate(d_bar, line_prob),
            seed=seed,
            pos_x=d_bar,
            pos_y=0.0,
        )
    ]
    gen_prob = _general_problem(cfg, coding, rates, d_tr, m, relay_power)
    points = general_optimum(gen_prob, seed=seed)
    objective = placement_objective(gen_prob, np.array(points).ravel())
    for a, b in points:
        rows.append(
            _row("place", algorithm="general_optimum", m=m, rate_nats=objective, seed=seed, pos_x=a, pos_y=b)
        )
    return rows


def run_experiment(
    kind: str,
    cfg: ScenarioConfig,
    trials: int | None = None,
    seed: int | None = None,
    closed_form: bool = False,
) -> list[dict]:
    """Run one experiment kind and return its result rows."""
    if kind not in _KIND_CODE:
        raise ExperimentError(f"unknown experiment kind {kind!r}")
    trials = cfg.trials if trials is None else trials
    seed = cfg.seed if seed is None else seed
    if trials < 1:
        raise ExperimentError("trials must be at least 1")
    if kind == "rate_vs_m":
        rows = _run_rate_vs_m(cfg, trials, seed)
    elif kind == "power_alloc":
        rows = _run_power_alloc(cfg, trials, seed)
    elif kind == "snr_power_ratio":
        rows = _run_snr_power_ratio(cfg, trials, seed)
    elif kind == "snr_beta_split":
        rows = _run_snr_beta_split(cfg, trials, seed)
    elif kind == "diversity":
        rows = _run_diversity(cfg, trials, seed, closed_form)
    else:
        rows = _run_place(cfg, seed)
    return sorted(rows, key=_row_key)


def _sort_value(value) -> float:
    if value is None:
        return -math.inf
    if isinstance(value, (int, float)):
        return float(value)
    return math.nan


def _row_key(row: dict):
    return (
        row.get("kind") or "",
        row.get("algorithm") or "",
        _sort_value(row.get("m")),
        _sort_value(row.get("snr_db")),
        _sort_value(row.get("k")),
        _sort_value(row.get("beta_relay")),
        _sort_value(row.get("pos_x")),
        _sort_value(row.get("pos_y")),
    )


def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_results(rows: list[dict], path: str) -> None:
    """Write result rows as CSV with a deterministic header and row order."""
    if not rows:
        raise ValueError("result table must not be empty")
    header = list(COLUMNS)
    for extra in EXTRA_COLUMNS:
        if any(extra in row for row in rows):
            header.append(extra)
    ordered = sorted(rows, key=_row_key)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in ordered:
            writer.writerow([_format_cell(row.get(col)) for col in header])
