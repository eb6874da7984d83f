"""Diversity order: theoretical exponents and measured log-log slopes.

The outage probability of either layer decays as SNR^-kappa once the
operating rates are held fixed and the transmit SNR grows.  With m
forwarding relays whose power tracks the source power, kappa = m + 1; when
relay SNR scales as the source SNR to the power k, the exponent is the
minimum of km + 1 + alpha(1 - k) over the number alpha of relays that
failed to decode, i.e. km + 1 for k <= 1 and m + 1 for k > 1.

Sweeps hold the layer rates fixed across the SNR grid and re-derive the
decode thresholds at each point, so the decode boundaries shrink like
1/SNR as the asymptotic analysis requires.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .netmodel import PathLossModel, Topology, link_mean_gains, rng_for
from .outage import asymptotic_outage, monte_carlo_outage
from .sccode import CodingConfig, ThresholdRates, config_for_rates
from .selection import Selection

MIN_EVENTS = 100


@dataclass(frozen=True)
class DiversityPoint:
    snr_db: float
    p1: float
    p2: float
    included: bool
    trials: int = 0


@dataclass(frozen=True)
class DiversityReport:
    m: int
    k: float
    measured_slope_1: float
    measured_slope_2: float
    predicted: float
    snr_grid_db: tuple[float, ...]
    outage_points: tuple[DiversityPoint, ...]


def predicted_diversity(m: int, k: float) -> float:
    """Outage decay exponent with m relays at relay-SNR exponent k."""
    if m < 1:
        raise ValueError("m must be at least 1")
    return min(k * m + 1 + alpha * (1.0 - k) for alpha in range(m + 1))


def slope_fit(snr_db, outage) -> float:
    """Least-squares slope of -log10(p) against log10(SNR)."""
    snr_db = np.asarray(snr_db, dtype=float)
    outage = np.asarray(outage, dtype=float)
    if len(snr_db) < 2 or len(snr_db) != len(outage):
        raise ValueError("need at least two (snr, outage) pairs")
    if np.any(outage <= 0):
        raise ValueError("zero outage point; increase trials")
    x = snr_db / 10.0
    y = -np.log10(outage)
    return float(np.polyfit(x, y, 1)[0])


def _point_config(base: CodingConfig, rates: ThresholdRates, snr: float) -> CodingConfig:
    cfg = replace(base, p_t=base.sigma2 * snr)
    return config_for_rates(cfg, rates)


def diversity_sweep(
    topology: Topology,
    model: PathLossModel,
    base_config: CodingConfig,
    rates: ThresholdRates,
    m: int,
    k: float,
    snr_grid_db,
    trials: int,
    master_seed: int = 0,
    closed_form: bool = False,
) -> DiversityReport:
    """Measure both layers' outage decay over an SNR grid.

    The first m relays of the topology transmit with power set by the k-law
    P_i / sigma2 = (P_t / sigma2)^k (so P_i = P_t when k = 1).  Points with
    fewer than 100 Monte Carlo events on either layer are flagged and
    excluded from the fit.
    """
    if not 1 <= m <= topology.n_relays:
        raise ValueError(f"m must lie in 1..{topology.n_relays}")
    snr_grid_db = tuple(float(s) for s in snr_grid_db)
    if any(b <= a for a, b in zip(snr_grid_db, snr_grid_db[1:])):
        raise ValueError("snr grid must be strictly increasing")
    ids = tuple(range(1, m + 1))
    points: list[DiversityPoint] = []
    for idx, snr_db in enumerate(snr_grid_db):
        snr = 10.0 ** (snr_db / 10.0)
        relay_power = base_config.sigma2 * snr**k
        cfg = _point_config(base_config, rates, snr)
        if closed_form:
            g_sd, sr, rd = link_mean_gains(topology, model)
            ratios = np.full(m, relay_power / cfg.p_t)
            p1 = asymptotic_outage(1, rates, cfg.beta, snr, g_sd, sr[:m], rd[:m], ratios)
            p2 = asymptotic_outage(2, rates, cfg.beta, snr, g_sd, sr[:m], rd[:m], ratios)
            points.append(DiversityPoint(snr_db, p1, p2, included=p1 > 0 and p2 > 0))
        else:
            sel = Selection(ids, {i: relay_power for i in ids})
            est = monte_carlo_outage(topology, model, cfg, sel, trials, rng_for(master_seed, idx), rates)
            ok = est.p1 * trials >= MIN_EVENTS and est.p2 * trials >= MIN_EVENTS
            points.append(DiversityPoint(snr_db, est.p1, est.p2, included=ok, trials=trials))
    used = [p for p in points if p.included]
    if len(used) < 2:
        raise ValueError("fewer than two grid points had enough outage events")
    grid = [p.snr_db for p in used]
    return DiversityReport(
        m=m,
        k=k,
        measured_slope_1=slope_fit(grid, [p.p1 for p in used]),
        measured_slope_2=slope_fit(grid, [p.p2 for p in used]),
        predicted=predicted_diversity(m, k),
        snr_grid_db=snr_grid_db,
        outage_points=tuple(points),
    )
