"""Outage probability estimation: Monte Carlo and high-SNR closed forms.

The Monte Carlo estimator plays the full two-slot protocol per trial:
sample every link, classify each selected relay from its source-link gain,
then run the destination's combined decode tests.  Trials are evaluated in
fixed-size chunks, each on its own spawned substream, with integer event
tallies, so results are reproducible and order-independent (chunks may be
farmed out in parallel).

The closed forms assemble the leading high-SNR term of each decode-set
scenario: a selected relay either failed the coarse layer (one inverse-SNR
factor each), or is counted with a near-one factor, while the destination's
combined failure contributes the factorial-weighted product over all
forwarding relays.  Both layer events decay as SNR^-(m+1) when relay powers
track the source power.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Callable

import numpy as np

from .netmodel import PathLossModel, Topology, link_mean_gains, sample_channel_block
from .sccode import CodingConfig, ThresholdRates, classify_gains, decode_events, threshold_rates

if TYPE_CHECKING:
    from .selection import Selection

MC_CHUNK = 1 << 16
_UNRELIABLE_EVENTS = 10

# selector: (g_rd, modes, rng) -> (selected mask, powers), all shaped (n, k)
Selector = Callable[[np.ndarray, np.ndarray, np.random.Generator], tuple[np.ndarray, np.ndarray]]


@dataclass(frozen=True)
class OutageEstimate:
    """Monte Carlo outage estimate for both layers plus the expected rate.

    ``p1`` is the probability the destination cannot decode the coarse layer
    after both slots; ``p2`` is the probability the combined refinement-layer
    test fails (estimated as its own event, not conditioned on the coarse
    layer).  ``p2_joint`` is the protocol event "x2 not received", emitted
    for comparison.  ``expected_rate`` is (1-p1)*r1 + (1-p1)*(1-p2)*r2.
    """

    p1: float
    p2: float
    expected_rate: float
    trials: int
    ci95_p1: float
    ci95_p2: float
    p2_joint: float = 0.0
    unreliable: bool = False

    def rate_ci95(self, rates: ThresholdRates) -> float:
        """Conservative half-width for the expected rate (error propagation)."""
        a = rates.r1 + (1.0 - self.p2) * rates.r2
        b = (1.0 - self.p1) * rates.r2
        return a * self.ci95_p1 + b * self.ci95_p2


def expected_rate(p1: float, p2: float, rates: ThresholdRates) -> float:
    """Expected received rate given the two layer outage probabilities."""
    if not (0.0 <= p1 <= 1.0 and 0.0 <= p2 <= 1.0):
        raise ValueError("outage probabilities must lie in [0, 1]")
    return (1.0 - p1) * rates.r1 + (1.0 - p1) * (1.0 - p2) * rates.r2


def _ci95(count: int, trials: int) -> float:
    p = count / trials
    return 1.96 * math.sqrt(p * (1.0 - p) / trials)


def monte_carlo_events(
    topology: Topology,
    model: PathLossModel,
    config: CodingConfig,
    selector: Selector,
    trials: int,
    rng: np.random.Generator,
    rates: ThresholdRates | None = None,
) -> OutageEstimate:
    """Chunked Monte Carlo over the full protocol with a per-trial selector."""
    if trials < 1:
        raise ValueError("trials must be at least 1")
    if rates is None:
        rates = threshold_rates(config)
    n_chunks = -(-trials // MC_CHUNK)
    streams = rng.spawn(n_chunks)
    fail1 = fail2 = fail_joint = 0
    done = 0
    for child in streams:
        n = min(MC_CHUNK, trials - done)
        done += n
        g_sd, g_sr, g_rd = sample_channel_block(topology, model, child, n)
        modes = classify_gains(g_sr, config)
        mask, powers = selector(g_rd, modes, child)
        eff_modes = np.where(mask, modes, np.int8(0))
        dec1, x2t = decode_events(g_sd, g_rd, eff_modes, powers, config, rates)
        fail1 += int(np.count_nonzero(~dec1))
        fail2 += int(np.count_nonzero(~x2t))
        fail_joint += int(np.count_nonzero(~(dec1 & x2t)))
    p1 = fail1 / trials
    p2 = fail2 / trials
    return OutageEstimate(
        p1=p1,
        p2=p2,
        expected_rate=expected_rate(p1, p2, rates),
        trials=trials,
        ci95_p1=_ci95(fail1, trials),
        ci95_p2=_ci95(fail2, trials),
        p2_joint=fail_joint / trials,
        unreliable=(0 < fail1 < _UNRELIABLE_EVENTS) or (0 < fail2 < _UNRELIABLE_EVENTS),
    )


def fixed_selector(topology: Topology, selection: "Selection") -> Selector:
    """Selector for a channel-independent selection with fixed powers."""
    k = topology.n_relays
    mask = np.zeros(k, dtype=bool)
    powers = np.zeros(k, dtype=float)
    for i in selection.relay_ids:
        mask[i - 1] = True
        powers[i - 1] = selection.powers[i]

    def select(g_rd: np.ndarray, modes: np.ndarray, rng: np.random.Generator):
        n = g_rd.shape[0]
        return np.broadcast_to(mask, (n, k)), np.broadcast_to(powers, (n, k))

    return select


def monte_carlo_outage(
    topology: Topology,
    model: PathLossModel,
    config: CodingConfig,
    selection: "Selection",
    trials: int,
    rng: np.random.Generator,
    rates: ThresholdRates | None = None,
) -> OutageEstimate:
    """Outage and expected rate of a fixed relay selection."""
    return monte_carlo_events(
        topology, model, config, fixed_selector(topology, selection), trials, rng, rates
    )


@dataclass(frozen=True)
class LineAsymptoticParams:
    """Dimensionless high-SNR outage constants of the two layers."""

    g1: float
    g2: float

    def __post_init__(self) -> None:
        if not (self.g1 > 0 and math.isfinite(self.g1)):
            raise ValueError("g1 must be positive and finite")
        if not (self.g2 > 0 and math.isfinite(self.g2)):
            raise ValueError("g2 must be positive and finite")

    @classmethod
    def from_rates(cls, rates: ThresholdRates, beta: float, snr: float) -> "LineAsymptoticParams":
        bb = 1.0 - beta
        denom = 1.0 - bb * math.exp(rates.r1)
        if denom <= 0.0:
            raise ValueError("validity condition 1 - (1-beta)*exp(r1) > 0 violated")
        if bb <= 0.0:
            raise ValueError("layer-2 constant needs beta < 1")
        g1 = (math.exp(rates.r1) - 1.0) / (snr * denom)
        g2 = (math.exp(rates.r2) - 1.0) / (bb * snr)
        return cls(g1=g1, g2=g2)


@dataclass(frozen=True)
class DecodeSetScenario:
    """One decode-set scenario: which selected relays missed which layer.

    ``delta`` holds relays that failed the layer under study, ``theta`` the
    relays that decoded only the coarse layer (layer-1 scenarios only).
    Ids are 1-based positions in the selection order.
    """

    delta: frozenset[int]
    theta: frozenset[int] = frozenset()

    def __post_init__(self) -> None:
        if self.delta & self.theta:
            raise ValueError("delta and theta must be disjoint")

    @property
    def alpha(self) -> int:
        return len(self.delta)

    @property
    def xi(self) -> int:
        return len(self.theta)


def _layer_constant(level: int, rates: ThresholdRates, beta: float, snr: float) -> float:
    bb = 1.0 - beta
    if level == 1:
        denom = 1.0 - bb * math.exp(rates.r1)
        if denom <= 0.0:
            raise ValueError("validity condition 1 - (1-beta)*exp(r1) > 0 violated")
        return (math.exp(rates.r1) - 1.0) / (snr * denom)
    if level == 2:
        if bb <= 0.0:
            raise ValueError("layer-2 outage constant needs beta < 1")
        return (math.exp(rates.r2) - 1.0) / (bb * snr)
    raise ValueError(f"level must be 1 or 2, got {level}")


def scenario_terms(
    level: int,
    rates: ThresholdRates,
    beta: float,
    snr: float,
    g_sd_mean: float,
    sr_means: np.ndarray,
    rd_means: np.ndarray,
    power_ratios: np.ndarray,
) -> list[tuple[DecodeSetScenario, float]]:
    """High-SNR term of every decode-set scenario of the selected set.

    ``power_ratios`` holds P_i / P_t per selected relay.  Layer-1 scenarios
    enumerate disjoint (delta, theta) pairs; layer-2 scenarios enumerate
    delta only.  Near-one factors contribute exactly 1 per member.
    """
    sr_means = np.asarray(sr_means, dtype=float)
    rd_means = np.asarray(rd_means, dtype=float)
    power_ratios = np.asarray(power_ratios, dtype=float)
    if not (g_sd_mean > 0 and np.all(sr_means > 0) and np.all(rd_means > 0)):
        raise ValueError("all mean link gains must be positive")
    if np.any(power_ratios <= 0):
        raise ValueError("selected relay powers must be positive")
    kconst = _layer_constant(level, rates, beta, snr)
    n = len(sr_means)
    ids = tuple(range(1, n + 1))
    terms: list[tuple[DecodeSetScenario, float]] = []
    for alpha in range(n + 1):
        for delta in itertools.combinations(ids, alpha):
            fail_product = math.prod(kconst / sr_means[d - 1] for d in delta)
            rest = [i for i in ids if i not in delta]
            dest = (
                kconst ** (n - alpha + 1)
                / math.factorial(n - alpha + 1)
                / g_sd_mean
                * math.prod(1.0 / (power_ratios[v - 1] * rd_means[v - 1]) for v in rest)
            )
            base = fail_product * dest
            if level == 1:
                for xi in range(len(rest) + 1):
                    for theta in itertools.combinations(rest, xi):
                        scen = DecodeSetScenario(delta=frozenset(delta), theta=frozenset(theta))
                        terms.append((scen, base))
            else:
                terms.append((DecodeSetScenario(delta=frozenset(delta)), base))
    return terms


def _elementary_symmetric(x: np.ndarray) -> np.ndarray:
    """e_0..e_n of the values x, via the product of (1 + x_i t)."""
    e = np.zeros(len(x) + 1)
    e[0] = 1.0
    for i, v in enumerate(x):
        e[1 : i + 2] += v * e[0 : i + 1].copy()
    return e


def asymptotic_outage(
    level: int,
    rates: ThresholdRates,
    beta: float,
    snr: float,
    g_sd_mean: float,
    sr_means: np.ndarray,
    rd_means: np.ndarray,
    power_ratios: np.ndarray,
) -> float:
    """Assembled high-SNR outage approximation for one layer.

    Equals the sum over scenario_terms; grouping the decode-failure sets by
    size reduces the subset sum to elementary symmetric polynomials, so the
    cost is quadratic in the selection size rather than exponential.
    """
    sr_means = np.asarray(sr_means, dtype=float)
    rd_means = np.asarray(rd_means, dtype=float)
    power_ratios = np.asarray(power_ratios, dtype=float)
    if not (g_sd_mean > 0 and np.all(sr_means > 0) and np.all(rd_means > 0)):
        raise ValueError("all mean link gains must be positive")
    if np.any(power_ratios <= 0):
        raise ValueError("selected relay powers must be positive")
    kconst = _layer_constant(level, rates, beta, snr)
    n = len(sr_means)
    w = 1.0 / (power_ratios * rd_means)  # per-relay destination factor
    e = _elementary_symmetric(kconst * power_ratios * rd_means / sr_means)
    w_all = float(np.prod(w)) if n else 1.0
    theta_count = 2.0 if level == 1 else 1.0
    total = 0.0
    for alpha in range(n + 1):
        rest = n - alpha
        total += (
            e[alpha]
            * theta_count**rest
            * kconst ** (rest + 1)
            / math.factorial(rest + 1)
        )
    return total * w_all / g_sd_mean


def asymptotic_rate(
    rates: ThresholdRates,
    beta: float,
    snr: float,
    g_sd_mean: float,
    sr_means: np.ndarray,
    rd_means: np.ndarray,
    power_ratios: np.ndarray,
) -> float:
    """High-SNR expected-rate surrogate used as a deterministic objective.

    Uses the raw (1 - p) factors of the closed forms; at low SNR the
    approximate probabilities may exceed 1, which simply penalizes the
    objective.
    """
    p1 = asymptotic_outage(1, rates, beta, snr, g_sd_mean, sr_means, rd_means, power_ratios)
    p2 = asymptotic_outage(2, rates, beta, snr, g_sd_mean, sr_means, rd_means, power_ratios)
    return rates.r1 * (1.0 - p1) + rates.r2 * (1.0 - p1) * (1.0 - p2)


def asymptotic_rate_for(
    topology: Topology,
    model: PathLossModel,
    config: CodingConfig,
    rates: ThresholdRates,
    relay_ids: tuple[int, ...],
    powers: dict[int, float],
) -> float:
    """High-SNR expected rate of a concrete selection on a topology."""
    g_sd, sr, rd = link_mean_gains(topology, model)
    idx = [i - 1 for i in relay_ids]
    ratios = np.array([powers[i] / config.p_t for i in relay_ids])
    return asymptotic_rate(rates, config.beta, config.snr, g_sd, sr[idx], rd[idx], ratios)


def asymptotic_line(
    level: int,
    d: float,
    params: LineAsymptoticParams,
    d_tr: float,
    mu: float,
    chi: float,
    power_ratio: float = 1.0,
) -> float:
    """High-SNR outage of a single relay on the source-destination line.

    ``d`` is the relay's distance from the source, ``power_ratio`` is
    P_t / P_1.  The refinement layer carries an extra 1/2 on the relay term.
    Scales exactly as SNR^-2 through the squared layer constant.
    """
    if not 0.0 < d < d_tr:
        raise ValueError(f"relay position must lie strictly inside (0, {d_tr})")
    if level == 1:
        g, half = params.g1, 1.0
    elif level == 2:
        g, half = params.g2, 0.5
    else:
        raise ValueError(f"level must be 1 or 2, got {level}")
    return (g / chi) ** 2 * d_tr**mu * (d**mu + half * power_ratio * (d_tr - d) ** mu)
