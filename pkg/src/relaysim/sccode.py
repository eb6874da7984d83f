"""Two-level superposition coding: layer rates, relay modes, destination decoding.

The source splits its power between a coarse layer x1 (fraction beta) and a
refinement layer x2 (fraction 1 - beta).  Receivers decode x1 treating x2 as
interference, then decode x2 after cancelling x1.  Two squared-magnitude
channel thresholds h1 <= h2 define the operating rates: a channel with
|h|^2 = h1 can just decode x1, one with |h|^2 = h2 can also decode x2.

A relay that decoded only x1 retransmits x1 at its full power; a relay that
decoded both retransmits the superposition, splitting its power by
``beta_relay``.  The destination combines the direct slot-1 signal with all
slot-2 relay signals: superposed layer-1 components combine inside one SINR
term, clean x1-only components add as separate SNR terms.

Rates are natural-log units (nats per channel use) throughout.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

import numpy as np

from .netmodel import ChannelDraw


@dataclass(frozen=True)
class CodingConfig:
    """Source power, noise, power splits and decode thresholds.

    ``h1_thresh`` and ``h2_thresh`` are thresholds on the squared channel
    magnitude |h|^2 (same scale as the sampled link gains).
    """

    p_t: float  # source power, mW
    sigma2: float  # noise variance, mW
    beta: float = 0.75  # source power fraction on x1
    beta_relay: float | None = None  # relay power fraction on x1; None -> beta
    h1_thresh: float = 7.4e-11
    h2_thresh: float = 1.25e-10

    def __post_init__(self) -> None:
        if self.p_t <= 0 or self.sigma2 <= 0:
            raise ValueError("p_t and sigma2 must be positive")
        if not 0.0 <= self.beta <= 1.0:
            raise ValueError("beta must lie in [0, 1]")
        if self.beta_relay is not None and not 0.0 <= self.beta_relay <= 1.0:
            raise ValueError("beta_relay must lie in [0, 1]")
        if self.h1_thresh < 0 or self.h1_thresh > self.h2_thresh:
            raise ValueError("thresholds must satisfy 0 <= h1_thresh <= h2_thresh")

    @property
    def beta_bar(self) -> float:
        return 1.0 - self.beta

    @property
    def relay_split(self) -> float:
        return self.beta if self.beta_relay is None else self.beta_relay

    @property
    def snr(self) -> float:
        return self.p_t / self.sigma2


@dataclass(frozen=True)
class ThresholdRates:
    """Operating rates of the two layers, nats per channel use."""

    r1: float
    r2: float

    def __post_init__(self) -> None:
        if self.r1 < 0 or self.r2 < 0:
            raise ValueError("rates must be nonnegative")

    @property
    def total(self) -> float:
        return self.r1 + self.r2


class RelayMode(enum.Enum):
    """What a relay decoded in slot 1, hence what it forwards in slot 2."""

    IDLE = 0
    FORWARD_X1 = 1
    FORWARD_BOTH = 2


@dataclass(frozen=True)
class DecodeOutcome:
    dest_decodes_x1: bool
    dest_decodes_x2: bool
    received_rate: float

    def __post_init__(self) -> None:
        if self.dest_decodes_x2 and not self.dest_decodes_x1:
            raise ValueError("decoding x2 requires decoding x1")


def threshold_rates(config: CodingConfig) -> ThresholdRates:
    """Layer rates supported at the decode thresholds.

    The layer-1 rate always satisfies 1 - (1-beta) * exp(r1) > 0, which keeps
    the high-SNR outage constants finite.
    """
    h1, h2 = config.h1_thresh, config.h2_thresh
    bb = config.beta_bar
    r1 = math.log1p(h1 * config.beta * config.p_t / (h1 * bb * config.p_t + config.sigma2))
    r2 = math.log1p(h2 * bb * config.p_t / config.sigma2)
    assert 1.0 - bb * math.exp(r1) > 0.0
    return ThresholdRates(r1=r1, r2=r2)


def rates_for_split(config: CodingConfig, split: float) -> ThresholdRates:
    """Layer rates at the configured thresholds under an alternative power split."""
    return threshold_rates(replace(config, beta=split, beta_relay=None))


def config_for_rates(config: CodingConfig, rates: ThresholdRates) -> CodingConfig:
    """Config whose thresholds are the decode boundaries of the given rates.

    Replaces h1_thresh/h2_thresh with the gains at which the source-split
    layer tests are exactly met, so relay classification stays equivalent to
    the rate tests when rates are held fixed while power varies.
    """
    s = config.snr
    bb = config.beta_bar
    denom = 1.0 - bb * math.exp(rates.r1)
    if denom <= 0.0:
        raise ValueError("layer-1 rate too large for the source power split")
    h1 = (math.exp(rates.r1) - 1.0) / (s * denom)
    h2 = (math.exp(rates.r2) - 1.0) / (bb * s) if bb > 0 else 0.0
    if h2 < h1:
        raise ValueError("requested rates invert the decode thresholds")
    return replace(config, h1_thresh=h1, h2_thresh=h2)


def c_level(level: int, g, config: CodingConfig):
    """Received rate at a node with squared channel gain g, for one layer.

    Level 1 treats the refinement layer as interference and is bounded above
    by ln(1/(1-beta)); level 2 sees a clean channel after cancellation.
    Accepts scalars or numpy arrays.
    """
    g = np.asarray(g, dtype=float)
    if np.any(g < 0):
        raise ValueError("channel gain must be nonnegative")
    if level == 1:
        num = g * config.beta * config.p_t
        den = g * config.beta_bar * config.p_t + config.sigma2
        out = np.log1p(num / den)
    elif level == 2:
        out = np.log1p(g * config.beta_bar * config.p_t / config.sigma2)
    else:
        raise ValueError(f"level must be 1 or 2, got {level}")
    return float(out) if out.ndim == 0 else out


def classify_relay(gain: float, config: CodingConfig) -> RelayMode:
    """Relay forwarding mode from its source-link squared gain.

    Boundary ties count as successful decoding.
    """
    if gain < 0:
        raise ValueError("channel gain must be nonnegative")
    if gain < config.h1_thresh:
        return RelayMode.IDLE
    if gain < config.h2_thresh:
        return RelayMode.FORWARD_X1
    return RelayMode.FORWARD_BOTH


def classify_gains(g_sr: np.ndarray, config: CodingConfig) -> np.ndarray:
    """Vectorized relay classification; returns RelayMode values as int codes."""
    modes = np.zeros(g_sr.shape, dtype=np.int8)
    modes[g_sr >= config.h1_thresh] = RelayMode.FORWARD_X1.value
    modes[g_sr >= config.h2_thresh] = RelayMode.FORWARD_BOTH.value
    return modes


def decode_events(
    g_sd: np.ndarray,
    g_rd: np.ndarray,
    modes: np.ndarray,
    powers: np.ndarray,
    config: CodingConfig,
    rates: ThresholdRates,
) -> tuple[np.ndarray, np.ndarray]:
    """Destination decode tests for a block of realizations.

    g_sd: (n,) direct-link gains; g_rd, modes, powers: (n, k) per relay.
    Returns (decodes_x1, x2_test) boolean arrays.  ``x2_test`` is the
    combined refinement-layer test on its own; the protocol outcome
    "destination decodes x2" is ``decodes_x1 & x2_test``.
    """
    beta, bb = config.beta, config.beta_bar
    bi = config.relay_split
    bibar = 1.0 - bi
    both = modes == RelayMode.FORWARD_BOTH.value
    x1only = modes == RelayMode.FORWARD_X1.value

    sup = np.where(both, g_rd * powers, 0.0)  # superposed relay contributions
    sup_sum = sup.sum(axis=1)
    num = g_sd * beta * config.p_t + bi * sup_sum
    den = g_sd * bb * config.p_t + bibar * sup_sum + config.sigma2
    mrc = np.where(x1only, g_rd * powers, 0.0).sum(axis=1) / config.sigma2
    decodes_x1 = np.log1p(num / den + mrc) >= rates.r1

    z = g_sd * bb * config.p_t + bibar * sup_sum
    x2_test = np.log1p(z / config.sigma2) >= rates.r2
    return decodes_x1, x2_test


def destination_decode(
    draw: ChannelDraw,
    modes: dict[int, RelayMode],
    powers: dict[int, float],
    config: CodingConfig,
    rates: ThresholdRates,
) -> DecodeOutcome:
    """Decode outcome at the destination after both time slots.

    ``modes`` and ``powers`` must be keyed by the same relay ids; idle
    relays must carry zero power.
    """
    if set(modes) != set(powers):
        raise ValueError("modes and powers must be keyed by the same relay ids")
    ids = sorted(modes)
    for i in ids:
        if powers[i] < 0:
            raise ValueError("relay powers must be nonnegative")
        if modes[i] is RelayMode.IDLE and powers[i] != 0.0:
            raise ValueError(f"idle relay {i} must carry zero power")
    g_rd = np.array([[draw.g_rd[i] for i in ids]], dtype=float)
    mode_codes = np.array([[modes[i].value for i in ids]], dtype=np.int8)
    pw = np.array([[powers[i] for i in ids]], dtype=float)
    dec1, x2t = decode_events(np.array([draw.g_sd]), g_rd, mode_codes, pw, config, rates)
    got_x1 = bool(dec1[0])
    got_x2 = got_x1 and bool(x2t[0])
    rate = rates.r1 + rates.r2 if got_x2 else (rates.r1 if got_x1 else 0.0)
    return DecodeOutcome(dest_decodes_x1=got_x1, dest_decodes_x2=got_x2, received_rate=rate)
