"""Network geometry, log-distance path loss and Rayleigh channel sampling.

Fading is represented at the squared-magnitude level: each link's |h|^2 is
an independent exponential random variable whose mean is the log-distance
mean gain of that link.  Sampling |h|^2 directly is equivalent in
distribution to drawing a complex Gaussian h and squaring, and cheaper.

All powers are linear milliwatts internally; dBm appears only at the
configuration boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

SPEED_OF_LIGHT = 3.0e8  # m/s, link-budget convention (2.4 GHz -> 0.125 m)


def dbm_to_linear(p_dbm: float) -> float:
    """dBm to linear milliwatts."""
    return 10.0 ** (p_dbm / 10.0)


def linear_to_dbm(p_mw: float) -> float:
    """Linear milliwatts to dBm."""
    if p_mw <= 0:
        raise ValueError("power must be positive to express in dBm")
    return 10.0 * math.log10(p_mw)


@dataclass(frozen=True)
class NodePosition:
    """A node location in meters."""

    x: float
    y: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError("node coordinates must be finite")


def distance(p: NodePosition, q: NodePosition) -> float:
    """Euclidean distance between two nodes, in meters."""
    return math.hypot(p.x - q.x, p.y - q.y)


@dataclass(frozen=True)
class Topology:
    """Source, destination and an ordered list of candidate relays.

    Relay ids are stable and 1-based: relay ``i`` is ``relays[i - 1]``.
    """

    source: NodePosition
    destination: NodePosition
    relays: tuple[NodePosition, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "relays", tuple(self.relays))
        if distance(self.source, self.destination) == 0.0:
            raise ValueError("source and destination must not coincide")

    @property
    def n_relays(self) -> int:
        return len(self.relays)

    def relay(self, relay_id: int) -> NodePosition:
        if not 1 <= relay_id <= self.n_relays:
            raise ValueError(f"relay id {relay_id} out of range 1..{self.n_relays}")
        return self.relays[relay_id - 1]


@dataclass(frozen=True)
class PathLossModel:
    """Log-distance path loss with reference distance d0 and exponent mu.

    The mean squared channel gain at distance d is

        mean_gain(d) = (lambda_c / (4 pi d0))^2 * (d / d0)^(-mu)
                     = chi * d^(-mu)

    with chi = (lambda_c / (4 pi d0))^2 * d0^mu.
    """

    lambda_c: float
    d0: float = 1.0
    mu: float = 3.0
    chi: float = field(init=False)

    def __post_init__(self) -> None:
        if self.lambda_c <= 0 or self.d0 <= 0 or self.mu <= 0:
            raise ValueError("lambda_c, d0 and mu must all be positive")
        chi = (self.lambda_c / (4.0 * math.pi * self.d0)) ** 2 * self.d0**self.mu
        object.__setattr__(self, "chi", chi)

    @classmethod
    def from_carrier_frequency(cls, f_c: float, d0: float = 1.0, mu: float = 3.0) -> "PathLossModel":
        if f_c <= 0:
            raise ValueError("carrier frequency must be positive")
        return cls(lambda_c=SPEED_OF_LIGHT / f_c, d0=d0, mu=mu)


def mean_gain(model: PathLossModel, d: float) -> float:
    """Mean squared channel gain E|h|^2 at link distance d > 0."""
    if d <= 0:
        raise ValueError("link distance must be positive")
    return model.chi * d ** (-model.mu)


@dataclass(frozen=True)
class ChannelDraw:
    """One fading realization: squared channel magnitudes for every link.

    ``g_sr`` and ``g_rd`` are keyed by relay id 1..K_r.
    """

    g_sd: float
    g_sr: dict[int, float]
    g_rd: dict[int, float]

    def __post_init__(self) -> None:
        if set(self.g_sr) != set(self.g_rd):
            raise ValueError("g_sr and g_rd must be keyed by the same relay ids")


def link_mean_gains(topology: Topology, model: PathLossModel) -> tuple[float, np.ndarray, np.ndarray]:
    """Mean gains of the direct link, source-relay links and relay-destination links.

    Raises ValueError if any pair of communicating nodes coincides; the
    path-loss model is singular at zero distance.
    """
    d_sd = distance(topology.source, topology.destination)
    sr = np.array([distance(topology.source, r) for r in topology.relays])
    rd = np.array([distance(r, topology.destination) for r in topology.relays])
    if np.any(sr == 0.0) or np.any(rd == 0.0):
        raise ValueError("a relay coincides with the source or destination")
    g_sd = mean_gain(model, d_sd)
    g_sr = model.chi * sr ** (-model.mu) if len(sr) else sr
    g_rd = model.chi * rd ** (-model.mu) if len(rd) else rd
    return g_sd, g_sr, g_rd


def sample_channel_block(
    topology: Topology,
    model: PathLossModel,
    rng: np.random.Generator,
    n: int,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Draw n independent realizations of all link gains.

    Returns (g_sd, g_sr, g_rd) with shapes (n,), (n, K_r), (n, K_r).
    Draw order is fixed (direct link first, then source-relay, then
    relay-destination) so that results are reproducible per seed.
    """
    m_sd, m_sr, m_rd = link_mean_gains(topology, model)
    g_sd = rng.exponential(m_sd, n)
    k = topology.n_relays
    g_sr = rng.exponential(m_sr, (n, k)) if k else np.zeros((n, 0))
    g_rd = rng.exponential(m_rd, (n, k)) if k else np.zeros((n, 0))
    return g_sd, g_sr, g_rd


def sample_channels(topology: Topology, model: PathLossModel, rng: np.random.Generator) -> ChannelDraw:
    """Draw one fading realization for every link in the topology."""
    g_sd, g_sr, g_rd = sample_channel_block(topology, model, rng, 1)
    ids = range(1, topology.n_relays + 1)
    return ChannelDraw(
        g_sd=float(g_sd[0]),
        g_sr={i: float(g_sr[0, i - 1]) for i in ids},
        g_rd={i: float(g_rd[0, i - 1]) for i in ids},
    )


def seed_sequence(master_seed: int, *path: int) -> np.random.SeedSequence:
    """Deterministic seed for a job addressed by an integer path.

    Disjoint paths yield statistically independent streams, so grid cells
    and trial chunks can run in any order (or in parallel) and reproduce.
    """
    return np.random.SeedSequence([int(master_seed), *[int(p) for p in path]])


def rng_for(master_seed: int, *path: int) -> np.random.Generator:
    """Generator for the substream addressed by (master_seed, *path)."""
    return np.random.default_rng(seed_sequence(master_seed, *path))
