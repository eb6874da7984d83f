"""Relay subset selection and power allocation under a sum power budget.

Four selection rules are provided: two proximity rules that pick the relays
closest to precomputed rate-maximizing locations, a greedy rule driven by
instantaneous relay-destination gains and decoding status, and a uniform
random baseline.  Ties break toward the lowest relay id everywhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .netmodel import ChannelDraw, NodePosition, PathLossModel, Topology, distance
from .outage import asymptotic_rate_for
from .sccode import CodingConfig, RelayMode, ThresholdRates

_SUM_TOL = 1e-9  # relative slack on the sum power constraint


class ConstraintError(ValueError):
    """Raised when a power allocation cannot satisfy its constraints."""


@dataclass(frozen=True)
class PowerConstraints:
    """Sum power budget and optional per-relay caps (mW)."""

    p_max: float
    per_relay_max: dict[int, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.p_max <= 0:
            raise ValueError("p_max must be positive")
        if any(v < 0 for v in self.per_relay_max.values()):
            raise ValueError("per-relay caps must be nonnegative")

    def cap(self, relay_id: int) -> float:
        return self.per_relay_max.get(relay_id, math.inf)


@dataclass(frozen=True)
class Selection:
    """A chosen relay subset with per-relay transmit powers (mW)."""

    relay_ids: tuple[int, ...]
    powers: dict[int, float]

    def __post_init__(self) -> None:
        object.__setattr__(self, "relay_ids", tuple(self.relay_ids))
        if set(self.relay_ids) != set(self.powers):
            raise ValueError("powers must be keyed exactly by the selected relay ids")
        if len(set(self.relay_ids)) != len(self.relay_ids):
            raise ValueError("relay ids must be unique")
        if any(p < 0 for p in self.powers.values()):
            raise ValueError("relay powers must be nonnegative")

    @property
    def size(self) -> int:
        return len(self.relay_ids)

    def total_power(self) -> float:
        return sum(self.powers.values())

    def check(self, constraints: PowerConstraints) -> "Selection":
        if self.total_power() > constraints.p_max * (1.0 + _SUM_TOL):
            raise ConstraintError("sum of relay powers exceeds the budget")
        for i in self.relay_ids:
            if self.powers[i] > constraints.cap(i) * (1.0 + _SUM_TOL):
                raise ConstraintError(f"relay {i} exceeds its power cap")
        return self

    @classmethod
    def empty(cls) -> "Selection":
        return cls(relay_ids=(), powers={})


def _nearest_order(topology: Topology, target: tuple[float, float]) -> np.ndarray:
    """Relay ids sorted by distance to a point, lowest id first on ties."""
    pt = NodePosition(*target)
    d = np.array([distance(r, pt) for r in topology.relays])
    return np.lexsort((np.arange(1, topology.n_relays + 1), d)) + 1


def multiple_fan_out(
    topology: Topology,
    m: int,
    targets: list[tuple[float, float]],
    constraints: PowerConstraints,
) -> Selection:
    """Select, for each rate-maximizing location in turn, the nearest unused relay."""
    if not 1 <= m <= topology.n_relays:
        raise ValueError(f"m must lie in 1..{topology.n_relays}")
    if len(targets) != m:
        raise ValueError("need exactly one target location per selected relay")
    chosen: list[int] = []
    taken: set[int] = set()
    for target in targets:
        for rid in _nearest_order(topology, target):
            if rid not in taken:
                chosen.append(int(rid))
                taken.add(int(rid))
                break
    power = constraints.p_max / m
    return Selection(tuple(chosen), {i: power for i in chosen}).check(constraints)


def single_fan_out(
    topology: Topology,
    m: int,
    d_bar: float,
    constraints: PowerConstraints,
) -> Selection:
    """Select the m relays closest to the line-network optimum (d_bar, 0)."""
    if not 1 <= m <= topology.n_relays:
        raise ValueError(f"m must lie in 1..{topology.n_relays}")
    order = _nearest_order(topology, (d_bar, 0.0))
    chosen = tuple(int(i) for i in order[:m])
    power = constraints.p_max / m
    return Selection(chosen, {i: power for i in chosen}).check(constraints)


def best_gains(
    draw: ChannelDraw,
    modes: dict[int, RelayMode],
    m: int,
    constraints: PowerConstraints,
) -> Selection:
    """Greedy selection by relay-destination gain among relays that decoded x1.

    Walks relays in decreasing |h|^2 to the destination, adding any relay
    whose mode is not idle, until m are selected or the list is exhausted.
    If fewer than m decoded, the budget is split over those selected; if
    none decoded, the selection is empty and slot 2 carries no relay signal.
    """
    if m < 1:
        raise ValueError("m must be at least 1")
    ids = sorted(modes)
    order = sorted(ids, key=lambda i: (-draw.g_rd[i], i))
    chosen = [i for i in order if modes[i] is not RelayMode.IDLE][:m]
    if not chosen:
        return Selection.empty()
    power = constraints.p_max / len(chosen)
    return Selection(tuple(chosen), {i: power for i in chosen}).check(constraints)


def random_relays(
    k_r: int,
    m: int,
    rng: np.random.Generator,
    constraints: PowerConstraints,
) -> Selection:
    """Uniformly random m-subset of the candidate relays."""
    if not 1 <= m <= k_r:
        raise ValueError(f"m must lie in 1..{k_r}")
    chosen = tuple(int(i) + 1 for i in rng.choice(k_r, size=m, replace=False))
    power = constraints.p_max / m
    return Selection(chosen, {i: power for i in chosen}).check(constraints)


def best_gains_block(g_rd: np.ndarray, decoded: np.ndarray, m: int, p_max: float):
    """Vectorized greedy selection for a block of realizations.

    g_rd: (n, k) relay-destination gains; decoded: (n, k) mode != idle.
    Returns (mask, powers) shaped (n, k).
    """
    order = np.argsort(-g_rd, axis=1, kind="stable")
    dec_sorted = np.take_along_axis(decoded, order, axis=1)
    pick_sorted = dec_sorted & (np.cumsum(dec_sorted, axis=1) <= m)
    mask = np.zeros_like(decoded)
    np.put_along_axis(mask, order, pick_sorted, axis=1)
    count = mask.sum(axis=1)
    per_relay = np.where(count > 0, p_max / np.maximum(count, 1), 0.0)
    return mask, per_relay[:, None] * mask


def random_subsets_block(n: int, k: int, m: int, p_max: float, rng: np.random.Generator):
    """Vectorized uniform m-subsets for a block of realizations."""
    ranks = np.argsort(rng.random((n, k)), axis=1)
    mask = np.zeros((n, k), dtype=bool)
    np.put_along_axis(mask, ranks, np.arange(k)[None, :] < m, axis=1)
    return mask, (p_max / m) * mask


def _project_capped_simplex(v: np.ndarray, total: float, caps: np.ndarray) -> np.ndarray:
    """Euclidean projection onto {0 <= x <= caps, sum(x) = total}.

    Bisection on the water level of clip(v - tau, 0, caps); assumes
    sum(caps) >= total.
    """
    lo = np.min(v - caps) - 1.0
    hi = np.max(v) + 1.0
    for _ in range(100):
        tau = 0.5 * (lo + hi)
        s = np.clip(v - tau, 0.0, caps).sum()
        if s > total:
            lo = tau
        else:
            hi = tau
    return np.clip(v - 0.5 * (lo + hi), 0.0, caps)


def allocate_power(
    mode: str,
    topology: Topology,
    model: PathLossModel,
    config: CodingConfig,
    rates: ThresholdRates,
    selection: Selection,
    constraints: PowerConstraints,
    n_starts: int = 8,
    seed: int = 0,
) -> Selection:
    """Reassign powers of a selection, either equally or by ascent.

    ``mode`` is "equal" or "optimal".  Optimal maximizes the deterministic
    high-SNR expected rate over the capped power simplex by projected
    finite-difference ascent from multiple starts; the equal split is always
    one of the candidates, so the result never does worse than it.
    """
    if mode not in ("equal", "optimal"):
        raise ValueError(f"unknown allocation mode {mode!r}")
    ids = selection.relay_ids
    if not ids:
        if mode == "optimal":
            raise ValueError("optimal allocation needs a nonempty selection")
        return selection
    n = len(ids)
    share = constraints.p_max / n
    caps = np.array([constraints.cap(i) for i in ids])
    if mode == "equal":
        if np.any(share > caps * (1.0 + _SUM_TOL)):
            raise ConstraintError("equal split violates a per-relay cap")
        return Selection(ids, {i: share for i in ids}).check(constraints)

    budget = min(constraints.p_max, float(np.sum(caps)))
    if budget <= 0:
        raise ConstraintError("per-relay caps leave no usable power")

    def objective(p: np.ndarray) -> float:
        return asymptotic_rate_for(topology, model, config, rates, ids, dict(zip(ids, p)))

    def ascend(p0: np.ndarray) -> tuple[np.ndarray, float]:
        p = _project_capped_simplex(p0, budget, caps)
        best = objective(p)
        step = 0.5 * budget
        h = 1e-6 * budget
        for _ in range(200):
            grad = np.empty(n)
            for j in range(n):
                e = np.zeros(n)
                e[j] = h
                grad[j] = (objective(np.clip(p + e, 0, caps)) - objective(np.clip(p - e, 0, caps))) / (2 * h)
            moved = False
            while step > 1e-12 * budget:
                cand = _project_capped_simplex(p + step * grad / max(np.linalg.norm(grad), 1e-300), budget, caps)
                val = objective(cand)
                if val > best + 1e-15:
                    p, best, moved = cand, val, True
                    break
                step *= 0.5
            if not moved:
                break
        return p, best

    rng = np.random.default_rng(seed)
    starts = [np.full(n, budget / n)]
    for _ in range(max(n_starts - 1, 0)):
        starts.append(budget * rng.dirichlet(np.ones(n)))
    best_p, best_val = None, -math.inf
    for p0 in starts:
        p, val = ascend(np.asarray(p0, dtype=float))
        if val > best_val:
            best_p, best_val = p, val
    equal_p = _project_capped_simplex(np.full(n, budget / n), budget, caps)
    if objective(equal_p) > best_val:
        best_p = equal_p
    return Selection(ids, dict(zip(ids, (float(x) for x in best_p)))).check(constraints)
