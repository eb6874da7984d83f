"""Rate-maximizing relay placement.

On the source-destination line the high-SNR expected rate is a polynomial
of degree 2*mu in the relay position, so the optimum is found from the real
roots of its derivative (a cubic when mu = 2, solved in closed form)
checked against a dense interior grid.  In the plane the objective is a
signomial of the relay coordinates; it is maximized by multi-start
coordinate pattern search with distances computed directly from the
coordinates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import polynomial as npoly

from .netmodel import PathLossModel
from .outage import LineAsymptoticParams, asymptotic_line, asymptotic_rate
from .sccode import CodingConfig, ThresholdRates

GRID_POINTS = 10_000


@dataclass(frozen=True)
class LinePlacementProblem:
    """Single-relay placement on the line between source and destination."""

    d_tr: float
    mu: int
    params: LineAsymptoticParams
    power_ratio: float  # P_t / P_1
    rates: ThresholdRates
    chi: float

    def __post_init__(self) -> None:
        if self.d_tr <= 0:
            raise ValueError("d_tr must be positive")
        if int(self.mu) != self.mu or self.mu < 1:
            raise ValueError("mu must be a positive integer")
        if self.power_ratio <= 0 or self.chi <= 0:
            raise ValueError("power_ratio and chi must be positive")


def line_rate(d: float, problem: LinePlacementProblem) -> float:
    """High-SNR expected rate with one relay at distance d from the source."""
    p1 = asymptotic_line(1, d, problem.params, problem.d_tr, problem.mu, problem.chi, problem.power_ratio)
    p2 = asymptotic_line(2, d, problem.params, problem.d_tr, problem.mu, problem.chi, problem.power_ratio)
    r = problem.rates
    return r.r1 * (1.0 - p1) + r.r2 * (1.0 - p1) * (1.0 - p2)


def line_rate_coefficients(problem: LinePlacementProblem) -> np.ndarray:
    """Ascending coefficients of the degree-2*mu placement polynomial."""
    mu = int(problem.mu)
    d_tr = problem.d_tr
    d_pow = np.zeros(mu + 1)
    d_pow[mu] = 1.0  # d^mu
    far_pow = npoly.polypow([d_tr, -1.0], mu)  # (d_tr - d)^mu
    scale = d_tr**mu / problem.chi**2
    p1 = scale * problem.params.g1**2 * npoly.polyadd(d_pow, problem.power_ratio * far_pow)
    p2 = scale * problem.params.g2**2 * npoly.polyadd(d_pow, 0.5 * problem.power_ratio * far_pow)
    one = np.array([1.0])
    r = problem.rates
    rate = npoly.polyadd(
        r.r1 * npoly.polysub(one, p1),
        r.r2 * npoly.polymul(npoly.polysub(one, p1), npoly.polysub(one, p2)),
    )
    return rate


def real_cubic_roots(c0: float, c1: float, c2: float, c3: float) -> list[float]:
    """Real roots of c3 x^3 + c2 x^2 + c1 x + c0 = 0 (c3 != 0), closed form.

    Depressed-cubic discriminant split: three real roots via the
    trigonometric method, otherwise Cardano's single real root.
    """
    if c3 == 0.0:
        raise ValueError("leading coefficient must be nonzero")
    a = c2 / c3
    b = c1 / c3
    c = c0 / c3
    p = b - a * a / 3.0
    q = 2.0 * a**3 / 27.0 - a * b / 3.0 + c
    shift = -a / 3.0
    disc = (q / 2.0) ** 2 + (p / 3.0) ** 3
    if abs(p) < 1e-300 and abs(q) < 1e-300:
        return [shift]
    if disc > 0.0:
        s = math.sqrt(disc)
        u = math.copysign(abs(-q / 2.0 + s) ** (1.0 / 3.0), -q / 2.0 + s)
        v = math.copysign(abs(-q / 2.0 - s) ** (1.0 / 3.0), -q / 2.0 - s)
        return [u + v + shift]
    r = math.sqrt(-(p**3) / 27.0)
    phi = math.acos(min(1.0, max(-1.0, -q / (2.0 * r))))
    mag = 2.0 * math.sqrt(-p / 3.0)
    return sorted(mag * math.cos((phi + 2.0 * math.pi * k) / 3.0) + shift for k in range(3))


def _stationary_points(problem: LinePlacementProblem) -> list[float]:
    deriv = npoly.polyder(line_rate_coefficients(problem))
    deriv = np.trim_zeros(deriv, "b")
    if len(deriv) <= 1:
        return []
    if len(deriv) == 4:
        roots = real_cubic_roots(*deriv)
    else:
        rr = np.roots(deriv[::-1])
        scale = max(problem.d_tr, 1.0)
        roots = [float(z.real) for z in rr if abs(z.imag) < 1e-9 * scale]
    return [r for r in roots if 0.0 < r < problem.d_tr]


def line_optimum(problem: LinePlacementProblem, grid_points: int = GRID_POINTS) -> float:
    """Rate-maximizing relay position on the open interval (0, d_tr).

    Compares the interior stationary points of the placement polynomial
    against a dense interior grid; always returns an interior point, falling
    back to the grid argmax when no stationary point improves on it.
    """
    grid = problem.d_tr * np.arange(1, grid_points) / grid_points
    values = npoly.polyval(grid, line_rate_coefficients(problem))
    candidates = [float(grid[int(np.argmax(values))])]
    candidates.extend(_stationary_points(problem))
    return max(candidates, key=lambda d: line_rate(d, problem))


@dataclass(frozen=True)
class GeneralPlacementProblem:
    """Placement of m relays anywhere in the half-strip above the line.

    The search box is a in (0, d_tr), b in [b_min, b_max]; b_min is clamped
    slightly above zero because the path-loss objective is built from
    distances that may not vanish.
    """

    m: int
    d_tr: float
    model: PathLossModel
    config: CodingConfig
    rates: ThresholdRates
    power_per_relay: float
    b_max: float | None = None

    def __post_init__(self) -> None:
        if self.m < 1:
            raise ValueError("m must be at least 1")
        if self.d_tr <= 0 or self.power_per_relay <= 0:
            raise ValueError("d_tr and power_per_relay must be positive")

    @property
    def b_min(self) -> float:
        return 1e-6 * self.d_tr

    @property
    def b_hi(self) -> float:
        return self.b_max if self.b_max is not None else 0.5 * self.d_tr


def placement_objective(problem: GeneralPlacementProblem, coords: np.ndarray) -> float:
    """High-SNR expected rate of m relays at the given (a, b) coordinates."""
    pts = np.asarray(coords, dtype=float).reshape(problem.m, 2)
    d_ti = np.hypot(pts[:, 0], pts[:, 1])
    d_ir = np.hypot(problem.d_tr - pts[:, 0], pts[:, 1])
    model = problem.model
    g_sd = model.chi * problem.d_tr ** (-model.mu)
    sr = model.chi * d_ti ** (-model.mu)
    rd = model.chi * d_ir ** (-model.mu)
    ratios = np.full(problem.m, problem.power_per_relay / problem.config.p_t)
    return asymptotic_rate(problem.rates, problem.config.beta, problem.config.snr, g_sd, sr, rd, ratios)


def _pattern_search(f, x0, lo, hi, step0, tol=1e-6, max_iter=400):
    x = np.clip(np.asarray(x0, dtype=float), lo, hi)
    fx = f(x)
    step = np.asarray(step0, dtype=float).copy()
    for _ in range(max_iter):
        improved = False
        for j in range(len(x)):
            for sgn in (1.0, -1.0):
                cand = x.copy()
                cand[j] = min(max(cand[j] + sgn * step[j], lo[j]), hi[j])
                fc = f(cand)
                if fc > fx:
                    x, fx, improved = cand, fc, True
        if not improved:
            step *= 0.5
            if np.all(step < tol):
                break
    return x, fx


def general_optimum(
    problem: GeneralPlacementProblem,
    n_starts: int = 16,
    seed: int = 0,
) -> list[tuple[float, float]]:
    """Best relay locations found by multi-start coordinate pattern search.

    Starts from random points in the box plus one heuristic start with all
    relays stacked at the best single-relay grid position.  The returned
    point set dominates the objective value of every start.
    """
    m = problem.m
    lo = np.tile([problem.b_min, problem.b_min], m)
    hi = np.tile([problem.d_tr - problem.b_min, problem.b_hi], m)

    def f(x: np.ndarray) -> float:
        return placement_objective(problem, x)

    # coarse single-relay scan, then stack all m relays there
    single = GeneralPlacementProblem(
        m=1,
        d_tr=problem.d_tr,
        model=problem.model,
        config=problem.config,
        rates=problem.rates,
        power_per_relay=problem.power_per_relay,
        b_max=problem.b_max,
    )
    scan_a = np.linspace(0.02, 0.98, 49) * problem.d_tr
    scan_b = np.linspace(problem.b_min, problem.b_hi, 8)
    best_ab = max(
        ((a, b) for a in scan_a for b in scan_b),
        key=lambda ab: placement_objective(single, np.array(ab)),
    )
    starts = [np.tile(best_ab, m)]
    rng = np.random.default_rng(seed)
    for _ in range(n_starts):
        starts.append(lo + rng.random(2 * m) * (hi - lo))

    step0 = 0.25 * (hi - lo)
    tol = 1e-7 * problem.d_tr
    best_x, best_val = None, -math.inf
    for x0 in starts:
        x, val = _pattern_search(f, x0, lo, hi, step0, tol=tol)
        if val > best_val:
            best_x, best_val = x, val
    pts = best_x.reshape(m, 2)
    return [(float(a), float(b)) for a, b in pts]
