"""Scenario configuration: INI-style text with strict key validation.

An empty document yields the default scenario: source at (0,0), destination
at (100,0), twenty relays placed uniformly at random between them, 2.4 GHz
carrier, reference distance 1 m, path loss exponent 3, noise -104 dBm,
source power 6 dBm with the relay budget equal to it, source split 0.75 and
decode thresholds 7.4e-11 / 1.25e-10 on the squared channel magnitude.

Unknown sections or keys are hard errors that name the offending key and
its line; so are values that violate a field invariant.
"""

from __future__ import annotations

import configparser
import io
import math
import re
from dataclasses import dataclass, field, fields, replace

from .netmodel import NodePosition, PathLossModel, Topology, dbm_to_linear, rng_for
from .sccode import CodingConfig
from .selection import PowerConstraints

ALGORITHMS = ("best_gains", "single_fan_out", "multiple_fan_out", "random_relays")
EXPERIMENT_KINDS = ("rate_vs_m", "power_alloc", "snr_power_ratio", "snr_beta_split", "diversity", "place")


class ConfigError(ValueError):
    """Invalid scenario configuration."""


@dataclass(frozen=True)
class ScenarioConfig:
    # topology
    topology_kind: str = "random"
    k_r: int = 20
    region: tuple[float, float, float, float] = (0.0, 100.0, -50.0, 50.0)
    topology_seed: int = 1
    source: tuple[float, float] = (0.0, 0.0)
    destination: tuple[float, float] = (100.0, 0.0)
    relay_positions: tuple[tuple[float, float], ...] = ()
    # path loss
    f_c_hz: float = 2.4e9
    lambda_c_m: float | None = None
    d0_m: float = 1.0
    mu: float = 3.0
    # coding
    p_t_dbm: float = 6.0
    sigma2_dbm: float = -104.0
    beta: float = 0.75
    beta_relay: float | None = None
    h1: float = 7.4e-11
    h2: float = 1.25e-10
    # constraints
    p_max_dbm: float = 6.0
    caps_dbm: tuple[tuple[int, float], ...] = ()
    # experiment
    algorithms: tuple[str, ...] = ALGORITHMS
    m_list: tuple[int, ...] = (1, 2, 3, 4, 5, 6)
    m: int = 3
    snr_grid_db: tuple[float, ...] = (115.0, 120.0, 125.0)
    received_snr_db: tuple[float, ...] = (0.0, 2.0, 4.0)
    power_ratios: tuple[float, ...] = (1.0, 0.5, 0.1)
    beta_splits: tuple[float, ...] = (0.75, 0.6, 0.45)
    k: float = 1.0
    trials: int = 1_000_000
    seed: int = 1
    selector: str = "single_fan_out"

    def __post_init__(self) -> None:
        if self.topology_kind not in ("random", "explicit"):
            raise ConfigError("topology kind must be 'random' or 'explicit'")
        if self.k_r < 0:
            raise ConfigError("k_r must be nonnegative")
        x0, x1, y0, y1 = self.region
        if not (x1 > x0 and y1 > y0):
            raise ConfigError("region must be xmin,xmax,ymin,ymax with positive extent")
        if not 0.0 <= self.beta <= 1.0:
            raise ConfigError("beta must lie in [0, 1]")
        if self.beta_relay is not None and not 0.0 <= self.beta_relay <= 1.0:
            raise ConfigError("beta_relay must lie in [0, 1]")
        if not 0.0 <= self.h1 <= self.h2:
            raise ConfigError("thresholds must satisfy 0 <= h1 <= h2")
        if self.d0_m <= 0 or self.mu <= 0 or self.f_c_hz <= 0:
            raise ConfigError("d0_m, mu and f_c_hz must be positive")
        if self.lambda_c_m is not None and self.lambda_c_m <= 0:
            raise ConfigError("lambda_c_m must be positive")
        if self.trials < 1:
            raise ConfigError("trials must be at least 1")
        if self.m < 1:
            raise ConfigError("m must be at least 1")
        if any(m < 1 for m in self.m_list):
            raise ConfigError("m_list entries must be at least 1")
        for a in self.algorithms:
            if a not in ALGORITHMS:
                raise ConfigError(f"unknown algorithm {a!r}")
        if self.selector not in ("single_fan_out", "multiple_fan_out"):
            raise ConfigError("selector must be single_fan_out or multiple_fan_out")
        if self.topology_kind == "explicit" and not self.relay_positions and self.k_r > 0:
            raise ConfigError("explicit topology needs relay positions")


def make_pathloss(cfg: ScenarioConfig) -> PathLossModel:
    if cfg.lambda_c_m is not None:
        return PathLossModel(lambda_c=cfg.lambda_c_m, d0=cfg.d0_m, mu=cfg.mu)
    return PathLossModel.from_carrier_frequency(cfg.f_c_hz, d0=cfg.d0_m, mu=cfg.mu)


def make_topology(cfg: ScenarioConfig) -> Topology:
    src = NodePosition(*cfg.source)
    dst = NodePosition(*cfg.destination)
    if cfg.topology_kind == "explicit":
        relays = tuple(NodePosition(x, y) for x, y in cfg.relay_positions)
    else:
        rng = rng_for(cfg.topology_seed)
        x0, x1, y0, y1 = cfg.region
        xs = rng.uniform(x0, x1, cfg.k_r)
        ys = rng.uniform(y0, y1, cfg.k_r)
        relays = tuple(NodePosition(float(x), float(y)) for x, y in zip(xs, ys))
    return Topology(source=src, destination=dst, relays=relays)


def make_coding(cfg: ScenarioConfig, p_t_dbm: float | None = None) -> CodingConfig:
    return CodingConfig(
        p_t=dbm_to_linear(cfg.p_t_dbm if p_t_dbm is None else p_t_dbm),
        sigma2=dbm_to_linear(cfg.sigma2_dbm),
        beta=cfg.beta,
        beta_relay=cfg.beta_relay,
        h1_thresh=cfg.h1,
        h2_thresh=cfg.h2,
    )


def make_constraints(cfg: ScenarioConfig) -> PowerConstraints:
    caps = {i: dbm_to_linear(v) for i, v in cfg.caps_dbm}
    return PowerConstraints(p_max=dbm_to_linear(cfg.p_max_dbm), per_relay_max=caps)


def _parse_floats(text: str) -> tuple[float, ...]:
    return tuple(float(tok) for tok in text.split(",") if tok.strip())


def _parse_ints(text: str) -> tuple[int, ...]:
    return tuple(int(tok) for tok in text.split(",") if tok.strip())


def _parse_pair(text: str) -> tuple[float, float]:
    vals = _parse_floats(text)
    if len(vals) != 2:
        raise ValueError("expected 'x,y'")
    return vals


def _parse_region(text: str) -> tuple[float, float, float, float]:
    vals = _parse_floats(text)
    if len(vals) != 4:
        raise ValueError("expected 'xmin,xmax,ymin,ymax'")
    return vals


def _parse_points(text: str) -> tuple[tuple[float, float], ...]:
    return tuple(_parse_pair(part) for part in text.split(";") if part.strip())


def _parse_caps(text: str) -> tuple[tuple[int, float], ...]:
    caps = []
    for part in text.split(";"):
        if not part.strip():
            continue
        rid, val = part.split(":")
        caps.append((int(rid), float(val)))
    return tuple(caps)


def _parse_names(text: str) -> tuple[str, ...]:
    return tuple(tok.strip() for tok in text.split(",") if tok.strip())


_SCHEMA: dict[str, dict[str, tuple[str, object]]] = {
    "topology": {
        "kind": ("topology_kind", str.strip),
        "k_r": ("k_r", int),
        "region": ("region", _parse_region),
        "seed": ("topology_seed", int),
        "source": ("source", _parse_pair),
        "destination": ("destination", _parse_pair),
        "relays": ("relay_positions", _parse_points),
    },
    "pathloss": {
        "f_c_hz": ("f_c_hz", float),
        "lambda_c_m": ("lambda_c_m", float),
        "d0_m": ("d0_m", float),
        "mu": ("mu", float),
    },
    "coding": {
        "p_t_dbm": ("p_t_dbm", float),
        "sigma2_dbm": ("sigma2_dbm", float),
        "beta": ("beta", float),
        "beta_relay": ("beta_relay", float),
        "h1": ("h1", float),
        "h2": ("h2", float),
    },
    "constraints": {
        "p_max_dbm": ("p_max_dbm", float),
        "caps_dbm": ("caps_dbm", _parse_caps),
    },
    "experiment": {
        "algorithms": ("algorithms", _parse_names),
        "m_list": ("m_list", _parse_ints),
        "m": ("m", int),
        "snr_grid_db": ("snr_grid_db", _parse_floats),
        "received_snr_db": ("received_snr_db", _parse_floats),
        "power_ratios": ("power_ratios", _parse_floats),
        "beta_splits": ("beta_splits", _parse_floats),
        "k": ("k", float),
        "trials": ("trials", int),
        "seed": ("seed", int),
        "selector": ("selector", str.strip),
    },
}


def _line_of(text: str, name: str) -> int:
    pattern = re.compile(rf"^\s*(\[)?\s*{re.escape(name)}\s*(\]|=|$)")
    for idx, line in enumerate(text.splitlines(), start=1):
        if pattern.match(line):
            return idx
    return 0


def load_config(text: str) -> ScenarioConfig:
    """Parse and validate a scenario document; empty text gives the defaults."""
    parser = configparser.ConfigParser(
        delimiters=("=",),
        inline_comment_prefixes=("#",),
        comment_prefixes=("#",),
        interpolation=None,
        strict=True,
    )
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    overrides: dict[str, object] = {}
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown section [{section}] at line {_line_of(text, section)}")
        for key, raw in parser.items(section):
            if key not in _SCHEMA[section]:
                raise ConfigError(
                    f"unknown key {key!r} in [{section}] at line {_line_of(text, key)}"
                )
            field_name, parse = _SCHEMA[section][key]
            try:
                overrides[field_name] = parse(raw)
            except (ValueError, TypeError) as exc:
                raise ConfigError(
                    f"bad value for {key!r} at line {_line_of(text, key)}: {exc}"
                ) from exc
    try:
        return ScenarioConfig(**overrides)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def load_config_file(path: str) -> ScenarioConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return load_config(fh.read())


def _format_value(value: object) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, int):
        return str(value)
    raise TypeError(f"cannot format {value!r}")


def serialize_config(cfg: ScenarioConfig) -> str:
    """Canonical text form; load_config(serialize_config(c)) == c."""
    out = io.StringIO()
    for section, keys in _SCHEMA.items():
        out.write(f"[{section}]\n")
        for key, (field_name, _) in keys.items():
            value = getattr(cfg, field_name)
            if value is None:
                continue
            if field_name == "relay_positions":
                if not value:
                    continue
                text = "; ".join(f"{x!r},{y!r}" for x, y in value)
            elif field_name == "caps_dbm":
                if not value:
                    continue
                text = "; ".join(f"{i}:{v!r}" for i, v in value)
            elif field_name == "region":
                text = ", ".join(repr(v) for v in value)
            elif isinstance(value, tuple):
                text = ", ".join(_format_value(v) for v in value)
            else:
                text = _format_value(value)
            out.write(f"{key} = {text}\n")
        out.write("\n")
    return out.getvalue()
