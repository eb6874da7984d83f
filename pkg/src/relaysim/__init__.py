"""Two-hop relay selection: outage Monte Carlo, high-SNR closed forms,
placement optimization and relay subset selection algorithms."""

from .netmodel import (
    ChannelDraw,
    NodePosition,
    PathLossModel,
    Topology,
    dbm_to_linear,
    distance,
    linear_to_dbm,
    mean_gain,
    rng_for,
    sample_channels,
)
from .sccode import (
    CodingConfig,
    DecodeOutcome,
    RelayMode,
    ThresholdRates,
    c_level,
    classify_relay,
    config_for_rates,
    destination_decode,
    rates_for_split,
    threshold_rates,
)
from .outage import (
    DecodeSetScenario,
    LineAsymptoticParams,
    OutageEstimate,
    asymptotic_line,
    asymptotic_outage,
    asymptotic_rate,
    expected_rate,
    monte_carlo_outage,
    scenario_terms,
)
from .selection import (
    ConstraintError,
    PowerConstraints,
    Selection,
    allocate_power,
    best_gains,
    multiple_fan_out,
    random_relays,
    single_fan_out,
)
from .placement import (
    GeneralPlacementProblem,
    LinePlacementProblem,
    general_optimum,
    line_optimum,
    line_rate,
)
from .diversity import DiversityReport, diversity_sweep, predicted_diversity, slope_fit
from .config import ConfigError, ScenarioConfig, load_config, serialize_config
from .experiments import run_experiment, write_results

__version__ = "0.1.0"
