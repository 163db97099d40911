from .metrics import LOG_COLUMNS, Metrics, compute_metrics, read_log, write_log
from .runner import RunConfig, ScenarioDiverged, run_scenario
from .scenario import BUILTIN, Scenario, make_trajectory

__all__ = [
    "BUILTIN",
    "LOG_COLUMNS",
    "Metrics",
    "RunConfig",
    "Scenario",
    "ScenarioDiverged",
    "compute_metrics",
    "make_trajectory",
    "read_log",
    "run_scenario",
    "write_log",
]
