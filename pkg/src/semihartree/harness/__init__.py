from .experiments import RunConfig, SweepResult, run_experiment
from .fitting import fit_slope
from .io import read_config, read_field, write_csv, write_field
from .profiles import ProfileSpec, balanced_grid
from .regime import RegimeLabel, classify_regime

__all__ = ["RunConfig", "SweepResult", "run_experiment", "fit_slope", "read_config", "read_field",
           "write_csv", "write_field", "ProfileSpec", "balanced_grid", "RegimeLabel", "classify_regime"]
