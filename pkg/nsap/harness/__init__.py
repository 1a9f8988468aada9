from .initial import make_initial
from .orchestrate import RunResult, check_run, compare_runs, resume_run, run_scenario, scale_test_scenario
from .scenario import GridSpec, InitialSpec, OutputSpec, ScenarioSpec, load_scenario, loads_scenario, save_scenario
from .sweep import FamilySpec, load_family, run_family

__all__ = [
    "FamilySpec",
    "GridSpec",
    "InitialSpec",
    "OutputSpec",
    "RunResult",
    "ScenarioSpec",
    "check_run",
    "compare_runs",
    "load_family",
    "load_scenario",
    "loads_scenario",
    "make_initial",
    "resume_run",
    "run_family",
    "run_scenario",
    "save_scenario",
    "scale_test_scenario",
]
