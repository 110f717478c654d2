"""Linear RC transient analysis and the read-settling study."""

from .network import GROUND, Pwl, RcNetwork, Step
from .solver import Waveforms, dc_solve, default_timestep, solve_transient, step_moments
from .study import (
    DEFAULT_SIZES,
    DEFAULT_SS_SWITCH_RESISTANCE,
    CornerModel,
    ExpFit,
    ReadBench,
    SettlingResult,
    build_read_testbench,
    calibrate_switch_resistance,
    corners_from_ss,
    fit_exponential,
    memristor_nodes,
    settling_sweep,
    settling_time,
    worst_case_settling,
)
