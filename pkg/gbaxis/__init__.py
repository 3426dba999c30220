from gbaxis.version import __version__
from gbaxis.model import (GbaError, ModelError, StateVector, ModelParameters, CircadianDrive,
                          STATE_NAMES, derivative, rhs)
from gbaxis.integrator import IntegrationError, IntegratorConfig, TimeSeries, integrate
from gbaxis.scenarios import InputProfile, ScenarioConfig, measure_rhythm, run_scenario
from gbaxis.steadystate import (EquilibriumError, LinearizationError, UnstableOperatingPointError,
                                LinearizedSystem, find_equilibrium, linearize, probe_stability,
                                operating_point)
from gbaxis.frequency import FrequencyError, FrequencyResponse, transfer_function, bode
from gbaxis.capacity import CapacityError, NoiseModel, water_fill, capacity_vs_stress, capacity_sweeps
from gbaxis.bifurcation import sweep, recovery_time
from gbaxis.configparse import ConfigError
from gbaxis.core import Configuration, RunConfig, ParallelRunner
