"""Pseudo-spectral 2D Navier-Stokes with dyadic-shell diagnostics and
master/slave determining-mode experiments."""

__version__ = "0.1.0"

from .grid import Grid, SpectralField, to_physical, to_spectral
from .shells import project_shell, project_low, shell_norms, decompose
from .solver import FlowState, Forcing, StepperConfig, step, integrate
from .diagnostics import (
    WavenumberParams,
    determining_wavenumber_l2,
    determining_wavenumber_linf,
    intermittency_dimension,
    kraichnan_number,
    grashof_steady,
    lambda_bar,
)
from .sync import SyncConfig, run_sync, find_critical_q, flux_monitor, groenwall_monitor

__all__ = [
    "Grid",
    "SpectralField",
    "to_physical",
    "to_spectral",
    "project_shell",
    "project_low",
    "shell_norms",
    "decompose",
    "FlowState",
    "Forcing",
    "StepperConfig",
    "step",
    "integrate",
    "WavenumberParams",
    "determining_wavenumber_l2",
    "determining_wavenumber_linf",
    "intermittency_dimension",
    "kraichnan_number",
    "grashof_steady",
    "lambda_bar",
    "SyncConfig",
    "run_sync",
    "find_critical_q",
    "flux_monitor",
    "groenwall_monitor",
    "__version__",
]
