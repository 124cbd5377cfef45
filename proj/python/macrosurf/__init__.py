# Copyright the macrosurf contributors.
# SPDX-License-Identifier: Apache-2.0
"""Surface integral equation solver for planar arrays of dissimilar cells."""

from ._core import (
    FIXTURE_CONFIG,
    ConfigError,
    ConvergenceError,
    MacrosurfError,
    RunConfig,
    Simulation,
    dry_run,
    load_config,
    parse_config,
    run_solve,
    selftest,
    validate_config,
)

__all__ = [
    "FIXTURE_CONFIG",
    "ConfigError",
    "ConvergenceError",
    "MacrosurfError",
    "RunConfig",
    "Simulation",
    "dry_run",
    "load_config",
    "parse_config",
    "run_solve",
    "selftest",
    "validate_config",
]
