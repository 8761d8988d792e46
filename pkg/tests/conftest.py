"""Shared fixtures.

The full-grid Monte-Carlo calibrations (500 trials/cell, both detectors)
back several acceptance criteria and take a couple of minutes, so they are
cached on disk under tests/.cache keyed by their exact inputs; delete the
directory to force a recompute.
"""

from __future__ import annotations

import os

import numpy as np
import pytest

from covertroute.config import DEFAULT_CONFIG
from covertroute.detectors import CalibrationTable, calibrate
from covertroute.waveform import DsssParams

CACHE_DIR = os.path.join(os.path.dirname(__file__), ".cache")

DEFAULT_SNR_GRID = DEFAULT_CONFIG["calibration"]["snr_grid_db"]
DEFAULT_OBS_GRID = DEFAULT_CONFIG["calibration"]["obs_grid_bits"]
CALIB_TRIALS = 500
CALIB_SEED = 1


def unit_dsss_params(spreading_length: int = 7) -> DsssParams:
    return DsssParams(
        spreading_length=spreading_length,
        bit_duration_s=spreading_length / 1e7,
    )


def _cached_table(kind: str) -> CalibrationTable:
    path = os.path.join(CACHE_DIR, f"{kind}_default_seed{CALIB_SEED}.json")
    if os.path.exists(path):
        table = CalibrationTable.load(path)
        if (
            table.trials == CALIB_TRIALS
            and table.seed == CALIB_SEED
            and list(table.snr_grid_db) == list(DEFAULT_SNR_GRID)
            and list(table.obs_grid_bits) == list(DEFAULT_OBS_GRID)
        ):
            return table
    table = calibrate(kind, unit_dsss_params(), DEFAULT_SNR_GRID, DEFAULT_OBS_GRID,
                      trials=CALIB_TRIALS, seed=CALIB_SEED, jobs=0)
    os.makedirs(CACHE_DIR, exist_ok=True)
    table.save(path)
    return table


@pytest.fixture(scope="session")
def cycle_table() -> CalibrationTable:
    return _cached_table("cycle")


@pytest.fixture(scope="session")
def energy_table() -> CalibrationTable:
    return _cached_table("energy")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
