"""dB / linear / dBm conversions, centralized so unit bugs stay in one file."""

from __future__ import annotations

import math


def db_to_linear(db: float) -> float:
    """Power ratio from decibels, exact 10**(dB/10)."""
    return 10.0 ** (db / 10.0)


def linear_to_db(x: float) -> float:
    if x <= 0:
        raise ValueError(f"cannot express non-positive power ratio {x!r} in dB")
    return 10.0 * math.log10(x)


def dbm_to_watt(dbm: float) -> float:
    return 10.0 ** (dbm / 10.0) * 1e-3


def watt_to_dbm(w: float) -> float:
    if w <= 0:
        raise ValueError(f"cannot express non-positive power {w!r} in dBm")
    return 10.0 * math.log10(w / 1e-3)
