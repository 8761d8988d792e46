"""Willie's binary hypothesis test, Monte-Carlo DEP calibration, and the
persisted monotone DEP(SNR_W, observation-bits) tables with inversion.

Two detector statistics share one empirical pipeline: the cycle detector
computes the DCS of the observed window, the energy detector the mean
sample power inside its front-end band (set to the occupied DSSS
bandwidth, so the H1/H0 mean-statistic ratio is 1 + SNR_W). The detection
error probability DEP = P_MD + P_FA is minimized over an exhaustive
threshold sweep; the prior factor 1/2 is omitted throughout, so DEP near
1 means undetectable.

Trial RNG streams are derived from (seed, operating point, trial index,
hypothesis), so results are independent of scheduling order, and the same
seed gives both detector kinds paired noise/signal realizations.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import NamedTuple

import numpy as np

from . import __version__
from .cyclo import CycleSet, dcs_batch
from .monotone import fit_bimonotone_nonincreasing, pav_nonincreasing
from .waveform import DsssParams, _synthesize_batch

CYCLE = "cycle"
ENERGY = "energy"
DETECTOR_KINDS = (CYCLE, ENERGY)

CALIBRATION_FORMAT = "covertroute-calibration-v1"


class DetectorError(ValueError):
    pass


class CalibrationRangeError(DetectorError):
    """Requested DEP is outside the range the table can certify."""


class FingerprintMismatchError(DetectorError):
    """Table was calibrated for a different waveform or detector."""


class DepEstimate(NamedTuple):
    dep: float
    extrapolated: bool


@dataclass(frozen=True)
class TrialStatistics:
    """Sorted detector statistics under both hypotheses at one operating point."""

    h0_stats: np.ndarray
    h1_stats: np.ndarray
    trials: int
    snr_w: float
    obs_bits: int

    def __post_init__(self):
        h0 = np.sort(np.asarray(self.h0_stats, dtype=float))
        h1 = np.sort(np.asarray(self.h1_stats, dtype=float))
        if len(h0) != len(h1):
            raise DetectorError("hypotheses must have equal trial counts")
        object.__setattr__(self, "h0_stats", h0)
        object.__setattr__(self, "h1_stats", h1)


@dataclass(frozen=True)
class DepPoint:
    snr_w_db: float
    obs_bits: int
    dep: float
    threshold: float
    ci_halfwidth: float


def waveform_fingerprint(params: DsssParams, k_bit: int = 4, k_chip: int = 2) -> dict:
    """Identifies what a calibration table was measured on."""
    return {
        "spreading_length": params.spreading_length,
        "rolloff": params.rolloff,
        "samples_per_chip": params.samples_per_chip,
        "span_chips": params.span_chips,
        "code_seed": params.code_seed,
        "code": [int(c) for c in params.code],
        "k_bit_cycles": k_bit,
        "k_chip_cycles": k_chip,
    }


def fingerprint_hash(fingerprint: dict) -> str:
    blob = json.dumps(fingerprint, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _trial_rng(seed: int, snr_w: float, obs_bits: int, hyp: int, trial: int):
    key = int.from_bytes(np.float64(snr_w).tobytes(), "little")
    ss = np.random.SeedSequence([int(seed), key, int(obs_bits), hyp, trial])
    return np.random.default_rng(ss)


def _unit_bandwidth_params(params: DsssParams) -> DsssParams:
    """Copy of params with Omega = 1 Hz; DEP depends only on the waveform
    shape, SNR_W, and the observation length, never on the absolute scale."""
    return DsssParams(
        spreading_length=params.spreading_length,
        bit_duration_s=float(params.spreading_length),
        rolloff=params.rolloff,
        samples_per_chip=params.samples_per_chip,
        code=params.code,
        span_chips=params.span_chips,
        code_seed=params.code_seed,
    )


def _energy_statistic(windows: np.ndarray, samples_per_chip: int) -> np.ndarray:
    """Mean sample power inside the front-end band |f| <= Omega = 1/T_c."""
    n = windows.shape[1]
    spec = np.fft.rfft(windows, axis=1)
    kmax = n // samples_per_chip
    return (np.abs(spec[:, 0]) ** 2
            + 2.0 * np.sum(np.abs(spec[:, 1:kmax + 1]) ** 2, axis=1)) / n**2


def run_trials(
    kind: str,
    params: DsssParams,
    snr_w: float,
    obs_bits: int,
    trials: int,
    seed: int,
    k_bit: int = 4,
    k_chip: int = 2,
) -> TrialStatistics:
    """Monte-Carlo statistics under H0 (noise only) and H1 (signal + noise).

    snr_w is Willie's SNR per the link budget (no despreading gain). Each
    trial draws fresh random bits; the spreading code is the scenario's
    fixed code. Deterministic per seed.
    """
    if kind not in DETECTOR_KINDS:
        raise DetectorError(f"unknown detector kind {kind!r}")
    if trials < 2:
        raise DetectorError("need at least 2 trials per hypothesis")
    if obs_bits < 8:
        raise DetectorError("observation must cover at least 8 bits")
    if snr_w <= 0:
        raise DetectorError("snr_w must be positive")

    wf = _unit_bandwidth_params(params)
    spc = wf.samples_per_chip
    n_samples = obs_bits * wf.spreading_length * spc
    trim = wf.edge_trim_samples()
    noise_sigma = math.sqrt(spc / 2.0)  # N0/2 * f_s with N0 * Omega = 1
    amplitude = math.sqrt(snr_w)
    cycle_set = CycleSet.for_dsss(wf, k_bit=k_bit, k_chip=k_chip) if kind == CYCLE else None

    def statistic(windows: np.ndarray) -> np.ndarray:
        if kind == CYCLE:
            return dcs_batch(windows, wf.sample_rate_hz, cycle_set)
        return _energy_statistic(windows, spc)

    h0, h1 = [], []
    chunk = max(1, min(trials, (1 << 24) // n_samples))
    for start in range(0, trials, chunk):
        idx = range(start, min(start + chunk, trials))
        noise0 = np.stack(
            [_trial_rng(seed, snr_w, obs_bits, 0, t).normal(0.0, noise_sigma, n_samples)
             for t in idx]
        )
        h0.append(statistic(noise0))
        rows = []
        for t in idx:
            rng = _trial_rng(seed, snr_w, obs_bits, 1, t)
            bits = rng.choice([-1.0, 1.0], size=obs_bits)
            sig = _synthesize_batch(wf, bits[None, :], amplitude)[0, trim:-trim]
            rows.append(sig + rng.normal(0.0, noise_sigma, n_samples))
        h1.append(statistic(np.stack(rows)))
    return TrialStatistics(
        h0_stats=np.concatenate(h0),
        h1_stats=np.concatenate(h1),
        trials=trials,
        snr_w=snr_w,
        obs_bits=obs_bits,
    )


def optimize_threshold(stats: TrialStatistics) -> tuple[float, float]:
    """Exhaustive sweep over all 2n+1 threshold intervals of the pooled
    sorted statistics; returns (threshold, DEP) minimizing P_MD + P_FA,
    ties broken toward the smaller threshold. DEP is clamped to [0, 1]
    (always-guessing bounds Willie's error at 1)."""
    h0, h1 = stats.h0_stats, stats.h1_stats
    if len(h0) == 0:
        raise DetectorError("empty trial statistics")
    pooled = np.sort(np.concatenate([h0, h1]))
    cands = np.concatenate(
        [[pooled[0] - 1.0], 0.5 * (pooled[:-1] + pooled[1:]), [pooled[-1] + 1.0]]
    )
    n = float(len(h0))
    # decide H1 when the statistic exceeds the threshold
    p_fa = (len(h0) - np.searchsorted(h0, cands, side="right")) / n
    p_md = np.searchsorted(h1, cands, side="right") / n
    dep = p_fa + p_md
    best = int(np.argmin(dep))
    return float(cands[best]), float(min(dep[best], 1.0))


def dep_confidence_halfwidth(stats: TrialStatistics, threshold: float) -> float:
    """Normal-approximation 95% halfwidth of the empirical DEP."""
    n = float(len(stats.h0_stats))
    p_fa = float(np.mean(stats.h0_stats > threshold))
    p_md = float(np.mean(stats.h1_stats <= threshold))
    return 1.96 * math.sqrt(p_fa * (1 - p_fa) / n + p_md * (1 - p_md) / n)


@dataclass(frozen=True)
class CalibrationTable:
    """Monotone DEP surface over (SNR_W dB, observation bits).

    raw_dep/fitted_dep/thresholds/ci are (len(snr_grid), len(obs_grid))
    matrices; the fit is non-increasing along both axes. Lookups
    interpolate bilinearly on (dB, log2 bits); observation lengths beyond
    the grid extrapolate on the monotone fit and set the extrapolated
    flag.
    """

    detector: str
    fingerprint: dict
    snr_grid_db: np.ndarray
    obs_grid_bits: np.ndarray
    raw_dep: np.ndarray
    fitted_dep: np.ndarray
    thresholds: np.ndarray
    ci_halfwidth: np.ndarray
    trials: int
    seed: int
    created_utc: str = ""

    @property
    def fingerprint_hash(self) -> str:
        return fingerprint_hash(self.fingerprint)

    def _column_at_obs(self, obs_bits: float) -> tuple[np.ndarray, bool]:
        """Fitted DEP over the SNR grid at one observation length."""
        ys = np.log2(self.obs_grid_bits.astype(float))
        y = math.log2(obs_bits)
        if y <= ys[0]:
            if y < ys[0]:
                warnings.warn(
                    f"observation {obs_bits} bits below calibration grid; clamped")
            return self.fitted_dep[:, 0], False
        if y <= ys[-1]:
            j = int(np.searchsorted(ys, y)) - 1
            j = min(max(j, 0), len(ys) - 2)
            t = (y - ys[j]) / (ys[j + 1] - ys[j])
            return (1 - t) * self.fitted_dep[:, j] + t * self.fitted_dep[:, j + 1], False
        if len(ys) < 2:
            return self.fitted_dep[:, -1], True
        slope = (self.fitted_dep[:, -1] - self.fitted_dep[:, -2]) / (ys[-1] - ys[-2])
        col = np.clip(self.fitted_dep[:, -1] + slope * (y - ys[-1]), 0.0, 1.0)
        # long extrapolations can let rows cross; re-project onto the cone
        return pav_nonincreasing(col), True

    def lookup(self, snr_w: float, obs_bits: float) -> DepEstimate:
        """DEP at an arbitrary operating point; SNR clamps to the grid."""
        if snr_w <= 0:
            raise DetectorError("snr_w must be positive")
        col, extrapolated = self._column_at_obs(obs_bits)
        xs = self.snr_grid_db
        x = 10.0 * math.log10(snr_w)
        if x < xs[0] or x > xs[-1]:
            warnings.warn(f"SNR_W {x:.1f} dB outside calibration grid; clamped")
            x = min(max(x, xs[0]), xs[-1])
        dep = float(np.interp(x, xs, col))
        return DepEstimate(dep=min(max(dep, 0.0), 1.0), extrapolated=extrapolated)

    def invert(self, dep_reqd: float, obs_bits: float) -> float:
        """Largest SNR_W (linear) whose fitted DEP still meets dep_reqd.

        Bisection on the monotone interpolant; the result is guaranteed to
        satisfy lookup(result) >= dep_reqd - 1e-9.
        """
        if not (0 < dep_reqd < 1):
            raise DetectorError("dep_reqd must lie in (0, 1)")
        col, _ = self._column_at_obs(obs_bits)
        xs = self.snr_grid_db
        if dep_reqd > col[0]:
            raise CalibrationRangeError(
                f"requirement exceeds detector-limited covertness: dep_reqd "
                f"{dep_reqd} > {col[0]:.4f}, the fitted DEP at the grid's minimum SNR"
            )
        if dep_reqd < col[-1]:
            raise CalibrationRangeError(
                f"table does not bracket dep_reqd {dep_reqd}: fitted DEP at the "
                f"grid's maximum SNR is still {col[-1]:.4f}"
            )
        f = lambda x: float(np.interp(x, xs, col))
        lo, hi = float(xs[0]), float(xs[-1])
        if f(hi) >= dep_reqd:
            return 10.0 ** (hi / 10.0)
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            if f(mid) >= dep_reqd:
                lo = mid
            else:
                hi = mid
        assert f(lo) >= dep_reqd - 1e-9
        return 10.0 ** (lo / 10.0)

    def to_json_dict(self) -> dict:
        return {
            "format": CALIBRATION_FORMAT,
            "tool_version": __version__,
            "created_utc": self.created_utc,
            "detector": self.detector,
            "fingerprint": self.fingerprint,
            "fingerprint_hash": self.fingerprint_hash,
            "snr_grid_db": [float(x) for x in self.snr_grid_db],
            "obs_grid_bits": [int(x) for x in self.obs_grid_bits],
            "trials": self.trials,
            "seed": self.seed,
            "raw_dep": self.raw_dep.tolist(),
            "fitted_dep": self.fitted_dep.tolist(),
            "thresholds": self.thresholds.tolist(),
            "ci_halfwidth": self.ci_halfwidth.tolist(),
        }

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json_dict(), fh, indent=1, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "CalibrationTable":
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
        if doc.get("format") != CALIBRATION_FORMAT:
            raise DetectorError(f"{path}: not a calibration table")
        table = cls(
            detector=doc["detector"],
            fingerprint=doc["fingerprint"],
            snr_grid_db=np.asarray(doc["snr_grid_db"], dtype=float),
            obs_grid_bits=np.asarray(doc["obs_grid_bits"], dtype=int),
            raw_dep=np.asarray(doc["raw_dep"], dtype=float),
            fitted_dep=np.asarray(doc["fitted_dep"], dtype=float),
            thresholds=np.asarray(doc["thresholds"], dtype=float),
            ci_halfwidth=np.asarray(doc["ci_halfwidth"], dtype=float),
            trials=int(doc["trials"]),
            seed=int(doc["seed"]),
            created_utc=doc.get("created_utc", ""),
        )
        if doc.get("fingerprint_hash") not in (None, table.fingerprint_hash):
            raise DetectorError(f"{path}: fingerprint hash mismatch; file corrupted?")
        return table


@dataclass(frozen=True)
class SyntheticDepTable:
    """Closed-form dep(snr_w) stand-in for a calibration table (tests,
    Theorem-1 verification). Observation length is ignored."""

    dep_fn: object
    detector: str = "synthetic"

    def lookup(self, snr_w: float, obs_bits: float) -> DepEstimate:
        return DepEstimate(dep=float(self.dep_fn(snr_w)), extrapolated=False)


def dep_lookup(table, snr_w: float, obs_bits: float) -> DepEstimate:
    if table is None:
        raise DetectorError("no calibration table; run `covertroute calibrate` first")
    return table.lookup(snr_w, obs_bits)


def invert_dep(table: CalibrationTable, dep_reqd: float, obs_bits: float) -> float:
    if table is None:
        raise DetectorError("no calibration table; run `covertroute calibrate` first")
    return table.invert(dep_reqd, obs_bits)


def _calibrate_cell(args) -> tuple[int, int, DepPoint]:
    (kind, params, snr_db, obs_bits, trials, seed, k_bit, k_chip, i, j) = args
    snr_w = 10.0 ** (snr_db / 10.0)
    stats = run_trials(kind, params, snr_w, obs_bits, trials, seed,
                       k_bit=k_bit, k_chip=k_chip)
    threshold, dep = optimize_threshold(stats)
    ci = dep_confidence_halfwidth(stats, threshold)
    return i, j, DepPoint(snr_w_db=snr_db, obs_bits=obs_bits, dep=dep,
                          threshold=threshold, ci_halfwidth=ci)


def raw_monotonicity_violations(raw: np.ndarray, ci: np.ndarray,
                                factor: float = 2.0) -> tuple[int, int]:
    """(violations beyond factor*CI, total adjacent comparisons) along both axes."""
    bad = total = 0
    for axis in (0, 1):
        a = np.moveaxis(raw, axis, 0)
        c = np.moveaxis(ci, axis, 0)
        rise = a[1:] - a[:-1]  # expected <= 0
        tol = factor * np.sqrt(c[1:] ** 2 + c[:-1] ** 2)
        bad += int(np.sum(rise > tol))
        total += rise.size
    return bad, total


def calibrate(
    kind: str,
    params: DsssParams,
    snr_grid_db,
    obs_grid_bits,
    trials: int = 500,
    seed: int = 0,
    k_bit: int = 4,
    k_chip: int = 2,
    jobs: int = 1,
) -> CalibrationTable:
    """Monte-Carlo DEP at every grid cell, then an isotonic fit enforcing
    DEP non-increasing in SNR_W and in observation length.

    Cells are independent, so jobs > 1 (0 = all cores) fans them out over
    processes; per-trial RNG streams make the result order-insensitive.
    Raw cells violating monotonicity by more than twice the Monte-Carlo CI
    are flagged with a warning, not an error.
    """
    snr_grid = np.asarray(sorted(snr_grid_db), dtype=float)
    obs_grid = np.asarray(sorted(int(b) for b in obs_grid_bits), dtype=int)
    if snr_grid.size == 0 or obs_grid.size == 0:
        raise DetectorError("calibration grids must be nonempty")
    if trials < 200:
        warnings.warn(f"{trials} trials/cell is below calibration grade (200)")

    work = [
        (kind, params, float(snr_grid[i]), int(obs_grid[j]), trials, seed,
         k_bit, k_chip, i, j)
        for i in range(len(snr_grid))
        for j in range(len(obs_grid))
    ]
    results: list[tuple[int, int, DepPoint]] = []
    if jobs == 1:
        results = [_calibrate_cell(args) for args in work]
    else:
        workers = jobs if jobs > 0 else (os.cpu_count() or 1)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_calibrate_cell, work, chunksize=1))

    shape = (len(snr_grid), len(obs_grid))
    raw = np.zeros(shape)
    thresholds = np.zeros(shape)
    ci = np.zeros(shape)
    for i, j, point in results:
        raw[i, j] = point.dep
        thresholds[i, j] = point.threshold
        ci[i, j] = point.ci_halfwidth

    fitted = fit_bimonotone_nonincreasing(raw)
    bad, total = raw_monotonicity_violations(raw, ci)
    if bad:
        warnings.warn(
            f"{bad}/{total} adjacent raw DEP comparisons violate monotonicity "
            f"beyond 2x the Monte-Carlo CI"
        )
    return CalibrationTable(
        detector=kind,
        fingerprint=waveform_fingerprint(params, k_bit=k_bit, k_chip=k_chip),
        snr_grid_db=snr_grid,
        obs_grid_bits=obs_grid,
        raw_dep=raw,
        fitted_dep=fitted,
        thresholds=thresholds,
        ci_halfwidth=ci,
        trials=trials,
        seed=seed,
        created_utc=datetime.now(timezone.utc).isoformat(),
    )


def find_crossover(cycle_table: CalibrationTable, energy_table: CalibrationTable,
                   obs_bits: float) -> dict:
    """Where (if anywhere) the energy detector stops beating the cycle
    detector on a shared SNR grid: below the reported SNR the energy
    detector's fitted DEP is strictly lower."""
    if not np.array_equal(cycle_table.snr_grid_db, energy_table.snr_grid_db):
        raise DetectorError("tables must share an SNR grid")
    col_c, _ = cycle_table._column_at_obs(obs_bits)
    col_e, _ = energy_table._column_at_obs(obs_bits)
    energy_better = col_e < col_c
    prefix = 0
    while prefix < len(energy_better) and energy_better[prefix]:
        prefix += 1
    return {
        "obs_bits": obs_bits,
        "snr_grid_db": [float(x) for x in cycle_table.snr_grid_db],
        "cycle_dep": [float(x) for x in col_c],
        "energy_dep": [float(x) for x in col_e],
        "energy_better_prefix_len": prefix,
        "exists": prefix > 0,
        "crossover_snr_db": float(cycle_table.snr_grid_db[prefix - 1]) if prefix else None,
    }
