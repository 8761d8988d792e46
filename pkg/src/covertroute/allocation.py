"""Closed-form single-hop resource allocation.

Link budget: SNR at the intended receiver carries the despreading gain
eta, Willie's does not (he lacks the code):

    snr_rx     = P * g_rx * eta / (N0 * Omega)
    snr_willie = P * g_w        / (N0 * Omega)

Covertness-maximizing mode fixes Omega = Omega_max, D = D_reqd, so
eta = Omega_max / D_reqd, sets the power that meets the reliability SNR
with equality, and scores the hop by the detection-SNR gain
theta = snr_rx / snr_willie = (g_rx / g_w) * eta.

Latency-minimizing mode fixes Omega = Omega_max, pushes power to the
covertness cap (or the budget cap when that binds first) and picks the
smallest spreading gain that still meets reliability, giving the minimum
latency lambda = M * eta / Omega_max. A spreading gain below 1 is
physically meaningless, so eta clamps to 1 with the power reduced to the
reliability point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from scipy.stats import norm


class AllocationError(ValueError):
    pass


class InfeasibleLinkError(AllocationError):
    """The link cannot satisfy the constraints within its budgets."""


@dataclass(frozen=True)
class Constraints:
    """Scenario-wide QoS and budget constraints.

    d_reqd_bps only matters in covert-max mode, dep_reqd only in
    latency-min mode; both may be present. snr_reqd is linear (use
    snr_from_ber to derive it from a BER requirement).
    """

    omega_max_hz: float
    p_max_w: float
    n0_w_per_hz: float
    m_bits: float
    snr_reqd: float
    d_reqd_bps: float | None = None
    dep_reqd: float | None = None

    def __post_init__(self):
        for name in ("omega_max_hz", "p_max_w", "n0_w_per_hz", "m_bits", "snr_reqd"):
            if getattr(self, name) <= 0:
                raise AllocationError(f"{name} must be positive")
        if self.d_reqd_bps is not None and self.d_reqd_bps <= 0:
            raise AllocationError("d_reqd_bps must be positive")
        if self.dep_reqd is not None and not (0 < self.dep_reqd < 1):
            raise AllocationError("dep_reqd must lie in (0, 1)")


@dataclass(frozen=True)
class HopAllocation:
    """One hop's operating point and derived link metrics."""

    power_w: float
    bandwidth_hz: float
    eta: float
    data_rate_bps: float
    latency_s: float
    snr_rx: float
    snr_willie: float
    theta: float
    dep_estimate: float | None = None
    dep_extrapolated: bool = False


def snr_pair(power_w: float, bandwidth_hz: float, eta: float,
             gain_rx: float, gain_willie: float, n0: float) -> tuple[float, float]:
    """(snr_rx, snr_willie) per the link budget above."""
    for name, v in (("power", power_w), ("bandwidth", bandwidth_hz), ("eta", eta),
                    ("gain_rx", gain_rx), ("gain_willie", gain_willie), ("n0", n0)):
        if v <= 0:
            raise AllocationError(f"{name} must be positive")
    noise = n0 * bandwidth_hz
    return power_w * gain_rx * eta / noise, power_w * gain_willie / noise


def ber(snr: float) -> float:
    """Uncoded BER = Q(sqrt(2 * snr)) via the complementary normal CDF;
    strictly decreasing, 0.5 at snr = 0."""
    if snr < 0:
        raise AllocationError("snr must be non-negative")
    return float(norm.sf(math.sqrt(2.0 * snr)))


def snr_from_ber(ber_reqd: float) -> float:
    """Invert ber() by bisection on its monotone decrease."""
    if not (0 < ber_reqd < 0.5):
        raise AllocationError("ber_reqd must lie in (0, 0.5)")
    lo, hi = 0.0, 1.0
    while ber(hi) > ber_reqd:
        hi *= 2.0
        if hi > 1e9:
            raise AllocationError(f"ber_reqd {ber_reqd} needs an implausible SNR")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if ber(mid) > ber_reqd:
            lo = mid
        else:
            hi = mid
    return hi


def allocate_covert_max(gain_rx: float, gain_willie: float,
                        constraints: Constraints) -> HopAllocation:
    """Covertness-maximizing allocation; reliability met with equality.

    Raises InfeasibleLinkError when the required rate exceeds the
    bandwidth budget (eta < 1) or the power budget is exceeded.
    """
    if gain_rx <= 0 or gain_willie <= 0:
        raise InfeasibleLinkError("zero-gain link")
    if constraints.d_reqd_bps is None:
        raise AllocationError("covert-max mode needs d_reqd_bps")
    omega = constraints.omega_max_hz
    eta = omega / constraints.d_reqd_bps
    if eta < 1.0:
        raise InfeasibleLinkError(
            f"required rate {constraints.d_reqd_bps} bps exceeds bandwidth budget {omega} Hz"
        )
    power = (constraints.snr_reqd / gain_rx) * (constraints.n0_w_per_hz * omega / eta)
    if power > constraints.p_max_w:
        raise InfeasibleLinkError(
            f"needs {power:.3e} W, budget {constraints.p_max_w:.3e} W"
        )
    snr_rx, snr_willie = snr_pair(power, omega, eta, gain_rx, gain_willie,
                                  constraints.n0_w_per_hz)
    return HopAllocation(
        power_w=power,
        bandwidth_hz=omega,
        eta=eta,
        data_rate_bps=constraints.d_reqd_bps,
        latency_s=constraints.m_bits / constraints.d_reqd_bps,
        snr_rx=snr_rx,
        snr_willie=snr_willie,
        theta=snr_rx / snr_willie,
    )


def allocate_latency_min(gain_rx: float, gain_willie: float,
                         constraints: Constraints, snr_w_max: float) -> HopAllocation:
    """Latency-minimizing allocation at the covertness SNR cap snr_w_max
    (from inverting the detector calibration at dep_reqd)."""
    if gain_rx <= 0 or gain_willie <= 0:
        raise InfeasibleLinkError("zero-gain link")
    if snr_w_max <= 0:
        raise AllocationError("snr_w_max must be positive")
    omega = constraints.omega_max_hz
    n0 = constraints.n0_w_per_hz
    power = min(constraints.p_max_w, snr_w_max * n0 * omega / gain_willie)
    latency = constraints.m_bits * constraints.snr_reqd * n0 / (power * gain_rx)
    eta = omega * latency / constraints.m_bits
    if eta < 1.0:
        # the hop cannot signal faster than Omega_max; back power off to the
        # reliability point at eta = 1
        eta = 1.0
        latency = constraints.m_bits / omega
        power = constraints.snr_reqd * n0 * omega / gain_rx
    snr_rx, snr_willie = snr_pair(power, omega, eta, gain_rx, gain_willie, n0)
    return HopAllocation(
        power_w=power,
        bandwidth_hz=omega,
        eta=eta,
        data_rate_bps=omega / eta,
        latency_s=latency,
        snr_rx=snr_rx,
        snr_willie=snr_willie,
        theta=snr_rx / snr_willie,
    )


@dataclass
class AllocationReport:
    checks: list = field(default_factory=list)  # (name, passed, detail)

    @property
    def ok(self) -> bool:
        return all(passed for _, passed, _ in self.checks)

    def add(self, name: str, passed: bool, detail: str) -> None:
        self.checks.append((name, bool(passed), detail))

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "checks": [
                {"name": n, "passed": p, "detail": d} for n, p, d in self.checks
            ],
        }


def verify_allocation(alloc: HopAllocation, constraints: Constraints,
                      gain_rx: float, gain_willie: float, mode: str,
                      snr_w_max: float | None = None,
                      ber_reqd: float | None = None) -> AllocationReport:
    """Recompute every derived quantity from (P, Omega, eta) and check the
    constraint rows for the given mode; machine-readable result."""
    report = AllocationReport()
    snr_rx, snr_willie = snr_pair(alloc.power_w, alloc.bandwidth_hz, alloc.eta,
                                  gain_rx, gain_willie, constraints.n0_w_per_hz)
    rate = alloc.bandwidth_hz / alloc.eta
    latency = constraints.m_bits / rate

    report.add("power_budget", alloc.power_w <= constraints.p_max_w * (1 + 1e-12),
               f"P = {alloc.power_w:.6e} W vs {constraints.p_max_w:.6e} W")
    report.add("bandwidth_budget",
               alloc.bandwidth_hz <= constraints.omega_max_hz * (1 + 1e-12),
               f"Omega = {alloc.bandwidth_hz:.6e} Hz vs {constraints.omega_max_hz:.6e} Hz")
    report.add("eta_at_least_1", alloc.eta >= 1.0 - 1e-12, f"eta = {alloc.eta:.6f}")
    report.add("rate_consistent", math.isclose(rate, alloc.data_rate_bps, rel_tol=1e-9),
               f"Omega/eta = {rate:.6e} vs stored {alloc.data_rate_bps:.6e}")
    report.add("latency_consistent", math.isclose(latency, alloc.latency_s, rel_tol=1e-9),
               f"M/D = {latency:.6e} vs stored {alloc.latency_s:.6e}")

    target_ber = ber_reqd if ber_reqd is not None else ber(constraints.snr_reqd)
    if mode == "covert_max":
        report.add("ber_met_with_equality",
                   math.isclose(ber(snr_rx), target_ber, rel_tol=1e-9),
                   f"BER = {ber(snr_rx):.6e} vs required {target_ber:.6e}")
        report.add("rate_requirement",
                   constraints.d_reqd_bps is not None
                   and rate >= constraints.d_reqd_bps * (1 - 1e-12),
                   f"D = {rate:.6e} bps vs required {constraints.d_reqd_bps}")
    elif mode == "latency_min":
        report.add("ber_requirement", ber(snr_rx) <= target_ber * (1 + 1e-9),
                   f"BER = {ber(snr_rx):.6e} vs required {target_ber:.6e}")
        if snr_w_max is not None:
            report.add("willie_snr_cap", snr_willie <= snr_w_max * (1 + 1e-12),
                       f"SNR_W = {snr_willie:.6e} vs cap {snr_w_max:.6e}")
    else:
        raise AllocationError(f"unknown mode {mode!r}")
    return report
