import math

import numpy as np
import pytest

from covertroute.allocation import (AllocationError, Constraints, HopAllocation,
                                    InfeasibleLinkError, allocate_covert_max,
                                    allocate_latency_min, ber, snr_from_ber, snr_pair,
                                    verify_allocation)
from covertroute.units import db_to_linear, dbm_to_watt

N0 = dbm_to_watt(-113.0)  # -113 dBm/Hz


def constraints(**kw):
    defaults = dict(omega_max_hz=1e7, p_max_w=1e6, n0_w_per_hz=N0, m_bits=1e8,
                    snr_reqd=10.0, d_reqd_bps=2.5e6, dep_reqd=0.85)
    defaults.update(kw)
    return Constraints(**defaults)


class TestSnrPair:
    def test_symmetry_at_unit_eta_equal_gains(self):
        snr_rx, snr_w = snr_pair(1e-3, 1e7, 1.0, 1e-8, 1e-8, N0)
        assert snr_rx == snr_w

    def test_paper_parameter_arithmetic(self):
        # P=1.253e-7 W, Omega=1e7 Hz, eta=4, g=1, N0=5.012e-15 W/Hz -> 10.0
        snr_rx, _ = snr_pair(1.253e-7, 1e7, 4.0, 1.0, 1.0, 5.012e-15)
        assert snr_rx == pytest.approx(10.0, rel=1e-3)

    def test_linearity_in_power(self):
        a = snr_pair(1e-3, 1e7, 4.0, 1e-8, 1e-10, N0)
        b = snr_pair(2e-3, 1e7, 4.0, 1e-8, 1e-10, N0)
        assert b[0] == pytest.approx(2 * a[0], rel=1e-12)
        assert b[1] == pytest.approx(2 * a[1], rel=1e-12)

    def test_positive_inputs_required(self):
        with pytest.raises(AllocationError):
            snr_pair(0.0, 1e7, 1.0, 1e-8, 1e-8, N0)


class TestBer:
    def test_zero_snr_is_half(self):
        assert ber(0.0) == pytest.approx(0.5, rel=1e-12)

    def test_known_values_against_erfc_oracle(self):
        # independent oracle: Q(sqrt(2 snr)) = erfc(sqrt(snr)) / 2 via math.erfc
        for snr, expected in ((10.0, 3.87e-6), (5.0, 7.83e-4)):
            oracle = math.erfc(math.sqrt(snr)) / 2.0
            assert ber(snr) == pytest.approx(oracle, rel=1e-9)
            assert ber(snr) == pytest.approx(expected, rel=0.01)

    def test_strictly_decreasing(self, rng):
        snrs = np.sort(rng.uniform(0, 20, size=50))
        vals = [ber(s) for s in snrs]
        assert all(a > b for a, b in zip(vals, vals[1:]))

    def test_inverse_round_trip(self):
        for target in (1e-2, 1e-4, 3.87e-6):
            assert ber(snr_from_ber(target)) == pytest.approx(target, rel=1e-9)


class TestCovertMax:
    def test_paper_eta(self):
        # Omega_max = 10 MHz, D_reqd = 2.5 Mbps -> eta = 4
        a = allocate_covert_max(1e-8, 1e-10, constraints())
        assert a.eta == 4.0
        assert a.snr_rx == pytest.approx(10.0, rel=1e-12)
        assert a.data_rate_bps == 2.5e6
        assert a.latency_s == pytest.approx(1e8 / 2.5e6, rel=1e-12)

    def test_theta_equals_eta_for_equal_gains(self):
        a = allocate_covert_max(1e-9, 1e-9, constraints())
        assert a.theta == pytest.approx(a.eta, rel=1e-12)

    def test_theta_gain_ratio(self):
        # g_rx=1e-8, g_w=1e-10, eta=4 -> theta = 400
        a = allocate_covert_max(1e-8, 1e-10, constraints())
        assert a.theta == pytest.approx(400.0, rel=1e-12)

    def test_power_budget_infeasible(self):
        with pytest.raises(InfeasibleLinkError, match="budget"):
            allocate_covert_max(1e-15, 1e-10, constraints(p_max_w=1.0))

    def test_rate_above_bandwidth_infeasible(self):
        with pytest.raises(InfeasibleLinkError, match="bandwidth"):
            allocate_covert_max(1e-8, 1e-10, constraints(d_reqd_bps=2e7))

    def test_theta_independent_of_power_noise_bandwidth(self, rng):
        # algebraic cancellation: theta = (g_rx/g_w) * eta only
        for _ in range(100):
            g_rx = 10 ** rng.uniform(-12, -6)
            g_w = 10 ** rng.uniform(-14, -8)
            omega = 10 ** rng.uniform(5, 8)
            n0 = 10 ** rng.uniform(-16, -12)
            d = omega / rng.uniform(1, 50)
            cons = constraints(omega_max_hz=omega, n0_w_per_hz=n0, d_reqd_bps=d,
                               p_max_w=1e15)
            a = allocate_covert_max(g_rx, g_w, cons)
            assert a.theta == pytest.approx((g_rx / g_w) * a.eta, rel=1e-9)

    def test_theta_increases_with_bandwidth(self):
        a1 = allocate_covert_max(1e-8, 1e-10, constraints(omega_max_hz=1e7))
        a2 = allocate_covert_max(1e-8, 1e-10, constraints(omega_max_hz=2e7))
        assert a2.theta > a1.theta


class TestLatencyMin:
    def test_closed_form_example(self):
        # M=1e8, SNR_reqd=10, snr_w_max=0.1, g_w/g_rx=0.01, Omega=1e7
        # -> lambda = 10 s, eta = 1
        cons = constraints()
        a = allocate_latency_min(1e-6, 1e-8, cons, snr_w_max=0.1)
        assert a.latency_s == pytest.approx(10.0, rel=1e-9)
        assert a.eta == pytest.approx(1.0, rel=1e-9)
        assert a.snr_rx == pytest.approx(10.0, rel=1e-9)
        assert a.snr_willie <= 0.1 * (1 + 1e-12)

    def test_power_cap_binding(self):
        # snr_w_max huge: P = p_max and lambda follows the budget chain
        cons = constraints(p_max_w=0.5)
        g_rx, g_w = 1e-9, 1e-11
        a = allocate_latency_min(g_rx, g_w, cons, snr_w_max=1e9)
        assert a.power_w == 0.5
        expected = 1e8 * 10.0 * N0 / (0.5 * g_rx)
        assert a.latency_s == pytest.approx(expected, rel=1e-12)

    def test_halving_gain_doubles_latency(self):
        cons = constraints()
        a1 = allocate_latency_min(1e-8, 1e-10, cons, snr_w_max=0.01)
        a2 = allocate_latency_min(0.5e-8, 1e-10, cons, snr_w_max=0.01)
        assert a2.latency_s == pytest.approx(2 * a1.latency_s, rel=1e-12)

    def test_eta_clamp_reduces_power(self):
        # generous covertness cap: allocation wants D > Omega, so eta
        # clamps to 1 and the power backs off to the reliability point
        cons = constraints()
        a = allocate_latency_min(1e-6, 1e-12, cons, snr_w_max=10.0)
        assert a.eta == 1.0
        assert a.latency_s == pytest.approx(1e8 / 1e7, rel=1e-12)
        assert a.snr_rx == pytest.approx(cons.snr_reqd, rel=1e-12)

    def test_lemma_identity_eta_lambda(self, rng):
        # eta = lambda * Omega / M over random feasible inputs; exact
        # algebra, asserted to within one ulp of the float re-evaluation
        # (the eta >= 1 clamp stores eta as exactly 1.0)
        for _ in range(1000):
            g_rx = 10 ** rng.uniform(-12, -6)
            g_w = 10 ** rng.uniform(-14, -8)
            snr_w_max = 10 ** rng.uniform(-4, 2)
            m = 10 ** rng.uniform(4, 10)
            omega = 10 ** rng.uniform(5, 8)
            cons = constraints(omega_max_hz=omega, m_bits=m)
            a = allocate_latency_min(g_rx, g_w, cons, snr_w_max)
            assert a.eta == pytest.approx(a.latency_s * omega / m, rel=1e-15, abs=0)
            assert a.eta >= 1.0

    def test_monotonicities(self):
        base = dict(g_rx=1e-8, g_w=1e-10, snr_w_max=0.01)
        cons = constraints()
        ref = allocate_latency_min(base["g_rx"], base["g_w"], cons, base["snr_w_max"])
        # increasing in M and SNR_reqd and g_w
        assert allocate_latency_min(base["g_rx"], base["g_w"],
                                    constraints(m_bits=2e8), 0.01).latency_s > ref.latency_s
        assert allocate_latency_min(base["g_rx"], base["g_w"],
                                    constraints(snr_reqd=20.0), 0.01).latency_s > ref.latency_s
        assert allocate_latency_min(base["g_rx"], 2e-10, cons, 0.01).latency_s > ref.latency_s
        # decreasing in snr_w_max, g_rx, Omega_max
        assert allocate_latency_min(base["g_rx"], base["g_w"], cons, 0.02).latency_s < ref.latency_s
        assert allocate_latency_min(2e-8, base["g_w"], cons, 0.01).latency_s < ref.latency_s
        assert allocate_latency_min(base["g_rx"], base["g_w"],
                                    constraints(omega_max_hz=2e7), 0.01).latency_s < ref.latency_s

    def test_zero_gain_infeasible(self):
        with pytest.raises(InfeasibleLinkError):
            allocate_latency_min(0.0, 1e-10, constraints(), 0.1)


class TestVerifyAllocation:
    def test_covert_output_always_passes(self, rng):
        for _ in range(50):
            g_rx = 10 ** rng.uniform(-10, -6)
            g_w = 10 ** rng.uniform(-12, -8)
            cons = constraints()
            a = allocate_covert_max(g_rx, g_w, cons)
            report = verify_allocation(a, cons, g_rx, g_w, "covert_max")
            assert report.ok, report.to_dict()

    def test_latency_output_always_passes(self, rng):
        for _ in range(50):
            g_rx = 10 ** rng.uniform(-10, -6)
            g_w = 10 ** rng.uniform(-12, -8)
            cons = constraints()
            a = allocate_latency_min(g_rx, g_w, cons, 0.05)
            report = verify_allocation(a, cons, g_rx, g_w, "latency_min", snr_w_max=0.05)
            assert report.ok, report.to_dict()

    def test_inflated_power_fails_willie_check(self):
        cons = constraints()
        a = allocate_latency_min(1e-8, 1e-10, cons, 0.01)
        bumped = HopAllocation(
            power_w=a.power_w * 1.01, bandwidth_hz=a.bandwidth_hz, eta=a.eta,
            data_rate_bps=a.data_rate_bps, latency_s=a.latency_s,
            snr_rx=a.snr_rx, snr_willie=a.snr_willie, theta=a.theta)
        report = verify_allocation(bumped, cons, 1e-8, 1e-10, "latency_min",
                                   snr_w_max=0.01)
        failed = [name for name, ok, _ in report.checks if not ok]
        assert "willie_snr_cap" in failed

    def test_halved_eta_fails_rate_check(self):
        cons = constraints()
        a = allocate_covert_max(1e-8, 1e-10, cons)
        halved = HopAllocation(
            power_w=a.power_w, bandwidth_hz=a.bandwidth_hz, eta=a.eta * 2,
            data_rate_bps=a.bandwidth_hz / (a.eta * 2), latency_s=cons.m_bits / (a.bandwidth_hz / (a.eta * 2)),
            snr_rx=a.snr_rx, snr_willie=a.snr_willie, theta=a.theta)
        report = verify_allocation(halved, cons, 1e-8, 1e-10, "covert_max")
        failed = [name for name, ok, _ in report.checks if not ok]
        assert "rate_requirement" in failed
