"""Degradation model, power budget, and kinematics unit tests."""

import math

import numpy as np
import pytest

from swarmdeg.robot import (
    DP_MAX,
    DP_MOTOR_MAX,
    DP_SENSE,
    P0,
    R_MAX,
    V_MAX,
    DegradationProcess,
    PowerConstants,
    Robot,
    degrade_tick,
    motor_power_draw,
    sensor_range,
    total_power_draw,
    velocity_cap,
    wrap_angle,
)


def make_robot(**kwargs):
    r = Robot(uid=0, lineage=0, x=5.0, y=5.0, theta=0.0,
              proc=DegradationProcess())
    for key, value in kwargs.items():
        setattr(r, key, value)
    return r


class TestVelocityCap:
    def test_midpoint(self):
        assert velocity_cap(0.5) == pytest.approx(0.11, abs=1e-12)

    def test_pristine(self):
        assert velocity_cap(1.0) == pytest.approx(0.22 / (1 + math.exp(-5)), abs=1e-12)
        assert velocity_cap(1.0) == pytest.approx(0.21853, abs=1e-4)

    def test_failed(self):
        assert velocity_cap(0.0) == pytest.approx(0.22 / (1 + math.exp(5)), abs=1e-12)
        assert velocity_cap(0.0) == pytest.approx(0.00147, abs=1e-4)

    def test_monotone_increasing(self):
        grid = np.arange(0.0, 1.0 + 1e-9, 1e-3)
        vals = [velocity_cap(d) for d in grid]
        assert all(b > a for a, b in zip(vals, vals[1:]))


class TestMotorPowerDraw:
    def test_pristine_75_percent_load(self):
        assert motor_power_draw(1.0) / DP_MOTOR_MAX == pytest.approx(0.7503, abs=1e-3)

    def test_failed_near_max(self):
        assert motor_power_draw(0.0) / DP_MOTOR_MAX == pytest.approx(0.99998, abs=1e-5)

    def test_monotone_decreasing_in_d(self):
        grid = np.arange(0.0, 1.0 + 1e-9, 1e-3)
        vals = [motor_power_draw(d) for d in grid]
        assert all(b < a for a, b in zip(vals, vals[1:]))

    def test_draw_exceeds_pristine_load_below_one(self):
        # The sigmoid midpoint lies outside [0, 1], so any degradation pushes
        # the draw above the 75% pristine load.
        grid = np.arange(0.0, 1.0, 1e-3)
        floor = motor_power_draw(1.0)
        assert all(motor_power_draw(d) > floor for d in grid)


class TestSensorRange:
    def test_values(self):
        assert sensor_range(1.0) == pytest.approx(4.0)
        assert sensor_range(0.25) == pytest.approx(2.0)
        assert sensor_range(0.0) == 0.0

    def test_inverse_square_round_trip(self):
        for d in np.linspace(0.0, 1.0, 101):
            assert sensor_range(d) ** 2 / R_MAX ** 2 == pytest.approx(d, abs=1e-12)


class TestTotalPowerDraw:
    def test_moving_pristine(self):
        r = make_robot(cmd_l=V_MAX, cmd_r=V_MAX)
        want = DP_SENSE + 2 * motor_power_draw(1.0)
        assert total_power_draw(r) == pytest.approx(want, abs=1e-15)
        assert total_power_draw(r) / DP_MAX == pytest.approx(0.8002, abs=1e-3)

    def test_stationary_senses_only(self):
        r = make_robot()
        assert total_power_draw(r) == pytest.approx(DP_SENSE, abs=1e-15)

    def test_fully_degraded_moving(self):
        r = make_robot(cmd_l=V_MAX, cmd_r=V_MAX)
        r.deg.d_l = 0.0
        r.deg.d_r = 0.0
        assert total_power_draw(r) / DP_MAX == pytest.approx(1.0, abs=1e-4)

    def test_budget_split(self):
        pc = PowerConstants()
        assert 2 * pc.dp_motor_max + pc.dp_sense == pytest.approx(pc.dp_max, abs=1e-15)
        with pytest.raises(ValueError):
            PowerConstants(dp_sense=0.3 * DP_MAX)


class TestDegradeTick:
    def test_certain_decrement(self):
        r = make_robot(proc=DegradationProcess(1.0, 1.0, 1.0))
        r.deg.d_l = 0.5
        degrade_tick(r, np.random.default_rng(0))
        assert r.deg.d_l == pytest.approx(0.49)

    def test_no_degradation(self):
        r = make_robot()
        before = (r.deg.d_l, r.deg.d_r, r.deg.d_s)
        degrade_tick(r, np.random.default_rng(0))
        assert (r.deg.d_l, r.deg.d_r, r.deg.d_s) == before

    def test_clamped_at_zero(self):
        r = make_robot(proc=DegradationProcess(1.0, 0.0, 0.0))
        r.deg.d_l = 0.005
        degrade_tick(r, np.random.default_rng(0))
        assert r.deg.d_l == 0.0
        degrade_tick(r, np.random.default_rng(0))
        assert r.deg.d_l == 0.0

    def test_expected_drop_at_q033(self):
        # 300 ticks at q = 0.33 drop d by ~0.99 in expectation, so failures
        # typically manifest fully within five minutes.
        rng = np.random.default_rng(123)
        drops = []
        for _ in range(200):
            r = make_robot(proc=DegradationProcess(q_l=0.33))
            for _ in range(300):
                degrade_tick(r, rng)
            drops.append(1.0 - r.deg.d_l)
        assert np.mean(drops) == pytest.approx(0.99, abs=0.05)

    def test_never_increases(self):
        rng = np.random.default_rng(7)
        r = make_robot(proc=DegradationProcess(0.4, 0.2, 0.1))
        prev = (1.0, 1.0, 1.0)
        for _ in range(500):
            degrade_tick(r, rng)
            cur = (r.deg.d_l, r.deg.d_r, r.deg.d_s)
            assert all(c <= p for c, p in zip(cur, prev))
            prev = cur


class TestWrapAngle:
    def test_wraps(self):
        assert wrap_angle(3 * math.pi) == pytest.approx(math.pi)
        assert wrap_angle(-3 * math.pi) == pytest.approx(math.pi)
        assert wrap_angle(0.5) == pytest.approx(0.5)
