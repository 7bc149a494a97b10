"""Mahony-style complementary attitude filter.

Gyro rates are integrated with the exact quaternion exponential each step;
the accelerometer supplies a gravity reference that corrects roll/pitch
through a proportional-integral feedback term. Yaw is unobservable without
a magnetometer, so heading drifts at the gyro-bias floor — by design the
drift is measured, not hidden.

The integral state ``bias`` is the gyro-bias estimate: it is subtracted
from the measured rate and updated with ``bias -= ki * e * dt``, which
drives it toward the true bias (the opposite update sign is unstable —
the innovation would feed back positively through the integrator).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

from .dataio import ImuSample, ImuTrace, OrientationTrace
from .quat import (
    IDENTITY,
    UnitQuaternion,
    Vec3,
    cross,
    from_axis_angle,
    inverse,
    multiply,
    rotate_vector,
)

STANDARD_GRAVITY = 9.80665

_UP = Vec3(0.0, 0.0, 1.0)


@dataclass(frozen=True)
class FilterConfig:
    kp: float = 1.0
    ki: float = 0.1
    accel_gate: float = 0.2
    g: float = STANDARD_GRAVITY
    q0: UnitQuaternion = IDENTITY

    def __post_init__(self) -> None:
        if self.kp < 0.0 or self.ki < 0.0:
            raise ValueError("gains must be non-negative")
        if not 0.0 <= self.accel_gate <= 1.0:
            raise ValueError("accel_gate must lie in [0, 1]")
        if self.g <= 0.0:
            raise ValueError("g must be positive")


_CONFIG_FIELDS = {"kp", "ki", "accel_gate", "g", "q0"}


def load_filter_config(source) -> FilterConfig:
    """Build a FilterConfig from a JSON file path, JSON string, or dict.

    All fields are optional; unknown fields are rejected. ``q0`` is a
    ``[w, x, y, z]`` list.
    """
    if isinstance(source, Path) or (isinstance(source, str) and not source.lstrip().startswith("{")):
        with open(source, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    elif isinstance(source, str):
        doc = json.loads(source)
    else:
        doc = dict(source)
    unknown = set(doc) - _CONFIG_FIELDS
    if unknown:
        raise ValueError(f"unknown filter config fields: {sorted(unknown)}")
    kwargs = {k: float(v) for k, v in doc.items() if k != "q0"}
    if "q0" in doc:
        kwargs["q0"] = UnitQuaternion(*(float(c) for c in doc["q0"]))
    return FilterConfig(**kwargs)


@dataclass(frozen=True)
class FilterState:
    q_hat: UnitQuaternion
    bias: Vec3
    t_last: float


def initial_state(config: FilterConfig, t0: float) -> FilterState:
    return FilterState(q_hat=config.q0, bias=Vec3(0.0, 0.0, 0.0), t_last=t0)


def step(
    state: FilterState,
    sample: ImuSample,
    config: FilterConfig,
    max_dt: float | None = None,
) -> FilterState:
    """Advance the filter by one IMU sample.

    ``max_dt`` guards against trace gaps; ``run`` passes 10 nominal
    periods. Timestamps must strictly increase.
    """
    dt = sample.t - state.t_last
    if dt <= 0.0:
        raise ValueError(
            f"sample at t={sample.t} does not advance past t={state.t_last}"
        )
    if max_dt is not None and dt > max_dt:
        raise ValueError(
            f"gap of {dt:.6g} s at t={sample.t} exceeds the {max_dt:.6g} s limit"
        )

    q = state.q_hat
    bias = state.bias

    # gravity-direction innovation, gated on accel magnitude plausibility
    e = Vec3(0.0, 0.0, 0.0)
    ax, ay, az = sample.accel
    a_norm = math.sqrt(ax * ax + ay * ay + az * az)
    if a_norm > 0.0 and abs(a_norm - config.g) <= config.accel_gate * config.g:
        a_hat = Vec3(ax / a_norm, ay / a_norm, az / a_norm)
        v_expected = rotate_vector(inverse(q), _UP)
        e = cross(a_hat, v_expected)

    bias = Vec3(
        bias.x - config.ki * e.x * dt,
        bias.y - config.ki * e.y * dt,
        bias.z - config.ki * e.z * dt,
    )
    wx = sample.gyro.x - bias.x + config.kp * e.x
    wy = sample.gyro.y - bias.y + config.kp * e.y
    wz = sample.gyro.z - bias.z + config.kp * e.z

    # exact exponential of the corrected rate, right-multiplied (body frame)
    w_norm = math.sqrt(wx * wx + wy * wy + wz * wz)
    if w_norm > 0.0:
        q = multiply(q, from_axis_angle(Vec3(wx, wy, wz), w_norm * dt))
    return FilterState(q_hat=q, bias=bias, t_last=sample.t)


def run(trace: ImuTrace, config: FilterConfig | None = None) -> OrientationTrace:
    """Filter a whole trace: one output entry per sample, the first seeded
    at ``config.q0`` without integration."""
    if config is None:
        config = FilterConfig()
    max_dt = 10.0 / trace.nominal_rate
    state = initial_state(config, trace.samples[0].t)
    entries = [(state.t_last, state.q_hat)]
    for sample in trace.samples[1:]:
        state = step(state, sample, config, max_dt=max_dt)
        entries.append((sample.t, state.q_hat))
    return OrientationTrace(entries=tuple(entries))
