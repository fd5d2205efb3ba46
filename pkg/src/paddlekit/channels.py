"""Channel identities and the canonical 45-channel registry.

A channel is one scalar stream: (device, sensor, axis).  The canonical
registry is 9 phone channels + 18 per watch:

  phone:  accelerometer xyz, gyroscope xyz, magnetometer xyz
  watch:  accelerometer xyz, rotation-rate xyz, orientation roll/pitch/yaw,
          gravity xyz, quaternion wxyz, processed user acceleration
          (horizontal magnitude on the X slot, vertical magnitude on Z)

The registry is data, not code: alternates can be passed anywhere a channel
list is accepted.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum


class Device(Enum):
    LEFT_WATCH = "left_watch"
    RIGHT_WATCH = "right_watch"
    PHONE = "phone"


class Sensor(Enum):
    ACCELEROMETER = "accelerometer"
    ROTATION_RATE = "rotation_rate"
    ORIENTATION = "orientation"
    GRAVITY = "gravity"
    QUATERNION = "quaternion"
    USER_ACCELERATION = "user_acceleration"
    MAGNETOMETER = "magnetometer"
    GYROSCOPE = "gyroscope"


class Axis(Enum):
    X = "x"
    Y = "y"
    Z = "z"
    W = "w"
    ROLL = "roll"
    PITCH = "pitch"
    YAW = "yaw"


_AXES_BY_SENSOR = {
    Sensor.QUATERNION: (Axis.W, Axis.X, Axis.Y, Axis.Z),
    Sensor.ORIENTATION: (Axis.ROLL, Axis.PITCH, Axis.YAW),
}
_DEFAULT_AXES = (Axis.X, Axis.Y, Axis.Z)

_PHONE_ONLY = {Sensor.MAGNETOMETER, Sensor.GYROSCOPE}
_WATCH_ONLY = {
    Sensor.QUATERNION,
    Sensor.ORIENTATION,
    Sensor.GRAVITY,
    Sensor.USER_ACCELERATION,
}

_DEVICE_ORDER = {d: i for i, d in enumerate(Device)}
_SENSOR_ORDER = {s: i for i, s in enumerate(Sensor)}


def axes_for(sensor: Sensor) -> tuple[Axis, ...]:
    return _AXES_BY_SENSOR.get(sensor, _DEFAULT_AXES)


@dataclass(frozen=True, order=False)
class ChannelId:
    device: Device
    sensor: Sensor
    axis: Axis

    def __post_init__(self) -> None:
        if self.axis not in axes_for(self.sensor):
            raise ValueError(
                f"axis {self.axis.value} not valid for sensor {self.sensor.value}"
            )
        if self.sensor in _PHONE_ONLY and self.device is not Device.PHONE:
            raise ValueError(f"{self.sensor.value} occurs only on the phone")
        if self.sensor in _WATCH_ONLY and self.device is Device.PHONE:
            raise ValueError(f"{self.sensor.value} occurs only on watches")

    @property
    def name(self) -> str:
        return f"{self.device.value}.{self.sensor.value}.{self.axis.value}"

    def sort_key(self) -> tuple[int, int, int]:
        axis_order = axes_for(self.sensor).index(self.axis)
        return (_DEVICE_ORDER[self.device], _SENSOR_ORDER[self.sensor], axis_order)

    def __repr__(self) -> str:  # compact in test output
        return f"ChannelId({self.name})"


def parse_channel_name(name: str) -> ChannelId:
    """Inverse of ``ChannelId.name`` (``device.sensor.axis``)."""
    parts = name.split(".")
    if len(parts) != 3:
        raise ValueError(f"malformed channel name: {name!r}")
    return ChannelId(Device(parts[0]), Sensor(parts[1]), Axis(parts[2]))


def sort_channels(channels) -> list[ChannelId]:
    return sorted(channels, key=ChannelId.sort_key)


# Processed user-acceleration magnitudes occupy two axis slots per watch:
# X carries the horizontal magnitude, Z the vertical one.
_WATCH_SENSOR_AXES = (
    (Sensor.ACCELEROMETER, (Axis.X, Axis.Y, Axis.Z)),
    (Sensor.ROTATION_RATE, (Axis.X, Axis.Y, Axis.Z)),
    (Sensor.ORIENTATION, (Axis.ROLL, Axis.PITCH, Axis.YAW)),
    (Sensor.GRAVITY, (Axis.X, Axis.Y, Axis.Z)),
    (Sensor.QUATERNION, (Axis.W, Axis.X, Axis.Y, Axis.Z)),
    (Sensor.USER_ACCELERATION, (Axis.X, Axis.Z)),
)
_PHONE_SENSOR_AXES = (
    (Sensor.ACCELEROMETER, (Axis.X, Axis.Y, Axis.Z)),
    (Sensor.GYROSCOPE, (Axis.X, Axis.Y, Axis.Z)),
    (Sensor.MAGNETOMETER, (Axis.X, Axis.Y, Axis.Z)),
)


def watch_channels(device: Device) -> list[ChannelId]:
    if device is Device.PHONE:
        raise ValueError("watch_channels needs a watch device")
    return [
        ChannelId(device, sensor, axis)
        for sensor, axes in _WATCH_SENSOR_AXES
        for axis in axes
    ]


def phone_channels() -> list[ChannelId]:
    return [
        ChannelId(Device.PHONE, sensor, axis)
        for sensor, axes in _PHONE_SENSOR_AXES
        for axis in axes
    ]


def canonical_channels() -> list[ChannelId]:
    """The full 45-channel registry in canonical sort order."""
    chans = (
        phone_channels()
        + watch_channels(Device.LEFT_WATCH)
        + watch_channels(Device.RIGHT_WATCH)
    )
    return sort_channels(chans)


def device_channels(device: Device) -> list[ChannelId]:
    if device is Device.PHONE:
        return sort_channels(phone_channels())
    return sort_channels(watch_channels(device))


LEFT_QUAT_X = ChannelId(Device.LEFT_WATCH, Sensor.QUATERNION, Axis.X)
LEFT_QUAT_W = ChannelId(Device.LEFT_WATCH, Sensor.QUATERNION, Axis.W)

# The seven (device x sensor) groups used for grouped feature importance.
IMPORTANCE_GROUPS: dict[str, tuple[Device, Sensor]] = {
    "phone_accelerometer": (Device.PHONE, Sensor.ACCELEROMETER),
    "left_watch_accelerometer": (Device.LEFT_WATCH, Sensor.ACCELEROMETER),
    "right_watch_accelerometer": (Device.RIGHT_WATCH, Sensor.ACCELEROMETER),
    "phone_gyroscope": (Device.PHONE, Sensor.GYROSCOPE),
    "left_watch_rotation": (Device.LEFT_WATCH, Sensor.ROTATION_RATE),
    "right_watch_rotation": (Device.RIGHT_WATCH, Sensor.ROTATION_RATE),
    "phone_magnetometer": (Device.PHONE, Sensor.MAGNETOMETER),
}
