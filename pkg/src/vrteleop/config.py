"""Flat ``key = value`` run configuration.

Every key has a type and a default; ``#`` starts a comment. The CLI exposes
each key as ``--key-name`` and flags override the file. The resolved
configuration is written next to every run's outputs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable

from .errors import ConfigError


def _floats(n: int) -> Callable[[str], tuple[float, ...]]:
    def parse(text: str) -> tuple[float, ...]:
        parts = [p for p in text.replace(",", " ").split() if p]
        if len(parts) != n:
            raise ValueError(f"expected {n} numbers, got {len(parts)}")
        return tuple(float(p) for p in parts)

    parse.__name__ = f"{n} floats"
    return parse


def _choice(*options: str) -> Callable[[str], str]:
    def parse(text: str) -> str:
        if text not in options:
            raise ValueError(f"expected one of {', '.join(options)}")
        return text

    parse.__name__ = "|".join(options)
    return parse


def _nonneg_int(text: str) -> int:
    v = int(text)
    if v < 0:
        raise ValueError("must be non-negative")
    return v


def _pos_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise ValueError("must be at least 1")
    return v


def _finite(text: str) -> float:
    v = float(text)
    if not math.isfinite(v):
        raise ValueError("must be finite")
    return v


def _nonneg(text: str) -> float:
    v = _finite(text)
    if v < 0:
        raise ValueError("must be non-negative")
    return v


def _pos(text: str) -> float:
    v = _finite(text)
    if v <= 0:
        raise ValueError("must be positive")
    return v


def _port(text: str) -> int:
    v = int(text)
    if not 0 <= v <= 65535:
        raise ValueError("port outside 0..65535")
    return v


def _auto(inner: Callable[[str], Any]) -> Callable[[str], Any]:
    """Accept ``auto`` (returned as None) or whatever ``inner`` accepts."""
    def parse(text: str):
        return None if text == "auto" else inner(text)

    return parse


@dataclass(frozen=True)
class Key:
    parse: Callable[[str], Any]
    default: str
    help: str


# defaults reproduce the measured-headset latency channel; the teleop command
# swaps in a clean constant-delay channel (see COMMAND_DEFAULTS)
KEYS: dict[str, Key] = {
    "mode": Key(_choice("sim", "udp"), "sim", "sim (virtual time) or udp (live sockets)"),
    "seed": Key(_nonneg_int, "0", "base seed for every random stream"),
    "trials": Key(_pos_int, "10", "number of latency trials"),
    "output_dir": Key(str, "out", "directory receiving traces, report and summary"),
    # excitation
    "amp": Key(_nonneg, "0.4", "sinusoid amplitude on joint 1 (rad)"),
    "freq_hz": Key(_pos, "0.5", "sinusoid frequency (Hz)"),
    "start_s": Key(_nonneg, "2.0", "motion start; the plant rests before it (s)"),
    "duration_s": Key(_pos, "20.0", "trial length (s)"),
    # tracker channel
    "steady_delay_ms": Key(_finite, "27.8", "mean channel delay"),
    "steady_jitter_ms": Key(_nonneg, "13.7", "per-sample delay sd"),
    "onset_extra_ms": Key(_finite, "149.6", "extra mean delay while motion starts"),
    "onset_sd_ms": Key(_nonneg, "76.79", "sd of the extra onset delay"),
    "onset_window_s": Key(_auto(_nonneg), "auto", "onset window after motion start, auto = one period"),
    "lead_ms": Key(_finite, "0.0", "predictive lead of the tracker"),
    "pos_noise_mm": Key(_nonneg, "1.0", "per-axis position noise sd"),
    "sample_rate_hz": Key(_pos, "90.0", "tracker rate"),
    # plant and limits
    "plant_vmax": Key(_pos, "2.0", "latency-rig joint velocity limit (rad/s)"),
    "plant_amax": Key(_pos, "8.0", "latency-rig joint acceleration limit (rad/s^2)"),
    "vmax": Key(_pos, "1.0", "teleop joint velocity limit (rad/s)"),
    "amax": Key(_pos, "2.0", "teleop joint acceleration limit (rad/s^2)"),
    # accuracy
    "points": Key(_pos_int, "30", "static points in the accuracy experiment"),
    "accuracy_target_cm": Key(_nonneg, "1.30", "expected mean error used to calibrate sigma"),
    "accuracy_sigma_mm": Key(_auto(_nonneg), "auto", "per-axis noise sd, or auto to calibrate from the target"),
    # teleop
    "scale": Key(_pos, "2.0", "hand-to-robot displacement scale"),
    "scale_origin": Key(_floats(3), "0 0 0.34", "fixed point of the scaling (robot frame, m)"),
    "calib_rotation": Key(_floats(4), "1 0 0 0", "headset-to-robot rotation quaternion w x y z"),
    "calib_translation": Key(_floats(3), "0 0 0", "headset-to-robot translation (m)"),
    "predict_mode": Key(_choice("off", "constant-velocity", "alpha-beta"), "alpha-beta",
                        "hand pose extrapolation"),
    "predict_horizon_ms": Key(_nonneg, "27.8", "prediction horizon"),
    "hand_path": Key(_choice("sinusoid", "static"), "sinusoid", "scripted hand motion"),
    "hand_amp_m": Key(_nonneg, "0.03", "hand sinusoid amplitude along y (headset frame, m)"),
    "hand_freq_hz": Key(_pos, "0.5", "hand sinusoid frequency"),
    "hand_center": Key(_floats(3), "0.33 0 0.44", "hand rest position (headset frame, m)"),
    "teleop_duration_s": Key(_pos, "10.0", "teleop run length (s)"),
    "decimation": Key(_pos_int, "1", "emit a joint-state message every N ticks"),
    "host": Key(str, "127.0.0.1", "udp: address to bind and to send joint states to"),
    "hand_port": Key(_port, "47800", "udp: hand datagram port"),
    "joint_port": Key(_port, "47801", "udp: joint-state datagram port"),
    "max_age_ms": Key(_nonneg, "100", "freshness gate age limit"),
}

COMMAND_DEFAULTS: dict[str, dict[str, str]] = {
    "teleop": {"steady_jitter_ms": "0", "onset_extra_ms": "0", "onset_sd_ms": "0",
               "pos_noise_mm": "0"},
}


def parse_text(text: str, origin: str = "<config>") -> dict[str, str]:
    """Raw ``key = value`` pairs; unknown keys and malformed lines are errors."""
    out: dict[str, str] = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{origin}:{n}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in KEYS:
            raise ConfigError(f"{origin}:{n}: unknown key {key!r}")
        out[key] = value
    return out


def load_file(path) -> dict[str, str]:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_text(text, str(path))


@dataclass(frozen=True)
class RunConfig:
    values: dict[str, Any]
    raw: dict[str, str]

    def __getitem__(self, key: str):
        return self.values[key]

    def resolved_text(self) -> str:
        return "".join(f"{k} = {self.raw[k]}\n" for k in sorted(self.raw))


def resolve(command: str | None = None, file_values: dict[str, str] | None = None,
            overrides: dict[str, str] | None = None) -> RunConfig:
    """Layer defaults, command defaults, file values and overrides, then parse."""
    raw = {k: key.default for k, key in KEYS.items()}
    raw.update(COMMAND_DEFAULTS.get(command or "", {}))
    raw.update(file_values or {})
    for k, v in (overrides or {}).items():
        if k not in KEYS:
            raise ConfigError(f"unknown key {k!r}")
        raw[k] = str(v)
    values = {}
    for k, text in raw.items():
        try:
            values[k] = KEYS[k].parse(text)
        except ValueError as exc:
            raise ConfigError(f"{k} = {text!r}: {exc}") from exc
    return RunConfig(values, raw)
