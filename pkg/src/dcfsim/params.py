"""Protocol timing parameters, named presets and flat config files.

All durations are microseconds, rates are Mbit/s, frame sizes are bytes
unless a field name says bits.  With these units a frame's airtime in
microseconds is simply bits divided by rate.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path

__all__ = [
    "ConfigError",
    "WifiParams",
    "PRESETS",
    "preset",
    "parse_flat_config",
    "parse_wifi_value",
    "apply_overrides",
    "WIFI_FIELD_NAMES",
]


class ConfigError(ValueError):
    """Raised for malformed or unknown configuration input."""


@dataclass(frozen=True)
class WifiParams:
    """Everything the contention model needs to know about the medium.

    ``phy_header`` is stored as a duration: a preamble specified in bits is
    converted at the rate it is transmitted at (e.g. 128 bits at 1 Mbit/s
    becomes 128 us).  ``basic_rates``, when set, selects the control-frame
    rate as the highest basic rate not exceeding the data rate; otherwise
    ``base_rate`` applies unconditionally.
    """

    slot_time: float
    sifs: float
    difs: float
    phy_header: float
    mac_header_bits: int
    base_rate: float
    cw_min_exponent: int
    cw_max: int
    max_retries: int
    default_packet_size: int
    default_data_rate: float
    basic_rates: tuple[float, ...] | None = None
    rts_cts_enabled: bool = False
    rts_bytes: int = 20
    cts_bytes: int = 14
    ack_bytes: int = 14
    amsdu_limit_bytes: int | None = None

    def __post_init__(self):
        for name in ("slot_time", "sifs", "difs", "phy_header"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be a positive duration")
        if self.base_rate <= 0.0 or self.default_data_rate <= 0.0:
            raise ValueError("rates must be positive")
        if self.mac_header_bits < 0:
            raise ValueError("mac_header_bits must be non-negative")
        if self.cw_min_exponent < 0 or self.max_retries < 0:
            raise ValueError("cw_min_exponent and max_retries must be non-negative")
        # The back-off window is capped at cw_max + 1 slots, so the smallest
        # window must not exceed the cap either.
        if 2 ** self.cw_min_exponent > self.cw_max + 1:
            raise ValueError(
                f"initial window 2^{self.cw_min_exponent} exceeds cw_max + 1 = {self.cw_max + 1}"
            )
        if self.default_packet_size <= 0:
            raise ValueError("default_packet_size must be positive")
        for name in ("rts_bytes", "cts_bytes", "ack_bytes"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.basic_rates is not None:
            if not self.basic_rates or min(self.basic_rates) <= 0.0:
                raise ValueError("basic_rates must be a non-empty tuple of positive rates")
        if self.amsdu_limit_bytes is not None and self.amsdu_limit_bytes <= 0:
            raise ValueError("amsdu_limit_bytes must be positive when set")

    def window(self, retry: int) -> int:
        """Back-off window after ``retry`` collisions: doubles, capped."""
        if not 0 <= retry <= self.max_retries:
            raise ValueError(f"retry {retry} outside [0, {self.max_retries}]")
        return min(2 ** (self.cw_min_exponent + retry), self.cw_max + 1)

    def control_rate(self, data_rate: float) -> float:
        """Rate used for ACK / RTS / CTS when the data frame uses ``data_rate``."""
        if self.basic_rates is None:
            return self.base_rate
        eligible = [r for r in self.basic_rates if r <= data_rate]
        return max(eligible) if eligible else min(self.basic_rates)


PRESETS: dict[str, WifiParams] = {
    # Classic 1 Mbit/s DSSS timing set; 128-bit preamble at 1 Mbit/s.
    "bianchi-802.11b": WifiParams(
        slot_time=50.0,
        sifs=28.0,
        difs=128.0,
        phy_header=128.0,
        mac_header_bits=272,
        base_rate=1.0,
        cw_min_exponent=4,
        cw_max=1023,
        max_retries=6,
        default_packet_size=1023,
        default_data_rate=1.0,
    ),
    # Modern OFDM timing set; control frames pick from the basic rate set.
    "baseline-802.11n": WifiParams(
        slot_time=9.0,
        sifs=10.0,
        difs=28.0,
        phy_header=24.0,
        mac_header_bits=272,
        base_rate=24.0,
        cw_min_exponent=4,
        cw_max=1023,
        max_retries=6,
        default_packet_size=1023,
        default_data_rate=144.0,
        basic_rates=(1.0, 2.0, 5.5, 11.0, 24.0),
        amsdu_limit_bytes=7935,
    ),
}


def preset(name: str) -> WifiParams:
    try:
        return PRESETS[name]
    except KeyError:
        raise ConfigError(
            f"unknown preset {name!r}; available: {', '.join(sorted(PRESETS))}"
        ) from None


def parse_flat_config(text: str) -> list[tuple[int, str, str]]:
    """Parse ``key = value`` lines; ``#`` starts a comment.

    Returns (line number, key, raw value) triples; validation of keys and
    values is the caller's concern so the error can say which file format
    field went wrong.
    """
    items: list[tuple[int, str, str]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = line.split("=", 1)
        key, value = key.strip(), value.strip()
        if not key or not value:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        items.append((lineno, key, value))
    return items


def _parse_bool(raw: str) -> bool:
    lowered = raw.lower()
    if lowered in ("true", "yes", "on", "1"):
        return True
    if lowered in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"not a boolean: {raw!r}")


def _parse_rates(raw: str) -> tuple[float, ...] | None:
    if raw.lower() == "none":
        return None
    return tuple(float(part) for part in raw.split(","))


def _parse_optional_int(raw: str) -> int | None:
    return None if raw.lower() == "none" else int(raw)


_FIELD_PARSERS = {
    "slot_time": float,
    "sifs": float,
    "difs": float,
    "phy_header": float,
    "mac_header_bits": int,
    "base_rate": float,
    "cw_min_exponent": int,
    "cw_max": int,
    "max_retries": int,
    "default_packet_size": int,
    "default_data_rate": float,
    "basic_rates": _parse_rates,
    "rts_cts_enabled": _parse_bool,
    "rts_bytes": int,
    "cts_bytes": int,
    "ack_bytes": int,
    "amsdu_limit_bytes": _parse_optional_int,
}

WIFI_FIELD_NAMES = frozenset(_FIELD_PARSERS)
assert WIFI_FIELD_NAMES == {f.name for f in dataclasses.fields(WifiParams)}


def parse_wifi_value(key: str, raw: str, lineno: int | None = None):
    """Parse one parameter override; keys are the WifiParams field names."""
    where = f"line {lineno}: " if lineno is not None else ""
    try:
        parser = _FIELD_PARSERS[key]
    except KeyError:
        raise ConfigError(f"{where}unknown parameter {key!r}") from None
    try:
        return parser(raw)
    except ValueError as exc:
        raise ConfigError(f"{where}bad value for {key}: {exc}") from None


def apply_overrides(base: WifiParams, overrides: dict) -> WifiParams:
    return dataclasses.replace(base, **overrides)


def load_params_file(path: str | Path, base: WifiParams) -> WifiParams:
    """Apply a flat override file on top of ``base``."""
    items = parse_flat_config(Path(path).read_text())
    overrides = {}
    for lineno, key, raw in items:
        overrides[key] = parse_wifi_value(key, raw, lineno)
    return apply_overrides(base, overrides)
