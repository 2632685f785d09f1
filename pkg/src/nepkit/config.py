"""Service configuration."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .errors import ValidationError
from .workflow import DEFAULT_REPORT_CODE_PATTERN


@dataclass(frozen=True)
class ServiceConfig:
    data_root: Path
    listen_address: str = "127.0.0.1:8420"
    duration_threshold_minutes: float = 90.0
    histogram_chunk_minutes: float = 3.0
    min_presorted_issues: int = 50
    report_code_pattern: str = DEFAULT_REPORT_CODE_PATTERN

    def __post_init__(self) -> None:
        object.__setattr__(self, "data_root", Path(self.data_root))
        if self.duration_threshold_minutes <= 0:
            raise ValidationError("duration_threshold_minutes must be positive")
        if self.histogram_chunk_minutes <= 0:
            raise ValidationError("histogram_chunk_minutes must be positive")
        if self.min_presorted_issues < 0:
            raise ValidationError("min_presorted_issues must be non-negative")

    @property
    def host(self) -> str:
        host, _, _ = self.listen_address.rpartition(":")
        return host or "127.0.0.1"

    @property
    def port(self) -> int:
        _, _, port = self.listen_address.rpartition(":")
        try:
            return int(port)
        except ValueError:
            raise ValidationError(f"bad listen_address {self.listen_address!r}") from None


_CONFIG_KEYS = {
    "data_root",
    "listen_address",
    "duration_threshold_minutes",
    "histogram_chunk_minutes",
    "min_presorted_issues",
    "report_code_pattern",
}


def load_config(path: Path | str) -> ServiceConfig:
    """Read a JSON config file; unknown keys are rejected, absent keys
    fall back to the defaults above."""
    path = Path(path)
    if not path.exists():
        raise ValidationError(f"config file {path} does not exist")
    obj = json.loads(path.read_text(encoding="utf-8"))
    unknown = set(obj) - _CONFIG_KEYS
    if unknown:
        raise ValidationError(f"unknown config keys: {', '.join(sorted(unknown))}")
    if "data_root" not in obj:
        raise ValidationError("config must set data_root")
    return ServiceConfig(**obj)
