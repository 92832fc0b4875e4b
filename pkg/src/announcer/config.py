"""Flat ``key = value`` configuration (announcer.conf).

The file path comes from --config or the ANNOUNCER_CONFIG env var;
every key has a default so a missing file still yields a usable
config for local runs.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, fields
from pathlib import Path

from .money import parse_money

ENV_CONFIG = "ANNOUNCER_CONFIG"


@dataclass
class Config:
    db_path: str = "announcer.db"
    listen_addr: str = "127.0.0.1:8080"
    smsc_host: str = "127.0.0.1"
    smsc_port: int = 2775
    smsc_system_id: str = "announcer"
    smsc_password: str = "secret"
    window_size: int = 10
    throttle: int = 10
    enquire_interval: float = 30.0
    retry_max: int = 3
    retry_backoff: float = 2.0
    resp_timeout: float = 10.0
    default_country: str = "+60"
    timezone: str = "Asia/Kuala_Lumpur"
    cooldown_days: int = 7
    fine_rate_per_day: int = 50  # cents
    fine_cap: int = 5000  # cents
    spool_dir: str = "spool"
    autorun_fees_at: str = "02:00"
    autorun_library_at: str = "02:30"
    suppress_empty: bool = True
    # resolved at load time, not a file key
    config_dir: Path = field(default_factory=Path.cwd)

    @property
    def listen_host(self) -> str:
        return self.listen_addr.rsplit(":", 1)[0]

    @property
    def listen_port(self) -> int:
        return int(self.listen_addr.rsplit(":", 1)[1])

    @property
    def templates_path(self) -> Path:
        # templates.conf lives next to announcer.conf
        return self.config_dir / "templates.conf"


class ConfigNotFound(FileNotFoundError):
    pass


_MONEY_KEYS = {"fine_rate_per_day", "fine_cap"}
_BOOL_TRUE = {"1", "true", "yes", "on"}
_BOOL_FALSE = {"0", "false", "no", "off"}


def parse_config(text: str, config_dir: Path) -> Config:
    cfg = Config(config_dir=config_dir)
    types = {f.name: f.type for f in fields(Config)}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"config line {lineno}: expected key = value")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in types or key == "config_dir":
            raise ValueError(f"config line {lineno}: unknown key {key!r}")
        if key in _MONEY_KEYS:
            setattr(cfg, key, parse_money(value))
            continue
        kind = types[key]
        if kind == "int":
            setattr(cfg, key, int(value))
        elif kind == "float":
            setattr(cfg, key, float(value))
        elif kind == "bool":
            low = value.lower()
            if low in _BOOL_TRUE:
                setattr(cfg, key, True)
            elif low in _BOOL_FALSE:
                setattr(cfg, key, False)
            else:
                raise ValueError(f"config line {lineno}: bad boolean {value!r}")
        else:
            setattr(cfg, key, value)
    return cfg


def load_config(path: str | os.PathLike | None = None) -> Config:
    """Load config from *path*, ANNOUNCER_CONFIG, or defaults."""
    if path is None:
        path = os.environ.get(ENV_CONFIG)
    if path is None:
        return Config()
    p = Path(path)
    if not p.is_file():
        raise ConfigNotFound(str(p))
    return parse_config(p.read_text(encoding="utf-8"), p.resolve().parent)
