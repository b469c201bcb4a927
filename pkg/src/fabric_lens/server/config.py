"""Server configuration: a JSON file plus one environment override."""

from __future__ import annotations

import json
import os
from pathlib import Path
from typing import Literal, Optional

from pydantic import BaseModel, Field, field_validator

DATA_DIR_ENV = "FABRIC_LENS_DATA_DIR"


class ServerConfig(BaseModel):
    mode: Literal["live", "simulate"] = "live"
    http_host: str = "127.0.0.1"
    http_port: int = 8177
    ingest_host: str = "127.0.0.1"
    ingest_port: int = 9900
    interval_ms: int = Field(default=5000, ge=100)
    data_dir: str = "./fabric-lens-data"
    topology_file: Optional[str] = None
    route_file: Optional[str] = None
    hosts_file: Optional[str] = None
    arp_file: Optional[str] = None
    rules_file: Optional[str] = None
    scenario_file: Optional[str] = None
    webhook_url: Optional[str] = None
    ui_dir: Optional[str] = None
    max_segments: Optional[int] = None
    debug_raw: bool = False
    # simulate mode: milliseconds of wall time per simulated interval;
    # zero replays as fast as the pipeline can commit
    pace_ms: Optional[int] = None
    sim_intervals: Optional[int] = None

    @field_validator("http_port", "ingest_port")
    @classmethod
    def _port_range(cls, v: int) -> int:
        if not 0 <= v < 65536:
            raise ValueError(f"port {v} out of range")
        return v

    def resolved_data_dir(self) -> Path:
        override = os.environ.get(DATA_DIR_ENV)
        return Path(override) if override else Path(self.data_dir)


def load_config(path: str | os.PathLike) -> ServerConfig:
    raw = json.loads(Path(path).read_text())
    config = ServerConfig.model_validate(raw)
    if config.mode == "live" and not config.topology_file:
        raise ValueError("live mode requires topology_file")
    if config.mode == "simulate" and not config.scenario_file:
        raise ValueError("simulate mode requires scenario_file")
    return config
