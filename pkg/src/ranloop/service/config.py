"""Service configuration (file + environment overrides) and the on-disk
workspace of ingested scenarios and exported traces."""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from ranloop.errors import NotFoundError, ValidationError
from ranloop.reasoning import BackendConfig
from ranloop.simulator import ScenarioSpec, dump_scenario, load_scenario_file


@dataclass
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8420
    workspace: str = "./ranloop-data"
    backend: BackendConfig = field(default_factory=BackendConfig)

    @classmethod
    def load(cls, path: str | None = None, env=os.environ) -> "ServiceConfig":
        cfg = cls()
        file_path = path or env.get("RANLOOP_CONFIG")
        if file_path and Path(file_path).exists():
            doc = yaml.safe_load(Path(file_path).read_text(encoding="utf-8")) or {}
            service = doc.get("service", {})
            cfg.host = service.get("host", cfg.host)
            cfg.port = int(service.get("port", cfg.port))
            cfg.workspace = doc.get("workspace", cfg.workspace)
            b = doc.get("backend", {})
            cfg.backend = BackendConfig(
                endpoint=b.get("endpoint", ""),
                model=b.get("model", ""),
                token_env=b.get("token_env", "RANLOOP_LLM_TOKEN"),
                timeout_s=float(b.get("timeout_s", 30)),
                retry_limit=int(b.get("retry_limit", 2)),
                max_in_flight=int(b.get("max_in_flight", 2)),
            )
        # environment wins over file
        cfg.host = env.get("RANLOOP_HOST", cfg.host)
        cfg.port = int(env.get("RANLOOP_PORT", cfg.port))
        cfg.workspace = env.get("RANLOOP_WORKSPACE", cfg.workspace)
        if env.get("RANLOOP_LLM_ENDPOINT"):
            cfg.backend = BackendConfig.from_env(env)
        return cfg


class Workspace:
    """Directory layout: scenarios/*.yaml, traces/*.jsonl."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.scenario_dir = self.root / "scenarios"
        self.trace_dir = self.root / "traces"

    def ensure(self) -> None:
        self.scenario_dir.mkdir(parents=True, exist_ok=True)
        self.trace_dir.mkdir(parents=True, exist_ok=True)

    def ingest_scenario(self, path: str | Path) -> ScenarioSpec:
        spec = load_scenario_file(path)
        self.ensure()
        target = self.scenario_dir / f"{spec.name}.yaml"
        target.write_text(dump_scenario(spec), encoding="utf-8")
        return spec

    def list_scenarios(self) -> list[str]:
        if not self.scenario_dir.exists():
            return []
        return sorted(p.stem for p in self.scenario_dir.glob("*.yaml"))

    def load_scenario(self, name: str) -> ScenarioSpec:
        path = self.scenario_dir / f"{name}.yaml"
        if not path.exists():
            raise NotFoundError(f"unknown scenario: {name}")
        return load_scenario_file(path)

    def save_trace(self, name: str, text: str) -> Path:
        self.ensure()
        safe = name.replace("/", "_")
        path = self.trace_dir / f"{safe}.jsonl"
        path.write_text(text, encoding="utf-8")
        return path

    def load_trace(self, name: str) -> str:
        path = self.trace_dir / f"{name}.jsonl"
        if not path.exists():
            raise NotFoundError(f"no stored trace named {name}")
        return path.read_text(encoding="utf-8")


def parse_window(start, end, horizon_s: int) -> tuple[int, int]:
    s = int(start) if start is not None else 0
    e = int(end) if end is not None else horizon_s
    if s >= e:
        raise ValidationError(f"empty time range [{s}, {e})", field_path="time_range")
    return (s, e)
