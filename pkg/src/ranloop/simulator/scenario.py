"""Declarative scenario documents: topology, baselines, scripted events.

A scenario is one YAML document (schema in docs/scenario-format.md). Event
onsets are authored in sampling intervals; timestamps are seconds since the
scenario epoch (interval index x interval_s).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import yaml

from ranloop.errors import ValidationError
from ranloop.simulator.kpis import DEFAULT_KPIS, KPI_DEFS
from ranloop.simulator.topology import LEVELS, NetworkTopology

EVENT_KINDS = ("step_shift", "transient_spike", "linear_drift", "config_change", "fm_alarm")
KPI_EFFECT_KINDS = ("step_shift", "transient_spike", "linear_drift")
ALARM_SEVERITIES = ("minor", "major", "critical")


@dataclass(frozen=True)
class Baseline:
    mean: float
    diurnal_amplitude: float = 0.0
    noise_sigma: float = 0.0


@dataclass(frozen=True)
class ScenarioEvent:
    kind: str
    level: str
    element: str
    onset: int  # interval index
    kpi: str | None = None
    magnitude: float | None = None
    magnitude_sigmas: float | None = None
    duration: int | None = None  # intervals, spike/drift only
    payload: dict[str, Any] = field(default_factory=dict)

    def resolved_magnitude(self, baseline: dict[str, Baseline]) -> float:
        if self.magnitude is not None:
            return self.magnitude
        assert self.magnitude_sigmas is not None and self.kpi is not None
        return self.magnitude_sigmas * baseline[self.kpi].noise_sigma


@dataclass(frozen=True)
class ConfigEffectRule:
    """Scripted KPI response to a configuration write (effect is data, not physics)."""

    element: str
    parameter: str
    kpi_effects: dict[str, float]
    value: float | None = None  # None matches any written value


@dataclass
class ScenarioSpec:
    name: str
    topology: dict
    horizon: int
    seed: int
    interval_s: int = 900
    kpis: tuple[str, ...] = DEFAULT_KPIS
    baseline: dict[str, Baseline] = field(default_factory=dict)
    events: list[ScenarioEvent] = field(default_factory=list)
    config_effects: list[ConfigEffectRule] = field(default_factory=list)

    @property
    def horizon_s(self) -> int:
        return self.horizon * self.interval_s

    def timestamp(self, interval: int) -> int:
        return interval * self.interval_s


def load_scenario(text: str) -> ScenarioSpec:
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise ValidationError(f"scenario is not valid YAML: {e}") from e
    if not isinstance(doc, dict):
        raise ValidationError("scenario document must be a mapping")
    return scenario_from_dict(doc)


def load_scenario_file(path) -> ScenarioSpec:
    with open(path, "r", encoding="utf-8") as f:
        return load_scenario(f.read())


def scenario_from_dict(doc: dict) -> ScenarioSpec:
    for req in ("name", "topology", "horizon", "seed", "baseline"):
        if req not in doc:
            raise ValidationError(f"scenario missing required field: {req}", field_path=req)

    horizon = int(doc["horizon"])
    if horizon < 1:
        raise ValidationError("horizon must be >= 1", field_path="horizon")
    interval_s = int(doc.get("interval_s", 900))
    if interval_s <= 0:
        raise ValidationError("interval_s must be > 0", field_path="interval_s")

    kpis = tuple(doc.get("kpis", DEFAULT_KPIS))
    for k in kpis:
        if k not in KPI_DEFS:
            raise ValidationError(f"unknown KPI: {k}", field_path="kpis")

    baseline: dict[str, Baseline] = {}
    for k, b in doc["baseline"].items():
        if k not in KPI_DEFS:
            raise ValidationError(f"baseline for unknown KPI: {k}", field_path=f"baseline.{k}")
        baseline[k] = Baseline(
            mean=float(b["mean"]),
            diurnal_amplitude=float(b.get("diurnal_amplitude", 0.0)),
            noise_sigma=float(b.get("noise_sigma", 0.0)),
        )
    for k in kpis:
        if k not in baseline:
            raise ValidationError(f"no baseline for KPI: {k}", field_path="baseline")

    events = [_event_from_dict(e, i, horizon, kpis) for i, e in enumerate(doc.get("events", []))]

    effects: list[ConfigEffectRule] = []
    for i, ce in enumerate(doc.get("config_effects", [])):
        match = ce.get("match", {})
        if "element" not in match or "parameter" not in match:
            raise ValidationError(
                "config_effects entry needs match.element and match.parameter",
                field_path=f"config_effects[{i}].match",
            )
        effects.append(
            ConfigEffectRule(
                element=match["element"],
                parameter=match["parameter"],
                value=float(match["value"]) if "value" in match else None,
                kpi_effects={k: float(v) for k, v in ce.get("kpi_effects", {}).items()},
            )
        )

    return ScenarioSpec(
        name=str(doc["name"]),
        topology=doc["topology"],
        horizon=horizon,
        seed=int(doc["seed"]),
        interval_s=interval_s,
        kpis=kpis,
        baseline=baseline,
        events=events,
        config_effects=effects,
    )


def _event_from_dict(e: dict, i: int, horizon: int, kpis: tuple[str, ...]) -> ScenarioEvent:
    path = f"events[{i}]"
    kind = e.get("kind")
    if kind not in EVENT_KINDS:
        raise ValidationError(f"unknown event kind: {kind}", field_path=f"{path}.kind")
    target = e.get("target", {})
    level, element = target.get("level"), target.get("element")
    if level not in LEVELS:
        raise ValidationError(f"unknown target level: {level}", field_path=f"{path}.target.level")
    if not element:
        raise ValidationError("event target.element missing", field_path=f"{path}.target")
    onset = int(e.get("onset", -1))
    if not 0 <= onset < horizon:
        raise ValidationError(
            f"onset {onset} outside scenario horizon [0, {horizon})", field_path=f"{path}.onset"
        )

    kpi = e.get("kpi")
    magnitude = e.get("magnitude")
    magnitude_sigmas = e.get("magnitude_sigmas")
    duration = e.get("duration")
    payload = dict(e.get("payload", {}))

    if kind in KPI_EFFECT_KINDS:
        if kpi not in kpis:
            raise ValidationError(
                f"{kind} event needs a kpi from the scenario set, got: {kpi}",
                field_path=f"{path}.kpi",
            )
        if (magnitude is None) == (magnitude_sigmas is None):
            raise ValidationError(
                "exactly one of magnitude / magnitude_sigmas required",
                field_path=f"{path}.magnitude",
            )
        if kind in ("transient_spike", "linear_drift"):
            if duration is None or int(duration) < 1:
                raise ValidationError(
                    f"{kind} event needs duration >= 1 intervals", field_path=f"{path}.duration"
                )
            duration = int(duration)
    elif kind == "config_change":
        if kpi is not None:
            raise ValidationError("config_change carries no kpi field", field_path=f"{path}.kpi")
        if "parameter" not in payload or "value" not in payload:
            raise ValidationError(
                "config_change payload needs parameter and value", field_path=f"{path}.payload"
            )
        payload["value"] = float(payload["value"])
        payload["kpi_effects"] = {k: float(v) for k, v in payload.get("kpi_effects", {}).items()}
    elif kind == "fm_alarm":
        if kpi is not None:
            raise ValidationError("fm_alarm carries no kpi field", field_path=f"{path}.kpi")
        if "code" not in payload:
            raise ValidationError("fm_alarm payload needs an alarm code", field_path=f"{path}.payload")
        payload.setdefault("severity", "major")
        if payload["severity"] not in ALARM_SEVERITIES:
            raise ValidationError(
                f"unknown alarm severity: {payload['severity']}",
                field_path=f"{path}.payload.severity",
            )

    return ScenarioEvent(
        kind=kind,
        level=level,
        element=element,
        onset=onset,
        kpi=kpi,
        magnitude=float(magnitude) if magnitude is not None else None,
        magnitude_sigmas=float(magnitude_sigmas) if magnitude_sigmas is not None else None,
        duration=duration,
        payload=payload,
    )


def scenario_to_dict(spec: ScenarioSpec) -> dict:
    doc: dict[str, Any] = {
        "name": spec.name,
        "seed": spec.seed,
        "horizon": spec.horizon,
        "interval_s": spec.interval_s,
        "kpis": list(spec.kpis),
        "topology": spec.topology,
        "baseline": {
            k: {
                "mean": b.mean,
                "diurnal_amplitude": b.diurnal_amplitude,
                "noise_sigma": b.noise_sigma,
            }
            for k, b in spec.baseline.items()
        },
        "events": [],
        "config_effects": [],
    }
    for e in spec.events:
        ed: dict[str, Any] = {
            "kind": e.kind,
            "target": {"level": e.level, "element": e.element},
            "onset": e.onset,
        }
        if e.kpi is not None:
            ed["kpi"] = e.kpi
        if e.magnitude is not None:
            ed["magnitude"] = e.magnitude
        if e.magnitude_sigmas is not None:
            ed["magnitude_sigmas"] = e.magnitude_sigmas
        if e.duration is not None:
            ed["duration"] = e.duration
        if e.payload:
            ed["payload"] = e.payload
        doc["events"].append(ed)
    for ce in spec.config_effects:
        match: dict[str, Any] = {"element": ce.element, "parameter": ce.parameter}
        if ce.value is not None:
            match["value"] = ce.value
        doc["config_effects"].append({"match": match, "kpi_effects": ce.kpi_effects})
    return doc


def dump_scenario(spec: ScenarioSpec) -> str:
    return yaml.safe_dump(scenario_to_dict(spec), sort_keys=False)


def validate_events_against(spec: ScenarioSpec, topology: NetworkTopology) -> None:
    for i, e in enumerate(spec.events):
        if not topology.exists(e.level, e.element):
            raise ValidationError(
                f"event targets unknown element: {e.element} (level {e.level})",
                field_path=f"events[{i}].target",
            )
        if e.kind == "config_change":
            param = e.payload["parameter"]
            if param not in topology.config_bounds:
                raise ValidationError(
                    f"config_change names unknown parameter: {param}",
                    field_path=f"events[{i}].payload.parameter",
                )
