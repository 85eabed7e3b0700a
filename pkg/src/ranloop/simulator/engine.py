"""KPI stream generation and the live closed-loop simulation run.

Per-sample model: baseline mean + 24h sinusoid + seeded Gaussian noise + sum
of active event effects, clamped to the KPI domain. Effects are additive by
construction; each (cell, KPI) noise substream derives from the root seed by
stable hashing, so adding a cell never perturbs another cell's noise.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, replace

import numpy as np

from ranloop import wire
from ranloop.errors import NotFoundError, ValidationError
from ranloop.simulator.kpis import KPI_DEFS, clamp_to_domain
from ranloop.simulator.scenario import ScenarioSpec, validate_events_against
from ranloop.simulator.topology import LEVELS, NetworkTopology

DAY_S = 86400


@dataclass(frozen=True)
class KpiSample:
    element_id: str
    level: str
    kpi: str
    timestamp: int  # seconds since scenario epoch
    value: float


@dataclass(frozen=True)
class FmAlarm:
    element_id: str
    level: str
    timestamp: int
    code: str
    severity: str


@dataclass(frozen=True)
class CellConfig:
    tx_power_dbm: float
    electrical_tilt_deg: float
    handover_offset_db: float
    config_version: int

    def value_of(self, parameter: str) -> float:
        return getattr(self, parameter)

    def values(self) -> dict[str, float]:
        return {
            "tx_power_dbm": self.tx_power_dbm,
            "electrical_tilt_deg": self.electrical_tilt_deg,
            "handover_offset_db": self.handover_offset_db,
        }


@dataclass(frozen=True)
class CmChange:
    element_id: str
    parameter: str
    timestamp: int
    old_value: float
    new_value: float
    source: str  # scenario | action | restore


@dataclass
class _Effect:
    """One additive contribution to a (cell, kpi) series, cancellable."""

    cell: str
    kpi: str
    kind: str  # step | spike | drift
    onset: int  # interval index where the shape starts
    magnitude: float
    duration: int | None = None
    cancelled_at: int | None = None  # interval index; contributes for t < cancelled_at
    origin: str = "event"  # event | config_event | action
    origin_key: tuple | None = None  # identifies the config write that created it

    def vector(self, t: np.ndarray) -> np.ndarray:
        if self.kind == "step":
            out = np.where(t >= self.onset, self.magnitude, 0.0)
        elif self.kind == "spike":
            on = (t >= self.onset) & (t < self.onset + self.duration)
            out = np.where(on, self.magnitude, 0.0)
        else:  # drift: ramp over `duration` intervals, then hold at magnitude
            ramp = np.clip((t - self.onset) / self.duration, 0.0, 1.0)
            out = np.where(t >= self.onset, self.magnitude * ramp, 0.0)
        if self.cancelled_at is not None:
            out = np.where(t < self.cancelled_at, out, 0.0)
        return out


def _substream_seed(root_seed: int, cell: str, kpi: str) -> np.random.SeedSequence:
    h = hashlib.sha256(f"{cell}|{kpi}".encode()).digest()
    a = int.from_bytes(h[:8], "big")
    b = int.from_bytes(h[8:16], "big")
    return np.random.SeedSequence(entropy=(root_seed, a, b))


class SimulationRun:
    """Single-writer live simulation: advances interval by interval and reacts
    to configuration writes. Generated samples are immutable once emitted."""

    def __init__(self, topology: NetworkTopology, spec: ScenarioSpec):
        validate_events_against(spec, topology)
        self.topology = topology
        self.spec = spec
        self.cursor = 0  # next interval to generate
        self.configs: dict[str, CellConfig] = {
            cid: CellConfig(config_version=1, **topology.default_config)
            for cid in sorted(topology.cells)
        }
        self.cm_log: list[CmChange] = []
        self._rngs: dict[tuple[str, str], np.random.Generator] = {}
        self._effects: list[_Effect] = []
        self._pending_config_events: list = []
        self._cells = sorted(topology.cells)
        self._build_effects()

    # -- construction ------------------------------------------------------

    def _build_effects(self) -> None:
        for ev in self.spec.events:
            if ev.kind in ("step_shift", "transient_spike", "linear_drift"):
                mag = ev.resolved_magnitude(self.spec.baseline)
                kind = {"step_shift": "step", "transient_spike": "spike", "linear_drift": "drift"}[
                    ev.kind
                ]
                for cell in self.topology.member_cells(ev.level, ev.element):
                    self._effects.append(
                        _Effect(
                            cell=cell,
                            kpi=ev.kpi,
                            kind=kind,
                            onset=ev.onset,
                            magnitude=mag,
                            duration=ev.duration,
                        )
                    )
            elif ev.kind == "config_change":
                self._pending_config_events.append(ev)
        self._pending_config_events.sort(key=lambda e: (e.onset, e.element))

    def _rng(self, cell: str, kpi: str) -> np.random.Generator:
        key = (cell, kpi)
        if key not in self._rngs:
            self._rngs[key] = np.random.Generator(
                np.random.PCG64(_substream_seed(self.spec.seed, cell, kpi))
            )
        return self._rngs[key]

    # -- time --------------------------------------------------------------

    @property
    def current_time(self) -> int:
        """Timestamp of the next interval to be generated."""
        return self.cursor * self.spec.interval_s

    # -- generation --------------------------------------------------------

    def advance_arrays(self, n_intervals: int) -> tuple[np.ndarray, dict[tuple[str, str], np.ndarray]]:
        """Generate the next n intervals; returns (timestamps, series arrays
        keyed by (cell, kpi)). The array form backs `advance` and fast bulk
        analysis that does not need individual sample records."""
        if n_intervals < 0:
            raise ValidationError("cannot advance by a negative interval count")
        a, b = self.cursor, self.cursor + n_intervals
        # Scenario config events fire as their onset is reached.
        due = [e for e in self._pending_config_events if e.onset < b]
        self._pending_config_events = [e for e in self._pending_config_events if e.onset >= b]
        for ev in due:
            self._apply_scenario_config_event(ev)

        t = np.arange(a, b)
        ts = t * self.spec.interval_s
        per_series: dict[tuple[str, str], np.ndarray] = {}
        for cell in self._cells:
            for kpi in self.spec.kpis:
                base = self.spec.baseline[kpi]
                vals = base.mean + base.diurnal_amplitude * np.sin(2 * np.pi * ts / DAY_S)
                if base.noise_sigma > 0:
                    vals = vals + self._rng(cell, kpi).normal(0.0, base.noise_sigma, b - a)
                else:
                    vals = vals.astype(float)
                for eff in self._effects:
                    if eff.cell == cell and eff.kpi == kpi:
                        vals = vals + eff.vector(t)
                d = KPI_DEFS[kpi]
                per_series[(cell, kpi)] = np.clip(vals, d.lo, d.hi)
        self.cursor = b
        return ts, per_series

    def advance(self, n_intervals: int) -> list[KpiSample]:
        """Generate the next n intervals of samples for every cell and KPI."""
        ts, per_series = self.advance_arrays(n_intervals)
        samples: list[KpiSample] = []
        for i in range(len(ts)):
            stamp = int(ts[i])
            for cell in self._cells:
                for kpi in self.spec.kpis:
                    samples.append(
                        KpiSample(
                            element_id=cell,
                            level="cell",
                            kpi=kpi,
                            timestamp=stamp,
                            value=float(per_series[(cell, kpi)][i]),
                        )
                    )
        return samples

    def _apply_scenario_config_event(self, ev) -> None:
        param = ev.payload["parameter"]
        value = ev.payload["value"]
        for cell in self.topology.member_cells(ev.level, ev.element):
            old = self.configs[cell].value_of(param)
            self._write_config(cell, param, value, ev.onset, source="scenario")
            if ev.payload.get("kpi_effects"):
                for kpi, delta in ev.payload["kpi_effects"].items():
                    self._effects.append(
                        _Effect(
                            cell=cell,
                            kpi=kpi,
                            kind="step",
                            onset=ev.onset,
                            magnitude=float(delta),
                            origin="config_event",
                            origin_key=(cell, param, old, value),
                        )
                    )

    # -- configuration writes ----------------------------------------------

    def apply_config(self, cell_id: str, parameter: str, value: float, source: str = "action") -> CellConfig:
        """Write one parameter on one cell at the current sim time.

        Reverting a previous config write (new value equals that write's old
        value) cancels the KPI effect it injected, exactly, from now on.
        Identity writes leave config and stream unchanged.
        """
        if cell_id not in self.configs:
            raise NotFoundError(f"unknown cell: {cell_id}")
        if parameter not in self.topology.config_bounds:
            raise ValidationError(f"unknown config parameter: {parameter}", field_path="parameter")
        lo, hi = self.topology.config_bounds[parameter]
        if not lo <= value <= hi:
            raise ValidationError(
                f"{parameter}={value} outside bounds [{lo}, {hi}] for {cell_id}",
                field_path="value",
            )
        current = self.configs[cell_id].value_of(parameter)
        if value == current:
            return self.configs[cell_id]

        self._write_config(cell_id, parameter, value, self.cursor, source=source)

        reverted = False
        for eff in self._effects:
            if (
                eff.origin in ("config_event", "action")
                and eff.cancelled_at is None
                and eff.origin_key is not None
                and eff.origin_key[0] == cell_id
                and eff.origin_key[1] == parameter
                and eff.origin_key[2] == value  # writing back the pre-change value
            ):
                eff.cancelled_at = self.cursor
                reverted = True
        if not reverted:
            for rule in self.spec.config_effects:
                if rule.element != cell_id or rule.parameter != parameter:
                    continue
                if rule.value is not None and rule.value != value:
                    continue
                for kpi, delta in rule.kpi_effects.items():
                    self._effects.append(
                        _Effect(
                            cell=cell_id,
                            kpi=kpi,
                            kind="step",
                            onset=self.cursor,
                            magnitude=float(delta),
                            origin="action",
                            origin_key=(cell_id, parameter, current, value),
                        )
                    )
        return self.configs[cell_id]

    def _write_config(self, cell_id: str, parameter: str, value: float, interval: int, source: str) -> None:
        cfg = self.configs[cell_id]
        old = cfg.value_of(parameter)
        if old == value:
            return
        self.configs[cell_id] = replace(
            cfg, **{parameter: value, "config_version": cfg.config_version + 1}
        )
        self.cm_log.append(
            CmChange(
                element_id=cell_id,
                parameter=parameter,
                timestamp=interval * self.spec.interval_s,
                old_value=old,
                new_value=value,
                source=source,
            )
        )


def generate_stream(topology: NetworkTopology, spec: ScenarioSpec) -> list[KpiSample]:
    """Full-horizon cell-level stream: horizon x |cells| x |KPIs| samples,
    bit-identical for identical (topology, spec)."""
    return SimulationRun(topology, spec).advance(spec.horizon)


def emit_fm_alarms(spec: ScenarioSpec) -> list[FmAlarm]:
    """One alarm per fm_alarm event, ordered by (timestamp, element, code)."""
    alarms = [
        FmAlarm(
            element_id=ev.element,
            level=ev.level,
            timestamp=spec.timestamp(ev.onset),
            code=ev.payload["code"],
            severity=ev.payload["severity"],
        )
        for ev in spec.events
        if ev.kind == "fm_alarm"
    ]
    alarms.sort(key=lambda a: (a.timestamp, a.element_id, a.code))
    return alarms


# -- sample wire format ------------------------------------------------------

def export_samples(samples: list[KpiSample]) -> str:
    """`timestamp,element_id,level,kpi,value` with 6 fractional digits."""
    return "".join(
        f"{s.timestamp},{s.element_id},{s.level},{s.kpi},{wire.format_value(s.value)}\n"
        for s in samples
    )


def parse_samples(text: str) -> list[KpiSample]:
    out: list[KpiSample] = []
    for ln, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != 5:
            raise ValidationError(f"bad sample line {ln}: expected 5 fields", field_path=f"line {ln}")
        ts, element, level, kpi, value = parts
        if level not in LEVELS:
            raise ValidationError(f"bad sample line {ln}: unknown level {level}", field_path=f"line {ln}")
        out.append(
            KpiSample(
                element_id=element,
                level=level,
                kpi=kpi,
                timestamp=int(ts),
                value=float(value),
            )
        )
    return out
