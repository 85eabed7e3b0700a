"""RAN hierarchy model: cells grouped into bands, sectors, nodes, regions, clusters.

The containment chain is cluster > region > node > cell; bands and sectors are
cross-cutting groupings of cells (same frequency / same served area). Levels
are ordered by closeness to the cell for deterministic tie-breaking.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ranloop.errors import NotFoundError, ValidationError

LEVELS = ("cell", "band", "sector", "node", "region", "cluster")
LEVEL_RANK = {lvl: i for i, lvl in enumerate(LEVELS)}

# Pseudo-parent for elements at the top of each grouping axis.
NETWORK = "network"

DEFAULT_CONFIG_BOUNDS = {
    "tx_power_dbm": (10.0, 46.0),
    "electrical_tilt_deg": (0.0, 12.0),
    "handover_offset_db": (-10.0, 10.0),
}

DEFAULT_CONFIG = {
    "tx_power_dbm": 35.0,
    "electrical_tilt_deg": 4.0,
    "handover_offset_db": 0.0,
}

CONFIG_PARAMETERS = tuple(DEFAULT_CONFIG)


@dataclass(frozen=True)
class CellDescriptor:
    cell_id: str
    node: str
    band: str
    sector: str
    region: str  # inherited from the owning node


@dataclass(frozen=True)
class NodeDescriptor:
    node_id: str
    region: str
    vendor: str = "vendorA"
    hardware_model: str = "gnb-5000"
    software_version: str = "21.Q4"


@dataclass
class NetworkTopology:
    cells: dict[str, CellDescriptor]
    nodes: dict[str, NodeDescriptor]
    bands: set[str]
    sectors: set[str]
    regions: dict[str, str]  # region -> cluster
    clusters: set[str]
    config_bounds: dict[str, tuple[float, float]] = field(
        default_factory=lambda: dict(DEFAULT_CONFIG_BOUNDS)
    )
    default_config: dict[str, float] = field(default_factory=lambda: dict(DEFAULT_CONFIG))

    def member_cells(self, level: str, element_id: str) -> list[str]:
        """All cells contained in / grouped under the given element, sorted."""
        if level not in LEVELS:
            raise ValidationError(f"unknown hierarchy level: {level}", field_path="level")
        if not self.exists(level, element_id):
            raise NotFoundError(f"unknown {level} element: {element_id}")
        if level == "cell":
            return [element_id]
        if level == "band":
            sel = [c.cell_id for c in self.cells.values() if c.band == element_id]
        elif level == "sector":
            sel = [c.cell_id for c in self.cells.values() if c.sector == element_id]
        elif level == "node":
            sel = [c.cell_id for c in self.cells.values() if c.node == element_id]
        elif level == "region":
            sel = [c.cell_id for c in self.cells.values() if c.region == element_id]
        else:  # cluster
            member_regions = {r for r, cl in self.regions.items() if cl == element_id}
            sel = [c.cell_id for c in self.cells.values() if c.region in member_regions]
        return sorted(sel)

    def elements_at(self, level: str) -> list[str]:
        if level == "cell":
            return sorted(self.cells)
        if level == "band":
            return sorted(self.bands)
        if level == "sector":
            return sorted(self.sectors)
        if level == "node":
            return sorted(self.nodes)
        if level == "region":
            return sorted(self.regions)
        if level == "cluster":
            return sorted(self.clusters)
        raise ValidationError(f"unknown hierarchy level: {level}", field_path="level")

    def exists(self, level: str, element_id: str) -> bool:
        if level == "cell":
            return element_id in self.cells
        if level == "band":
            return element_id in self.bands
        if level == "sector":
            return element_id in self.sectors
        if level == "node":
            return element_id in self.nodes
        if level == "region":
            return element_id in self.regions
        if level == "cluster":
            return element_id in self.clusters
        return False

    def parent_of(self, level: str, element_id: str) -> tuple[str, str]:
        """Peer-group parent: cell->node, node->region, region->cluster;
        band/sector/cluster peers are grouped under the whole network."""
        if not self.exists(level, element_id):
            raise NotFoundError(f"unknown {level} element: {element_id}")
        if level == "cell":
            return ("node", self.cells[element_id].node)
        if level == "node":
            return ("region", self.nodes[element_id].region)
        if level == "region":
            return ("cluster", self.regions[element_id])
        return ("network", NETWORK)

    def children_of(self, parent_level: str, parent_id: str, level: str) -> list[str]:
        """Elements at `level` that sit under the given parent element."""
        if level == "cell":
            return self.member_cells(parent_level, parent_id)
        member = set(self.member_cells(parent_level, parent_id))
        out: set[str] = set()
        for cid in member:
            c = self.cells[cid]
            if level == "band":
                out.add(c.band)
            elif level == "sector":
                out.add(c.sector)
            elif level == "node":
                out.add(c.node)
            elif level == "region":
                out.add(c.region)
            elif level == "cluster":
                out.add(self.regions[c.region])
        return sorted(out)

    def ancestors_of_cell(self, cell_id: str) -> list[tuple[str, str]]:
        c = self.cells[cell_id]
        return [
            ("band", c.band),
            ("sector", c.sector),
            ("node", c.node),
            ("region", c.region),
            ("cluster", self.regions[c.region]),
        ]

    def is_ancestor(self, level: str, element_id: str, cell_id: str) -> bool:
        if level == "cell":
            return element_id == cell_id
        return (level, element_id) in self.ancestors_of_cell(cell_id)

    def to_payload(self) -> dict:
        return {
            "clusters": sorted(self.clusters),
            "regions": [{"id": r, "cluster": cl} for r, cl in sorted(self.regions.items())],
            "bands": sorted(self.bands),
            "sectors": sorted(self.sectors),
            "nodes": [
                {
                    "id": n.node_id,
                    "region": n.region,
                    "vendor": n.vendor,
                    "hardware_model": n.hardware_model,
                    "software_version": n.software_version,
                }
                for _, n in sorted(self.nodes.items())
            ],
            "cells": [
                {
                    "id": c.cell_id,
                    "node": c.node,
                    "band": c.band,
                    "sector": c.sector,
                    "region": c.region,
                }
                for _, c in sorted(self.cells.items())
            ],
            "config_bounds": {k: list(v) for k, v in self.config_bounds.items()},
            "default_config": dict(self.default_config),
        }


def build_topology(spec: dict) -> NetworkTopology:
    """Construct and validate a topology from its declarative description.

    Raises ValidationError naming the offending identifier on duplicates or
    dangling references. Deterministic for equal specs.
    """
    clusters = list(spec.get("clusters", []))
    _check_unique(clusters, "cluster")

    regions: dict[str, str] = {}
    for i, r in enumerate(spec.get("regions", [])):
        rid, cluster = r["id"], r["cluster"]
        if rid in regions:
            raise ValidationError(f"duplicate region id: {rid}", field_path=f"regions[{i}]")
        if cluster not in clusters:
            raise ValidationError(
                f"region {rid} references undeclared cluster: {cluster}",
                field_path=f"regions[{i}].cluster",
            )
        regions[rid] = cluster

    bands = list(spec.get("bands", []))
    _check_unique(bands, "band")
    sectors = list(spec.get("sectors", []))
    _check_unique(sectors, "sector")

    nodes: dict[str, NodeDescriptor] = {}
    for i, n in enumerate(spec.get("nodes", [])):
        nid = n["id"]
        if nid in nodes:
            raise ValidationError(f"duplicate node id: {nid}", field_path=f"nodes[{i}]")
        if n["region"] not in regions:
            raise ValidationError(
                f"node {nid} references undeclared region: {n['region']}",
                field_path=f"nodes[{i}].region",
            )
        nodes[nid] = NodeDescriptor(
            node_id=nid,
            region=n["region"],
            vendor=n.get("vendor", "vendorA"),
            hardware_model=n.get("hardware_model", "gnb-5000"),
            software_version=n.get("software_version", "21.Q4"),
        )

    cells: dict[str, CellDescriptor] = {}
    for i, c in enumerate(spec.get("cells", [])):
        cid = c["id"]
        if cid in cells:
            raise ValidationError(f"duplicate cell id: {cid}", field_path=f"cells[{i}]")
        for ref_field, pool in (("node", nodes), ("band", bands), ("sector", sectors)):
            if c[ref_field] not in pool:
                raise ValidationError(
                    f"cell {cid} references undeclared {ref_field}: {c[ref_field]}",
                    field_path=f"cells[{i}].{ref_field}",
                )
        cells[cid] = CellDescriptor(
            cell_id=cid,
            node=c["node"],
            band=c["band"],
            sector=c["sector"],
            region=nodes[c["node"]].region,
        )

    if not cells:
        raise ValidationError("topology declares no cells", field_path="cells")
    for nid in nodes:
        if not any(c.node == nid for c in cells.values()):
            raise ValidationError(f"node {nid} owns no cells", field_path="nodes")

    bounds = {
        k: (float(v[0]), float(v[1]))
        for k, v in spec.get("config_bounds", DEFAULT_CONFIG_BOUNDS).items()
    }
    default_config = {k: float(v) for k, v in spec.get("default_config", DEFAULT_CONFIG).items()}
    for p, v in default_config.items():
        lo, hi = bounds.get(p, (float("-inf"), float("inf")))
        if not lo <= v <= hi:
            raise ValidationError(
                f"default {p}={v} outside declared bounds [{lo}, {hi}]",
                field_path=f"default_config.{p}",
            )

    return NetworkTopology(
        cells=cells,
        nodes=nodes,
        bands=set(bands),
        sectors=set(sectors),
        regions=regions,
        clusters=set(clusters),
        config_bounds=bounds,
        default_config=default_config,
    )


def _check_unique(ids: list[str], kind: str) -> None:
    seen: set[str] = set()
    for x in ids:
        if x in seen:
            raise ValidationError(f"duplicate {kind} id: {x}", field_path=f"{kind}s")
        seen.add(x)
