"""Instance file ingestion and serialization.

The native format is a single JSON document with top-level keys
``nodes, lines, renewables, conventionals, hydros, batteries, hydrogens,
demand, regions, shedding, timegrid``. Time series are flat numeric arrays.
Period bounds are 1-based inclusive step indices in files and 0-based
internally.

Alternatively, bulk series can live in CSV files next to the instance:
a document carrying a ``series_files`` key maps series families to CSV
paths (relative to the document), each CSV holding one header row of
entity ids and one row per step. Families: ``cf_reference`` and
``cf_deviation`` keyed by renewable unit id, ``demand`` keyed by node id,
``availability`` keyed by reservoir unit id.

Region membership may be given on the nodes (``region`` key), on the
regions (``nodes`` lists), or both; the loader fills in the missing side
and validation cross-checks when both are present.
"""

from __future__ import annotations

import csv
import json
import logging
from pathlib import Path
from typing import Any

from robustgrid.model import (
    BatteryUnit,
    CapacityFactorBundle,
    ConventionalUnit,
    DemandSeries,
    HydroUnit,
    HydrogenUnit,
    Line,
    LoadSheddingPolicy,
    NetworkInstance,
    Node,
    Period,
    RenewableUnit,
    TimeGrid,
    WeatherRegion,
    validate,
)

__all__ = [
    "InstanceError",
    "SchemaError",
    "ValidationError",
    "load_instance",
    "save_instance",
    "instance_to_dict",
    "instance_from_dict",
]

log = logging.getLogger(__name__)


class InstanceError(Exception):
    """Base class for instance ingestion failures."""


class SchemaError(InstanceError):
    """The document does not match the instance schema."""


class ValidationError(InstanceError):
    """The document parsed but violates model invariants."""

    def __init__(self, violations):
        self.violations = list(violations)
        lines = "; ".join(str(v) for v in self.violations)
        super().__init__(f"instance violates {len(self.violations)} invariant(s): {lines}")


def _require(obj: dict, key: str, where: str) -> Any:
    if key not in obj:
        raise SchemaError(f"{where}: missing required key {key!r}")
    return obj[key]


def _series(value: Any, where: str) -> tuple[float, ...]:
    if not isinstance(value, (list, tuple)):
        raise SchemaError(f"{where}: expected a numeric array")
    try:
        return tuple(float(v) for v in value)
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"{where}: non-numeric entry ({exc})") from exc


def _triple(value: Any, where: str) -> tuple[float, float, float]:
    arr = _series(value, where)
    if len(arr) != 3:
        raise SchemaError(f"{where}: expected exactly 3 values, got {len(arr)}")
    return (arr[0], arr[1], arr[2])


def _read_series_csv(path: Path) -> dict[str, tuple[float, ...]]:
    """Read one series-family CSV: header of entity ids, one row per step."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty CSV") from None
        columns: list[list[float]] = [[] for _ in header]
        for ln, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(header):
                raise SchemaError(f"{path}:{ln}: expected {len(header)} cells, got {len(row)}")
            for j, cell in enumerate(row):
                try:
                    columns[j].append(float(cell))
                except ValueError as exc:
                    raise SchemaError(f"{path}:{ln}: non-numeric cell {cell!r}") from exc
    return {name.strip(): tuple(col) for name, col in zip(header, columns)}


def _load_series_files(doc: dict, base: Path) -> dict[str, dict[str, tuple[float, ...]]]:
    files = doc["series_files"]
    if not isinstance(files, dict):
        raise SchemaError("series_files: expected a mapping of family -> CSV path")
    known = {"cf_reference", "cf_deviation", "demand", "availability"}
    tables: dict[str, dict[str, tuple[float, ...]]] = {}
    for family, rel in files.items():
        if family not in known:
            raise SchemaError(f"series_files: unknown family {family!r}")
        path = base / str(rel)
        if not path.exists():
            raise SchemaError(f"series_files[{family}]: no such file {path}")
        tables[family] = _read_series_csv(path)
    return tables


def instance_from_dict(doc: dict, base: Path | None = None) -> NetworkInstance:
    """Build a NetworkInstance from a parsed document (without validating)."""
    if not isinstance(doc, dict):
        raise SchemaError("instance document must be a JSON object")
    tables = _load_series_files(doc, base or Path(".")) if "series_files" in doc else {}

    def pick(family: str, entity: str, inline: Any, where: str) -> tuple[float, ...]:
        table = tables.get(family)
        if table is not None:
            if entity in table:
                return table[entity]
            if inline is None:
                raise SchemaError(f"{where}: no column {entity!r} in {family} CSV")
        if inline is None:
            raise SchemaError(f"{where}: missing series")
        return _series(inline, where)

    tg_doc = _require(doc, "timegrid", "timegrid")
    periods = []
    for k, p in enumerate(tg_doc.get("periods", [])):
        where = f"timegrid.periods[{k}]"
        start = int(_require(p, "start", where))
        end = int(_require(p, "end", where))
        periods.append(Period(id=str(p.get("id", f"p{k + 1}")), start=start - 1, end=end - 1))
    timegrid = TimeGrid(
        step_count=int(_require(tg_doc, "step_count", "timegrid")),
        step_hours=float(tg_doc.get("step_hours", 1.0)),
        periods=tuple(periods),
    )

    region_docs = _require(doc, "regions", "regions")
    region_nodes: dict[str, list[str]] = {}
    region_names: dict[str, str] = {}
    for k, g in enumerate(region_docs):
        gid = str(_require(g, "id", f"regions[{k}]"))
        region_names[gid] = str(g.get("name", gid))
        region_nodes[gid] = [str(n) for n in g.get("nodes", [])]

    nodes = []
    for k, n in enumerate(_require(doc, "nodes", "nodes")):
        where = f"nodes[{k}]"
        nid = str(_require(n, "id", where))
        region = str(n.get("region", ""))
        if not region:
            for gid, members in region_nodes.items():
                if nid in members:
                    region = gid
                    break
        elif region in region_nodes and nid not in region_nodes[region]:
            region_nodes[region].append(nid)
        nodes.append(
            Node(
                id=nid,
                name=str(n.get("name", "")),
                region=region,
                is_reference=bool(n.get("reference", False)),
            )
        )
    regions = tuple(
        WeatherRegion(id=gid, name=region_names[gid], nodes=tuple(region_nodes[gid]))
        for gid in region_nodes
    )

    lines = []
    for k, l in enumerate(doc.get("lines", [])):
        where = f"lines[{k}]"
        existing = float(_require(l, "existing_cap", where))
        limit = l.get("expansion_limit")
        # Expansion defaults to a doubling of what already stands.
        lines.append(
            Line(
                id=str(_require(l, "id", where)),
                kind=str(_require(l, "kind", where)),
                from_node=str(_require(l, "from", where)),
                to_node=str(_require(l, "to", where)),
                susceptance=float(l.get("susceptance", 0.0)),
                existing_cap=existing,
                expansion_cost=float(l.get("expansion_cost", 0.0)),
                expansion_limit=float(limit) if limit is not None else existing,
            )
        )

    renewables = []
    for k, r in enumerate(doc.get("renewables", [])):
        where = f"renewables[{k}]"
        rid = str(_require(r, "id", where))
        cf_doc = r.get("cf", {})
        reference = pick("cf_reference", rid, cf_doc.get("reference"), f"{where}.cf.reference")
        deviation = pick("cf_deviation", rid, cf_doc.get("deviation"), f"{where}.cf.deviation")
        realized = cf_doc.get("realized")
        limit = r.get("expansion_limit")
        renewables.append(
            RenewableUnit(
                id=rid,
                node=str(_require(r, "node", where)),
                technology=str(_require(r, "technology", where)),
                region=str(_require(r, "region", where)),
                annualized_cost=float(_require(r, "annualized_cost", where)),
                cf=CapacityFactorBundle(
                    reference=reference,
                    deviation=deviation,
                    realized=_series(realized, f"{where}.cf.realized")
                    if realized is not None
                    else None,
                ),
                expansion_limit=float(limit) if limit is not None else None,
            )
        )

    conventionals = []
    for k, c in enumerate(doc.get("conventionals", [])):
        where = f"conventionals[{k}]"
        conventionals.append(
            ConventionalUnit(
                id=str(_require(c, "id", where)),
                node=str(_require(c, "node", where)),
                existing_cap=float(_require(c, "existing_cap", where)),
                variable_cost=float(_require(c, "variable_cost", where)),
            )
        )

    hydros = []
    for k, h in enumerate(doc.get("hydros", [])):
        where = f"hydros[{k}]"
        hid = str(_require(h, "id", where))
        kind = str(_require(h, "kind", where))
        avail = h.get("availability")
        if kind in ("rsv", "ror"):
            series = pick("availability", hid, avail, f"{where}.availability")
        else:
            series = _series(avail, f"{where}.availability") if avail is not None else None
        hydros.append(
            HydroUnit(
                id=hid,
                node=str(_require(h, "node", where)),
                kind=kind,
                existing_cap=float(_require(h, "existing_cap", where)),
                availability=series,
                storage_scale=float(h["storage_scale"]) if "storage_scale" in h else None,
                efficiency=float(h["efficiency"]) if "efficiency" in h else None,
            )
        )

    batteries = []
    for k, b in enumerate(doc.get("batteries", [])):
        where = f"batteries[{k}]"
        batteries.append(
            BatteryUnit(
                id=str(_require(b, "id", where)),
                node=str(_require(b, "node", where)),
                inverter_cost=float(_require(b, "inverter_cost", where)),
                storage_cost=float(_require(b, "storage_cost", where)),
                efficiency=float(_require(b, "efficiency", where)),
                inverter_limit=float(b["inverter_limit"]) if "inverter_limit" in b else None,
                storage_limit=float(b["storage_limit"]) if "storage_limit" in b else None,
            )
        )

    hydrogens = []
    for k, h in enumerate(doc.get("hydrogens", [])):
        where = f"hydrogens[{k}]"
        hydrogens.append(
            HydrogenUnit(
                id=str(_require(h, "id", where)),
                node=str(_require(h, "node", where)),
                ocgt_cost=float(_require(h, "ocgt_cost", where)),
                electrolyzer_cost=float(_require(h, "electrolyzer_cost", where)),
                storage_cost=float(_require(h, "storage_cost", where)),
                eta_el=float(_require(h, "eta_el", where)),
                eta_ocgt=float(_require(h, "eta_ocgt", where)),
                ocgt_limit=float(h["ocgt_limit"]) if "ocgt_limit" in h else None,
                el_limit=float(h["el_limit"]) if "el_limit" in h else None,
                storage_limit=float(h["storage_limit"]) if "storage_limit" in h else None,
            )
        )

    demand_doc = doc.get("demand", {})
    if "demand" in tables:
        by_node = dict(tables["demand"])
        for nid, series in demand_doc.items():
            by_node.setdefault(str(nid), _series(series, f"demand[{nid}]"))
    elif isinstance(demand_doc, dict):
        by_node = {str(nid): _series(s, f"demand[{nid}]") for nid, s in demand_doc.items()}
    else:
        raise SchemaError("demand: expected a mapping of node id -> series")
    demand = DemandSeries(by_node=by_node)

    shed_doc = _require(doc, "shedding", "shedding")
    shedding = LoadSheddingPolicy(
        fractions=_triple(_require(shed_doc, "fractions", "shedding"), "shedding.fractions"),
        costs=_triple(_require(shed_doc, "costs", "shedding"), "shedding.costs"),
        node_costs={
            str(nid): _triple(cs, f"shedding.node_costs[{nid}]")
            for nid, cs in shed_doc.get("node_costs", {}).items()
        },
    )

    return NetworkInstance(
        nodes=tuple(nodes),
        lines=tuple(lines),
        renewables=tuple(renewables),
        conventionals=tuple(conventionals),
        hydros=tuple(hydros),
        batteries=tuple(batteries),
        hydrogens=tuple(hydrogens),
        demand=demand,
        regions=regions,
        shedding=shedding,
        timegrid=timegrid,
    )


def load_instance(path: str | Path) -> NetworkInstance:
    """Load, parse, and validate an instance document.

    Raises SchemaError when the document shape is wrong and ValidationError
    (listing every named violation) when invariants fail.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"no such instance file: {path}")
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: not valid JSON ({exc})") from exc
    inst = instance_from_dict(doc, base=path.parent)
    violations = validate(inst)
    if violations:
        raise ValidationError(violations)
    log.debug(
        "loaded instance: %d nodes, %d lines, %d renewables, T=%d",
        len(inst.nodes),
        len(inst.lines),
        len(inst.renewables),
        inst.timegrid.step_count,
    )
    return inst


def instance_to_dict(inst: NetworkInstance) -> dict:
    """Serialize an instance to the document schema (inline series)."""
    doc: dict[str, Any] = {
        "nodes": [
            {
                "id": n.id,
                "name": n.name,
                "region": n.region,
                "reference": n.is_reference,
            }
            for n in inst.nodes
        ],
        "lines": [
            {
                "id": l.id,
                "kind": l.kind,
                "from": l.from_node,
                "to": l.to_node,
                "susceptance": l.susceptance,
                "existing_cap": l.existing_cap,
                "expansion_cost": l.expansion_cost,
                "expansion_limit": l.expansion_limit,
            }
            for l in inst.lines
        ],
        "renewables": [],
        "conventionals": [
            {
                "id": c.id,
                "node": c.node,
                "existing_cap": c.existing_cap,
                "variable_cost": c.variable_cost,
            }
            for c in inst.conventionals
        ],
        "hydros": [],
        "batteries": [],
        "hydrogens": [],
        "demand": {nid: list(s) for nid, s in inst.demand.by_node.items()},
        "regions": [
            {"id": g.id, "name": g.name, "nodes": list(g.nodes)} for g in inst.regions
        ],
        "shedding": {
            "fractions": list(inst.shedding.fractions),
            "costs": list(inst.shedding.costs),
        },
        "timegrid": {
            "step_count": inst.timegrid.step_count,
            "step_hours": inst.timegrid.step_hours,
            "periods": [
                {"id": p.id, "start": p.start + 1, "end": p.end + 1}
                for p in inst.timegrid.periods
            ],
        },
    }
    if inst.shedding.node_costs:
        doc["shedding"]["node_costs"] = {
            nid: list(cs) for nid, cs in inst.shedding.node_costs.items()
        }
    for r in inst.renewables:
        entry: dict[str, Any] = {
            "id": r.id,
            "node": r.node,
            "technology": r.technology,
            "region": r.region,
            "annualized_cost": r.annualized_cost,
            "cf": {"reference": list(r.cf.reference), "deviation": list(r.cf.deviation)},
        }
        if r.cf.realized is not None:
            entry["cf"]["realized"] = list(r.cf.realized)
        if r.expansion_limit is not None:
            entry["expansion_limit"] = r.expansion_limit
        doc["renewables"].append(entry)
    for h in inst.hydros:
        entry = {"id": h.id, "node": h.node, "kind": h.kind, "existing_cap": h.existing_cap}
        if h.availability is not None:
            entry["availability"] = list(h.availability)
        if h.storage_scale is not None:
            entry["storage_scale"] = h.storage_scale
        if h.efficiency is not None:
            entry["efficiency"] = h.efficiency
        doc["hydros"].append(entry)
    for b in inst.batteries:
        entry = {
            "id": b.id,
            "node": b.node,
            "inverter_cost": b.inverter_cost,
            "storage_cost": b.storage_cost,
            "efficiency": b.efficiency,
        }
        if b.inverter_limit is not None:
            entry["inverter_limit"] = b.inverter_limit
        if b.storage_limit is not None:
            entry["storage_limit"] = b.storage_limit
        doc["batteries"].append(entry)
    for h in inst.hydrogens:
        entry = {
            "id": h.id,
            "node": h.node,
            "ocgt_cost": h.ocgt_cost,
            "electrolyzer_cost": h.electrolyzer_cost,
            "storage_cost": h.storage_cost,
            "eta_el": h.eta_el,
            "eta_ocgt": h.eta_ocgt,
        }
        if h.ocgt_limit is not None:
            entry["ocgt_limit"] = h.ocgt_limit
        if h.el_limit is not None:
            entry["el_limit"] = h.el_limit
        if h.storage_limit is not None:
            entry["storage_limit"] = h.storage_limit
        doc["hydrogens"].append(entry)
    return doc


def save_instance(inst: NetworkInstance, path: str | Path) -> None:
    """Write an instance back to the JSON document schema."""
    path = Path(path)
    path.write_text(json.dumps(instance_to_dict(inst), indent=1) + "\n")
