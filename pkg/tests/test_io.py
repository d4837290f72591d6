"""Instance serialization: JSON round-trip, CSV bundles, error paths."""

import json

import pytest

from robustgrid.io import (
    SchemaError,
    ValidationError,
    instance_from_dict,
    instance_to_dict,
    load_instance,
    save_instance,
)

import toys


@pytest.mark.parametrize(
    "build",
    [
        toys.single_node,
        toys.two_region,
        toys.two_period_battery,
        toys.three_region_hydro,
        toys.symmetric_pair,
    ],
)
def test_round_trip_preserves_instance(build, tmp_path):
    inst = build()
    path = tmp_path / "inst.json"
    save_instance(inst, path)
    again = load_instance(path)
    assert again == inst


def test_dict_round_trip_is_identity():
    inst = toys.three_region_hydro()
    assert instance_from_dict(instance_to_dict(inst)) == inst


def test_missing_file_raises():
    with pytest.raises(FileNotFoundError):
        load_instance("/nonexistent/inst.json")


def test_bad_json_raises_schema_error(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    with pytest.raises(SchemaError):
        load_instance(path)


def test_missing_required_key_raises_schema_error():
    doc = instance_to_dict(toys.single_node())
    del doc["nodes"]
    with pytest.raises(SchemaError):
        instance_from_dict(doc)


def test_invalid_instance_raises_validation_error(tmp_path):
    doc = instance_to_dict(toys.single_node())
    doc["nodes"][0]["reference"] = False
    path = tmp_path / "inst.json"
    path.write_text(json.dumps(doc))
    with pytest.raises(ValidationError) as err:
        load_instance(path)
    assert any(v.rule == "reference_node" for v in err.value.violations)


def test_periods_are_one_based_in_documents():
    doc = instance_to_dict(toys.single_node(steps=2))
    period = doc["timegrid"]["periods"][0]
    assert (period["start"], period["end"]) == (1, 2)
    inst = instance_from_dict(doc)
    assert (inst.timegrid.periods[0].start, inst.timegrid.periods[0].end) == (0, 1)


def test_line_expansion_limit_defaults_to_existing_cap():
    doc = instance_to_dict(toys.two_region())
    del doc["lines"][0]["expansion_limit"]
    inst = instance_from_dict(doc)
    assert inst.lines[0].expansion_limit == inst.lines[0].existing_cap


def test_csv_bundle_loading(tmp_path):
    inst = toys.two_region()
    doc = instance_to_dict(inst)
    # move the cf reference series out into a CSV, keep the rest inline
    (tmp_path / "cf_ref.csv").write_text("pv_a,w_b\n0.5,0.4\n0.5,0.4\n")
    for r in doc["renewables"]:
        del r["cf"]["reference"]
    doc["series_files"] = {"cf_reference": "cf_ref.csv"}
    path = tmp_path / "inst.json"
    path.write_text(json.dumps(doc))
    again = load_instance(path)
    assert again.renewables[0].cf.reference == (0.5, 0.5)
    assert again.renewables[1].cf.reference == (0.4, 0.4)


def test_csv_bundle_missing_column_raises(tmp_path):
    inst = toys.two_region()
    doc = instance_to_dict(inst)
    (tmp_path / "cf_ref.csv").write_text("pv_a\n0.5\n0.5\n")
    for r in doc["renewables"]:
        del r["cf"]["reference"]
    doc["series_files"] = {"cf_reference": "cf_ref.csv"}
    path = tmp_path / "inst.json"
    path.write_text(json.dumps(doc))
    with pytest.raises(SchemaError):
        load_instance(path)


def test_csv_with_bad_cell_raises(tmp_path):
    inst = toys.two_region()
    doc = instance_to_dict(inst)
    (tmp_path / "cf_ref.csv").write_text("pv_a,w_b\n0.5,oops\n0.5,0.4\n")
    for r in doc["renewables"]:
        del r["cf"]["reference"]
    doc["series_files"] = {"cf_reference": "cf_ref.csv"}
    path = tmp_path / "inst.json"
    path.write_text(json.dumps(doc))
    with pytest.raises(SchemaError):
        load_instance(path)


def test_unknown_series_family_raises(tmp_path):
    doc = instance_to_dict(toys.single_node())
    doc["series_files"] = {"wind_speeds": "x.csv"}
    path = tmp_path / "inst.json"
    path.write_text(json.dumps(doc))
    with pytest.raises(SchemaError):
        load_instance(path)


def test_bundled_six_region_fixture_loads():
    from pathlib import Path

    from robustgrid.model import validate

    path = Path(__file__).parent / "fixtures" / "toy6.json"
    inst = load_instance(path)
    assert len(inst.regions) == 6
    assert len(inst.nodes) == 12
    # regions partition the nodes
    covered = sorted(n for r in inst.regions for n in r.nodes)
    assert covered == sorted(n.id for n in inst.nodes)
    assert validate(inst) == []
