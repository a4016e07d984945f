import json
from fractions import Fraction

import pytest

from villadsen.sysfile import SchemaError, load_system, save_system, system_from_json, system_to_json
from villadsen.system import Point, VilladsenSystem, cube, stage


def test_round_trip_family_system(tmp_path, s2):
    path = tmp_path / "s2.vsys"
    save_system(s2, path)
    back = load_system(path)
    assert back.seed == s2.seed
    assert back.n0 == s2.n0
    assert back.family == s2.family
    assert back.eval_seed == s2.eval_seed


def test_round_trip_explicit_points_bit_exact(tmp_path):
    pts = [Point((Fraction(1, 3), Fraction(10**12, 10**12 + 1)))]
    sys_obj = VilladsenSystem(
        seed=cube(2), n0=2,
        prefix=(stage(1, (3,), 1, pts),),
        name="explicit",
    )
    path = tmp_path / "explicit.vsys"
    save_system(sys_obj, path)
    back = load_system(path)
    assert back.prefix[0].points == sys_obj.prefix[0].points
    assert back.prefix[0].s == (3,)


def test_schema_version_enforced(tmp_path):
    path = tmp_path / "bad.vsys"
    path.write_text(json.dumps({"schema": "vsys/999", "n0": 1}))
    with pytest.raises(SchemaError) as err:
        load_system(path)
    assert "schema" in str(err.value)


def test_invalid_json_line_diagnostic(tmp_path):
    path = tmp_path / "broken.vsys"
    path.write_text('{\n  "schema": "vsys/1",\n  oops\n}')
    with pytest.raises(SchemaError) as err:
        load_system(path)
    assert ":3:" in str(err.value)


def test_missing_stage_field_named():
    with pytest.raises(SchemaError) as err:
        system_from_json({"schema": "vsys/1", "stages": [{"c": 1, "s": [1]}]})
    assert "stages[1]" in str(err.value)
    assert "'k'" in str(err.value)


def test_unknown_family_named():
    with pytest.raises(SchemaError) as err:
        system_from_json({"schema": "vsys/1", "family": {"name": "nope"}})
    assert "family" in str(err.value)


def test_needs_stages_or_family():
    with pytest.raises(SchemaError):
        system_from_json({"schema": "vsys/1", "n0": 1})


def test_json_deterministic(s2):
    assert json.dumps(system_to_json(s2), sort_keys=True) == json.dumps(
        system_to_json(s2), sort_keys=True
    )
