"""Versioned system-definition files (JSON, exact rationals as "p/q" strings)."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Union

from .families import family_from_spec
from .system import (
    Point,
    SeedSpace,
    StageData,
    VilladsenSystem,
    cantor,
    cube,
    finite_metric,
    hilbert_cube,
    stage,
)
from .util import format_ratio, parse_ratio

SCHEMA = "vsys/1"


class SchemaError(ValueError):
    """A system definition file violates the schema; the message names the field."""


def _fail(field: str, msg: str) -> None:
    raise SchemaError(f"{field}: {msg}")


def _seed_to_json(seed: SeedSpace) -> dict:
    out: dict = {"kind": seed.kind}
    if seed.kind == "cube":
        out["m"] = seed.m
    if seed.kind == "finite_metric":
        out["labels"] = list(seed.labels)
        out["distances"] = [[format_ratio(d) for d in row] for row in seed.distance_table]
    return out


def _seed_from_json(data) -> SeedSpace:
    if not isinstance(data, dict) or "kind" not in data:
        _fail("seed", "expected an object with a 'kind'")
    kind = data["kind"]
    if kind == "cube":
        return cube(int(data.get("m", 1)))
    if kind == "hilbert_cube":
        return hilbert_cube()
    if kind == "cantor":
        return cantor()
    if kind == "finite_metric":
        try:
            return finite_metric(
                data["labels"],
                [[parse_ratio(x) for x in row] for row in data["distances"]],
            )
        except (KeyError, ValueError) as exc:
            _fail("seed", str(exc))
    _fail("seed.kind", f"unknown kind {kind!r}")


def _point_to_json(seed: SeedSpace, p: Point) -> list:
    if seed.kind == "cube":
        return [format_ratio(v) for v in p.coords]
    if seed.kind == "hilbert_cube":
        return [[format_ratio(v) for v in block] for block in p.coords]
    return list(p.coords)


def _point_from_json(seed: SeedSpace, data, field: str) -> Point:
    if not isinstance(data, list):
        _fail(field, "expected a coordinate list")
    try:
        if seed.kind == "cube":
            return Point(tuple(parse_ratio(v) for v in data))
        if seed.kind == "hilbert_cube":
            return Point(tuple(tuple(parse_ratio(v) for v in block) for block in data))
        if seed.kind == "cantor":
            return Point(tuple(str(v) for v in data))
        return Point(tuple(int(v) for v in data))
    except (ValueError, TypeError) as exc:
        _fail(field, str(exc))


def system_to_json(sys: VilladsenSystem) -> dict:
    out = {
        "schema": SCHEMA,
        "name": sys.name,
        "seed": _seed_to_json(sys.seed),
        "n0": sys.n0,
        "eval_seed": sys.eval_seed,
    }
    if sys.family is not None:
        out["family"] = {"name": sys.family.name, **sys.family.params()}
    stages = []
    for st in sys.prefix:
        entry: dict = {"c": st.c, "s": list(st.s), "k": st.k}
        if st.points is not None:
            entry["points"] = [_point_to_json(sys.seed, p) for p in st.points]
        stages.append(entry)
    if stages:
        out["stages"] = stages
    return out


def system_from_json(data, source: str = "<data>") -> VilladsenSystem:
    if not isinstance(data, dict):
        _fail("$", "top level must be an object")
    if data.get("schema") != SCHEMA:
        _fail("schema", f"expected {SCHEMA!r}, got {data.get('schema')!r}")
    seed = _seed_from_json(data.get("seed", {"kind": "cube", "m": 1}))
    try:
        n0 = int(data.get("n0", 1))
    except (TypeError, ValueError):
        _fail("n0", "must be an integer")
    family = None
    if "family" in data:
        fam = data["family"]
        if not isinstance(fam, dict) or "name" not in fam:
            _fail("family", "expected an object with a 'name'")
        params = {k: v for k, v in fam.items() if k != "name"}
        try:
            family = family_from_spec(fam["name"], params)
        except (ValueError, KeyError) as exc:
            _fail("family", str(exc))
    prefix: list[StageData] = []
    for idx, entry in enumerate(data.get("stages", []), start=1):
        fieldname = f"stages[{idx}]"
        if not isinstance(entry, dict):
            _fail(fieldname, "expected an object")
        for key in ("c", "s", "k"):
            if key not in entry:
                _fail(fieldname, f"missing '{key}'")
        points = None
        if "points" in entry:
            points = [
                _point_from_json(seed, p, f"{fieldname}.points[{t}]")
                for t, p in enumerate(entry["points"], start=1)
            ]
        try:
            prefix.append(stage(int(entry["c"]), entry["s"], int(entry["k"]), points))
        except (ValueError, TypeError) as exc:
            _fail(fieldname, str(exc))
    if family is None and not prefix:
        _fail("stages", "a system needs explicit stages or a family")
    return VilladsenSystem(
        seed=seed,
        n0=n0,
        prefix=tuple(prefix),
        family=family,
        eval_seed=int(data.get("eval_seed", 1)),
        name=str(data.get("name", Path(source).stem)),
    )


def load_system(path: Union[str, Path]) -> VilladsenSystem:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    return system_from_json(data, source=str(path))


def save_system(sys: VilladsenSystem, path: Union[str, Path]) -> None:
    Path(path).write_text(json.dumps(system_to_json(sys), indent=2, sort_keys=True) + "\n")
