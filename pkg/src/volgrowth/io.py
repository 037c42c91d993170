"""CSV tables, key=value records and the JSONL piece catalog."""

from __future__ import annotations

import csv
import io
import json
from fractions import Fraction
from pathlib import Path
from typing import Annotated, Iterable, Literal, Optional, Sequence, Union

from pydantic import BaseModel, BeforeValidator, ConfigDict, Field, TypeAdapter, ValidationError

from .growth import GrowthFunction
from .pieces import (
    LOWER_DIM,
    SPHERE,
    TORUS,
    Catalog,
    CatalogBounds,
    Kind,
    PieceError,
    make_block,
    make_sphere_piece,
    make_torus_cylinder,
)


class SchemaError(ValueError):
    """Malformed input file; ``line`` is 1-based when known."""

    def __init__(self, path, line: int | None, message: str):
        where = f"{path}:{line}" if line is not None else str(path)
        super().__init__(f"{where}: {message}")
        self.path = path
        self.line = line


# ---------------------------------------------------------------- CSV helpers


def fmt(x) -> str:
    if isinstance(x, Fraction):
        return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"
    return str(x)


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(x) for x in row])
    path = Path(path)
    path.write_text(buf.getvalue())
    return path


def read_csv(path, header: Sequence[str]) -> list:
    """Rows as lists of strings, after checking the header."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise SchemaError(path, None, f"cannot read: {exc.strerror or exc}") from exc
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or [c.strip() for c in rows[0]] != list(header):
        got = ",".join(rows[0]) if rows else "<empty file>"
        raise SchemaError(path, 1, f"expected header {','.join(header)!r}, got {got!r}")
    out = []
    for i, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise SchemaError(path, i, f"expected {len(header)} columns, got {len(row)}")
        out.append((i, [c.strip() for c in row]))
    return out


def read_growth_csv(path) -> GrowthFunction:
    """Two-column ``n,v`` table with ``n = 0, 1, 2, ...`` in order."""
    vals = []
    for line, (n, v) in read_csv(path, ("n", "v")):
        try:
            n, v = int(n), int(v)
        except ValueError:
            raise SchemaError(path, line, "n and v must be integers") from None
        if n != len(vals):
            raise SchemaError(path, line, f"expected n={len(vals)}, got {n}")
        vals.append(v)
    if not vals:
        raise SchemaError(path, None, "growth table has no rows")
    try:
        return GrowthFunction(tuple(vals))
    except ValueError as exc:
        raise SchemaError(path, None, str(exc)) from exc


def write_growth_csv(path, values: Sequence, column: str = "v", index: str = "n") -> Path:
    return write_csv(path, (index, column), enumerate(values))


def write_record(path, pairs: dict | str) -> Path:
    text = pairs if isinstance(pairs, str) else "".join(f"{k}={fmt(v)}\n" for k, v in pairs.items())
    path = Path(path)
    path.write_text(text)
    return path


def read_record(path) -> dict:
    out = {}
    for line in Path(path).read_text().splitlines():
        if "=" in line:
            k, v = line.split("=", 1)
            out[k] = v
    return out


def write_tree_csv(path, tree) -> Path:
    return write_csv(
        path,
        ("id", "level", "order", "parent", "trunk"),
        ((v.id, v.level, v.order, "" if v.parent is None else v.parent, int(v.trunk)) for v in tree.vertices),
    )


def write_levelset_csv(path, S) -> Path:
    return write_csv(path, ("j", "n_j", "t_j"), ((j, n, t) for j, (n, t) in enumerate(S.intervals)))


def write_instances_csv(path, model) -> Path:
    return write_csv(
        path,
        ("id", "piece", "level", "strand_multiplicity", "vertex", "role", "base", "total_volume"),
        (
            (i.id, i.spec.label, i.level, i.strand_multiplicity, i.vertex, i.role, model.base(i), i.spec.total)
            for i in model.instances
        ),
    )


def write_placements_csv(path, model) -> Path:
    return write_csv(path, ("vertex", "instance"), sorted(model.placements.items()))


def write_edges_csv(path, g) -> Path:
    return write_csv(path, ("u", "v", "length", "density"), ((e.u, e.v, e.length, e.density) for e in g.edges))


# ---------------------------------------------------------------- catalog JSONL


def _rational(x):
    if isinstance(x, bool):
        raise ValueError("expected a rational number")
    if isinstance(x, (int, Fraction)):
        return Fraction(x)
    if isinstance(x, str):
        try:
            return Fraction(x)
        except ValueError:
            raise ValueError(f"not a rational: {x!r}") from None
    if isinstance(x, float):
        return Fraction(x).limit_denominator(10**6)
    raise ValueError("expected a rational number (int, or string like '5/2')")


Rational = Annotated[Fraction, BeforeValidator(_rational)]
PosInt = Annotated[int, Field(ge=1, strict=True)]
Shape = Literal["flat", "ramp", "plateau"]


class _Record(BaseModel):
    model_config = ConfigDict(extra="forbid", arbitrary_types_allowed=True)


class BoundsRecord(_Record):
    record: Literal["bounds"]
    l: PosInt
    h: PosInt
    H: PosInt
    d: PosInt
    U: list[PosInt] = []


class SphereRecord(_Record):
    record: Literal["sphere"]
    kind: Literal["Sphere1", "Sphere2", "Sphere3"]
    shape: Shape = "flat"
    t_P: Optional[Rational] = None
    T_P: Optional[Rational] = None
    increments: Optional[list[PosInt]] = None
    marked_point_offset: Rational = Fraction(0)
    diameter: Optional[Rational] = None


class BlockRecord(_Record):
    record: Literal["block"]
    index: Annotated[int, Field(ge=0, strict=True)]
    t: PosInt
    components: PosInt = 1
    plus_counts: Optional[list[Annotated[int, Field(ge=0, strict=True)]]] = None
    shape: Shape = "flat"
    profiles: Optional[list[list[PosInt]]] = None
    u_bound: Optional[PosInt] = None
    interface: Optional[Literal["sphere", "torus"]] = None
    t_P: Optional[Rational] = None
    T_P: Optional[Rational] = None
    marked_point_offset: Rational = Fraction(0)
    diameter: Optional[Rational] = None


class TorusRecord(_Record):
    record: Literal["torus"]
    p: PosInt = 1
    q: Annotated[int, Field(strict=True)] = 3
    shape: Shape = "flat"


_RECORD = TypeAdapter(
    Annotated[Union[BoundsRecord, SphereRecord, BlockRecord, TorusRecord], Field(discriminator="record")]
)


def _first_error(exc: ValidationError) -> str:
    err = exc.errors()[0]
    loc = ".".join(str(x) for x in err["loc"])
    return f"{loc}: {err['msg']}" if loc else err["msg"]


def parse_catalog_lines(lines: Sequence[str], path="<catalog>") -> list:
    """Validated records with their 1-based line numbers; blank lines and ``#`` comments are skipped."""
    out = []
    for i, raw in enumerate(lines, start=1):
        s = raw.strip()
        if not s or s.startswith("#"):
            continue
        try:
            obj = json.loads(s)
        except json.JSONDecodeError as exc:
            raise SchemaError(path, i, f"invalid JSON: {exc.msg}") from None
        try:
            out.append((i, _RECORD.validate_python(obj)))
        except ValidationError as exc:
            raise SchemaError(path, i, _first_error(exc)) from None
    return out


def load_catalog(path, mode: str = "connected-sum") -> Catalog:
    """Build a :class:`Catalog` from a JSONL file with exactly one ``bounds`` record.

    Blocks without an explicit ``interface`` follow the mode (torus in
    lower-dimensional mode, sphere otherwise).  The torus record is only
    used in lower-dimensional mode.
    """
    path = Path(path)
    try:
        lines = path.read_text().splitlines()
    except OSError as exc:
        raise SchemaError(path, None, f"cannot read: {exc.strerror or exc}") from exc
    return catalog_from_records(parse_catalog_lines(lines, path), mode, path)


def catalog_from_records(records: list, mode: str, path="<catalog>") -> Catalog:
    bounds_recs = [(i, r) for i, r in records if isinstance(r, BoundsRecord)]
    if len(bounds_recs) != 1:
        line = bounds_recs[1][0] if len(bounds_recs) > 1 else None
        raise SchemaError(path, line, f"need exactly one bounds record, found {len(bounds_recs)}")
    line, b = bounds_recs[0]
    try:
        bounds = CatalogBounds(b.l, b.h, b.H, b.d, tuple(b.U))
    except PieceError as exc:
        raise SchemaError(path, line, str(exc)) from exc

    spheres, blocks, torus = {}, {}, None
    iface = TORUS if mode == LOWER_DIM else SPHERE
    for line, r in records:
        try:
            if isinstance(r, SphereRecord):
                kind = Kind(r.kind)
                if kind in spheres:
                    raise SchemaError(path, line, f"duplicate {r.kind} record")
                spheres[kind] = make_sphere_piece(
                    kind,
                    bounds,
                    r.shape,
                    t_P=r.t_P,
                    T_P=r.T_P,
                    increments=r.increments,
                    marked_point_offset=r.marked_point_offset,
                    diameter=r.diameter,
                )
            elif isinstance(r, BlockRecord):
                if r.index in blocks:
                    raise SchemaError(path, line, f"duplicate block index {r.index}")
                blocks[r.index] = make_block(
                    r.index,
                    r.t,
                    r.components,
                    r.plus_counts if r.plus_counts is not None else [1] * r.components,
                    bounds,
                    r.shape,
                    profiles=r.profiles,
                    u_bound=r.u_bound,
                    interface=r.interface or iface,
                    t_P=r.t_P,
                    T_P=r.T_P,
                    marked_point_offset=r.marked_point_offset,
                    diameter=r.diameter,
                )
            elif isinstance(r, TorusRecord):
                if torus is not None:
                    raise SchemaError(path, line, "duplicate torus record")
                torus = make_torus_cylinder(bounds, r.p, r.q, r.shape)
        except PieceError as exc:
            raise SchemaError(path, line, f"{type(exc).__name__}: {exc}") from exc

    missing = [k.value for k in (Kind.SPHERE1, Kind.SPHERE2, Kind.SPHERE3) if k not in spheres]
    if missing:
        raise SchemaError(path, None, f"missing sphere records: {', '.join(missing)}")
    if sorted(blocks) != list(range(len(blocks))):
        raise SchemaError(path, None, f"block indices must be 0..{len(blocks) - 1}, got {sorted(blocks)}")
    if mode == LOWER_DIM and torus is None:
        raise SchemaError(path, None, "lower-dim-spheres mode needs a torus record")
    try:
        return Catalog(
            bounds,
            spheres,
            tuple(blocks[j] for j in sorted(blocks)),
            torus if mode == LOWER_DIM else None,
            mode,
        )
    except PieceError as exc:
        raise SchemaError(path, None, str(exc)) from exc

