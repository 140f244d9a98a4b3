"""Naive row-at-a-time reference interpreter for the query dialect.

Deliberately slow and simple: rows are dicts, expressions are evaluated
recursively per row with Python scalars, NULL is None with Kleene logic.
Shares only the parsed AST with the production engine; evaluation,
grouping, ordering, and materialization are all independent.

Semantics mirrored (both sides must implement these identically):
  - WHERE keeps rows whose predicate is exactly true.
  - Division by zero (or an overflow) yields NULL.
  - Aggregates ignore NULL; empty -> NULL, COUNT -> 0.
  - Group keys treat NULL as one group; default group order is ascending
    key with NULLs last; default row order is object_id ascending.
  - ORDER BY: NULLs last in both directions, ties broken by object id
    (or group key).
"""

from __future__ import annotations

import math

from skyfed.core import ResultTable
from skyfed.query.nodes import (
    Binary,
    ColumnRef,
    FuncCall,
    Literal,
    Unary,
    pretty_expr,
)
from skyfed.query.planner import AGGREGATES


def catalog_rows(catalog) -> list[dict]:
    rows = []
    for o in catalog.objects:
        row = {
            "object_id": o.object_id,
            "ra": o.pos.ra_deg,
            "dec": o.pos.dec_deg,
            "sigma_pos": o.sigma_pos_arcsec,
            "class": o.obj_class.name,
            "extent": o.extent_arcsec,
        }
        for b in catalog.schema.bands:
            row[f"mag_{b}"] = o.mags.get(b)
        rows.append(row)
    return rows


def separation(ra1, dec1, ra2, dec2) -> float:
    p1, t1, p2, t2 = map(math.radians, (ra1, dec1, ra2, dec2))
    dp = p2 - p1
    num = math.hypot(
        math.cos(t2) * math.sin(dp),
        math.cos(t1) * math.sin(t2) - math.sin(t1) * math.cos(t2) * math.cos(dp),
    )
    den = math.sin(t1) * math.sin(t2) + math.cos(t1) * math.cos(t2) * math.cos(dp)
    return math.degrees(math.atan2(num, den))


def _is_agg(e) -> bool:
    return isinstance(e, FuncCall) and e.name in AGGREGATES


def _contains_agg(e) -> bool:
    if _is_agg(e):
        return True
    if isinstance(e, Unary):
        return _contains_agg(e.operand)
    if isinstance(e, Binary):
        return _contains_agg(e.left) or _contains_agg(e.right)
    if isinstance(e, FuncCall):
        return any(_contains_agg(a) for a in e.args)
    return False


def eval_row(e, row: dict):
    """Evaluate over one row; booleans are True/False/None (unknown)."""
    if isinstance(e, Literal):
        return e.value
    if isinstance(e, ColumnRef):
        return row[e.name]  # qualified names were flattened by the caller
    if isinstance(e, Unary):
        v = eval_row(e.operand, row)
        if e.op == "-":
            return None if v is None else -v
        return None if v is None else (not v)
    if isinstance(e, Binary):
        if e.op == "AND":
            a = eval_row(e.left, row)
            b = eval_row(e.right, row)
            if a is False or b is False:
                return False
            if a is None or b is None:
                return None
            return True
        if e.op == "OR":
            a = eval_row(e.left, row)
            b = eval_row(e.right, row)
            if a is True or b is True:
                return True
            if a is None or b is None:
                return None
            return False
        a = eval_row(e.left, row)
        b = eval_row(e.right, row)
        if a is None or b is None:
            return None
        if e.op == "<":
            return a < b
        if e.op == "<=":
            return a <= b
        if e.op == "=":
            return a == b
        if e.op == "!=":
            return a != b
        if e.op == ">=":
            return a >= b
        if e.op == ">":
            return a > b
        if e.op == "+":
            return a + b
        if e.op == "-":
            return a - b
        if e.op == "*":
            return a * b
        if b == 0:
            return None
        out = a / b
        return None if math.isinf(out) else out
    if isinstance(e, FuncCall):
        if e.name == "CONE":
            ra0 = eval_row(e.args[0], row)
            dec0 = eval_row(e.args[1], row)
            r = eval_row(e.args[2], row)
            return separation(row["ra"], row["dec"], ra0, dec0) <= r
        args = [eval_row(a, row) for a in e.args]
        if any(a is None for a in args):
            return None
        if e.name == "FLOOR":
            return math.floor(args[0])
        if e.name == "ABS":
            return abs(args[0])
        if e.name == "SEPARATION":
            return separation(args[0], args[1], args[2], args[3])
    raise AssertionError(f"oracle cannot evaluate {e!r}")


def eval_aggregate(e, rows: list[dict]):
    name = e.name
    if e.star:
        return len(rows)
    vals = [eval_row(e.args[0], r) for r in rows]
    vals = [v for v in vals if v is not None]
    if name == "COUNT":
        return len(vals)
    if not vals:
        return None
    if name == "SUM":
        if isinstance(vals[0], int) and all(isinstance(v, int) for v in vals):
            return sum(vals)
        return math.fsum(vals)
    if name == "AVG":
        return math.fsum(vals) / len(vals)
    if name == "MIN":
        return min(vals)
    return max(vals)


def eval_grouped(e, key_exprs, key, rows: list[dict]):
    for i, ge in enumerate(key_exprs):
        if e == ge:
            return key[i]
    if _is_agg(e):
        return eval_aggregate(e, rows)
    if isinstance(e, Literal):
        return e.value
    if isinstance(e, Unary):
        v = eval_grouped(e.operand, key_exprs, key, rows)
        if e.op == "-":
            return None if v is None else -v
        return None if v is None else (not v)
    if isinstance(e, Binary):
        fake = {"__a__": eval_grouped(e.left, key_exprs, key, rows),
                "__b__": eval_grouped(e.right, key_exprs, key, rows)}
        return eval_row(Binary(e.op, ColumnRef("__a__"), ColumnRef("__b__")), fake)
    if isinstance(e, FuncCall):
        vals = [eval_grouped(a, key_exprs, key, rows) for a in e.args]
        if any(v is None for v in vals):
            return None
        if e.name == "FLOOR":
            return math.floor(vals[0])
        if e.name == "ABS":
            return abs(vals[0])
        if e.name == "SEPARATION":
            return separation(*vals)
    raise AssertionError(f"oracle cannot evaluate {e!r} over a group")


def _norm_cell(v):
    """Materialize like the engine: bools to ints, floats stay floats."""
    if v is None:
        return None
    if isinstance(v, bool):
        return int(v)
    if isinstance(v, float) and math.isnan(v):
        return None
    return v


def _kind_of(v):
    if isinstance(v, bool):
        return "int"
    if isinstance(v, int):
        return "int"
    if isinstance(v, float):
        return "float"
    return "text"


def _sort_block(decorated, order_specs):
    decorated.sort(key=lambda t: t[2])
    for pos in range(len(order_specs) - 1, -1, -1):
        desc = order_specs[pos][1]
        if desc:
            decorated.sort(
                key=lambda t: ((t[1][pos] is not None), 0.0 if t[1][pos] is None else t[1][pos]),
                reverse=True,
            )
        else:
            decorated.sort(
                key=lambda t: ((t[1][pos] is None), 0.0 if t[1][pos] is None else t[1][pos])
            )
    return decorated


def run_query(ast, catalog=None, column_kinds=None, rows=None, star_columns=None):
    """Interpret a parsed query over a catalog (or prebuilt joined rows).

    Prebuilt rows may carry a "__tiebreak__" entry giving the deterministic
    base-order key (the portal uses the match id vector); plain catalogs fall
    back to object_id.
    """
    if rows is None:
        rows = catalog_rows(catalog)
    if star_columns is None:
        star_columns = (
            ["object_id", "ra", "dec", "sigma_pos", "class", "extent"]
            + [f"mag_{b}" for b in catalog.schema.bands]
        )

    # expand *, collect items
    items = []
    for it in ast.select:
        if it.star:
            items.extend((ColumnRef(c), None, ColumnRef(c)) for c in star_columns)
        else:
            items.append((_strip_qualifiers(it.expr), it.alias, it.expr))
    aliases = {alias: expr for expr, alias, _ in items if alias}

    def resolve_alias(e):
        if isinstance(e, ColumnRef) and e.survey is None and e.name in aliases:
            return aliases[e.name]
        return _strip_qualifiers(e)

    where = _strip_qualifiers(ast.where) if ast.where is not None else None
    if where is not None:
        rows = [r for r in rows if eval_row(where, r) is True]

    group_by = [resolve_alias(g) for g in ast.group_by]
    order_specs = [(resolve_alias(o.expr), o.descending) for o in ast.order_by]
    grouped = bool(group_by) or any(_contains_agg(e) for e, _, _ in items)

    out_rows = []
    if grouped:
        groups: dict[tuple, list[dict]] = {}
        if not group_by:
            groups[()] = []
        for r in rows:
            key = tuple(_norm_cell(eval_row(g, r)) for g in group_by)
            groups.setdefault(key, []).append(r)

        def key_sorter(key):
            return tuple((p is None, 0.0 if p is None else p) for p in key)

        for key in sorted(groups, key=key_sorter):
            grows = groups[key]
            cells = tuple(
                _norm_cell(eval_grouped(e, group_by, key, grows)) for e, _, _ in items
            )
            okeys = tuple(
                _norm_cell(eval_grouped(e, group_by, key, grows)) for e, _ in order_specs
            )
            out_rows.append((cells, okeys, key_sorter(key)))
    else:
        for r in rows:
            cells = tuple(_norm_cell(eval_row(e, r)) for e, _, _ in items)
            okeys = tuple(_norm_cell(eval_row(e, r)) for e, _ in order_specs)
            out_rows.append((cells, okeys, r.get("__tiebreak__", r.get("object_id"))))

    out_rows = _sort_block(out_rows, order_specs)
    if ast.limit is not None:
        out_rows = out_rows[: ast.limit]

    names = [alias if alias else pretty_expr(orig) for _, alias, orig in items]
    kinds = []
    if column_kinds is not None:
        kinds = column_kinds
    else:
        kinds = [_infer_kind(e, catalog) for e, _, _ in items]
    return ResultTable(
        columns=list(zip(names, kinds)),
        rows=[r[0] for r in out_rows],
    )


def _strip_qualifiers(e):
    """Drop survey qualifiers (the single-catalog oracle keys rows by bare
    names)."""
    if e is None or isinstance(e, Literal):
        return e
    if isinstance(e, ColumnRef):
        return ColumnRef(e.name) if e.survey else e
    if isinstance(e, Unary):
        return Unary(e.op, _strip_qualifiers(e.operand))
    if isinstance(e, Binary):
        return Binary(e.op, _strip_qualifiers(e.left), _strip_qualifiers(e.right))
    if isinstance(e, FuncCall):
        return FuncCall(e.name, tuple(_strip_qualifiers(a) for a in e.args), e.star)
    return e


def _infer_kind(e, catalog) -> str:
    """Static output kind, mirroring the planner's typing rules."""
    if isinstance(e, Literal):
        return e.kind
    if isinstance(e, ColumnRef):
        base = e.name.split(".")[-1]  # flat portal names qualify with a dot
        if base == "object_id":
            return "int"
        if base == "class":
            return "text"
        return "float"
    if isinstance(e, Unary):
        if e.op == "NOT":
            return "int"
        return _infer_kind(e.operand, catalog)
    if isinstance(e, Binary):
        if e.op in ("AND", "OR", "<", "<=", "=", "!=", ">=", ">"):
            return "int"
        if e.op == "/":
            return "float"
        lk = _infer_kind(e.left, catalog)
        rk = _infer_kind(e.right, catalog)
        return "int" if lk == "int" and rk == "int" else "float"
    if isinstance(e, FuncCall):
        if e.name in ("COUNT", "FLOOR"):
            return "int"
        if e.name in ("AVG", "SEPARATION"):
            return "float"
        if e.name in ("SUM", "MIN", "MAX", "ABS"):
            return _infer_kind(e.args[0], catalog)
        if e.name == "CONE":
            return "int"
    raise AssertionError(f"oracle cannot type {e!r}")
