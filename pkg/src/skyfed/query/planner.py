"""Name resolution, validation, and plan construction.

A top-level CONE(...) conjunct in WHERE becomes a zone-index cone scan with
the remaining predicates as a residual filter; otherwise the plan is a full
scan. CONE(ra, dec, r) is rewritten everywhere into
SEPARATION(<pos columns>, ra, dec) <= r so execution needs no implicit
row-position context.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from ..errors import PlanError
from .nodes import (
    Binary,
    ColumnRef,
    Expr,
    FuncCall,
    Literal,
    OrderItem,
    Query,
    TableSource,
    Unary,
    conjoin,
    conjuncts,
    pretty_expr,
    walk,
)

AGGREGATES = {"COUNT", "SUM", "MIN", "MAX", "AVG"}
SCALAR_ARITY = {"FLOOR": 1, "ABS": 1, "SEPARATION": 4, "CONE": 3}


@dataclass(frozen=True)
class ColumnInfo:
    name: str
    kind: str  # int | float | text
    nullable: bool = False


def catalog_columns(schema) -> dict[str, ColumnInfo]:
    """Domestic column set exposed to queries for one catalog schema."""
    cols = {
        "object_id": ColumnInfo("object_id", "int"),
        "ra": ColumnInfo("ra", "float"),
        "dec": ColumnInfo("dec", "float"),
        "sigma_pos": ColumnInfo("sigma_pos", "float"),
        "class": ColumnInfo("class", "text"),
        "extent": ColumnInfo("extent", "float", nullable=True),
    }
    for b in schema.bands:
        cols[f"mag_{b}"] = ColumnInfo(f"mag_{b}", "float", nullable=True)
    return cols


@dataclass(frozen=True)
class ConeScan:
    ra_deg: float
    dec_deg: float
    radius_deg: float
    predicate: Expr  # rewritten form, for index-less execution and plan checks


@dataclass(frozen=True)
class FullScan:
    pass


@dataclass(frozen=True)
class OutputColumn:
    name: str
    kind: str  # int | float | text
    expr: Expr
    aggregated: bool


@dataclass(frozen=True)
class Plan:
    scan: object  # ConeScan | FullScan
    where: Optional[Expr]
    select: tuple  # of OutputColumn
    group_by: tuple  # of Expr
    order_by: tuple  # of OrderItem
    limit: Optional[int]
    grouped: bool  # True when GROUP BY or any aggregate is present
    table: str = ""


def _is_constant(e: Expr) -> bool:
    return all(
        isinstance(n, (Literal, Unary, Binary)) and getattr(n, "op", "-") in "+-*/"
        for n in walk(e)
    )


def _const_value(e: Expr) -> float:
    if isinstance(e, Literal):
        if e.kind == "text":
            raise PlanError("expected a numeric constant", e.offset)
        return float(e.value)
    if isinstance(e, Unary) and e.op == "-":
        return -_const_value(e.operand)
    if isinstance(e, Binary) and e.op in "+-*/":
        a, b = _const_value(e.left), _const_value(e.right)
        if e.op == "+":
            return a + b
        if e.op == "-":
            return a - b
        if e.op == "*":
            return a * b
        return a / b
    raise PlanError("expected a numeric constant", getattr(e, "offset", None))


class _Planner:
    def __init__(
        self,
        columns: dict[str, ColumnInfo],
        table: str,
        survey: Optional[str],
        allow_cone: bool = True,
    ):
        self.columns = columns
        self.table = table
        self.survey = survey  # accepted qualifier for column refs, if any
        self.allow_cone = allow_cone

    # -- resolution and rewriting -------------------------------------------

    def resolve(self, e: Expr) -> Expr:
        """Validate column refs and rewrite CONE calls; returns a new tree."""
        if isinstance(e, Literal):
            return e
        if isinstance(e, ColumnRef):
            if e.survey is not None and e.survey != self.survey:
                raise PlanError(
                    f"unknown survey {e.survey!r} (this source is "
                    f"{self.survey or self.table!r})",
                    e.offset,
                )
            name = e.name
            if name not in self.columns:
                cands = ", ".join(sorted(self.columns))
                raise PlanError(f"unknown column {name} (have: {cands})", e.offset)
            return ColumnRef(name=name, offset=e.offset)
        if isinstance(e, Unary):
            return Unary(e.op, self.resolve(e.operand), offset=e.offset)
        if isinstance(e, Binary):
            return Binary(e.op, self.resolve(e.left), self.resolve(e.right), offset=e.offset)
        if isinstance(e, FuncCall):
            if e.name == "CONE":
                if not self.allow_cone:
                    raise PlanError(
                        "CONE cannot be evaluated here; it must apply to a "
                        "single survey's position",
                        e.offset,
                    )
                return self.rewrite_cone(e)
            return FuncCall(
                e.name, tuple(self.resolve(a) for a in e.args), e.star, offset=e.offset
            )
        raise PlanError(f"cannot plan expression {e!r}", getattr(e, "offset", None))

    def rewrite_cone(self, e: FuncCall) -> Expr:
        ra0, dec0, r = self.cone_constants(e)
        sep = FuncCall(
            "SEPARATION",
            (
                ColumnRef("ra"),
                ColumnRef("dec"),
                Literal(ra0, "float"),
                Literal(dec0, "float"),
            ),
            offset=e.offset,
        )
        return Binary("<=", sep, Literal(r, "float"), offset=e.offset)

    def cone_constants(self, e: FuncCall) -> tuple[float, float, float]:
        if e.star or len(e.args) != 3:
            raise PlanError("CONE takes (ra_deg, dec_deg, radius_deg)", e.offset)
        for a in e.args:
            if not _is_constant(a):
                raise PlanError("CONE arguments must be constants", e.offset)
        ra0, dec0, r = (_const_value(a) for a in e.args)
        if not (0.0 <= r <= 180.0):
            raise PlanError(f"CONE radius must be in [0, 180], got {r!r}", e.offset)
        if not (-90.0 <= dec0 <= 90.0):
            raise PlanError(f"CONE declination out of range: {dec0!r}", e.offset)
        return ra0, dec0, r

    # -- typing ---------------------------------------------------------------

    def infer(self, e: Expr, in_aggregate: bool = False) -> str:
        """Return int/float/text/bool; raises PlanError on misuse."""
        if isinstance(e, Literal):
            return e.kind
        if isinstance(e, ColumnRef):
            return self.columns[e.name].kind
        if isinstance(e, Unary):
            t = self.infer(e.operand, in_aggregate)
            if e.op == "NOT":
                if t != "bool":
                    raise PlanError("NOT needs a boolean operand", e.offset)
                return "bool"
            if t not in ("int", "float"):
                raise PlanError("unary minus needs a numeric operand", e.offset)
            return t
        if isinstance(e, Binary):
            lt = self.infer(e.left, in_aggregate)
            rt = self.infer(e.right, in_aggregate)
            if e.op in ("AND", "OR"):
                if lt != "bool" or rt != "bool":
                    raise PlanError(f"{e.op} needs boolean operands", e.offset)
                return "bool"
            if e.op in ("<", "<=", "=", "!=", ">=", ">"):
                if lt == "bool" or rt == "bool":
                    raise PlanError("cannot compare boolean values", e.offset)
                if (lt == "text") != (rt == "text"):
                    raise PlanError("cannot compare text with numbers", e.offset)
                return "bool"
            # arithmetic
            if lt not in ("int", "float") or rt not in ("int", "float"):
                raise PlanError(f"operator {e.op} needs numeric operands", e.offset)
            if e.op == "/":
                return "float"
            return "int" if lt == "int" and rt == "int" else "float"
        if isinstance(e, FuncCall):
            if e.name in AGGREGATES:
                if in_aggregate:
                    raise PlanError("aggregates cannot nest", e.offset)
                if e.star:
                    if e.name != "COUNT":
                        raise PlanError(f"{e.name}(*) is not a thing", e.offset)
                    return "int"
                if len(e.args) != 1:
                    raise PlanError(f"{e.name} takes one argument", e.offset)
                at = self.infer(e.args[0], in_aggregate=True)
                if e.name == "COUNT":
                    return "int"
                if e.name == "AVG":
                    if at not in ("int", "float"):
                        raise PlanError("AVG needs a numeric argument", e.offset)
                    return "float"
                if e.name == "SUM":
                    if at not in ("int", "float"):
                        raise PlanError("SUM needs a numeric argument", e.offset)
                    return at
                # MIN/MAX work on numbers and text
                if at == "bool":
                    raise PlanError(f"{e.name} cannot aggregate booleans", e.offset)
                return at
            arity = SCALAR_ARITY.get(e.name)
            if arity is None:
                raise PlanError(f"unknown function {e.name}", e.offset)
            if e.star or len(e.args) != arity:
                raise PlanError(f"{e.name} takes {arity} argument(s)", e.offset)
            for a in e.args:
                if self.infer(a, in_aggregate) not in ("int", "float"):
                    raise PlanError(f"{e.name} needs numeric arguments", e.offset)
            if e.name == "FLOOR":
                return "int"
            if e.name == "ABS":
                return self.infer(e.args[0], in_aggregate)
            if e.name == "SEPARATION":
                return "float"
            if e.name == "CONE":
                return "bool"  # only reachable pre-rewrite
        raise PlanError(f"cannot type expression {e!r}", getattr(e, "offset", None))


def _has_aggregate(e: Expr) -> bool:
    return any(isinstance(n, FuncCall) and n.name in AGGREGATES for n in walk(e))


def _check_grouped(e: Expr, group_by: tuple, what: str):
    """In a grouped query, a non-aggregate (sub)expression must be built from
    GROUP BY expressions and literals."""
    if e in group_by:
        return
    if isinstance(e, Literal):
        return
    if isinstance(e, FuncCall) and e.name in AGGREGATES:
        return  # columns inside the aggregate are fine
    if isinstance(e, ColumnRef):
        raise PlanError(
            f"{what} {pretty_expr(e)} is neither aggregated nor in GROUP BY",
            e.offset,
        )
    if isinstance(e, Unary):
        _check_grouped(e.operand, group_by, what)
        return
    if isinstance(e, Binary):
        _check_grouped(e.left, group_by, what)
        _check_grouped(e.right, group_by, what)
        return
    if isinstance(e, FuncCall):
        for a in e.args:
            _check_grouped(a, group_by, what)
        return
    raise PlanError(f"cannot group {e!r}")


def build_plan(
    ast: Query,
    columns: dict[str, ColumnInfo],
    table: str,
    survey: Optional[str] = None,
    star_columns: Optional[list[str]] = None,
    allow_cone: bool = True,
) -> Plan:
    """Shared planning core for node catalogs and portal join tables."""
    pl = _Planner(columns, table, survey, allow_cone=allow_cone)

    # select list: expand *, resolve, type, name
    star_cols = star_columns if star_columns is not None else list(columns)
    items: list[tuple[Expr, Optional[str]]] = []
    for it in ast.select:
        if it.star:
            items.extend((ColumnRef(c), None) for c in star_cols)
        else:
            items.append((it.expr, it.alias))

    aliases: dict[str, Expr] = {}
    resolved: list[tuple[Expr, Optional[str]]] = []
    for expr, alias in items:
        r = pl.resolve(expr)
        if alias is not None:
            if alias in aliases:
                raise PlanError(f"duplicate alias {alias}")
            aliases[alias] = r
        resolved.append((r, alias))

    def substitute_aliases(e: Expr) -> Expr:
        if isinstance(e, ColumnRef) and e.survey is None and e.name in aliases:
            return aliases[e.name]
        return e

    where = None
    if ast.where is not None:
        where = pl.resolve(ast.where)
        if pl.infer(where) != "bool":
            raise PlanError("WHERE must be a boolean predicate")
        if _has_aggregate(where):
            raise PlanError("aggregates are not allowed in WHERE")

    group_by = tuple(
        pl.resolve(substitute_aliases(g)) if not _is_alias_ref(g, aliases) else aliases[g.name]
        for g in ast.group_by
    )
    for g in group_by:
        if _has_aggregate(g):
            raise PlanError("aggregates are not allowed in GROUP BY")
        if pl.infer(g) == "bool":
            raise PlanError("GROUP BY keys must be scalar values")

    any_agg = any(_has_aggregate(r) for r, _ in resolved)
    grouped = bool(group_by) or any_agg

    out_cols: list[OutputColumn] = []
    seen_names: set[str] = set()
    for (r, alias), it in zip(resolved, _orig_items(ast, star_cols)):
        kind = pl.infer(r)
        aggregated = _has_aggregate(r)
        if grouped:
            _check_grouped(r, group_by, "select item")
        name = alias if alias else pretty_expr(it)
        if name in seen_names:
            raise PlanError(f"duplicate output column {name} (use AS to rename)")
        seen_names.add(name)
        if kind == "bool":
            kind = "int"
        out_cols.append(OutputColumn(name=name, kind=kind, expr=r, aggregated=aggregated))

    order_by = []
    for o in ast.order_by:
        oe = substitute_aliases(o.expr)
        oe = pl.resolve(oe)
        pl.infer(oe)
        if grouped:
            _check_grouped(oe, group_by, "ORDER BY term")
        order_by.append(OrderItem(oe, o.descending))

    # cone-scan extraction happens on the raw WHERE conjuncts
    scan: object = FullScan()
    if ast.where is not None:
        raw_parts = conjuncts(ast.where)
        for i, part in enumerate(raw_parts):
            if isinstance(part, FuncCall) and part.name == "CONE":
                ra0, dec0, r = pl.cone_constants(part)
                predicate = pl.rewrite_cone(part)
                scan = ConeScan(ra0, dec0, r, predicate)
                rest = raw_parts[:i] + raw_parts[i + 1 :]
                where = pl.resolve(conjoin(rest)) if rest else None
                break

    return Plan(
        scan=scan,
        where=where,
        select=tuple(out_cols),
        group_by=group_by,
        order_by=tuple(order_by),
        limit=ast.limit,
        grouped=grouped,
        table=table,
    )


def _is_alias_ref(e: Expr, aliases: dict) -> bool:
    return isinstance(e, ColumnRef) and e.survey is None and e.name in aliases


def _orig_items(ast: Query, star_cols: list[str]):
    """Original select expressions with * expanded, for output naming."""
    for it in ast.select:
        if it.star:
            for c in star_cols:
                yield ColumnRef(c)
        else:
            yield it.expr


def plan(ast: Query, schema) -> Plan:
    """Plan a node-level query against one catalog schema."""
    if not isinstance(ast.source, TableSource):
        raise PlanError("XMATCH queries must go to the federation portal")
    if ast.source.name != schema.survey_name:
        raise PlanError(
            f"unknown table {ast.source.name!r} (this node serves "
            f"{schema.survey_name!r})",
            ast.source.offset,
        )
    cols = catalog_columns(schema)
    return build_plan(ast, cols, table=schema.survey_name, survey=schema.survey_name)
