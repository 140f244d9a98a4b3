"""AST node types and the canonical pretty printer.

Nodes compare by structure (offsets are excluded), so
parse(pretty(parse(q))) == parse(q) is the printer's contract.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

Expr = Union["Literal", "ColumnRef", "Unary", "Binary", "FuncCall"]


@dataclass(frozen=True)
class Literal:
    value: object  # int | float | str
    kind: str  # int | float | text
    offset: int = field(default=-1, compare=False)


@dataclass(frozen=True)
class ColumnRef:
    name: str
    survey: Optional[str] = None
    offset: int = field(default=-1, compare=False)

    @property
    def qualified(self) -> str:
        return f"{self.survey}.{self.name}" if self.survey else self.name


@dataclass(frozen=True)
class Unary:
    op: str  # "-" | "NOT"
    operand: Expr
    offset: int = field(default=-1, compare=False)


@dataclass(frozen=True)
class Binary:
    op: str  # + - * / < <= = != >= > AND OR
    left: Expr
    right: Expr
    offset: int = field(default=-1, compare=False)


@dataclass(frozen=True)
class FuncCall:
    name: str  # uppercased
    args: tuple
    star: bool = False  # COUNT(*)
    offset: int = field(default=-1, compare=False)


@dataclass(frozen=True)
class SelectItem:
    expr: Optional[Expr]  # None for a bare *
    alias: Optional[str] = None
    star: bool = False


@dataclass(frozen=True)
class TableSource:
    name: str
    offset: int = field(default=-1, compare=False)


@dataclass(frozen=True)
class XMatchSource:
    surveys: tuple
    k: Optional[float] = None
    max_radius_arcsec: Optional[float] = None
    mode: Optional[str] = None  # "all" | "best"
    offset: int = field(default=-1, compare=False)


@dataclass(frozen=True)
class OrderItem:
    expr: Expr
    descending: bool = False


@dataclass(frozen=True)
class Query:
    select: tuple  # of SelectItem
    source: Union[TableSource, XMatchSource]
    where: Optional[Expr] = None
    group_by: tuple = ()
    order_by: tuple = ()  # of OrderItem
    limit: Optional[int] = None


# -- pretty printer ------------------------------------------------------------

_PREC = {
    "OR": 1,
    "AND": 2,
    "NOT": 3,
    "<": 4,
    "<=": 4,
    "=": 4,
    "!=": 4,
    ">=": 4,
    ">": 4,
    "+": 5,
    "-": 5,
    "*": 6,
    "/": 6,
    "neg": 7,
}


def _prec(e: Expr) -> int:
    if isinstance(e, Binary):
        return _PREC[e.op]
    if isinstance(e, Unary):
        return _PREC["NOT"] if e.op == "NOT" else _PREC["neg"]
    return 9


def _quote_text(s: str) -> str:
    return "'" + s.replace("'", "''") + "'"


def pretty_expr(e: Expr) -> str:
    if isinstance(e, Literal):
        if e.kind == "text":
            return _quote_text(e.value)
        if e.kind == "float":
            return repr(e.value)
        return str(e.value)
    if isinstance(e, ColumnRef):
        return e.qualified
    if isinstance(e, Unary):
        inner = pretty_expr(e.operand)
        me = _prec(e)
        if _prec(e.operand) < me:
            inner = f"({inner})"
        return f"NOT {inner}" if e.op == "NOT" else f"-{inner}"
    if isinstance(e, Binary):
        me = _PREC[e.op]
        left = pretty_expr(e.left)
        right = pretty_expr(e.right)
        # left-associative: parenthesize the right child at equal precedence
        if _prec(e.left) < me:
            left = f"({left})"
        if _prec(e.right) <= me:
            right = f"({right})"
        return f"{left} {e.op} {right}"
    if isinstance(e, FuncCall):
        if e.star:
            return f"{e.name}(*)"
        return f"{e.name}({', '.join(pretty_expr(a) for a in e.args)})"
    raise TypeError(f"not an expression: {e!r}")


def pretty(q: Query) -> str:
    """Canonical single-line text whose parse equals the input AST."""
    items = []
    for it in q.select:
        if it.star:
            items.append("*")
        elif it.alias:
            items.append(f"{pretty_expr(it.expr)} AS {it.alias}")
        else:
            items.append(pretty_expr(it.expr))
    parts = ["SELECT " + ", ".join(items)]
    if isinstance(q.source, TableSource):
        parts.append(f"FROM {q.source.name}")
    else:
        src = f"FROM XMATCH({', '.join(q.source.surveys)})"
        opts = []
        if q.source.k is not None:
            opts.append(f"k = {repr(q.source.k)}")
        if q.source.max_radius_arcsec is not None:
            opts.append(f"max_radius = {repr(q.source.max_radius_arcsec)}")
        if q.source.mode is not None:
            opts.append(f"mode = {q.source.mode}")
        if opts:
            src += " WITH " + ", ".join(opts)
        parts.append(src)
    if q.where is not None:
        parts.append("WHERE " + pretty_expr(q.where))
    if q.group_by:
        parts.append("GROUP BY " + ", ".join(pretty_expr(g) for g in q.group_by))
    if q.order_by:
        terms = [
            pretty_expr(o.expr) + (" DESC" if o.descending else "") for o in q.order_by
        ]
        parts.append("ORDER BY " + ", ".join(terms))
    if q.limit is not None:
        parts.append(f"LIMIT {q.limit}")
    return " ".join(parts)


def walk(e: Expr):
    """Yield e and every sub-expression."""
    yield e
    if isinstance(e, Unary):
        yield from walk(e.operand)
    elif isinstance(e, Binary):
        yield from walk(e.left)
        yield from walk(e.right)
    elif isinstance(e, FuncCall):
        for a in e.args:
            yield from walk(a)


def conjuncts(e: Optional[Expr]) -> list:
    """Split a boolean expression on top-level ANDs."""
    if e is None:
        return []
    if isinstance(e, Binary) and e.op == "AND":
        return conjuncts(e.left) + conjuncts(e.right)
    return [e]


def conjoin(parts: list) -> Optional[Expr]:
    out = None
    for p in parts:
        out = p if out is None else Binary("AND", out, p)
    return out
