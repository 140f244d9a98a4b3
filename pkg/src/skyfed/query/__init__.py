"""A small SQL-like catalog query language: lexer, parser, planner, executor."""

from .tokens import Token, TokenType, tokenize
from .nodes import (
    Binary,
    ColumnRef,
    FuncCall,
    Literal,
    OrderItem,
    Query,
    SelectItem,
    TableSource,
    Unary,
    XMatchSource,
    pretty,
)
from .parser import parse
from .planner import ColumnInfo, ConeScan, FullScan, Plan, catalog_columns, plan
from .executor import ColumnTable, catalog_table, execute, run_plan

__all__ = [
    "Token",
    "TokenType",
    "tokenize",
    "Binary",
    "ColumnRef",
    "FuncCall",
    "Literal",
    "OrderItem",
    "Query",
    "SelectItem",
    "TableSource",
    "Unary",
    "XMatchSource",
    "pretty",
    "parse",
    "ColumnInfo",
    "ConeScan",
    "FullScan",
    "Plan",
    "catalog_columns",
    "plan",
    "ColumnTable",
    "catalog_table",
    "execute",
    "run_plan",
]
