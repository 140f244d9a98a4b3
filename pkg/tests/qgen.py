"""Seeded generator of random well-typed queries for conformance fuzzing."""

from __future__ import annotations

import numpy as np

from skyfed.query.nodes import (
    Binary,
    ColumnRef,
    FuncCall,
    Literal,
    OrderItem,
    Query,
    SelectItem,
    TableSource,
    Unary,
    pretty,
)

NUM_COLS = ["ra", "dec", "sigma_pos", "extent", "mag_g", "mag_r", "mag_i"]
CLASSES = ["STAR", "GALAXY", "QSO", "UNKNOWN"]
ARITH = ["+", "-", "*", "/"]
CMP = ["<", "<=", "=", "!=", ">=", ">"]


class QueryGen:
    def __init__(self, seed: int, table: str = "photoobj"):
        self.rng = np.random.default_rng(seed)
        self.table = table

    def lit(self, lo=-100.0, hi=100.0):
        # negative values must be unary minus over a positive literal,
        # matching what the parser can produce
        if self.rng.random() < 0.3:
            v = int(self.rng.integers(int(lo), int(hi) + 1))
            node = Literal(abs(v), "int")
        else:
            v = round(float(self.rng.uniform(lo, hi)), 3)
            node = Literal(abs(v), "float")
        return Unary("-", node) if v < 0 else node

    def flit(self, lo, hi, digits=2):
        v = round(float(self.rng.uniform(lo, hi)), digits)
        node = Literal(abs(v), "float")
        return Unary("-", node) if v < 0 else node

    def num_expr(self, depth: int):
        r = self.rng.random()
        if depth <= 0 or r < 0.35:
            return ColumnRef(str(self.rng.choice(NUM_COLS)))
        if r < 0.5:
            return self.lit()
        if r < 0.8:
            return Binary(
                str(self.rng.choice(ARITH)),
                self.num_expr(depth - 1),
                self.num_expr(depth - 1),
            )
        if r < 0.87:
            return FuncCall("ABS", (self.num_expr(depth - 1),))
        if r < 0.94:
            return FuncCall("FLOOR", (self.num_expr(depth - 1),))
        return FuncCall(
            "SEPARATION",
            (
                ColumnRef("ra"),
                ColumnRef("dec"),
                self.flit(0, 360),
                self.flit(-90, 90),
            ),
        )

    def bool_expr(self, depth: int):
        r = self.rng.random()
        if depth <= 0 or r < 0.45:
            if self.rng.random() < 0.2:
                return Binary(
                    str(self.rng.choice(["=", "!="])),
                    ColumnRef("class"),
                    Literal(str(self.rng.choice(CLASSES)), "text"),
                )
            if self.rng.random() < 0.12:
                return FuncCall(
                    "CONE",
                    (
                        self.flit(0, 360),
                        self.flit(-89, 89),
                        self.flit(0.5, 30.0),
                    ),
                )
            left = self.num_expr(1)
            # compare magnitudes against plausible thresholds half the time
            if self.rng.random() < 0.5 and isinstance(left, ColumnRef) and left.name.startswith("mag_"):
                right = self.flit(14, 24)
            else:
                right = self.num_expr(1)
            return Binary(str(self.rng.choice(CMP)), left, right)
        if r < 0.6:
            from skyfed.query.nodes import Unary

            return Unary("NOT", self.bool_expr(depth - 1))
        op = "AND" if self.rng.random() < 0.6 else "OR"
        return Binary(op, self.bool_expr(depth - 1), self.bool_expr(depth - 1))

    def agg_expr(self):
        name = str(self.rng.choice(["COUNT", "SUM", "MIN", "MAX", "AVG"]))
        if name == "COUNT" and self.rng.random() < 0.5:
            return FuncCall("COUNT", (), star=True)
        return FuncCall(name, (self.num_expr(1),))

    def query(self) -> Query:
        grouped = self.rng.random() < 0.4
        where = self.bool_expr(2) if self.rng.random() < 0.8 else None
        order_by: list = []
        if grouped:
            keys = []
            n_keys = int(self.rng.integers(1, 3))
            for _ in range(n_keys):
                if self.rng.random() < 0.3:
                    keys.append(ColumnRef("class"))
                else:
                    keys.append(
                        FuncCall(
                            "FLOOR",
                            (
                                Binary(
                                    "/",
                                    ColumnRef(str(self.rng.choice(NUM_COLS[:3]))),
                                    Literal(float(self.rng.integers(2, 30)), "float"),
                                ),
                            ),
                        )
                    )
            select = []
            group_refs = []
            for i, k in enumerate(keys):
                select.append(SelectItem(k, alias=f"k{i}"))
                group_refs.append(ColumnRef(f"k{i}"))
            n_aggs = int(self.rng.integers(1, 4))
            for i in range(n_aggs):
                select.append(SelectItem(self.agg_expr(), alias=f"a{i}"))
            if self.rng.random() < 0.7:
                pool = [f"k{i}" for i in range(len(keys))] + [
                    f"a{i}" for i in range(n_aggs)
                ]
                n_ord = int(self.rng.integers(1, min(3, len(pool)) + 1))
                picks = self.rng.choice(len(pool), size=n_ord, replace=False)
                order_by = [
                    OrderItem(ColumnRef(pool[int(p)]), descending=bool(self.rng.random() < 0.5))
                    for p in picks
                ]
            q = Query(
                select=tuple(select),
                source=TableSource(self.table),
                where=where,
                group_by=tuple(group_refs),
                order_by=tuple(order_by),
                limit=int(self.rng.integers(1, 50)) if self.rng.random() < 0.5 else None,
            )
            return q
        n_items = int(self.rng.integers(1, 4))
        select = [SelectItem(ColumnRef("object_id"), alias="oid")]
        for i in range(n_items):
            if self.rng.random() < 0.25:
                select.append(SelectItem(ColumnRef("class"), alias=f"c{i}"))
            else:
                select.append(SelectItem(self.num_expr(2), alias=f"c{i}"))
        if self.rng.random() < 0.6:
            pool = ["oid"] + [f"c{i}" for i in range(n_items)]
            n_ord = int(self.rng.integers(1, 3))
            picks = self.rng.choice(len(pool), size=min(n_ord, len(pool)), replace=False)
            order_by = [
                OrderItem(ColumnRef(pool[int(p)]), descending=bool(self.rng.random() < 0.5))
                for p in picks
            ]
        return Query(
            select=tuple(select),
            source=TableSource(self.table),
            where=where,
            group_by=(),
            order_by=tuple(order_by),
            limit=int(self.rng.integers(1, 200)) if self.rng.random() < 0.6 else None,
        )

    def query_text(self) -> str:
        return pretty(self.query())
