"""Vectorized plan execution over immutable columnar data.

Numeric values ride in float64 arrays with NaN as NULL; boolean predicates use
Kleene three-valued logic encoded as 0 / 1 / NaN. WHERE keeps rows whose
predicate is exactly true. Division by zero yields a row-level NULL and bumps
a warning counter instead of aborting.
"""

from __future__ import annotations

import math
import time
import weakref
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from ..core import EquatorialPosition, ResultTable, separation_deg
from ..errors import PlanError, QueryTimeout, RowCapExceeded
from ..zones import ConeQuery, ZoneIndex
from .nodes import Binary, ColumnRef, Expr, FuncCall, Literal, Unary
from .planner import AGGREGATES, ConeScan, Plan

DEFAULT_ROW_CAP = 100_000


@dataclass
class ColumnTable:
    """Columnar view the executor scans: name -> (kind, array).

    Numeric columns are float64 (NaN = NULL), text columns are object arrays.
    tiebreak holds exact per-row values (object ids, or join order) used as
    the final deterministic sort key.
    """

    n: int
    cols: dict
    tiebreak: np.ndarray
    ra_col: Optional[str] = "ra"  # position columns backing a cone scan
    dec_col: Optional[str] = "dec"


@dataclass
class ExecStats:
    div_by_zero: int = 0


_catalog_tables: "weakref.WeakKeyDictionary" = weakref.WeakKeyDictionary()


def catalog_table(catalog) -> ColumnTable:
    """Columnar form of a catalog, cached per catalog instance."""
    tbl = _catalog_tables.get(catalog)
    if tbl is not None:
        return tbl
    n = len(catalog.objects)
    object_id = np.empty(n, dtype=np.float64)
    tiebreak = np.empty(n, dtype=np.uint64)
    sigma = np.empty(n, dtype=np.float64)
    extent = np.full(n, np.nan)
    klass = np.empty(n, dtype=object)
    mags = {b: np.full(n, np.nan) for b in catalog.schema.bands}
    for i, o in enumerate(catalog.objects):
        object_id[i] = o.object_id
        tiebreak[i] = o.object_id
        sigma[i] = o.sigma_pos_arcsec
        if o.extent_arcsec is not None:
            extent[i] = o.extent_arcsec
        klass[i] = o.obj_class.name
        for b, m in o.mags.items():
            mags[b][i] = m
    cols = {
        "object_id": ("int", object_id),
        "ra": ("float", catalog.ra.copy()),
        "dec": ("float", catalog.dec.copy()),
        "sigma_pos": ("float", sigma),
        "class": ("text", klass),
        "extent": ("float", extent),
    }
    for b in catalog.schema.bands:
        cols[f"mag_{b}"] = ("float", mags[b])
    tbl = ColumnTable(n=n, cols=cols, tiebreak=tiebreak)
    _catalog_tables[catalog] = tbl
    return tbl


# -- expression evaluation ----------------------------------------------------

_CMP = {
    "<": np.less,
    "<=": np.less_equal,
    "=": np.equal,
    "!=": np.not_equal,
    ">=": np.greater_equal,
    ">": np.greater,
}


def _text_null_mask(v):
    if isinstance(v, np.ndarray):
        return np.fromiter((x is None for x in v), dtype=bool, count=len(v))
    return v is None


def _num_null_mask(v):
    return np.isnan(v)


def eval_vec(e: Expr, get_col: Callable[[str], tuple], stats: ExecStats):
    """Evaluate an expression to ('n'|'t'|'b', data); data may be a scalar or
    an array over the current row set."""
    if isinstance(e, Literal):
        if e.kind == "text":
            return ("t", e.value)
        return ("n", float(e.value))
    if isinstance(e, ColumnRef):
        kind, arr = get_col(e.name)
        return ("t" if kind == "text" else "n", arr)
    if isinstance(e, Unary):
        cls, v = eval_vec(e.operand, get_col, stats)
        if e.op == "-":
            return ("n", -v)
        return ("b", 1.0 - v)  # NOT: NaN stays NaN
    if isinstance(e, Binary):
        if e.op in ("AND", "OR"):
            _, a = eval_vec(e.left, get_col, stats)
            _, b = eval_vec(e.right, get_col, stats)
            a = np.asarray(a, dtype=np.float64)
            b = np.asarray(b, dtype=np.float64)
            if e.op == "AND":
                out = np.minimum(a, b)  # true & unknown -> unknown
                false_mask = (a == 0.0) | (b == 0.0)
                out = np.where(false_mask, 0.0, out)
            else:
                out = np.maximum(a, b)
                true_mask = (a == 1.0) | (b == 1.0)
                out = np.where(true_mask, 1.0, out)
            return ("b", out)
        if e.op in _CMP:
            lc, a = eval_vec(e.left, get_col, stats)
            rc, b = eval_vec(e.right, get_col, stats)
            if lc == "t" or rc == "t":
                res = _CMP[e.op](a, b)
                out = np.asarray(res, dtype=np.float64)
                null = _text_null_mask(a) | _text_null_mask(b)
                out = np.where(null, np.nan, out)
                return ("b", out)
            res = _CMP[e.op](a, b).astype(np.float64)
            null = _num_null_mask(a) | _num_null_mask(b)
            out = np.where(null, np.nan, res)
            return ("b", out)
        # arithmetic
        _, a = eval_vec(e.left, get_col, stats)
        _, b = eval_vec(e.right, get_col, stats)
        if e.op == "+":
            return ("n", a + b)
        if e.op == "-":
            return ("n", a - b)
        if e.op == "*":
            return ("n", a * b)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            out = np.asarray(np.divide(a, b), dtype=np.float64)
        zero = np.asarray(b == 0.0)
        n_zero = int(np.count_nonzero(zero)) if zero.shape else int(zero) * (
            out.shape[0] if out.shape else 1
        )
        if n_zero:
            stats.div_by_zero += n_zero
            out = np.where(zero, np.nan, out)
        out = np.where(np.isinf(out), np.nan, out)
        return ("n", out)
    if isinstance(e, FuncCall):
        if e.name == "FLOOR":
            _, v = eval_vec(e.args[0], get_col, stats)
            return ("n", np.floor(v))
        if e.name == "ABS":
            _, v = eval_vec(e.args[0], get_col, stats)
            return ("n", np.abs(v))
        if e.name == "SEPARATION":
            vals = [eval_vec(a, get_col, stats)[1] for a in e.args]
            return ("n", separation_deg(vals[0], vals[1], vals[2], vals[3]))
        raise PlanError(f"cannot execute function {e.name}")
    raise PlanError(f"cannot execute expression {e!r}")


def _reduce(name: str, cls: str, v: np.ndarray):
    """One aggregate over one group array; NULL-ignoring, empty -> NULL
    (COUNT -> 0)."""
    if name == "COUNT":
        if cls == "t":
            return int(np.count_nonzero(~_text_null_mask(v)))
        return int(np.count_nonzero(~np.isnan(np.asarray(v, dtype=np.float64))))
    if cls == "t":
        vals = [x for x in v if x is not None]
        if not vals:
            return None
        return min(vals) if name == "MIN" else max(vals)
    v = np.asarray(v, dtype=np.float64)
    valid = ~np.isnan(v)
    k = int(np.count_nonzero(valid))
    if k == 0:
        return None
    # fsum: exactly-rounded, order-independent sums keep results bit-stable
    if name == "SUM":
        return math.fsum(v[valid].tolist())
    if name == "AVG":
        return math.fsum(v[valid].tolist()) / k
    if name == "MIN":
        return float(np.min(v[valid]))
    return float(np.max(v[valid]))


def _pyvalue(kind: str, cls: str, v):
    """Materialize one cell to a Python value (None for NULL)."""
    if cls == "t" or kind == "text":
        return None if v is None else str(v)
    f = float(v)
    if math.isnan(f):
        return None
    if kind == "int":
        return int(f)
    return f


# -- plan execution -------------------------------------------------------------


def _check_deadline(deadline):
    if deadline is not None and time.monotonic() > deadline:
        raise QueryTimeout("query exceeded its time budget")


def run_plan(
    plan: Plan,
    table: ColumnTable,
    index: Optional[ZoneIndex] = None,
    row_cap: int = DEFAULT_ROW_CAP,
    deadline: Optional[float] = None,
) -> ResultTable:
    t0 = time.perf_counter()
    stats = ExecStats()

    # scan
    residual = plan.where
    if isinstance(plan.scan, ConeScan):
        if index is not None:
            idx = index.cone_search(
                ConeQuery(
                    EquatorialPosition(plan.scan.ra_deg, plan.scan.dec_deg),
                    plan.scan.radius_deg,
                )
            )
        else:
            idx = np.arange(table.n, dtype=np.int64)
            residual = (
                plan.scan.predicate
                if residual is None
                else Binary("AND", plan.scan.predicate, residual)
            )
    else:
        idx = np.arange(table.n, dtype=np.int64)
    _check_deadline(deadline)

    slices: dict[str, tuple] = {}

    def get_col(name: str) -> tuple:
        got = slices.get(name)
        if got is None:
            kind, arr = table.cols[name]
            got = (kind, arr[idx])
            slices[name] = got
        return got

    if residual is not None:
        _, mask = eval_vec(residual, get_col, stats)
        mask = np.asarray(mask, dtype=np.float64)
        if mask.ndim == 0:
            mask = np.full(len(idx), float(mask))
        idx = idx[mask == 1.0]
        slices.clear()
    _check_deadline(deadline)

    tiebreak = table.tiebreak[idx]

    if plan.grouped:
        rows, order_keys = _run_grouped(plan, get_col, idx, stats, deadline)
    else:
        rows, order_keys = _run_plain(plan, get_col, idx, tiebreak, stats)
    _check_deadline(deadline)

    rows = _sort_rows(plan, rows, order_keys)
    if plan.limit is not None:
        rows = rows[: plan.limit]
    if len(rows) > row_cap:
        raise RowCapExceeded(f"result has {len(rows)} rows; cap is {row_cap}")

    out = ResultTable(
        columns=[(c.name, c.kind) for c in plan.select],
        rows=[r[0] for r in rows],
        elapsed_ms=(time.perf_counter() - t0) * 1e3,
    )
    return out


def _run_plain(plan: Plan, get_col, idx, tiebreak, stats):
    n = len(idx)
    col_vals = []
    for c in plan.select:
        cls, v = eval_vec(c.expr, get_col, stats)
        if not isinstance(v, np.ndarray):
            v = np.full(n, v, dtype=(object if cls == "t" else np.float64))
        col_vals.append((c.kind, cls, v))
    order_vals = []
    for o in plan.order_by:
        cls, v = eval_vec(o.expr, get_col, stats)
        if not isinstance(v, np.ndarray):
            v = np.full(n, v, dtype=(object if cls == "t" else np.float64))
        order_vals.append((cls, v))
    rows = []
    for i in range(n):
        cells = tuple(
            _pyvalue(kind, cls, v[i]) for kind, cls, v in col_vals
        )
        okeys = tuple(_pyvalue("float" if c == "n" else "text", c, v[i]) for c, v in order_vals)
        rows.append((cells, okeys, int(tiebreak[i])))
    return rows, len(plan.order_by)


def _group_key_cells(plan: Plan, get_col, n, stats):
    keys = []
    for g in plan.group_by:
        cls, v = eval_vec(g, get_col, stats)
        if not isinstance(v, np.ndarray):
            v = np.full(n, v, dtype=(object if cls == "t" else np.float64))
        keys.append((cls, v))
    return keys


def _run_grouped(plan: Plan, get_col, idx, stats: ExecStats, deadline):
    n = len(idx)
    key_vecs = _group_key_cells(plan, get_col, n, stats)

    groups: dict[tuple, list[int]] = {}
    if not plan.group_by:
        groups[()] = []  # a global aggregate yields one row even when empty
    for i in range(n):
        key = tuple(
            _pyvalue("float", "n", v[i]) if c == "n" else _pyvalue("text", "t", v[i])
            for c, v in key_vecs
        )
        groups.setdefault(key, []).append(i)

    # deterministic base order: ascending group key, NULLs last per key part
    def null_last(key):
        return tuple((p is None, p) for p in key)

    group_items = sorted(groups.items(), key=lambda kv: null_last(kv[0]))

    key_exprs = list(plan.group_by)

    def eval_in_group(e: Expr, gidx: np.ndarray, key: tuple):
        """Scalar value of e over one group."""
        for ki, ge in enumerate(key_exprs):
            if e == ge:
                return ("n" if key_vecs[ki][0] == "n" else "t", key[ki])
        if isinstance(e, FuncCall) and e.name in AGGREGATES:
            if e.star:
                return ("n", float(len(gidx)))
            cls, v = eval_vec(e.args[0], lambda nm: _slice_col(get_col, nm, gidx), stats)
            if not isinstance(v, np.ndarray):
                v = np.full(len(gidx), v, dtype=(object if cls == "t" else np.float64))
            red = _reduce(e.name, cls, v)
            if e.name == "COUNT":
                return ("n", float(red))
            if cls == "t":
                return ("t", red)
            return ("n", float("nan") if red is None else float(red))
        if isinstance(e, Literal):
            return ("t", e.value) if e.kind == "text" else ("n", float(e.value))
        if isinstance(e, Unary):
            c, v = eval_in_group(e.operand, gidx, key)
            if e.op == "-":
                return ("n", -_as_float(v))
            pv = _as_float(v)
            return ("n", float("nan") if math.isnan(pv) else 1.0 - pv)
        if isinstance(e, Binary):
            lc, a = eval_in_group(e.left, gidx, key)
            rc, b = eval_in_group(e.right, gidx, key)
            return _scalar_binary(e.op, lc, a, rc, b, stats)
        if isinstance(e, FuncCall):
            vals = [_as_float(eval_in_group(a, gidx, key)[1]) for a in e.args]
            if e.name == "FLOOR":
                return ("n", math.floor(vals[0]) if not math.isnan(vals[0]) else float("nan"))
            if e.name == "ABS":
                return ("n", abs(vals[0]))
            if e.name == "SEPARATION":
                return ("n", float(separation_deg(vals[0], vals[1], vals[2], vals[3])))
        raise PlanError(f"cannot evaluate {e!r} over a group")

    rows = []
    for gi, (key, members) in enumerate(group_items):
        if gi % 4096 == 0:
            _check_deadline(deadline)
        gidx = np.asarray(members, dtype=np.int64)
        cells = []
        for c in plan.select:
            cls, v = eval_in_group(c.expr, gidx, key)
            cells.append(_pyscalar(c.kind, cls, v))
        okeys = []
        for o in plan.order_by:
            cls, v = eval_in_group(o.expr, gidx, key)
            okeys.append(_pyscalar("float" if cls == "n" else "text", cls, v))
        rows.append((tuple(cells), tuple(okeys), null_last(key)))
    return rows, len(plan.order_by)


def _slice_col(get_col, name, gidx):
    kind, arr = get_col(name)
    return (kind, arr[gidx])


def _as_float(v) -> float:
    if v is None:
        return float("nan")
    return float(v)


def _pyscalar(kind, cls, v):
    if cls == "t":
        return None if v is None else str(v)
    f = _as_float(v)
    if math.isnan(f):
        return None
    return int(f) if kind == "int" else f


def _scalar_binary(op, lc, a, rc, b, stats: ExecStats):
    if op in ("AND", "OR"):
        fa, fb = _as_float(a), _as_float(b)
        if op == "AND":
            if fa == 0.0 or fb == 0.0:
                return ("n", 0.0)
            if math.isnan(fa) or math.isnan(fb):
                return ("n", float("nan"))
            return ("n", min(fa, fb))
        if fa == 1.0 or fb == 1.0:
            return ("n", 1.0)
        if math.isnan(fa) or math.isnan(fb):
            return ("n", float("nan"))
        return ("n", max(fa, fb))
    if op in _CMP:
        if lc == "t" or rc == "t":
            if a is None or b is None:
                return ("n", float("nan"))
            py = {"<": a < b, "<=": a <= b, "=": a == b, "!=": a != b, ">=": a >= b, ">": a > b}[op]
            return ("n", 1.0 if py else 0.0)
        fa, fb = _as_float(a), _as_float(b)
        if math.isnan(fa) or math.isnan(fb):
            return ("n", float("nan"))
        py = {"<": fa < fb, "<=": fa <= fb, "=": fa == fb, "!=": fa != fb, ">=": fa >= fb, ">": fa > fb}[op]
        return ("n", 1.0 if py else 0.0)
    fa, fb = _as_float(a), _as_float(b)
    if op == "+":
        return ("n", fa + fb)
    if op == "-":
        return ("n", fa - fb)
    if op == "*":
        return ("n", fa * fb)
    if fb == 0.0:
        if not math.isnan(fa):
            stats.div_by_zero += 1
        return ("n", float("nan"))
    out = fa / fb
    if math.isinf(out):
        out = float("nan")
    return ("n", out)


def _sort_rows(plan: Plan, rows, n_order_keys: int):
    """Stable multi-key sort: explicit ORDER BY keys first, then the
    deterministic tie-break (object id, or group key)."""
    rows = sorted(rows, key=lambda r: _tiebreak_key(r[2]))
    for pos in range(n_order_keys - 1, -1, -1):
        desc = plan.order_by[pos].descending
        if desc:
            rows.sort(key=lambda r: ((r[1][pos] is not None), _cmp_val(r[1][pos])), reverse=True)
        else:
            rows.sort(key=lambda r: ((r[1][pos] is None), _cmp_val(r[1][pos])))
    return rows


def _cmp_val(v):
    if v is None:
        return 0.0
    return v


def _tiebreak_key(tb):
    return tb


def execute(
    plan: Plan,
    catalog,
    index: Optional[ZoneIndex] = None,
    row_cap: int = DEFAULT_ROW_CAP,
    deadline: Optional[float] = None,
) -> ResultTable:
    """Execute a node-level plan over a catalog (+ its zone index)."""
    return run_plan(plan, catalog_table(catalog), index, row_cap, deadline)
