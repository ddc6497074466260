"""Long-format CSV ingestion and plot-ready outputs."""

from __future__ import annotations

import csv
import json
import os
import re
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd

from .exceptions import DuplicateCell, ParseError, UnbalancedPanel
from .panel_data import PanelData, validate_panel

SCHEMA_VERSION = 1
CURVE_COLUMNS = ("coefficient", "u", "estimate", "variance", "lower", "upper")


@dataclass(frozen=True)
class LongCsvSchema:
    id: str = "id"
    time: str = "t"
    u: str = "u"
    y: str = "y"
    x: tuple[str, ...] | None = None   # None: every column named x<digits>
    delimiter: str = ","


def _regressor_columns(columns, schema: LongCsvSchema) -> list[str]:
    if schema.x is not None:
        return list(schema.x)
    found = [c for c in columns if re.fullmatch(r"x\d+", c)]
    return sorted(found, key=lambda c: int(c[1:]))


def load_long_csv(path, schema: LongCsvSchema | None = None) -> tuple[PanelData, dict]:
    """Read one row per (subject, period) and pivot to a balanced panel.

    Subjects and periods are ordered by their sorted ids. Returns the panel
    and a dict with the subject ids, time ids and regressor names.
    """
    schema = schema or LongCsvSchema()
    try:
        df = pd.read_csv(path, sep=schema.delimiter, dtype=str,
                         keep_default_na=False, encoding="utf-8")
    except FileNotFoundError as exc:
        raise ParseError(f"cannot read {path}: no such file") from exc
    except (OSError, UnicodeDecodeError, pd.errors.ParserError,
            pd.errors.EmptyDataError) as exc:
        raise ParseError(f"cannot parse {path}: {exc}") from exc

    xcols = _regressor_columns(df.columns, schema)
    needed = [schema.id, schema.time, schema.u, schema.y] + xcols
    missing = [c for c in needed if c not in df.columns]
    if missing:
        raise ParseError(f"missing columns {missing} in {path}")
    if not xcols:
        raise ParseError(f"no regressor columns found in {path}")

    values = {}
    for col in [schema.u, schema.y] + xcols:
        num = pd.to_numeric(df[col].str.strip(), errors="coerce")
        bad = np.flatnonzero(num.isna().to_numpy())
        if bad.size:
            # header is line 1
            raise ParseError(f"row {bad[0] + 2}: column {col!r} value "
                             f"{df[col].iloc[bad[0]]!r} is not numeric")
        # numpy's string conversion round-trips repr() output exactly
        values[col] = df[col].str.strip().to_numpy().astype(np.float64)

    ids = pd.Series([_coerce_id(v) for v in df[schema.id]], dtype=object)
    times = pd.Series([_coerce_id(v) for v in df[schema.time]], dtype=object)
    dup = pd.DataFrame({"i": ids, "t": times}).duplicated().to_numpy()
    if dup.any():
        row = int(np.flatnonzero(dup)[0])
        raise DuplicateCell(f"row {row + 2}: duplicate cell (id={ids.iloc[row]!r}, "
                            f"t={times.iloc[row]!r})")
    subj = sorted(ids.unique(), key=_sort_key)
    per = sorted(times.unique(), key=_sort_key)
    n, t = len(subj), len(per)
    if len(df) != n * t:
        present = set(zip(ids, times))
        for s in subj:
            for p in per:
                if (s, p) not in present:
                    raise UnbalancedPanel(f"missing cell (id={s!r}, t={p!r})")
    i_idx = pd.Index(subj).get_indexer(ids)
    t_idx = pd.Index(per).get_indexer(times)

    def grid(col):
        out = np.empty((n, t))
        out[i_idx, t_idx] = values[col]
        return out

    x = np.stack([grid(c) for c in xcols], axis=2)
    panel = validate_panel(grid(schema.y), x, grid(schema.u))
    return panel, {"subjects": subj, "periods": per, "regressors": xcols}


def _coerce_id(v: str):
    v = v.strip()
    try:
        return int(v)
    except ValueError:
        try:
            return float(v)
        except ValueError:
            return v


def _sort_key(v):
    return (0, v, "") if isinstance(v, (int, float)) else (1, 0, str(v))


def write_long_csv(path, panel: PanelData, schema: LongCsvSchema | None = None) -> None:
    schema = schema or LongCsvSchema()
    xnames = list(schema.x) if schema.x else [f"x{k + 1}" for k in range(panel.n_regressors)]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, delimiter=schema.delimiter)
        w.writerow([schema.id, schema.time, schema.u, schema.y] + xnames)
        for i in range(panel.n_subjects):
            for t in range(panel.n_periods):
                w.writerow([i + 1, t + 1, repr(float(panel.u[i, t])),
                            repr(float(panel.y[i, t]))]
                           + [repr(float(v)) for v in panel.x[i, t]])


def _fmt(v) -> str:
    return "" if v is None else repr(float(v))


def curve_rows(grid, estimates, bands=None):
    """Rows (coefficient, u, estimate, variance, lower, upper), coefficient 1-based."""
    rows = []
    for k in range(estimates.shape[0]):
        for g, u in enumerate(grid):
            if bands is None:
                extra = (None, None, None)
            else:
                extra = (bands.variance[k, g], bands.lower[k, g], bands.upper[k, g])
            rows.append((k + 1, _fmt(u), _fmt(estimates[k, g])) + tuple(map(_fmt, extra)))
    return rows


def write_csv_atomic(path, header, rows) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            w.writerows(rows)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json_atomic(path, payload) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_curves_csv(path) -> pd.DataFrame:
    return pd.read_csv(path, dtype={"coefficient": int}, float_precision="round_trip")
