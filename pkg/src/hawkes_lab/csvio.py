"""CSV codecs. Floats are written with ``repr`` (shortest round-trip form)."""

from __future__ import annotations

import csv
import io
from pathlib import Path

import numpy as np

from .chains import RegimePath
from .config import atomic_write
from .errors import ConfigNotFoundError, ValidationError


def _fmt(x) -> str:
    return repr(float(x))


def _write_rows(path, header, rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    atomic_write(path, buf.getvalue())


def _read(path) -> tuple[list[str], list[list[str]]]:
    path = Path(path)
    if not path.is_file():
        raise ConfigNotFoundError(f"input file not found: {path}")
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValidationError(f"{path} is empty")
    return [h.strip() for h in rows[0]], rows[1:]


def _column(header, rows, name, path, required=True):
    if name not in header:
        if required:
            raise ValidationError(f"{path}: missing column {name!r}")
        return None
    j = header.index(name)
    return [r[j].strip() if j < len(r) else "" for r in rows]


def write_events(path, events) -> None:
    regs = events.regimes
    rows = ((_fmt(t), "" if regs is None else str(int(regs[i]))) for i, t in enumerate(events.times))
    _write_rows(path, ["time", "regime"], rows)


def read_events(path):
    """Return ``(times, regimes or None)`` from a CSV with a ``time`` column."""
    header, rows = _read(path)
    times = np.array([float(v) for v in _column(header, rows, "time", path)])
    if times.size and np.any(np.diff(times) <= 0):
        raise ValidationError(f"{path}: times must be strictly increasing")
    col = _column(header, rows, "regime", path, required=False)
    regimes = None
    if col is not None and any(col):
        regimes = np.array([int(v) for v in col], dtype=np.int64)
    return times, regimes


def write_price_path(path, price_path) -> None:
    rows = zip(map(_fmt, price_path.events.times), map(_fmt, price_path.increments), map(_fmt, price_path.prices))
    _write_rows(path, ["time", "increment", "price"], rows)


def read_prices(path):
    header, rows = _read(path)
    times = np.array([float(v) for v in _column(header, rows, "time", path)])
    prices = np.array([float(v) for v in _column(header, rows, "price", path)])
    return times, prices


def write_regime_path(path, regime_path: RegimePath) -> None:
    _write_rows(path, ["time", "regime"], ((_fmt(t), str(int(s))) for t, s in zip(regime_path.times, regime_path.states)))


def read_regime_path(path, horizon: float) -> RegimePath:
    header, rows = _read(path)
    times = np.array([float(v) for v in _column(header, rows, "time", path)])
    states = np.array([int(v) for v in _column(header, rows, "regime", path)], dtype=np.int64)
    if times.size == 0 or times[0] != 0.0:
        raise ValidationError(f"{path}: regime path must start at time 0")
    return RegimePath(times, states, float(horizon))


def write_column(path, name, values) -> None:
    _write_rows(path, ["index", name], ((str(i), _fmt(v)) for i, v in enumerate(values)))


def write_states(path, states) -> None:
    _write_rows(path, ["state"], ([str(int(s))] for s in states))


def report_row_csv(flat: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(list(flat))
    w.writerow([_fmt(v) if isinstance(v, float) else v for v in flat.values()])
    return buf.getvalue()
