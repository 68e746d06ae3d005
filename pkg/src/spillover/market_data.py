"""Price ingestion, cross-market alignment, log returns, and period splitting.

Input files are per-market CSVs with header ``date,close`` (ISO dates,
positive closes).  Markets are aligned on the intersection of their trading
dates, so days missing from any one market are dropped everywhere rather
than forward-filled.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path

import numpy as np

__all__ = [
    "DataError",
    "PricePanel",
    "ReturnMatrix",
    "PeriodSpec",
    "load_prices",
    "log_returns",
    "split_periods",
    "read_panel_csv",
    "write_panel_csv",
    "read_returns_csv",
    "write_returns_csv",
]

# >= 10 significant digits per the returns CSV contract
_FLOAT_FMT = "{:.12g}"


class DataError(ValueError):
    """Malformed input data, empty alignment, or misconfigured periods."""


def _check_dates(dates: tuple[date, ...]) -> None:
    for a, b in zip(dates, dates[1:]):
        if a >= b:
            raise DataError(f"dates must be strictly increasing, got {a} before {b}")


@dataclass(frozen=True)
class PricePanel:
    """Date-aligned closing prices for one or more markets.

    ``values[t, k]`` is the close of market ``markets[k]`` on ``dates[t]``.
    Every retained date has a finite, strictly positive price for every
    market.
    """

    dates: tuple[date, ...]
    markets: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.atleast_2d(np.asarray(self.values, dtype=float))
        object.__setattr__(self, "dates", tuple(self.dates))
        object.__setattr__(self, "markets", tuple(self.markets))
        object.__setattr__(self, "values", values)
        if values.shape != (len(self.dates), len(self.markets)):
            raise DataError(
                f"price matrix shape {values.shape} does not match "
                f"{len(self.dates)} dates x {len(self.markets)} markets"
            )
        if len(set(self.markets)) != len(self.markets):
            raise DataError("duplicate market names")
        _check_dates(self.dates)
        if not np.all(np.isfinite(values)) or np.any(values <= 0.0):
            raise DataError("all prices must be finite and strictly positive")

    @property
    def n_dates(self) -> int:
        return len(self.dates)

    def series(self, market: str) -> np.ndarray:
        """Price column for one market."""
        return self.values[:, self.markets.index(market)]


@dataclass(frozen=True)
class ReturnMatrix:
    """T x K matrix of daily log returns with date labels.

    ``period_tags``, when present, labels each row with the analysis period
    it belongs to; equal tags must form contiguous runs in time.
    """

    dates: tuple[date, ...]
    markets: tuple[str, ...]
    values: np.ndarray
    period_tags: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        values = np.atleast_2d(np.asarray(self.values, dtype=float))
        object.__setattr__(self, "dates", tuple(self.dates))
        object.__setattr__(self, "markets", tuple(self.markets))
        object.__setattr__(self, "values", values)
        if values.shape != (len(self.dates), len(self.markets)):
            raise DataError(
                f"return matrix shape {values.shape} does not match "
                f"{len(self.dates)} dates x {len(self.markets)} markets"
            )
        _check_dates(self.dates)
        if not np.all(np.isfinite(values)):
            raise DataError("all returns must be finite")
        if self.period_tags is not None:
            tags = tuple(self.period_tags)
            object.__setattr__(self, "period_tags", tags)
            if len(tags) != len(self.dates):
                raise DataError("period_tags length must match number of rows")
            seen: set[str] = set()
            prev: str | None = None
            for tag in tags:
                if tag != prev:
                    if tag in seen:
                        raise DataError(f"period tag {tag!r} is not contiguous")
                    seen.add(tag)
                    prev = tag

    @property
    def n_obs(self) -> int:
        return len(self.dates)

    @property
    def n_markets(self) -> int:
        return len(self.markets)

    def column(self, market: str) -> np.ndarray:
        """Return column for one market."""
        return self.values[:, self.markets.index(market)]


@dataclass(frozen=True)
class PeriodSpec:
    """Named inclusive date window used to split the sample."""

    name: str
    start: date
    end: date

    def __post_init__(self) -> None:
        if self.start > self.end:
            raise DataError(
                f"period {self.name!r}: start {self.start} is after end {self.end}"
            )

    def contains(self, d: date) -> bool:
        return self.start <= d <= self.end


def _read_price_csv(market: str, path: str | Path) -> dict[date, float]:
    path = Path(path)
    out: dict[date, float] = {}
    with open(path, newline="", encoding="utf-8-sig") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: file is empty") from None
        if [c.strip().lower() for c in header] != ["date", "close"]:
            raise DataError(f"{path}: expected header 'date,close', got {header!r}")
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 2:
                raise DataError(f"{path}:{lineno}: expected 2 fields, got {len(row)}")
            raw_date, raw_close = row[0].strip(), row[1].strip()
            try:
                d = date.fromisoformat(raw_date)
            except ValueError:
                raise DataError(f"{path}:{lineno}: unparseable date {raw_date!r}") from None
            try:
                close = float(raw_close)
            except ValueError:
                raise DataError(f"{path}:{lineno}: unparseable close {raw_close!r}") from None
            if not math.isfinite(close) or close <= 0.0:
                raise DataError(
                    f"{path}:{lineno}: close must be a positive finite number, got {raw_close}"
                )
            if d in out:
                raise DataError(f"{path}:{lineno}: duplicate date {d}")
            out[d] = close
    if not out:
        raise DataError(f"{path}: no data rows for market {market!r}")
    return out


def load_prices(files: list[tuple[str, str | Path]]) -> PricePanel:
    """Load per-market price CSVs and align them on common trading dates.

    Parameters
    ----------
    files
        ``(market_name, csv_path)`` pairs.  Each file must have header
        ``date,close`` with ISO-8601 dates and positive closes.

    Returns
    -------
    PricePanel
        Rows sorted by date, restricted to dates present in every file.
    """
    if not files:
        raise DataError("no input files")
    markets = tuple(name for name, _ in files)
    if len(set(markets)) != len(markets):
        raise DataError("duplicate market names in input files")
    series = [_read_price_csv(name, path) for name, path in files]
    common = set(series[0])
    for s in series[1:]:
        common &= set(s)
    if not common:
        raise DataError("markets share no common trading dates")
    dates = tuple(sorted(common))
    values = np.array([[s[d] for s in series] for d in dates], dtype=float)
    return PricePanel(dates=dates, markets=markets, values=values)


def log_returns(panel: PricePanel) -> ReturnMatrix:
    """Daily log returns ln(P_t / P_{t-1}); row t carries the later date."""
    if panel.n_dates < 2:
        raise DataError("need at least 2 dates to compute returns")
    values = np.diff(np.log(panel.values), axis=0)
    return ReturnMatrix(dates=panel.dates[1:], markets=panel.markets, values=values)


def split_periods(
    returns: ReturnMatrix, specs: list[PeriodSpec]
) -> dict[str, ReturnMatrix]:
    """Split a return matrix into named sub-periods.

    Rows outside every spec are dropped; each spec must capture at least one
    row.  Specs must not overlap.
    """
    if not specs:
        raise DataError("no period specs")
    names = [s.name for s in specs]
    if len(set(names)) != len(names):
        raise DataError("duplicate period names")
    ordered = sorted(specs, key=lambda s: s.start)
    for a, b in zip(ordered, ordered[1:]):
        if b.start <= a.end:
            raise DataError(f"periods {a.name!r} and {b.name!r} overlap")
    dates = np.array(returns.dates)
    out: dict[str, ReturnMatrix] = {}
    for spec in specs:
        mask = np.array([spec.contains(d) for d in returns.dates])
        if not mask.any():
            raise DataError(
                f"empty period: {spec.name!r} [{spec.start}..{spec.end}] captures no rows"
            )
        out[spec.name] = ReturnMatrix(
            dates=tuple(dates[mask]),
            markets=returns.markets,
            values=returns.values[mask],
            period_tags=(spec.name,) * int(mask.sum()),
        )
    return out


def write_panel_csv(panel: PricePanel, path: str | Path) -> None:
    """Write an aligned panel as ``date,<m1>,...,<mK>``."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("date",) + panel.markets)
        for d, row in zip(panel.dates, panel.values):
            writer.writerow([d.isoformat()] + [_FLOAT_FMT.format(v) for v in row])


def _read_wide_csv(path: str | Path) -> tuple[tuple[date, ...], tuple[str, ...], np.ndarray]:
    path = Path(path)
    with open(path, newline="", encoding="utf-8-sig") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: file is empty") from None
        if len(header) < 2 or header[0].strip().lower() != "date":
            raise DataError(f"{path}: expected header 'date,<market>,...', got {header!r}")
        markets = tuple(c.strip() for c in header[1:])
        dates: list[date] = []
        rows: list[list[float]] = []
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != len(header):
                raise DataError(
                    f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}"
                )
            try:
                dates.append(date.fromisoformat(row[0].strip()))
                rows.append([float(v) for v in row[1:]])
            except ValueError as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from None
    if not rows:
        raise DataError(f"{path}: no data rows")
    return tuple(dates), markets, np.array(rows, dtype=float)


def read_panel_csv(path: str | Path) -> PricePanel:
    """Read a panel written by :func:`write_panel_csv`."""
    dates, markets, values = _read_wide_csv(path)
    return PricePanel(dates=dates, markets=markets, values=values)


def write_returns_csv(returns: ReturnMatrix, path: str | Path) -> None:
    """Write returns as ``date,<m1>,...,<mK>`` with 12 significant digits."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("date",) + returns.markets)
        for d, row in zip(returns.dates, returns.values):
            writer.writerow([d.isoformat()] + [_FLOAT_FMT.format(v) for v in row])


def read_returns_csv(path: str | Path) -> ReturnMatrix:
    """Read a return matrix written by :func:`write_returns_csv`."""
    dates, markets, values = _read_wide_csv(path)
    return ReturnMatrix(dates=dates, markets=markets, values=values)
