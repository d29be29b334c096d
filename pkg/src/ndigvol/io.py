"""CSV ingestion, run configuration, and deterministic output writers.

All outputs are plain CSV with a single provenance comment line on top
(`# ndigvol=<version> config=<hash> seed=<seed>`), fixed column schemas and
fixed float formatting, so identical inputs and seed reproduce identical
bytes.  Files are written atomically (temp-then-rename).
"""

from __future__ import annotations

import csv
import hashlib
import logging
import math
import os
import tempfile
from dataclasses import dataclass, field, fields
from datetime import date
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import __version__
from .estimate import ReturnSeries, RollingFitSeries
from .pricing import OptionChain
from .simulate import PathSet
from .volindex import VolatilitySeries

__all__ = [
    "PriceSeries",
    "RunConfig",
    "load_prices",
    "load_rates",
    "returns_from_prices",
    "write_rolling_fit_csv",
    "write_option_chain_csv",
    "write_volatility_csv",
    "write_paths_csv",
]

logger = logging.getLogger(__name__)

# shortest round-trip float text: exact on re-parse, stable across runs
_FLOAT_FMT = repr


@dataclass(frozen=True)
class PriceSeries:
    """Dated daily close prices; strictly increasing dates, positive closes."""

    dates: tuple[date, ...]
    closes: np.ndarray

    def __post_init__(self) -> None:
        c = np.asarray(self.closes, dtype=float)
        object.__setattr__(self, "closes", c)
        if len(self.dates) != len(c):
            raise ValueError("dates and closes must have the same length")
        if any(b <= a for a, b in zip(self.dates, self.dates[1:])):
            raise ValueError("dates must be strictly increasing")
        if np.any(c <= 0.0):
            raise ValueError("closes must be strictly positive")

    def __len__(self) -> int:
        return len(self.closes)


@dataclass(frozen=True)
class RunConfig:
    """Batch-run configuration; every field has a CLI/config-file override.

    Model parameter fields (mu3..lambda_u) are only consulted by commands
    that price or simulate from explicit parameters.
    """

    window: int = 1008
    step: int = 1
    annualization: float = 252.0
    damping: float = 0.40
    fft_n: int = 1024
    fft_dv: float = 0.25
    strike_lo: float = 0.65
    strike_hi: float = 1.70
    n_strikes: int = 40
    cf_v_max: float = 20.0
    cf_nodes: int = 101
    seed: int = 0
    rate: float = 0.02
    rate_file: str | None = None
    n_paths: int = 1000
    n_restarts: int = 5
    max_evals: int = 5000
    warm_start: bool = True
    mu3: float = 0.0
    sigma3: float = 0.05
    rho: float = 0.0
    lambda_t: float = 10.0
    lambda_u: float = 0.2
    s0: float = 100.0
    maturity: float = 30.0 / 365.0
    strike: float = 100.0
    x0: float = 0.0
    horizon_days: float = 30.0

    def config_hash(self) -> str:
        payload = ";".join(
            f"{f.name}={getattr(self, f.name)!r}" for f in fields(self)
        )
        return hashlib.sha256(payload.encode()).hexdigest()[:12]

    def provenance_line(self) -> str:
        return f"# ndigvol={__version__} config={self.config_hash()} seed={self.seed}"


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"cannot parse boolean from {text!r}")


def load_config_file(path: str | Path) -> dict[str, str]:
    """Flat key=value file; blank lines and #-comments ignored."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def config_from_mapping(overrides: dict[str, str]) -> RunConfig:
    kwargs: dict[str, object] = {}
    by_name = {f.name: f for f in fields(RunConfig)}
    for key, text in overrides.items():
        if key not in by_name:
            raise ValueError(f"unknown config key {key!r}")
        ftype = by_name[key].type
        if ftype == "int":
            kwargs[key] = int(text)
        elif ftype == "float":
            kwargs[key] = float(text)
        elif ftype == "bool":
            kwargs[key] = _parse_bool(text)
        else:
            kwargs[key] = text
    return RunConfig(**kwargs)  # type: ignore[arg-type]


def load_prices(path: str | Path) -> PriceSeries:
    """Read a `date,close` CSV with ISO-8601 dates.

    Rejects duplicate or unsorted dates and non-positive prices, naming the
    offending line; calendar gaps are permitted but counted and logged.
    """
    dates: list[date] = []
    closes: list[float] = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip().lower() for h in header[:2]] != ["date", "close"]:
            raise ValueError(f"{path}: expected header 'date,close', got {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) < 2:
                raise ValueError(f"{path}:{lineno}: expected 2 columns, got {len(row)}")
            try:
                d = date.fromisoformat(row[0].strip())
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: bad date {row[0]!r}: {exc}") from None
            try:
                c = float(row[1])
            except ValueError:
                raise ValueError(f"{path}:{lineno}: bad price {row[1]!r}") from None
            if not math.isfinite(c) or c <= 0.0:
                raise ValueError(f"{path}:{lineno}: price must be positive, got {row[1]}")
            if dates:
                if d == dates[-1]:
                    raise ValueError(f"{path}:{lineno}: duplicate date {d.isoformat()}")
                if d < dates[-1]:
                    raise ValueError(f"{path}:{lineno}: dates not sorted at {d.isoformat()}")
            dates.append(d)
            closes.append(c)
    if len(dates) < 2:
        raise ValueError(f"{path}: need at least 2 rows")
    gaps = sum(1 for a, b in zip(dates, dates[1:]) if (b - a).days > 1)
    if gaps:
        logger.warning("%s: %d calendar gaps in the date sequence", path, gaps)
    return PriceSeries(dates=tuple(dates), closes=np.array(closes))


def load_rates(path: str | Path) -> dict[date, float]:
    """Read a `date,rate_annual` CSV of annualized risk-free rates."""
    out: dict[date, float] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip().lower() for h in header[:2]] != ["date", "rate_annual"]:
            raise ValueError(f"{path}: expected header 'date,rate_annual', got {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                out[date.fromisoformat(row[0].strip())] = float(row[1])
            except (ValueError, IndexError) as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
    if not out:
        raise ValueError(f"{path}: empty rate file")
    return out


def returns_from_prices(prices: PriceSeries) -> ReturnSeries:
    """Daily log-returns; the first price row has no return."""
    return ReturnSeries(
        dates=tuple(prices.dates[1:]), returns=np.diff(np.log(prices.closes))
    )


def _fmt(x: float) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if math.isnan(x):
        return "nan"
    return _FLOAT_FMT(float(x))


def _atomic_write(path: str | Path, provenance: str, header: Sequence[str],
                  rows: Iterable[Sequence[object]]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(provenance + "\n")
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow(
                    [_fmt(x) if isinstance(x, (float, np.floating, bool, np.bool_)) else str(x) for x in row]
                )
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_rolling_fit_csv(path: str | Path, rolling: RollingFitSeries, config: RunConfig) -> None:
    header = ["window_end", "mu3", "sigma3", "rho", "lambda_T", "lambda_U", "objective", "converged"]
    rows = []
    for end, res in zip(rolling.window_end_dates, rolling.results):
        p = res.params
        rows.append([
            end.isoformat(), p.mu3, p.sigma3, p.rho, p.lambda_t, p.lambda_u,
            res.objective_value, int(res.converged),
        ])
    _atomic_write(path, config.provenance_line(), header, rows)


def write_option_chain_csv(path: str | Path, chain: OptionChain, config: RunConfig) -> None:
    header = ["maturity_years", "strike", "call", "put", "implied_vol", "moneyness", "bound_flag"]
    rows = []
    for i, tau in enumerate(chain.maturities):
        for j, k in enumerate(chain.strikes):
            rows.append([
                float(tau), float(k), float(chain.call_prices[i, j]),
                float(chain.put_prices[i, j]), float(chain.implied_vols[i, j]),
                float(chain.moneyness[j]), int(chain.bound_flags[i, j]),
            ])
    _atomic_write(path, config.provenance_line(), header, rows)


def write_volatility_csv(path: str | Path, series: VolatilitySeries, config: RunConfig) -> None:
    header = ["date", "kind", "value_percent"]
    rows = [
        [d.isoformat(), series.kind, float(v)]
        for d, v in zip(series.dates, series.values)
    ]
    _atomic_write(path, config.provenance_line(), header, rows)


def write_paths_csv(path: str | Path, paths: PathSet, config: RunConfig) -> None:
    header = ["path_id", "time", "x"]
    rows = []
    for pid in range(paths.n_paths):
        for t, x in zip(paths.times, paths.paths[pid]):
            rows.append([pid, float(t), float(x)])
    _atomic_write(path, config.provenance_line(), header, rows)
