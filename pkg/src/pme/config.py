"""Line-oriented ``key = value`` run configuration.

Strict parsing: unknown keys are rejected, values are validated before any
computation starts, and every constraint violation raises ConfigError (CLI
exit code 2).  The initial datum is one of ``log-growth(b)``, ``bounded(B)``
or ``table(path.csv)``; tables are two-column CSV ``rho,value`` with a
header row, interpolated linearly onto the solver grid.
"""

from __future__ import annotations

import csv
import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import ConfigError
from .geometry import ModelManifold, make_manifold
from .xlog import (
    RadialDatum,
    TailDescriptor,
    bounded_profile,
    log_growth_profile,
)

KNOWN_KEYS = {
    "manifold",
    "dim",
    "c",
    "m",
    "u0",
    "R",
    "cells",
    "t_end",
    "boundary",
    "dt0",
    "dt_growth",
    "dt_max",
    "newton_tol",
    "newton_max_iter",
    "norm_r",
    "snapshot_stride",
    # barrier-dirichlet boundary parameters
    "barrier_a",
    "barrier_r",
    "barrier_T",
    "barrier_delta",
    # blow-up specific knobs
    "blowup_threshold",
    "blowup_max_stages",
    "steps_per_stage",
}

_U0_RE = re.compile(r"^(log-growth|bounded|table)\(([^)]*)\)$")


def parse_config(path) -> dict:
    """Parse a config file into a {key: string} dict (strict keys)."""
    text = Path(path).read_text()
    out: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in KNOWN_KEYS:
            raise ConfigError(f"{path}:{lineno}: unknown key '{key}'")
        if key in out:
            raise ConfigError(f"{path}:{lineno}: duplicate key '{key}'")
        out[key] = value
    return out


def _get_float(cfg: dict, key: str, default=None, positive=False) -> Optional[float]:
    if key not in cfg:
        if default is None:
            raise ConfigError(f"missing required key '{key}'")
        return default
    try:
        val = float(cfg[key])
    except ValueError as exc:
        raise ConfigError(f"key '{key}': not a number ({cfg[key]!r})") from exc
    if positive and val <= 0:
        raise ConfigError(f"key '{key}' must be positive")
    if not math.isfinite(val):
        raise ConfigError(f"key '{key}' must be finite")
    return val


def _get_int(cfg: dict, key: str, default=None, minimum=None) -> int:
    if key not in cfg:
        if default is None:
            raise ConfigError(f"missing required key '{key}'")
        return default
    try:
        val = int(cfg[key])
    except ValueError as exc:
        raise ConfigError(f"key '{key}': not an integer ({cfg[key]!r})") from exc
    if minimum is not None and val < minimum:
        raise ConfigError(f"key '{key}' must be >= {minimum}")
    return val


def manifold_from(cfg: dict) -> ModelManifold:
    kind = cfg.get("manifold")
    if kind is None:
        raise ConfigError("missing required key 'manifold'")
    dim = _get_int(cfg, "dim", minimum=2)
    c = _get_float(cfg, "c", default=math.nan)
    c = None if math.isnan(c) else c
    if kind in ("quad-critical", "log-critical") and (c is None or c <= 0):
        raise ConfigError(f"manifold '{kind}' requires c > 0")
    try:
        manifold = make_manifold(kind, dim, c)
        manifold.validate()
    except ConfigError:
        raise
    except Exception as exc:
        raise ConfigError(str(exc)) from exc
    return manifold


def exponent_from(cfg: dict) -> float:
    m = _get_float(cfg, "m")
    if m <= 1.0:
        raise ConfigError("the PME exponent must satisfy m > 1")
    return m


@dataclass(frozen=True)
class DatumSpec:
    """Parsed ``u0``: canonical family or a sampled table."""

    kind: str  # log-growth | bounded | table
    amplitude: float = 0.0
    table_rho: Optional[np.ndarray] = None
    table_values: Optional[np.ndarray] = None

    def profile(self, m: float):
        if self.kind == "log-growth":
            return log_growth_profile(self.amplitude, m)
        if self.kind == "bounded":
            return bounded_profile(self.amplitude)

        def interp(rho):
            return np.interp(rho, self.table_rho, self.table_values)

        return interp

    def datum(self, m: float, rho) -> RadialDatum:
        rho = np.asarray(rho, dtype=float)
        values = self.profile(m)(rho)
        tail: Optional[TailDescriptor] = None
        if self.kind == "log-growth":
            start = max(float(np.e), 2.0)
            if rho[-1] >= start:
                tail = TailDescriptor("log-growth", self.amplitude, start, m=m)
        elif self.kind == "bounded":
            tail = TailDescriptor("bounded", self.amplitude, float(rho[0]))
        return RadialDatum(rho, values, tail=tail)


def datum_from(cfg: dict) -> DatumSpec:
    raw = cfg.get("u0")
    if raw is None:
        raise ConfigError("missing required key 'u0'")
    match = _U0_RE.match(raw.strip())
    if not match:
        raise ConfigError(
            f"u0 must be log-growth(b), bounded(B) or table(path); got {raw!r}"
        )
    kind, arg = match.group(1), match.group(2).strip()
    if kind == "table":
        path = Path(arg)
        if not path.exists():
            raise ConfigError(f"u0 table file not found: {path}")
        rho, vals = _read_table(path)
        return DatumSpec(kind="table", table_rho=rho, table_values=vals)
    try:
        amp = float(arg)
    except ValueError as exc:
        raise ConfigError(f"u0 amplitude is not a number: {arg!r}") from exc
    if amp < 0:
        raise ConfigError("u0 amplitude must be nonnegative")
    return DatumSpec(kind=kind, amplitude=amp)


def _read_table(path: Path):
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip().lower() for h in header[:2]] != ["rho", "value"]:
            raise ConfigError(f"{path}: table needs a 'rho,value' header row")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                rows.append((float(row[0]), float(row[1])))
            except (ValueError, IndexError) as exc:
                raise ConfigError(f"{path}:{lineno}: bad table row {row!r}") from exc
    if len(rows) < 2:
        raise ConfigError(f"{path}: table needs at least two rows")
    rho = np.array([r[0] for r in rows])
    vals = np.array([r[1] for r in rows])
    if np.any(np.diff(rho) <= 0):
        raise ConfigError(f"{path}: table rho column must be strictly increasing")
    return rho, vals
