"""File formats: incidence CSV, tabular CSV output and JSON run configs."""
from __future__ import annotations

import csv
import datetime as dt
import json
import os
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

import jsonschema
import numpy as np

from .distributions import GammaSpec
from .errors import ValidationError
from .estimation import IncidenceSeries
from .simulator import EpidemicParams

__all__ = [
    "ParseError",
    "RunConfig",
    "format_number",
    "load_run_config",
    "parse_incidence_csv",
    "read_csv",
    "sars_fixture_path",
    "write_csv",
]

SEED_ENV = "EPISTOCH_SEED"


class ParseError(ValidationError):
    def __init__(self, message: str, line: int | None = None) -> None:
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


def sars_fixture_path() -> Path:
    """Synthetic SARS-like incidence series shipped with the package."""
    return Path(str(resources.files("epistoch") / "data" / "sars_synthetic.csv"))


def _parse_count(text: str, line: int) -> int:
    try:
        value = int(text.strip())
    except ValueError:
        raise ParseError(f"case count {text!r} is not an integer", line) from None
    if value < 0:
        raise ParseError(f"negative case count {value}", line)
    return value


def parse_incidence_csv(path: str | os.PathLike) -> IncidenceSeries:
    """Read ``day,cases`` or ``date,cases`` rows into a gap-filled series.

    Dates are mapped to day offsets from the first row; days missing from
    the file get zero cases.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ParseError("empty file", 1)
    header = [h.strip().lower() for h in rows[0]]
    if header not in (["day", "cases"], ["date", "cases"]):
        raise ParseError(f"expected header 'day,cases' or 'date,cases', got {rows[0]!r}", 1)
    dated = header[0] == "date"

    start: dt.date | None = None
    offsets: list[int] = []
    counts: list[int] = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != 2:
            raise ParseError(f"expected 2 fields, got {len(row)}", lineno)
        key, value = row[0].strip(), row[1]
        if dated:
            try:
                day = dt.date.fromisoformat(key)
            except ValueError:
                raise ParseError(f"bad ISO date {key!r}", lineno) from None
            if start is None:
                start = day
            offset = (day - start).days
        else:
            try:
                offset = int(key)
            except ValueError:
                raise ParseError(f"day index {key!r} is not an integer", lineno) from None
            if offset < 0:
                raise ParseError(f"negative day index {offset}", lineno)
        if offsets and offset == offsets[-1]:
            raise ParseError(f"duplicate day {key}", lineno)
        if offsets and offset < offsets[-1]:
            raise ParseError(f"day {key} is out of order", lineno)
        offsets.append(offset)
        counts.append(_parse_count(value, lineno))
    if not offsets:
        raise ParseError("no data rows")

    cases = np.zeros(offsets[-1] + 1, dtype=np.int64)
    cases[offsets] = counts
    return IncidenceSeries(cases, start)


def format_number(x) -> str:
    """Shortest text that reads back to the same value."""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def write_csv(path: str | os.PathLike, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_number(v) for v in row])
    return path


def read_csv(path: str | os.PathLike) -> tuple[list[str], list[list]]:
    """Read a table written by :func:`write_csv`; numeric cells become floats."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = []
        for row in reader:
            parsed = []
            for cell in row:
                try:
                    parsed.append(float(cell))
                except ValueError:
                    parsed.append(cell)
            rows.append(parsed)
    return header, rows


# --------------------------------------------------------------------------
# run configuration

_PERIOD = {
    "type": "object",
    "properties": {
        "mean": {"type": "number", "minimum": 0},
        "cv": {"type": "number", "minimum": 0},
    },
    "required": ["mean"],
    "additionalProperties": False,
}

_BASE = {
    "n": {"type": "integer", "minimum": 2},
    "k": {"type": "integer", "minimum": 1},
    "r0": {"type": "number", "exclusiveMinimum": 0},
    "latent": _PERIOD,
    "infectious": _PERIOD,
    "seed": {"type": "integer", "minimum": 0},
}

SCHEMAS = {
    "simulate": {
        "type": "object",
        "properties": dict(_BASE),
        "required": ["n", "k", "r0", "latent", "infectious", "seed"],
        "additionalProperties": False,
    },
    "replicate": {
        "type": "object",
        "properties": dict(_BASE, reps={"type": "integer", "minimum": 1},
                           workers={"type": "integer", "minimum": 1}),
        "required": ["n", "k", "r0", "latent", "infectious", "seed", "reps"],
        "additionalProperties": False,
    },
}


class RunConfig:
    """Validated parameters for ``simulate`` / ``replicate``."""

    def __init__(self, params: EpidemicParams, seed: int, reps: int = 1, workers: int = 1) -> None:
        self.params = params
        self.seed = seed
        self.reps = reps
        self.workers = workers

    @classmethod
    def from_dict(cls, doc: dict, kind: str) -> RunConfig:
        try:
            jsonschema.validate(doc, SCHEMAS[kind])
        except jsonschema.ValidationError as exc:
            where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
            raise ValidationError(f"config {where}: {exc.message}") from None
        params = EpidemicParams(
            n=doc["n"], k=doc["k"], r0=float(doc["r0"]),
            latent=GammaSpec(float(doc["latent"]["mean"]), float(doc["latent"].get("cv", 0.0))),
            infectious=GammaSpec(float(doc["infectious"]["mean"]),
                                 float(doc["infectious"].get("cv", 0.0))),
        )
        seed = doc["seed"]
        env = os.environ.get(SEED_ENV)
        if env is not None:
            try:
                seed = int(env)
            except ValueError:
                raise ValidationError(f"{SEED_ENV} must be an integer, got {env!r}") from None
        return cls(params, seed, doc.get("reps", 1), doc.get("workers", 1))


def load_run_config(path: str | os.PathLike, kind: str) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON ({exc})") from None
    except OSError as exc:
        raise ValidationError(f"cannot read config {path}: {exc}") from None
    return RunConfig.from_dict(doc, kind)
