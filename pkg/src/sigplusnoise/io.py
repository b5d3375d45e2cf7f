"""Reading and writing datasets, sample files and JSON summaries.

Every float written to disk is formatted so that reading it back gives the
identical 64-bit value: CSV cells use 17 significant digits and JSON uses
Python's shortest round-trip representation.
"""

from __future__ import annotations

import csv
import json
import math
import os
from contextlib import contextmanager
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .model import PARAM_NAMES, HindcastDataset

SCHEMA_VERSION = 1
OUTPUT_DIR_ENV = "SIGPLUSNOISE_OUTPUT_DIR"
DEFAULT_OUTPUT_DIR = "sigplusnoise-out"
LOCK_NAME = ".sigplusnoise.lock"
REFERENCE_DATASET = "surrogate_nao.csv"
SAMPLE_COLUMNS = ("chain", "iter") + PARAM_NAMES


class DatasetParseError(ValueError):
    """Malformed dataset file.  ``line`` is 1-based; ``column`` is a header name or None."""

    def __init__(self, path, line: Optional[int], column: Optional[str], message: str):
        self.path = str(path)
        self.line = line
        self.column = column
        where = self.path
        if line is not None:
            where += f", line {line}"
        if column is not None:
            where += f", column '{column}'"
        super().__init__(f"{where}: {message}")


class OutputLockedError(RuntimeError):
    pass


def fmt(v) -> str:
    """Float with 17 significant digits, integers verbatim."""
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".17g")


# -- datasets ---------------------------------------------------------------

def _parse_float(text: str, path, line: int, column: str) -> float:
    cell = text.strip()
    if cell == "":
        raise DatasetParseError(path, line, column, "missing value")
    try:
        v = float(cell)
    except ValueError:
        raise DatasetParseError(path, line, column, f"non-numeric value {cell!r}") from None
    if not math.isfinite(v):
        raise DatasetParseError(path, line, column, f"non-finite value {cell!r}")
    return v


def load_dataset(path, format: str = "csv", min_years: int = 3,
                 min_members: int = 2) -> HindcastDataset:
    """Read a hindcast from CSV.

    The file needs a header ``year,obs,m1,...,mR``.  Lines starting with
    ``#`` before the header are provenance comments and are skipped.
    Rows may appear in any year order; they are sorted on load.
    """
    if format != "csv":
        raise ValueError(f"unsupported dataset format {format!r}")
    path = Path(path)
    if not path.is_file():
        raise DatasetParseError(path, None, None, "file not found")
    with open(path, newline="", encoding="utf-8") as fh:
        lines = fh.read().splitlines()

    start = 0
    while start < len(lines) and (lines[start].startswith("#") or not lines[start].strip()):
        start += 1
    if start == len(lines):
        raise DatasetParseError(path, None, None, "no header row")
    rows = list(csv.reader(lines[start:]))
    header = [h.strip() for h in rows[0]]
    hline = start + 1
    if len(header) < 3 or header[0].lower() != "year" or header[1].lower() != "obs":
        raise DatasetParseError(path, hline, None, "header must be 'year,obs,m1,...,mR'")
    members = header[2:]
    expected = [f"m{r}" for r in range(1, len(members) + 1)]
    if [m.lower() for m in members] != expected:
        raise DatasetParseError(path, hline, None,
                                f"member columns must be {','.join(expected)}")

    years, obs, ens, where = [], [], [], {}
    for k, row in enumerate(rows[1:]):
        line = hline + 1 + k
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise DatasetParseError(path, line, None,
                                    f"expected {len(header)} fields, found {len(row)}")
        y = _parse_float(row[0], path, line, header[0])
        if y != int(y):
            raise DatasetParseError(path, line, header[0], f"year {row[0].strip()!r} is not an integer")
        y = int(y)
        if y in where:
            raise DatasetParseError(path, line, header[0],
                                    f"duplicate year {y} (first on line {where[y]})")
        where[y] = line
        years.append(y)
        obs.append(_parse_float(row[1], path, line, header[1]))
        ens.append([_parse_float(c, path, line, header[2 + j]) for j, c in enumerate(row[2:])])

    if len(years) < min_years:
        raise DatasetParseError(path, None, None, f"need at least {min_years} years, found {len(years)}")
    if len(members) < min_members:
        raise DatasetParseError(path, hline, None,
                                f"need at least {min_members} members, found {len(members)}")
    order = np.argsort(years, kind="stable")
    return HindcastDataset(np.asarray(years, dtype=np.int64)[order],
                           np.asarray(obs)[order], np.asarray(ens)[order])


def read_provenance(path) -> dict:
    """``# key: value`` comment lines above the header of a dataset file."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.startswith("#"):
                break
            key, sep, val = line[1:].partition(":")
            if sep:
                out[key.strip()] = val.strip()
    return out


def write_dataset(data: HindcastDataset, path, provenance: Optional[dict] = None) -> Path:
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        for k, v in (provenance or {}).items():
            fh.write(f"# {k}: {v}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["year", "obs"] + [f"m{r}" for r in range(1, data.n_members + 1)])
        for t in range(data.n_years):
            w.writerow([fmt(data.years[t]), fmt(data.obs[t])] + [fmt(v) for v in data.ens[t]])
    return path


def reference_dataset_path() -> Path:
    """Path of the bundled surrogate NAO hindcast."""
    return Path(str(resources.files("sigplusnoise") / "data" / REFERENCE_DATASET))


def load_reference_dataset() -> HindcastDataset:
    return load_dataset(reference_dataset_path())


# -- sample files -----------------------------------------------------------

def write_samples(chains, path) -> Path:
    """One row per retained draw: chain, iter, the six parameters, s_1..s_N."""
    path = Path(path)
    N = chains.N
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(SAMPLE_COLUMNS) + [f"s_{t}" for t in range(1, N + 1)])
        for c in range(chains.n_chains):
            for i in range(chains.n_draws):
                row = [str(c), str(i)]
                row += [fmt(chains.draws[k][c, i]) for k in PARAM_NAMES]
                row += [fmt(v) for v in chains.signal[c, i]]
                w.writerow(row)
    return path


@dataclass
class SampleTable:
    draws: dict  # parameter -> (chains, draws)
    signal: np.ndarray  # (chains, draws, N)


def read_samples(path) -> SampleTable:
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    header = rows[0]
    if tuple(header[:len(SAMPLE_COLUMNS)]) != SAMPLE_COLUMNS:
        raise DatasetParseError(path, 1, None, "not a sample file")
    body = np.array(rows[1:], dtype=float)
    chain = body[:, 0].astype(int)
    C = chain.max() + 1
    S = body.shape[0] // C
    if S * C != body.shape[0]:
        raise DatasetParseError(path, None, None, "chains have unequal lengths")
    order = np.lexsort((body[:, 1], chain))
    body = body[order]
    draws = {k: body[:, 2 + j].reshape(C, S) for j, k in enumerate(PARAM_NAMES)}
    signal = body[:, 2 + len(PARAM_NAMES):].reshape(C, S, -1)
    return SampleTable(draws, signal)


# -- summaries and grids ----------------------------------------------------

def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        # JSON has no nan/inf
        return v if math.isfinite(v) else str(v)
    return obj


def write_json(summary: dict, path) -> Path:
    path = Path(path)
    doc = {"schema_version": SCHEMA_VERSION}
    doc.update(_jsonable(summary))
    path.write_text(json.dumps(doc, indent=2, allow_nan=False) + "\n", encoding="utf-8")
    return path


def read_json(path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def write_table(path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(header))
        for row in rows:
            w.writerow([v if isinstance(v, str) else fmt(v) for v in row])
    return path


# -- output directories -----------------------------------------------------

def default_output_dir() -> Path:
    return Path(os.environ.get(OUTPUT_DIR_ENV) or DEFAULT_OUTPUT_DIR)


@contextmanager
def output_lock(directory):
    """Create ``directory`` and hold an exclusive lock file in it."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    lock = directory / LOCK_NAME
    try:
        fd = os.open(lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise OutputLockedError(
            f"{directory} is in use by another run (remove {lock} if that run died)") from None
    try:
        os.write(fd, str(os.getpid()).encode())
        os.close(fd)
        yield directory
    finally:
        lock.unlink(missing_ok=True)
