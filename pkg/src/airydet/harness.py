"""Run configuration, x-grids, the on-disk result cache and table output."""

from __future__ import annotations

import csv
import fcntl
import hashlib
import io
import json
import math
import os
import tempfile
import time
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field

import numpy as np

# bump when any numerical algorithm changes; old cache entries stop matching
CODE_VERSION = "airydet-num-1"
CACHE_ENV = "AIRYDET_CACHE_DIR"
CSV_SCHEMA = "1"
MAX_NODES = 5000


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class GridSpec:
    start: float
    stop: float
    count: int
    spacing: str = "linear"
    power: float = 1.0

    def __post_init__(self):
        if self.count < 1:
            raise ConfigError("grid count must be >= 1")
        if self.spacing not in ("linear", "power"):
            raise ConfigError(f"unknown spacing {self.spacing!r}")
        if self.spacing == "power" and not self.power > 0:
            raise ConfigError("power spacing needs a positive exponent")

    def points(self):
        if self.count == 1:
            return np.array([float(self.start)])
        if self.spacing == "linear":
            return np.linspace(self.start, self.stop, self.count)
        t = np.linspace(0.0, 1.0, self.count) ** self.power
        return self.start + (self.stop - self.start) * t


def parse_grid(text):
    """'a:b:count[:pow]' or a single number."""
    parts = str(text).split(":")
    try:
        if len(parts) == 1:
            v = float(parts[0])
            return GridSpec(v, v, 1)
        if len(parts) in (3, 4):
            a, b, c = float(parts[0]), float(parts[1]), int(parts[2])
            if len(parts) == 4:
                return GridSpec(a, b, c, "power", float(parts[3]))
            return GridSpec(a, b, c)
    except ValueError as exc:
        raise ConfigError(f"bad grid {text!r}: {exc}") from None
    raise ConfigError(f"bad grid {text!r}: expected a:b:count[:pow]")


def parse_tau(text):
    if text is None or str(text).strip() == "":
        return ()
    return tuple(float(v) for v in str(text).split(","))


@dataclass(frozen=True)
class RunConfig:
    n: int = 1
    tau: tuple = ()
    rho: float = 1.0
    grid: GridSpec = field(default_factory=lambda: GridSpec(-2.0, -2.0, 1))
    nodes: int | None = None
    format: str = "csv"
    cache_dir: str | None = None
    jobs: int = 1
    targets: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.format not in ("csv", "json"):
            raise ConfigError(f"format must be csv or json, got {self.format!r}")
        if self.nodes is not None and not 1 <= self.nodes <= MAX_NODES:
            raise ConfigError(f"nodes must be in [1, {MAX_NODES}]")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")
        if len(self.tau) != self.n - 1:
            raise ConfigError(f"n={self.n} needs {self.n - 1} tau values, got {len(self.tau)}")

    def model(self):
        from .series import make_model

        return make_model(self.n, self.tau)

    def to_json(self):
        d = asdict(self)
        d["tau"] = list(self.tau)
        return d

    @classmethod
    def from_json(cls, d):
        d = dict(d)
        if "grid" in d and isinstance(d["grid"], dict):
            d["grid"] = GridSpec(**d["grid"])
        elif "grid" in d and isinstance(d["grid"], str):
            d["grid"] = parse_grid(d["grid"])
        if "tau" in d:
            d["tau"] = tuple(float(t) for t in d["tau"])
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        return cls(**d)


def default_cache_dir():
    return os.environ.get(CACHE_ENV) or None


# ---------------------------------------------------------------------------
# cache


def cache_key(op, inputs):
    blob = json.dumps([op, inputs, CODE_VERSION], sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


class ResultCache:
    """JSON-lines store of {key, payload, created_at}.

    Readers load the whole file; writers hold an exclusive lock, append to a
    copy and rename it over the original, so readers never see a torn line.
    """

    FILENAME = "results.jsonl"

    def __init__(self, directory):
        self.directory = os.path.abspath(directory)
        os.makedirs(self.directory, exist_ok=True)
        self.path = os.path.join(self.directory, self.FILENAME)
        self._lock_path = self.path + ".lock"
        self._mem = None

    def _load(self):
        mem = {}
        if os.path.exists(self.path):
            with open(self.path, encoding="utf-8") as fh:
                for line in fh:
                    line = line.strip()
                    if not line:
                        continue
                    try:
                        e = json.loads(line)
                    except json.JSONDecodeError:
                        continue
                    mem[e["key"]] = e["payload"]
        self._mem = mem
        return mem

    def get(self, op, inputs):
        mem = self._mem if self._mem is not None else self._load()
        return mem.get(cache_key(op, inputs))

    @contextmanager
    def _locked(self):
        with open(self._lock_path, "a") as lk:
            fcntl.flock(lk, fcntl.LOCK_EX)
            try:
                yield
            finally:
                fcntl.flock(lk, fcntl.LOCK_UN)

    def put_many(self, items):
        """items: iterable of (op, inputs, payload)."""
        lines = []
        for op, inputs, payload in items:
            entry = {"key": cache_key(op, inputs), "payload": payload, "created_at": time.time()}
            lines.append(json.dumps(entry, sort_keys=True))
        if not lines:
            return
        with self._locked():
            old = ""
            if os.path.exists(self.path):
                with open(self.path, encoding="utf-8") as fh:
                    old = fh.read()
            fd, tmp = tempfile.mkstemp(dir=self.directory, prefix=".results-", suffix=".tmp")
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                fh.write(old)
                if old and not old.endswith("\n"):
                    fh.write("\n")
                fh.write("\n".join(lines) + "\n")
            os.replace(tmp, self.path)
        self._mem = None

    def put(self, op, inputs, payload):
        self.put_many([(op, inputs, payload)])


# ---------------------------------------------------------------------------
# tables


def fmt_float(v):
    if isinstance(v, bool) or v is None:
        return "" if v is None else str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return f"{v:.17g}"
    return str(v)


def render_table(rows, columns, fmt="csv"):
    """rows: list of dicts; columns: ordered names."""
    if fmt == "json":
        clean = [{c: _jsonable(r.get(c)) for c in columns} for r in rows]
        return json.dumps({"schema": CSV_SCHEMA, "columns": list(columns), "rows": clean}, indent=1) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, delimiter=",", lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([fmt_float(r.get(c)) for c in columns])
    return buf.getvalue()


def _jsonable(v):
    if isinstance(v, (np.floating,)):
        v = float(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    return v
