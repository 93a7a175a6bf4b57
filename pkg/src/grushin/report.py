"""Self-describing verification reports and their JSON/CSV forms."""

from dataclasses import dataclass, field, asdict
import csv
import hashlib
import io
import json
import math
import os
import tempfile

import numpy as np

SCHEMA_VERSION = "1.0"


@dataclass
class Record:
    """One numeric entry of a report.

    Every record carries an ``error_bound`` or is tagged ``fitted``; the
    ``family`` groups records into series for plot export and ``params``
    holds the abscissa (e.g. ``{"R": 2.0}``).
    """

    name: str
    value: float
    error_bound: float | None = None
    fitted: bool = False
    pass_flag: bool | None = None
    family: str | None = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.error_bound is None and not self.fitted:
            # exact / boolean quantities
            self.error_bound = 0.0


@dataclass
class Report:
    suite: str
    config: dict = field(default_factory=dict)
    records: list = field(default_factory=list)
    timing: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)
    schema_version: str = SCHEMA_VERSION

    def add(self, name, value, error_bound=None, fitted=False, pass_flag=None,
            family=None, **params):
        rec = Record(name, _plain(value), None if error_bound is None else float(error_bound),
                     fitted, None if pass_flag is None else bool(pass_flag), family,
                     {k: _plain(v) for k, v in params.items()})
        self.records.append(rec)
        return rec

    def check(self, name, condition, value=None, family=None, **params):
        """Record a boolean outcome (value defaults to the flag itself)."""
        flag = bool(condition)
        return self.add(name, float(flag) if value is None else value, 0.0,
                        pass_flag=flag, family=family, **params)

    @property
    def passed(self):
        return all(r.pass_flag for r in self.records if r.pass_flag is not None)

    def failures(self):
        return [r.name for r in self.records if r.pass_flag is False]

    def get(self, name):
        for r in self.records:
            if r.name == name:
                return r
        raise KeyError(name)

    def value(self, name):
        return self.get(name).value

    def family(self, family):
        return [r for r in self.records if r.family == family]

    def merge(self, other, prefix=""):
        for r in other.records:
            rec = Record(**asdict(r))
            rec.name = prefix + rec.name
            self.records.append(rec)
        self.notes.extend(other.notes)
        return self

    def to_dict(self):
        return {
            "schema_version": self.schema_version,
            "suite": self.suite,
            "config": _plain(self.config),
            "records": [asdict(r) for r in self.records],
            "timing": self.timing,
            "provenance": _plain(self.provenance),
            "notes": list(self.notes),
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, allow_nan=True)

    def to_csv(self):
        """Flat table: one row per record, parameters as a JSON column."""
        buf = io.StringIO()
        buf.write(f"# suite={self.suite} schema={self.schema_version}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["name", "value", "error_bound", "fitted", "pass_flag", "family", "params"])
        for r in self.records:
            w.writerow([r.name, repr(r.value) if isinstance(r.value, float) else r.value,
                        "" if r.error_bound is None else repr(r.error_bound), int(r.fitted),
                        "" if r.pass_flag is None else int(r.pass_flag), r.family or "",
                        json.dumps(r.params, sort_keys=True)])
        return buf.getvalue()

    @classmethod
    def from_dict(cls, d):
        recs = [Record(**r) for r in d.get("records", [])]
        return cls(d["suite"], d.get("config", {}), recs, d.get("timing", {}),
                   d.get("provenance", {}), d.get("notes", []),
                   d.get("schema_version", SCHEMA_VERSION))

    def write_json(self, path):
        atomic_write(path, self.to_json() + "\n")


def _plain(v):
    """Convert numpy scalars/arrays and nested containers to JSON-ready types."""
    if isinstance(v, dict):
        return {str(k): _plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    if isinstance(v, np.ndarray):
        return _plain(v.tolist())
    if isinstance(v, (np.bool_, bool)):
        return bool(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating, float)):
        return float(v)
    return v


def schedule_hash(*parts):
    """Short digest identifying a block schedule / grid layout."""
    h = hashlib.sha256()
    for p in parts:
        h.update(repr(_plain(p)).encode())
    return h.hexdigest()[:16]


def atomic_write(path, text):
    """Write ``text`` to ``path`` via a temporary file and rename."""
    path = os.fspath(path)
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def plot_rows(report, family, xkey=None):
    """(x, value, bound) rows for one record family, ordered as recorded."""
    rows = []
    for r in report.family(family):
        if xkey is None:
            xkey = next(iter(r.params), None)
        x = r.params.get(xkey, math.nan) if xkey else math.nan
        bound = r.error_bound if r.error_bound is not None else math.nan
        rows.append((x, r.value, bound))
    return xkey, rows


def emit_plot_data(report, family, path, xkey=None):
    """Write a CSV of ``(x, value, error_bound)`` for ``family``.

    The header carries units/provenance as ``#`` comment lines.  An existing
    family with no records yields a header-only file.
    """
    known = {r.family for r in report.records if r.family}
    known |= set(report.provenance.get("families", []))
    if family not in known:
        raise KeyError(f"unknown record family {family!r}; known: {sorted(known)}")
    xkey, rows = plot_rows(report, family, xkey)
    buf = io.StringIO()
    buf.write(f"# suite={report.suite} family={family} schema={report.schema_version}\n")
    buf.write(f"# provenance={json.dumps(_plain(report.provenance), sort_keys=True)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([xkey or "x", "value", "error_bound"])
    for x, v, b in rows:
        w.writerow([repr(float(x)), repr(float(v)), repr(float(b))])
    atomic_write(path, buf.getvalue())
    return len(rows)
