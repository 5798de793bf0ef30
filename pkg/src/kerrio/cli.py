"""Command line: parameter scans, file comparison and diagram listings.

Config files are flat ``key = value`` text; ``#`` starts a comment. Keys::

    delta kappa u f n_b          model parameters (f may be complex, e.g. 0.2+0.1j)
    observable                   reflection | g1 | squeezing | g2 | meanfield |
                                 oracle_reflection | oracle_mean | oracle_g1 | oracle_g2
    order mode                   perturbative order, bare | loop_summed | mean_field
    sweep start stop count       one axis: a parameter name, tau or omega
    tau omega theta              fixed values when not swept
    n_max                        oracle Fock dimension
    output format                path and csv | json

The worker count for scans comes from ``KERRIO_WORKERS`` (default 1).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import observables as obs
from . import oracle
from .diagrams import SCHEMA as DIAGRAM_SCHEMA, render, to_json
from .errors import ConfigError, KerrioError, SchemaMismatchError
from .model import ModelParams
from .resum import SummationMode, mean_field_steady_state
from .observables import diagram_set

__all__ = ["ScanConfig", "parse_config", "run_scan", "compare", "read_table", "main", "VERSION"]

VERSION = "0.1.0"
SCAN_SCHEMA = "kerrio.scan/1"
WORKERS_ENV = "KERRIO_WORKERS"

PARAM_NAMES = ("delta", "kappa", "u", "f", "n_b")
OBSERVABLES = ("reflection", "g1", "squeezing", "g2", "meanfield",
               "oracle_reflection", "oracle_mean", "oracle_g1", "oracle_g2")
_TAU_AXIS = ("g1", "g2", "oracle_g1", "oracle_g2")

COLUMNS = {
    "reflection": ("R", "phase"),
    "oracle_reflection": ("R", "phase"),
    "meanfield": ("a_re", "a_im", "R", "phase"),
    "oracle_mean": ("a_re", "a_im", "R", "phase"),
    "g1": ("G1_re", "G1_im", "G1_delta"),
    "oracle_g1": ("G1_re", "G1_im", "G1_delta"),
    "squeezing": ("S_plus", "S_minus"),
    "g2": ("g2",),
    "oracle_g2": ("g2",),
}


@dataclass
class ScanConfig:
    params: ModelParams = field(default_factory=ModelParams)
    sweep: tuple = ("delta", 0.0, 0.0, 1)
    observable: str = "reflection"
    order: int = 2
    mode: str = "bare"
    output: str | None = None
    format: str = "csv"
    tau: float = 0.0
    omega: float = 0.0
    theta: float = 0.0
    n_max: int = 30

    def __post_init__(self):
        name, start, stop, count = self.sweep
        if count < 1:
            raise ConfigError("sweep count must be >= 1", field="count")
        if name not in PARAM_NAMES + ("tau", "omega"):
            raise ConfigError(f"unknown sweep axis {name!r}", field="sweep")
        if self.observable not in OBSERVABLES:
            raise ConfigError(f"unknown observable {self.observable!r}", field="observable")
        if name == "tau" and self.observable not in _TAU_AXIS:
            raise ConfigError("tau sweeps need a two-time observable", field="sweep")
        if name == "omega" and self.observable != "squeezing":
            raise ConfigError("omega sweeps need observable = squeezing", field="sweep")
        if self.format not in ("csv", "json"):
            raise ConfigError(f"unknown format {self.format!r}", field="format")
        if self.n_max < 2:
            raise ConfigError("n_max must be >= 2", field="n_max")

    @property
    def summation(self) -> SummationMode:
        return SummationMode.parse(self.mode, self.order)

    def grid(self) -> np.ndarray:
        _, start, stop, count = self.sweep
        return np.linspace(start, stop, count)

    def as_dict(self) -> dict:
        d = asdict(self)
        d["params"] = {k: (repr(v) if isinstance(v, complex) else v) for k, v in self.params.as_dict().items()}
        d["sweep"] = list(self.sweep)
        return d


# -- config parsing -----------------------------------------------------------

_FLOAT_KEYS = ("delta", "kappa", "u", "n_b", "start", "stop", "tau", "omega", "theta")
_INT_KEYS = ("order", "count", "n_max")
_STR_KEYS = ("observable", "mode", "output", "format", "sweep")


def parse_config(text: str) -> ScanConfig:
    raw = {}
    where = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("expected key = value", line=lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        if key in raw:
            raise ConfigError("duplicate key", line=lineno, field=key)
        try:
            if key in _FLOAT_KEYS:
                raw[key] = float(value)
            elif key in _INT_KEYS:
                raw[key] = int(value)
            elif key == "f":
                raw[key] = complex(value.replace(" ", ""))
            elif key in _STR_KEYS:
                if not value:
                    raise ValueError("empty value")
                raw[key] = value
            else:
                raise ConfigError("unknown key", line=lineno, field=key)
        except ValueError as exc:
            raise ConfigError(f"bad value {value!r}: {exc}", line=lineno, field=key) from None
        where[key] = lineno

    def build(keys):
        return {k: raw[k] for k in keys if k in raw}

    try:
        params = ModelParams(**build(PARAM_NAMES))
    except KerrioError as exc:
        bad = next((k for k in PARAM_NAMES if k in str(exc)), None)
        raise ConfigError(str(exc), line=where.get(bad), field=bad) from None
    sweep = (raw.get("sweep", "delta"), raw.get("start", 0.0), raw.get("stop", raw.get("start", 0.0)),
             raw.get("count", 1))
    try:
        cfg = ScanConfig(params=params, sweep=sweep, **build(("observable", "order", "mode", "output",
                                                               "format", "tau", "omega", "theta", "n_max")))
        cfg.summation
    except ConfigError as exc:
        raise ConfigError(str(exc).split(" (")[0], line=where.get(exc.field), field=exc.field) from None
    except KerrioError as exc:
        raise ConfigError(str(exc), line=where.get("mode"), field="mode") from None
    return cfg


# -- scan ---------------------------------------------------------------------

def _point(cfg: ScanConfig, x: float):
    """Evaluate one sweep point; returns (values, error_estimate)."""
    name = cfg.sweep[0]
    params = cfg.params.with_(**{name: x}) if name in PARAM_NAMES else cfg.params
    tau = x if name == "tau" else cfg.tau
    omega = x if name == "omega" else cfg.omega
    fock = oracle.FockConfig(n_max=cfg.n_max)
    kind = cfg.observable
    if kind.startswith("oracle_"):
        st = oracle.steady_state(params, fock)
        err = max(st.margins.values(), default=0.0)
        if kind == "oracle_reflection":
            return oracle.output_reflection(params, fock), err
        if kind == "oracle_mean":
            a = st.a_mean
            R, ph = oracle.output_reflection(params, fock) if params.f != 0 else (math.nan, math.nan)
            return (a.real, a.imag, R, ph), err
        if kind == "oracle_g1":
            g = oracle.output_g1(params, fock, [tau])[0]
            return (g.real, g.imag, params.n_b), err
        return (oracle.output_g2(params, fock, [tau])[0],), err
    mode = cfg.summation
    if kind == "meanfield":
        a = mean_field_steady_state(params).a_mean
        R, ph = obs.reflection(params, SummationMode("mean_field"))
        return (a.real, a.imag, R, ph), math.nan
    if kind == "reflection":
        R, ph = obs.reflection(params, mode)
        return (R, ph), _tail(obs._mean_series(params, mode)) if mode.perturbative else math.nan
    if kind == "g1":
        g = obs.g1(params, mode, tau_grid=[tau])
        return (g.values[0].real, g.values[0].imag, params.n_b), math.nan
    if kind == "squeezing":
        sp, sm = obs.squeezing_spectrum(params, mode, theta=cfg.theta, omega_grid=[omega])
        return (sp.values[0], sm.values[0]), math.nan
    num = obs.g2_numerator(params, mode, tau)
    den = abs(params.f) ** 4
    return (num.sum().real / den,), abs(num[-1]) / den if mode.order > 0 else 0.0


def _tail(series) -> float:
    return float(abs(series[-1])) if len(series) > 1 else 0.0


def _row(args):
    cfg, x = args
    try:
        values, err = _point(cfg, float(x))
        return float(x), tuple(float(v) for v in values), float(err), "ok"
    except KerrioError as exc:
        n = len(COLUMNS[cfg.observable])
        return float(x), (math.nan,) * n, math.nan, type(exc).__name__


def _workers() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def scan_table(cfg: ScanConfig):
    jobs = [(cfg, x) for x in cfg.grid()]
    n = _workers()
    if n > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=n) as pool:
            rows = list(pool.map(_row, jobs))
    else:
        rows = [_row(j) for j in jobs]
    columns = (cfg.sweep[0],) + COLUMNS[cfg.observable] + ("error_estimate", "status")
    return columns, rows


def _metadata(cfg: ScanConfig) -> dict:
    return {"schema": SCAN_SCHEMA, "version": VERSION, "observable": cfg.observable,
            "mode": cfg.summation.label(), "config": cfg.as_dict(),
            "oracle": "none" if (cfg.observable == "g2" and cfg.params.n_b != 0) else ""}


def _fmt(v) -> str:
    return v if isinstance(v, str) else format(v, ".17g")


def write_table(path, columns, rows, meta: dict, fmt: str) -> str:
    flat = [[x, *vals, err, status] for x, vals, err, status in rows]
    if fmt == "json":
        text = json.dumps({"schema": SCAN_SCHEMA, "metadata": meta, "columns": list(columns),
                           "rows": [[None if isinstance(v, float) and math.isnan(v) else v for v in r]
                                    for r in flat]}, indent=1, sort_keys=False)
    else:
        buf = io.StringIO()
        for key, value in meta.items():
            buf.write(f"# {key}: {json.dumps(value, sort_keys=True)}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(columns)
        for r in flat:
            w.writerow([_fmt(v) for v in r])
        text = buf.getvalue()
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    return text


def run_scan(cfg: ScanConfig, stream=None) -> int:
    columns, rows = scan_table(cfg)
    text = write_table(cfg.output, columns, rows, _metadata(cfg), cfg.format)
    if not cfg.output:
        (stream or sys.stdout).write(text)
    return 0 if all(r[3] == "ok" for r in rows) else 1


# -- compare ------------------------------------------------------------------

def read_table(path: str):
    """Return (metadata, columns, rows) from a CSV or JSON scan file."""
    with open(path) as fh:
        text = fh.read()
    if text.lstrip().startswith("{"):
        data = json.loads(text)
        if data.get("schema") != SCAN_SCHEMA:
            raise SchemaMismatchError(f"{path}: not a scan file", {"schema": data.get("schema")})
        rows = [[math.nan if v is None else v for v in r] for r in data["rows"]]
        return data["metadata"], tuple(data["columns"]), rows
    meta, body = {}, []
    for line in text.splitlines():
        if line.startswith("#"):
            key, _, value = line[1:].partition(":")
            meta[key.strip()] = json.loads(value)
        elif line.strip():
            body.append(line)
    reader = list(csv.reader(body))
    if not reader:
        raise SchemaMismatchError(f"{path}: empty table")
    columns = tuple(reader[0])
    rows = [[_parse_cell(c) for c in r] for r in reader[1:]]
    return meta, columns, rows


def _parse_cell(c: str):
    try:
        return float(c)
    except ValueError:
        return c


@dataclass
class CompareReport:
    columns: dict
    tol: float
    passed: bool

    def text(self) -> str:
        lines = [f"{'column':<16}{'max_abs':>24}{'max_rel':>24}  status"]
        for name, (ab, rel) in self.columns.items():
            ok = "pass" if ab <= self.tol else "FAIL"
            lines.append(f"{name:<16}{ab:>24.17g}{rel:>24.17g}  {ok}")
        lines.append(f"overall: {'pass' if self.passed else 'FAIL'} (tol {self.tol:g})")
        return "\n".join(lines)


def compare(path_a: str, path_b: str, tol: float) -> CompareReport:
    _, cols_a, rows_a = read_table(path_a)
    _, cols_b, rows_b = read_table(path_b)
    if cols_a != cols_b:
        raise SchemaMismatchError("column sets differ", {"a": cols_a, "b": cols_b})
    if len(rows_a) != len(rows_b):
        raise SchemaMismatchError("row counts differ", {"a": len(rows_a), "b": len(rows_b)})
    ga = np.array([r[0] for r in rows_a], dtype=float)
    gb = np.array([r[0] for r in rows_b], dtype=float)
    if not np.allclose(ga, gb, rtol=1e-12, atol=1e-15):
        raise SchemaMismatchError("sweep grids differ", {"a": ga.tolist(), "b": gb.tolist()})
    skip = {cols_a[0], "status", "error_estimate"}
    out = {}
    for j, name in enumerate(cols_a):
        if name in skip:
            continue
        a = np.array([r[j] for r in rows_a], dtype=float)
        b = np.array([r[j] for r in rows_b], dtype=float)
        diff = np.abs(a - b)
        both_nan = np.isnan(a) & np.isnan(b)
        diff[both_nan] = 0.0
        scale = np.maximum(np.abs(a), np.abs(b))
        rel = np.where(diff == 0, 0.0, diff / np.where(scale == 0, 1.0, scale))
        out[name] = (float(np.max(diff)) if diff.size else 0.0, float(np.max(rel)) if rel.size else 0.0)
    passed = all(not math.isnan(ab) and ab <= tol for ab, _ in out.values())
    return CompareReport(out, tol, passed)


# -- diagrams -----------------------------------------------------------------

_OPS = {"b": "plain", "bout": "plain", "bdag": "dagger", "b†": "dagger", "bdagger": "dagger", "b^dag": "dagger"}


def parse_cumulant(spec: str) -> tuple[int, int]:
    n_dag = n_plain = 0
    for tok in spec.replace(",", " ").split():
        kind = _OPS.get(tok.strip().lower())
        if kind is None:
            raise ConfigError(f"unknown operator {tok!r} in cumulant spec", field="cumulant")
        if kind == "dagger":
            n_dag += 1
        else:
            n_plain += 1
    if n_dag + n_plain == 0:
        raise ConfigError("empty cumulant spec", field="cumulant")
    return n_dag, n_plain


def list_diagrams(spec: str, order: int, fmt: str = "text", loops: bool = True) -> str:
    n_dag, n_plain = parse_cumulant(spec)
    ds = diagram_set(n_dag, n_plain, order, loops)
    if fmt == "json":
        return "[" + ",\n".join(to_json(d) for d in ds) + "]\n"
    sep = "\n" if fmt == "dot" else "\n---\n"
    head = f"# {len(ds)} diagram classes for <<{spec}>> at order {order} ({DIAGRAM_SCHEMA})\n"
    return head + sep.join(render(d, fmt) for d in ds) + "\n"


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="kerrio")
    sub = ap.add_subparsers(dest="command", required=True)
    s = sub.add_parser("scan", help="run a parameter scan from a config file")
    s.add_argument("--config", required=True)
    c = sub.add_parser("compare", help="compare two scan files column by column")
    c.add_argument("--a", required=True)
    c.add_argument("--b", required=True)
    c.add_argument("--tol", type=float, required=True)
    d = sub.add_parser("diagrams", help="list diagram classes of a cumulant")
    d.add_argument("--cumulant", required=True, help='operator list, e.g. "bdag b"')
    d.add_argument("--order", type=int, required=True)
    d.add_argument("--render", default="text", choices=("text", "dot", "json"))
    d.add_argument("--no-loops", action="store_true")
    args = ap.parse_args(argv)
    try:
        if args.command == "scan":
            with open(args.config) as fh:
                cfg = parse_config(fh.read())
            return run_scan(cfg)
        if args.command == "compare":
            rep = compare(args.a, args.b, args.tol)
            print(rep.text())
            return 0 if rep.passed else 1
        sys.stdout.write(list_diagrams(args.cumulant, args.order, args.render, not args.no_loops))
        return 0
    except (ConfigError, SchemaMismatchError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except KerrioError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
