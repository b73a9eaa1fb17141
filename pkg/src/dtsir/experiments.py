"""Replicated experiments: distance tables, phase-transition sweeps and timing.

Every replication is a pure function of ``(cell, rep, seed)``. Data streams
are keyed by the design ``(setting, n, p, rho)`` and the replication index,
so different methods in the same table see identical datasets; fitting
streams are keyed by the cell index as well. Records are folded in
``(cell, rep)`` order whatever order the worker pool finishes them in.
"""

import csv
import json
import math
import os
import platform
import time
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.stats

from .covariance import CovarianceConfig
from .errors import DtSirError, InvalidArgumentError, UndefinedTestError
from .metrics import NORMS, subspace_distance, vector_angle
from .screening import (
    AuxiliaryThreshold,
    default_slice_counts,
    dtsir_fit,
    parse_threshold,
    restricted_sir,
    sure_baseline,
)
from .simgen import RNG_ALGORITHM, SettingSpec, generate, make_rng, normalize_setting
from .sir import ModelConfig, _top_from_means, sir_fit
from .slicing import center, slice_by_response, slice_means

DEFAULT_SEED = 20170401
KINDS = ("table", "phase_fixed_rho", "phase_sweep", "timing")
CSV_HEADER = ["cell_id", "setting", "n", "p", "method", "rep", "metric", "seconds"]


class ConfigError(InvalidArgumentError):
    """Malformed experiment configuration; the message names the field."""


@dataclass(frozen=True)
class Cell:
    setting: str
    n: int
    p: int
    method: str
    rho: float = 0.5
    d: int | None = None
    params: dict = field(default_factory=dict)
    label: str | None = None

    @property
    def cell_id(self):
        if self.label:
            return self.label
        return f"{self.setting}-n{self.n}-p{self.p}-rho{self.rho:g}-{self.method}"

    def design_key(self):
        text = f"{self.setting}|{self.n}|{self.p}|{self.rho!r}"
        return zlib.crc32(text.encode())


@dataclass(frozen=True)
class ExperimentSpec:
    kind: str
    grid: tuple
    reps: int
    seed: int = DEFAULT_SEED
    norm: str = "frobenius"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"kind: must be one of {KINDS}")
        if self.reps < 1:
            raise ConfigError("reps: must be >= 1")
        if not self.grid:
            raise ConfigError("grid: must be non-empty")
        if self.norm not in NORMS:
            raise ConfigError(f"norm: must be one of {NORMS}")


@dataclass(frozen=True)
class Record:
    cell_id: str
    setting: str
    n: int
    p: int
    method: str
    rep: int
    metric: float | None
    seconds: float
    error: str | None = None


@dataclass(frozen=True)
class Aggregate:
    cell_id: str
    setting: str
    n: int
    p: int
    method: str
    mean: float
    se: float
    count: int
    failures: int
    valid: bool


@dataclass
class ExperimentResult:
    kind: str
    records: list
    aggregates: list
    meta: dict = field(default_factory=dict)

    def aggregate_for(self, cell_id):
        for a in self.aggregates:
            if a.cell_id == cell_id:
                return a
        raise KeyError(cell_id)

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_HEADER)
            for r in self.records:
                metric = "" if r.metric is None else repr(r.metric)
                w.writerow([r.cell_id, r.setting, r.n, r.p, r.method, r.rep, metric, repr(r.seconds)])

    def to_json(self, spec_echo=None, threads=None):
        failures = [asdict(r) for r in self.records if r.error is not None]
        return {
            "kind": self.kind,
            "spec": spec_echo,
            "aggregates": [_jsonable(asdict(a)) for a in self.aggregates],
            "failures": failures,
            "meta": _jsonable(self.meta),
            "environment": environment_block(threads),
        }


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def machine_descriptor():
    return {
        "platform": platform.platform(),
        "processor": platform.processor() or platform.machine(),
        "python": platform.python_version(),
        "numpy": np.__version__,
        "logical_cpus": os.cpu_count(),
    }


def environment_block(threads=None):
    return {
        "rng_algorithm": RNG_ALGORITHM,
        "threads": threads if threads is not None else default_threads(),
        "env_overrides": {k: os.environ.get(k) for k in ("DTSIR_SEED", "DTSIR_THREADS")},
        "machine": machine_descriptor(),
    }


def default_threads():
    env = os.environ.get("DTSIR_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


# -- methods ------------------------------------------------------------------
# Each method maps (data, truth, cell, rng) to a p x d basis estimate.


def _slice_counts(cell, n):
    hs, hr = default_slice_counts(n)
    return cell.params.get("H_screen", hs), cell.params.get("H_sir", hr)


def _cov_config(cell):
    return CovarianceConfig(
        mode=cell.params.get("cov", "banded"),
        bandwidth=cell.params.get("bandwidth"),
        ridge=float(cell.params.get("ridge", 0.0)),
    )


def _method_dtsir(data, truth, cell, rng):
    hs, hr = _slice_counts(cell, data.n)
    thr = cell.params.get("threshold")
    threshold = parse_threshold(thr) if thr is not None else AuxiliaryThreshold()
    est = dtsir_fit(
        data,
        d=cell.d or truth.d,
        H_screen=hs,
        H_sir=hr,
        threshold=threshold,
        cov=_cov_config(cell),
        rng=rng,
    )
    return est.beta_hat


def _method_sure_sir(data, truth, cell, rng):
    d = cell.d or truth.d
    _, hr = _slice_counts(cell, data.n)
    keep = int(cell.params.get("keep", max(d, math.floor(0.01 * data.n))))
    rows = sure_baseline(data, min(keep, data.p))
    Xc, _ = center(data.X)
    _, _, beta, _ = restricted_sir(Xc, data.y, rows, hr, d, _cov_config(cell), rng=rng)
    return beta


def _method_sir_oracle(data, truth, cell, rng):
    d = cell.d or truth.d
    _, hr = _slice_counts(cell, data.n)
    rows = truth.active
    est = sir_fit(data.columns(rows), ModelConfig(H=hr, d=d, covariance_mode="sample"))
    out = np.zeros((data.p, d))
    out[rows] = est.beta_hat
    return out


def _method_sir_full(data, truth, cell, rng):
    _, hr = _slice_counts(cell, data.n)
    cfg = ModelConfig(
        H=hr,
        d=cell.d or truth.d,
        covariance_mode=cell.params.get("cov", "sample"),
        bandwidth=cell.params.get("bandwidth"),
        ridge=float(cell.params.get("ridge", 0.0)),
    )
    return sir_fit(data, cfg, rng=rng).beta_hat


METHODS = {
    "dtsir": _method_dtsir,
    "sir_oracle": _method_sir_oracle,
    "sure_sir": _method_sure_sir,
    "sir_full": _method_sir_full,
}


# -- execution ----------------------------------------------------------------


def _run_pool(tasks, fn, threads):
    threads = threads or default_threads()
    if threads <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, tasks))


def _error_code(exc):
    if isinstance(exc, DtSirError):
        return exc.code
    return type(exc).__name__


def _table_replication(cell, cell_index, rep, seed, norm):
    t0 = time.perf_counter()
    try:
        spec = SettingSpec(cell.setting, cell.n, cell.p, rho=cell.rho, seed=seed)
        data, truth = generate(spec, rng=make_rng(seed, cell.design_key(), rep))
        method = METHODS.get(cell.method)
        if method is None:
            raise InvalidArgumentError(f"unknown method {cell.method!r}")
        basis = method(data, truth, cell, make_rng(seed, cell.design_key(), rep, cell_index + 1))
        metric = subspace_distance(basis, truth.V_true, norm=norm)
        error = None
    except Exception as exc:  # recorded, never dropped
        metric, error = None, f"{_error_code(exc)}: {exc}"
    return Record(
        cell.cell_id, cell.setting, cell.n, cell.p, cell.method, rep, metric,
        time.perf_counter() - t0, error,
    )


def aggregate(records):
    """Per-cell mean, standard error and counts, in first-appearance order."""
    groups = {}
    for r in records:
        groups.setdefault(r.cell_id, []).append(r)
    out = []
    for cid, rs in groups.items():
        rs = sorted(rs, key=lambda r: r.rep)
        vals = np.array([r.metric for r in rs if r.metric is not None], dtype=float)
        k = vals.size
        mean = float(vals.mean()) if k else float("nan")
        se = float(vals.std(ddof=1) / np.sqrt(k)) if k >= 2 else float("nan")
        first = rs[0]
        out.append(
            Aggregate(cid, first.setting, first.n, first.p, first.method, mean, se, k,
                      len(rs) - k, k > 0)
        )
    return out


def run_table(spec, threads=None):
    """Mean subspace distance to the true central space for every grid cell."""
    tasks = [(ci, cell, rep) for ci, cell in enumerate(spec.grid) for rep in range(spec.reps)]
    records = _run_pool(
        tasks,
        lambda t: _table_replication(t[1], t[0], t[2], spec.seed, spec.norm),
        threads,
    )
    return ExperimentResult("table", records, aggregate(records), {"norm": spec.norm})


def principal_sir_direction(data, H):
    """Leading eigenvector of the slice-mean outer-product average (identity covariance)."""
    Xc, _ = center(data.X)
    M = slice_means(Xc, slice_by_response(data.y, H)).M
    _, V = _top_from_means(M, 1)
    return V[:, 0]


def _angle_replication(n, p, H, seed, key, rep, cell_id, rho):
    t0 = time.perf_counter()
    try:
        spec = SettingSpec("linear", n, p, seed=seed)
        data, _ = generate(spec, rng=make_rng(seed, key, rep))
        beta_hat = principal_sir_direction(data, H)
        e1 = np.zeros(p)
        e1[0] = 1.0
        metric, error = vector_angle(e1, beta_hat), None
    except Exception as exc:
        metric, error = None, f"{_error_code(exc)}: {exc}"
    return Record(cell_id, "linear", n, p, "sir", rep, metric, time.perf_counter() - t0, error)


def _angle_cells(pairs, H, reps, seed, threads):
    """``pairs`` is a list of ``(rho, n, p)``; returns records, skipped list and cell ids."""
    cells, skipped = [], []
    for rho, n, p in pairs:
        cid = f"rho{rho:g}-n{n}-p{p}"
        if n < H or n < 2:
            skipped.append({"cell_id": cid, "reason": f"n={n} < H={H}"})
            continue
        if p < 1:
            skipped.append({"cell_id": cid, "reason": "p < 1"})
            continue
        cells.append((rho, n, p, cid, zlib.crc32(cid.encode())))
    tasks = [(c, rep) for c in cells for rep in range(reps)]
    records = _run_pool(
        tasks,
        lambda t: _angle_replication(t[0][1], t[0][2], H, seed, t[0][4], t[1], t[0][3], t[0][0]),
        threads,
    )
    return records, skipped, cells


def run_phase_fixed_rho(rho_values, p_grid, H=10, reps=100, seed=DEFAULT_SEED, threads=None):
    """Mean angle between the SIR direction and the truth on the linear model,
    with ``n = round(p / rho)`` for each ``(rho, p)``."""
    pairs = [(float(r), int(round(p / r)), int(p)) for r in rho_values for p in p_grid]
    records, skipped, cells = _angle_cells(pairs, H, reps, seed, threads)
    aggs = aggregate(records)
    rho_of = {c[3]: c[0] for c in cells}
    meta = {
        "H": H,
        "reps": reps,
        "skipped": skipped,
        "rho": {a.cell_id: rho_of[a.cell_id] for a in aggs},
        "unit": "radians",
    }
    return ExperimentResult("phase_fixed_rho", records, aggs, meta)


def rho_grid(rho_min, rho_max, rho_step):
    k = int(math.floor((rho_max - rho_min) / rho_step + 1e-9)) + 1
    return [round(rho_min + i * rho_step, 10) for i in range(k)]


def run_phase_sweep(n=200, H=10, rho_min=0.01, rho_max=4.0, rho_step=0.01, reps=100,
                    seed=DEFAULT_SEED, threads=None):
    """Mean SIR angle as ``rho = p / n`` sweeps a grid at fixed ``n``.

    ``meta["spearman"]`` is the rank correlation between ``rho`` and the
    mean angle.
    """
    rhos = rho_grid(rho_min, rho_max, rho_step)
    pairs = [(r, n, max(1, int(round(r * n)))) for r in rhos]
    records, skipped, cells = _angle_cells(pairs, H, reps, seed, threads)
    aggs = aggregate(records)
    rho_of = {c[3]: c[0] for c in cells}
    xs = [rho_of[a.cell_id] for a in aggs if a.valid]
    ys = [a.mean for a in aggs if a.valid]
    spearman = float(scipy.stats.spearmanr(xs, ys).statistic) if len(xs) > 2 else float("nan")
    meta = {
        "n": n,
        "H": H,
        "reps": reps,
        "skipped": skipped,
        "rho": {a.cell_id: rho_of[a.cell_id] for a in aggs},
        "spearman": spearman,
        "unit": "radians",
    }
    return ExperimentResult("phase_sweep", records, aggs, meta)


def run_timing(grid, seed=DEFAULT_SEED, warmup=True):
    """Wall-clock seconds for one fit per cell; an untimed warm-up fit runs first."""
    records = []
    for ci, cell in enumerate(grid):
        if warmup:
            _table_replication(cell, ci, -1, seed, "frobenius")
        rec = _table_replication(cell, ci, 0, seed, "frobenius")
        records.append(rec)
    aggs = []
    for r in records:
        ok = r.error is None
        aggs.append(
            Aggregate(r.cell_id, r.setting, r.n, r.p, r.method, r.seconds if ok else float("nan"),
                      float("nan"), int(ok), int(not ok), ok)
        )
    return ExperimentResult("timing", records, aggs, {"machine": machine_descriptor()})


def welch_t_test(a, b):
    """Two-sided Welch t-test; returns ``(t, p_value)``."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.size < 2 or b.size < 2:
        raise UndefinedTestError("each sample needs at least two values")
    va, vb = a.var(ddof=1) / a.size, b.var(ddof=1) / b.size
    if va == 0 and vb == 0:
        raise UndefinedTestError("both samples have zero variance")
    diff = a.mean() - b.mean()
    se2 = va + vb
    t = diff / math.sqrt(se2)
    df = se2**2 / (va**2 / (a.size - 1) + vb**2 / (b.size - 1))
    if t == 0:
        return 0.0, 1.0
    return float(t), float(2 * scipy.stats.t.sf(abs(t), df))


# -- config parsing -----------------------------------------------------------


def _require(cfg, key, kind=None):
    if key not in cfg:
        raise ConfigError(f"{key}: missing")
    val = cfg[key]
    if isinstance(val, bool) or (kind is not None and not isinstance(val, kind)):
        raise ConfigError(f"{key}: expected {getattr(kind, '__name__', kind)}")
    return val


def cell_from_dict(d, where="grid[]"):
    if not isinstance(d, dict):
        raise ConfigError(f"{where}: expected an object")
    try:
        setting = normalize_setting(_require(d, "setting", str))
    except InvalidArgumentError as exc:
        raise ConfigError(f"{where}.setting: {exc}") from None
    for key in ("n", "p"):
        if not isinstance(d.get(key), int) or isinstance(d.get(key), bool):
            raise ConfigError(f"{where}.{key}: expected an integer")
    method = d.get("method", "dtsir")
    if method not in METHODS:
        raise ConfigError(f"{where}.method: unknown method {method!r}")
    params = d.get("params", {})
    if not isinstance(params, dict):
        raise ConfigError(f"{where}.params: expected an object")
    return Cell(setting, d["n"], d["p"], method, rho=float(d.get("rho", 0.5)),
                d=d.get("d"), params=params, label=d.get("label"))


def table_spec_from_config(cfg, kind="table"):
    grid = cfg.get("grid")
    if not isinstance(grid, list) or not grid:
        raise ConfigError("grid: expected a non-empty list")
    cells = tuple(cell_from_dict(c, f"grid[{i}]") for i, c in enumerate(grid))
    reps = cfg.get("reps", 100 if kind == "table" else 1)
    if not isinstance(reps, int) or reps < 1:
        raise ConfigError("reps: expected a positive integer")
    return ExperimentSpec(kind, cells, reps, int(cfg.get("seed", DEFAULT_SEED)),
                          cfg.get("norm", "frobenius"))


def run_from_config(kind, cfg, seed=None, threads=None):
    """Dispatch a parsed JSON config. ``seed`` overrides ``cfg["seed"]``."""
    if not isinstance(cfg, dict):
        raise ConfigError("config: expected a JSON object")
    cfg = dict(cfg)
    if seed is not None:
        cfg["seed"] = seed
    s = int(cfg.get("seed", DEFAULT_SEED))
    if kind == "table":
        return run_table(table_spec_from_config(cfg), threads=threads)
    if kind == "timing":
        spec = table_spec_from_config(cfg, kind="timing")
        return run_timing(spec.grid, seed=spec.seed)
    if kind == "phase_fixed_rho":
        rhos = _require(cfg, "rho_values", list)
        ps = _require(cfg, "p_grid", list)
        return run_phase_fixed_rho(rhos, ps, H=int(cfg.get("H", 10)),
                                   reps=int(cfg.get("reps", 100)), seed=s, threads=threads)
    if kind == "phase_sweep":
        for key in ("rho_min", "rho_max", "rho_step"):
            if key in cfg and not isinstance(cfg[key], (int, float)):
                raise ConfigError(f"{key}: expected a number")
        return run_phase_sweep(
            n=int(cfg.get("n", 200)), H=int(cfg.get("H", 10)),
            rho_min=float(cfg.get("rho_min", 0.01)), rho_max=float(cfg.get("rho_max", 4.0)),
            rho_step=float(cfg.get("rho_step", 0.01)), reps=int(cfg.get("reps", 100)),
            seed=s, threads=threads,
        )
    raise ConfigError(f"kind: must be one of {KINDS}")


def load_config(path):
    with open(path) as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config: invalid JSON at line {exc.lineno}: {exc.msg}") from None
