"""Parameter sweeps, finite-difference derivatives and transition flags."""

from __future__ import annotations

import csv
import dataclasses
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import measures as qm
from .eigensolver import ground_spectrum
from .errors import (ConfigError, IoError, NonUniformGrid, NumericalFailure, ParseError,
                     QSpinError)
from .ggm import PartitionPolicy, default_policy, ggm
from .hilbert import check_size, mask_of, reduced_density_matrix
from .lattice import build_model, symmetry_permutations
from . import xy_analytic

log = logging.getLogger(__name__)

MODELS = ("xy", "j1j2_chain", "j1j2_square", "shastry_sutherland")
MODEL_ALIASES = {"j1j2-1d": "j1j2_chain", "j1j2-2d": "j1j2_square", "ss": "shastry_sutherland"}
MEASURES = ("ggm", "concurrence", "logneg", "discord", "shared_purity", "mi", "entropy")
CSV_COLUMNS = (
    "model", "n", "method", "param", "energy0", "energy1", "gap", "degenerate", "ggm",
    "lambda_max_sq", "argmax_partition", "concurrence", "logneg", "discord_left",
    "discord_right", "mutual_info", "shared_purity", "entropy_half_block", "wall_time",
)
_FLOAT_COLUMNS = ("param", "energy0", "energy1", "gap", "ggm", "lambda_max_sq", "concurrence",
                  "logneg", "discord_left", "discord_right", "mutual_info", "shared_purity",
                  "entropy_half_block", "wall_time")
DEFAULT_RANGES = {
    "xy": (0.2, 1.8, 0.01),
    "j1j2_chain": (0.0, 1.2, 0.01),
    "j1j2_square": (0.0, 1.2, 0.01),
    "shastry_sutherland": (0.5, 2.0, 0.01),
}


def canonical_model(name: str) -> str:
    name = MODEL_ALIASES.get(name, name)
    if name not in MODELS:
        raise ConfigError(f"unknown model {name!r}")
    return name


@dataclass
class SweepConfig:
    model: str = "xy"
    n: int | None = 8
    nx: int | None = None
    ny: int | None = None
    gamma: float = 1.0
    start: float = 0.2
    stop: float = 1.8
    step: float = 0.01
    measures: tuple[str, ...] = MEASURES
    policy: str = "all_subsets"
    max_block: int | None = None
    method: str = "ed"
    seed: int = 0
    jobs: int = 1
    out: str | None = None

    def __post_init__(self):
        self.model = canonical_model(self.model)
        self.measures = tuple(self.measures)
        self.validate()

    @property
    def param_name(self) -> str:
        return "lambda" if self.model == "xy" else "alpha"

    @property
    def n_sites(self) -> int:
        if self.model in ("xy", "j1j2_chain"):
            return self.n
        return self.nx * self.ny

    def validate(self) -> None:
        if not self.step > 0:
            raise ConfigError("step must be positive")
        if not self.start < self.stop:
            raise ConfigError("start must be below stop")
        if self.method not in ("ed", "analytic"):
            raise ConfigError(f"unknown method {self.method!r}")
        if self.method == "analytic" and self.model != "xy":
            raise ConfigError("analytic method is only available for the xy model")
        bad = [m for m in self.measures if m not in MEASURES]
        if bad:
            raise ConfigError(f"unknown measures {bad}")
        if self.policy not in ("all_subsets", "contiguous_blocks"):
            raise ConfigError(f"unknown policy {self.policy!r}")
        if self.model in ("xy", "j1j2_chain") and self.method == "ed" and not self.n:
            raise ConfigError(f"model {self.model} needs n")
        if self.model in ("j1j2_square", "shastry_sutherland") and not (self.nx and self.ny):
            raise ConfigError(f"model {self.model} needs nx and ny")

    def grid(self) -> np.ndarray:
        count = int(math.floor((self.stop - self.start) / self.step + 1e-9)) + 1
        return np.round(self.start + self.step * np.arange(count), 12)

    def partition_policy(self) -> PartitionPolicy:
        if self.max_block is None and self.policy == "all_subsets":
            return default_policy(self.n_sites, self.method)
        return PartitionPolicy(self.policy, self.max_block)


@dataclass
class SweepRecord:
    model: str
    n: int
    method: str
    param: float
    energy0: float | None = None
    energy1: float | None = None
    gap: float | None = None
    degenerate: bool | None = None
    ggm: float | None = None
    lambda_max_sq: float | None = None
    argmax_partition: str | None = None
    concurrence: float | None = None
    logneg: float | None = None
    discord_left: float | None = None
    discord_right: float | None = None
    mutual_info: float | None = None
    shared_purity: float | None = None
    entropy_half_block: float | None = None
    wall_time: float = 0.0
    errors: dict[str, str] = field(default_factory=dict)


# --------------------------------------------------------------------------
# Single sweep point
# --------------------------------------------------------------------------

def _pair_measures(rec: SweepRecord, rho, wanted) -> None:
    def guarded(name, fn):
        try:
            fn()
        except QSpinError as exc:
            rec.errors[name] = type(exc).__name__

    if "concurrence" in wanted:
        guarded("concurrence", lambda: setattr(rec, "concurrence", qm.concurrence(rho)))
    if "logneg" in wanted:
        guarded("logneg", lambda: setattr(rec, "logneg", qm.logarithmic_negativity(rho)))
    if "discord" in wanted:
        guarded("discord_left", lambda: setattr(rec, "discord_left", qm.quantum_discord(rho, "left")))
        guarded("discord_right", lambda: setattr(rec, "discord_right", qm.quantum_discord(rho, "right")))
    if "mi" in wanted:
        guarded("mutual_info", lambda: setattr(rec, "mutual_info", qm.mutual_information(rho)))
    if "shared_purity" in wanted:
        guarded("shared_purity", lambda: setattr(rec, "shared_purity", qm.shared_purity(rho)[2]))


def _ed_point(cfg: SweepConfig, param: float) -> SweepRecord:
    model = build_model(cfg.model, param, n=cfg.n, nx=cfg.nx, ny=cfg.ny, gamma=cfg.gamma)
    rec = SweepRecord(cfg.model, model.n_sites, "ed", float(param))
    spec = ground_spectrum(model, k=2, seed=cfg.seed)
    rec.energy0, rec.energy1 = (float(e) for e in spec.energies)
    rec.gap, rec.degenerate = spec.gap, spec.degenerate
    psi = spec.ground_state
    if "ggm" in cfg.measures:
        res = ggm(psi, cfg.partition_policy(), symmetries=symmetry_permutations(model),
                  degenerate_input=spec.degenerate)
        rec.ggm, rec.lambda_max_sq = res.value, res.lambda_max_sq
        rec.argmax_partition = res.argmax_partition.hex()
    rho = reduced_density_matrix(psi, 0b11)
    _pair_measures(rec, rho, cfg.measures)
    if "entropy" in cfg.measures:
        half = reduced_density_matrix(psi, mask_of(range(model.n_sites // 2)))
        rec.entropy_half_block = qm.von_neumann_entropy(half)
    return rec


def _analytic_point(cfg: SweepConfig, param: float) -> SweepRecord:
    rec = SweepRecord("xy", 0, "analytic", float(param))
    policy = cfg.partition_policy()
    max_block = min(policy.max_block or 3, 3)
    table = xy_analytic.correlators(cfg.gamma, param, rmax=max(max_block - 1, 1))
    tops = [np.linalg.eigvalsh(xy_analytic.block_rdm(table, L))[-1]
            for L in range(1, max_block + 1)]
    best = int(np.argmax(tops))
    if "ggm" in cfg.measures:
        rec.lambda_max_sq = float(tops[best])
        rec.ggm = 1.0 - rec.lambda_max_sq
        rec.argmax_partition = f"{(1 << (best + 1)) - 1:#x}"
    rho = xy_analytic.block_rdm(table, 2)
    _pair_measures(rec, rho, cfg.measures)
    return rec


def run_point(cfg: SweepConfig, param: float) -> SweepRecord:
    t0 = time.perf_counter()
    try:
        rec = _analytic_point(cfg, param) if cfg.method == "analytic" else _ed_point(cfg, param)
    except QSpinError as exc:
        n = 0 if cfg.method == "analytic" else cfg.n_sites
        rec = SweepRecord(cfg.model, n, cfg.method, float(param))
        rec.errors["point"] = type(exc).__name__
        log.warning("%s at %s=%g: %s", type(exc).__name__, cfg.param_name, param, exc)
    rec.wall_time = time.perf_counter() - t0
    return rec


_NUMERIC_TAGS = frozenset([NumericalFailure.__name__]
                          + [c.__name__ for c in NumericalFailure.__subclasses__()])


def failed_numerically(rec: SweepRecord) -> bool:
    """True when any field of ``rec`` carries a numerical-failure tag."""
    return any(tag in _NUMERIC_TAGS for tag in rec.errors.values())


def _run_point_args(args):
    return run_point(*args)


def run_sweep(cfg: SweepConfig, params=None) -> list[SweepRecord]:
    """One record per grid point, sorted by parameter."""
    cfg.validate()
    grid = cfg.grid() if params is None else np.asarray(params, dtype=float)
    if cfg.method == "ed":
        # size errors are configuration errors, not per-point failures
        model = build_model(cfg.model, float(grid[0]), n=cfg.n, nx=cfg.nx, ny=cfg.ny,
                            gamma=cfg.gamma)
        check_size(model.n_sites, model.geometry)
    jobs = [(cfg, float(p)) for p in grid]
    if cfg.jobs > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            records = list(pool.map(_run_point_args, jobs))
    else:
        records = [run_point(c, p) for c, p in jobs]
    return sorted(records, key=lambda r: r.param)


# --------------------------------------------------------------------------
# Derivatives and transition detection
# --------------------------------------------------------------------------

def _series(records, field_name):
    pts = [(r.param, getattr(r, field_name)) for r in records]
    pts = [(p, v) for p, v in pts if v is not None and not
           (isinstance(v, float) and math.isnan(v))]
    x = np.array([p for p, _ in pts], dtype=float)
    y = np.array([v for _, v in pts], dtype=float)
    return x, y


def central_derivative(records, field_name: str = "ggm", rtol: float = 1e-6):
    """Central differences at interior points of a uniform grid."""
    x, y = _series(records, field_name)
    if len(x) < 3:
        raise ValueError("need at least three records")
    dx = np.diff(x)
    if np.max(np.abs(dx - dx[0])) > rtol * abs(dx[0]):
        raise NonUniformGrid("parameter grid is not uniform")
    d = (y[2:] - y[:-2]) / (x[2:] - x[:-2])
    return list(zip(x[1:-1].tolist(), d.tolist()))


@dataclass
class Thresholds:
    derivative_factor: float = 5.0
    kink_factor: float = 5.0
    jump_threshold: float = 0.02
    vanish_tol: float = 1e-6


@dataclass
class Candidate:
    param: float
    kind: str
    magnitude: float
    gap_min_param: float | None = None


@dataclass
class TransitionReport:
    field: str
    candidates: list[Candidate]

    def of_kind(self, kind):
        return [c for c in self.candidates if c.kind == kind]

    def in_window(self, lo, hi, kinds=None):
        return [c for c in self.candidates
                if lo <= c.param <= hi and (kinds is None or c.kind in kinds)]


def _local_maxima(v: np.ndarray) -> list[int]:
    """Interior indices with ``v[i] > v[i-1]`` and ``v[i] >= v[i+1]``."""
    return [i for i in range(1, len(v) - 1) if v[i] > v[i - 1] and v[i] >= v[i + 1]]


def _gap_minima(records, x):
    gx, g = _series(records, "gap")
    if len(g) < 3:
        return []
    return [gx[i] for i in range(1, len(g) - 1) if g[i] <= g[i - 1] and g[i] <= g[i + 1]]


def detect_transitions(records, field_name: str = "ggm",
                       thresholds: Thresholds | None = None) -> TransitionReport:
    th = thresholds or Thresholds()
    x, y = _series(records, field_name)
    if len(x) < 5:
        raise ValueError("need at least five records")
    h = float(np.median(np.diff(x)))
    eps = 1e-9 * h
    found: list[Candidate] = []

    jumps = np.diff(y)
    gap_mins = _gap_minima(records, x)
    for i in np.flatnonzero(np.abs(jumps) > th.jump_threshold):
        mid = 0.5 * (x[i] + x[i + 1])
        near = [g for g in gap_mins if abs(g - mid) <= h + eps]
        found.append(Candidate(float(mid), "jump", float(abs(jumps[i])),
                               float(min(near, key=lambda g: abs(g - mid))) if near else None))
    jump_at = [c.param for c in found]

    def near_jump(p):
        return any(abs(p - j) <= 1.5 * h + eps for j in jump_at)

    floor = 1e-12 * max(1.0, float(np.max(np.abs(y))))
    deriv = np.abs((y[2:] - y[:-2]) / (x[2:] - x[:-2]))
    dmed = float(np.median(deriv))
    for i in _local_maxima(deriv):
        if deriv[i] > th.derivative_factor * dmed and deriv[i] * h > floor \
                and not near_jump(x[i + 1]):
            found.append(Candidate(float(x[i + 1]), "derivative_peak", float(deriv[i])))

    second = np.abs(y[2:] - 2 * y[1:-1] + y[:-2])
    smed = float(np.median(second))
    for i in _local_maxima(second):
        if second[i] > th.kink_factor * smed and second[i] > floor and not near_jump(x[i + 1]):
            found.append(Candidate(float(x[i + 1]), "kink", float(second[i] / h)))

    below = y < th.vanish_tol
    if below[-1] and not below.all():
        first = int(len(y) - np.argmin(below[::-1]))
        if 0 < first < len(y) - 1:
            found.append(Candidate(float(x[first]), "vanishing", float(y[first - 1])))

    found = [c for c in found if x[0] < c.param < x[-1]]
    found.sort(key=lambda c: (c.param, c.kind))
    return TransitionReport(field_name, found)


# --------------------------------------------------------------------------
# Persistence
# --------------------------------------------------------------------------

def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _write_rows(records, fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in records:
        row = []
        for col in CSV_COLUMNS:
            if col in r.errors:
                row.append(f"error:{r.errors[col]}")
            elif col == "ggm" and "point" in r.errors:
                row.append(f"error:{r.errors['point']}")
            else:
                row.append(_fmt(getattr(r, col)))
        w.writerow(row)


def write_csv(records, path) -> None:
    """Write records to ``path`` (a filename or an open text stream)."""
    if hasattr(path, "write"):
        _write_rows(records, path)
        return
    try:
        with open(path, "w", newline="") as fh:
            _write_rows(records, fh)
    except OSError as exc:
        raise IoError(str(exc)) from exc


def read_csv(path) -> list[SweepRecord]:
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise IoError(str(exc)) from exc
    records = []
    with fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
            raise ParseError("unexpected CSV header", line=1)
        for lineno, row in enumerate(reader, start=2):
            rec = SweepRecord(row["model"], int(row["n"]), row["method"], float(row["param"]))
            for col in CSV_COLUMNS[4:]:
                val = row[col]
                if val == "":
                    continue
                if val.startswith("error:"):
                    rec.errors[col] = val[len("error:"):]
                    continue
                try:
                    if col == "degenerate":
                        rec.degenerate = val == "true"
                    elif col == "argmax_partition":
                        rec.argmax_partition = val
                    else:
                        setattr(rec, col, float(val))
                except ValueError:
                    raise ParseError(f"bad value {val!r} in column {col}", line=lineno,
                                     key=col) from None
            records.append(rec)
    return records


_CONFIG_FIELDS = {f.name: f for f in dataclasses.fields(SweepConfig)}


def _config_value(key, raw):
    if key in ("n", "nx", "ny", "max_block"):
        return None if raw in ("", "none") else int(raw)
    if key in ("seed", "jobs"):
        return int(raw)
    if key in ("gamma", "start", "stop", "step"):
        return float(raw)
    if key == "measures":
        return tuple(m.strip() for m in raw.split(",") if m.strip())
    if key == "out":
        return raw or None
    return raw


def config_to_text(cfg: SweepConfig) -> str:
    lines = []
    for key in _CONFIG_FIELDS:
        val = getattr(cfg, key)
        if key == "measures":
            val = ",".join(val)
        elif isinstance(val, float):
            val = repr(val)
        elif val is None:
            val = ""
        lines.append(f"{key}={val}")
    return "\n".join(lines) + "\n"


def parse_config(text: str) -> SweepConfig:
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, raw = line.partition("=")
        key, raw = key.strip(), raw.strip()
        if not sep:
            raise ParseError(f"expected key=value, got {line!r}", line=lineno, key=key)
        if key not in _CONFIG_FIELDS:
            raise ParseError(f"unknown key {key!r}", line=lineno, key=key)
        try:
            values[key] = _config_value(key, raw)
        except ValueError:
            raise ParseError(f"bad value {raw!r} for key {key!r}", line=lineno,
                             key=key) from None
    return SweepConfig(**values)


def write_config(cfg: SweepConfig, path) -> None:
    try:
        Path(path).write_text(config_to_text(cfg))
    except OSError as exc:
        raise IoError(str(exc)) from exc


def read_config(path) -> SweepConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise IoError(str(exc)) from exc
    return parse_config(text)
