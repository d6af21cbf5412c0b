"""Seeded parameter sweeps that emit CSV result tables.

A run walks a grid of (model, cluster, fading shape, path-loss exponent)
points, or (direction, model, shape, exponent, beta, theta) points for
coverage, and turns each point into one or more ``ResultRow`` records.
Rows are always emitted in grid order: analytic points first, then Monte
Carlo points. A grid point that fails produces an error row and the run
goes on.
"""

from __future__ import annotations

import csv
import io
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields, replace
from typing import Iterable, Iterator, TextIO

from .analytic import accuracy
from .cluster import ClusterSpec, Pairing
from .coverage import CoverageConfig, coverage_mc
from .errors import NomaAccuracyError, NumericalError, ParameterError
from .geometry import Mcp, PppVoronoi, Tcp
from .montecarlo import estimate_accuracy
from .numerics import FadingModel

CSV_HEADER = (
    "kind",
    "model",
    "alpha",
    "m",
    "n_users",
    "pool_size",
    "selection",
    "theta",
    "beta",
    "ranking",
    "method",
    "value",
    "error",
    "n_samples",
    "seed",
    "runtime_ms",
)

KINDS = ("accuracy-analytic", "accuracy-mc", "coverage-mc", "sweep")
MODEL_NAMES = ("ppp", "mcp", "tcp")
DIRECTIONS = ("uplink", "downlink")
ERROR_METHOD = "error"
VORONOI_METHOD = "monte-carlo-voronoi"
DEFAULT_ACCURACY_SAMPLES = 10**6
DEFAULT_COVERAGE_SAMPLES = 10**5
SIGNIFICANT_DIGITS = 9


class OutputError(NomaAccuracyError, OSError):
    """The result table could not be written."""


def format_float(x: float) -> str:
    return format(float(x), f".{SIGNIFICANT_DIGITS}g")


def _rounded(x):
    # store floats exactly as they will be printed so rows round-trip
    return None if x is None else float(format_float(x))


def format_selection(selection) -> str:
    return "-".join(str(int(v)) for v in selection)


def parse_selection(text: str) -> tuple:
    """Parse ``1-3`` or ``1,3`` into a rank tuple."""
    parts = [p for p in text.replace(",", "-").replace(" ", "").split("-") if p]
    if not parts:
        raise ParameterError(f"empty selection {text!r}")
    try:
        return tuple(int(p) for p in parts)
    except ValueError:
        raise ParameterError(f"selection must list integer ranks, got {text!r}") from None


@dataclass(frozen=True)
class ResultRow:
    """One CSV record. ``reason`` is only set on error rows."""

    kind: str
    model: str | None = None
    alpha: float | None = None
    m: float | None = None
    n_users: int | None = None
    pool_size: int | None = None
    selection: tuple | None = None
    theta: float | None = None
    beta: float | None = None
    ranking: str | None = None
    method: str = ERROR_METHOD
    value: float | None = None
    error: float | None = None
    n_samples: int | None = None
    seed: int | None = None
    runtime_ms: int | None = None
    reason: str | None = None

    def __post_init__(self):
        for name in ("alpha", "m", "theta", "beta", "value", "error"):
            object.__setattr__(self, name, _rounded(getattr(self, name)))
        if self.selection is not None:
            object.__setattr__(self, "selection", tuple(int(v) for v in self.selection))
        if self.value is not None and not 0.0 <= self.value <= 1.0:
            raise ParameterError(f"row value {self.value} outside [0, 1]")
        if self.error is not None and not self.error >= 0.0:
            raise ParameterError(f"row error {self.error} is negative")

    @property
    def failed(self) -> bool:
        return self.method == ERROR_METHOD

    def to_record(self) -> list:
        out = []
        for name in CSV_HEADER:
            v = getattr(self, name)
            if v is None:
                out.append("")
            elif name == "selection":
                out.append(format_selection(v))
            elif isinstance(v, float):
                out.append(format_float(v))
            else:
                out.append(str(v))
        return out

    @classmethod
    def from_record(cls, record, reason: str | None = None) -> "ResultRow":
        if len(record) != len(CSV_HEADER):
            raise ParameterError(f"expected {len(CSV_HEADER)} fields, got {len(record)}")
        kw = {}
        for name, text in zip(CSV_HEADER, record):
            if text == "":
                kw[name] = None if name != "method" else ERROR_METHOD
            elif name == "selection":
                kw[name] = parse_selection(text)
            elif name in ("alpha", "m", "theta", "beta", "value", "error"):
                kw[name] = float(text)
            elif name in ("n_users", "pool_size", "n_samples", "seed", "runtime_ms"):
                kw[name] = int(text)
            else:
                kw[name] = text
        return cls(reason=reason, **kw)


def write_rows(rows: Iterable[ResultRow], stream: TextIO, comments: Iterable[str] = ()) -> None:
    """CSV with ``#`` comment lines first; error reasons follow their row."""
    for line in comments:
        stream.write(f"# {line}\n")
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for row in rows:
        writer.writerow(row.to_record())
        if row.reason:
            stream.write(f"# reason: {' '.join(row.reason.split())}\n")


def read_rows(stream: TextIO) -> list:
    """Inverse of ``write_rows`` (comment lines other than reasons are skipped)."""
    rows: list = []
    header_seen = False
    for line in stream:
        line = line.rstrip("\n")
        if line.startswith("#"):
            text = line[1:].strip()
            if text.startswith("reason:") and rows:
                rows[-1] = replace(rows[-1], reason=text[len("reason:"):].strip())
            continue
        if not line:
            continue
        record = next(csv.reader([line]))
        if not header_seen:
            if tuple(record) != CSV_HEADER:
                raise ParameterError(f"unexpected CSV header {record}")
            header_seen = True
            continue
        rows.append(ResultRow.from_record(record))
    return rows


def csv_body(text: str) -> str:
    """Non-comment lines of a result table, for reproducibility checks."""
    return "".join(line for line in text.splitlines(keepends=True) if not line.startswith("#"))


# ---------------------------------------------------------------------------
# Configuration


def _as_tuple(value) -> tuple:
    if isinstance(value, (list, tuple)):
        return tuple(value)
    return (value,)


@dataclass(frozen=True)
class ExperimentConfig:
    """Grid description plus the fixed scenario parameters.

    Defaults follow the simulation setup used for the accuracy figures:
    BS intensity 0.0005, cluster radius 20, scattering variance 25 and unit
    mean channel power.
    """

    kind: str = "accuracy-analytic"
    models: tuple = MODEL_NAMES
    alphas: tuple = (4.0,)
    shapes: tuple = (1.0,)
    n_users: tuple = (2,)
    pairings: tuple = ()
    thetas: tuple = (1.0,)
    betas: tuple = (0.0,)
    directions: tuple = ("uplink",)
    msp_modes: tuple = ("first_term",)
    lam: float = 0.0005
    radius: float = 20.0
    sigma2: float = 25.0
    omega: float = 1.0
    a1: float = 0.3
    a2: float = 0.7
    p_tx: float = 1.0
    p_bs: float = 1.0
    noise: float = 0.0
    seed: int = 0
    n_samples: int | None = None
    voronoi: bool = False
    workers: int = 1
    timing: bool = True
    output_path: str | None = None
    notes: tuple = ()

    def __post_init__(self):
        for name in ("models", "alphas", "shapes", "n_users", "pairings", "thetas", "betas", "directions", "msp_modes", "notes"):
            object.__setattr__(self, name, _as_tuple(getattr(self, name)))
        object.__setattr__(self, "alphas", tuple(float(a) for a in self.alphas))
        object.__setattr__(self, "shapes", tuple(float(s) for s in self.shapes))
        object.__setattr__(self, "thetas", tuple(float(t) for t in self.thetas))
        object.__setattr__(self, "betas", tuple(float(b) for b in self.betas))
        if self.kind not in KINDS:
            raise ParameterError(f"kind must be one of {KINDS}, got {self.kind!r}")
        for name in ("models", "alphas", "shapes"):
            if not getattr(self, name):
                raise ParameterError(f"grid axis {name} is empty")
        if not (self.n_users or self.pairings):
            raise ParameterError("grid needs cluster sizes or pairings")
        if self.kind == "coverage-mc":
            for name in ("thetas", "betas", "directions", "msp_modes"):
                if not getattr(self, name):
                    raise ParameterError(f"grid axis {name} is empty")
        bad = [m for m in self.models if m not in MODEL_NAMES]
        if bad:
            raise ParameterError(f"unknown model(s) {bad}; choose from {MODEL_NAMES}")
        bad = [d for d in self.directions if d not in DIRECTIONS]
        if bad:
            raise ParameterError(f"unknown direction(s) {bad}")
        if any(not isinstance(p, Pairing) for p in self.pairings):
            raise ParameterError("pairings must be Pairing instances")
        if int(self.seed) != self.seed or self.seed < 0 or self.seed >= 2**64:
            raise ParameterError(f"seed must be an unsigned 64-bit integer, got {self.seed}")
        if self.n_samples is not None and (int(self.n_samples) != self.n_samples or self.n_samples < 1):
            raise ParameterError(f"sample count must be a positive integer, got {self.n_samples}")
        if int(self.workers) != self.workers or self.workers < 1:
            raise ParameterError(f"workers must be a positive integer, got {self.workers}")
        # scenario constants are checked here so a typo fails before the run
        for name in ("ppp", "mcp", "tcp"):
            if name in self.models:
                self.distance_model(name)
        FadingModel(1.0, self.omega)

    def distance_model(self, name: str):
        if name == "ppp":
            return PppVoronoi(self.lam)
        if name == "mcp":
            return Mcp(self.radius)
        if name == "tcp":
            return Tcp(self.sigma2)
        raise ParameterError(f"unknown model {name!r}")

    def samples_for(self, kind: str) -> int:
        if self.n_samples is not None:
            return int(self.n_samples)
        return DEFAULT_COVERAGE_SAMPLES if kind == "coverage-mc" else DEFAULT_ACCURACY_SAMPLES

    def header_lines(self) -> list:
        lines = [f"noma-accuracy kind={self.kind} seed={self.seed}"]
        lines.append(
            f"scenario lam={format_float(self.lam)} radius={format_float(self.radius)} "
            f"sigma2={format_float(self.sigma2)} omega={format_float(self.omega)}"
        )
        if self.kind == "coverage-mc":
            lines.append(
                f"coverage a1={format_float(self.a1)} a2={format_float(self.a2)} p_tx={format_float(self.p_tx)} "
                f"p_bs={format_float(self.p_bs)} noise={format_float(self.noise)} msp_modes={','.join(self.msp_modes)}"
            )
        if self.kind != "accuracy-analytic":
            lines.append(f"n_samples={self.samples_for(self.kind)}")
        if self.voronoi:
            lines.append(f"ppp {VORONOI_METHOD} rows simulate the typical Voronoi cell instead of the distance approximation")
        lines.extend(self.notes)
        return lines


# ---------------------------------------------------------------------------
# Grid points


@dataclass(frozen=True)
class _AccuracyPoint:
    model: str
    alpha: float
    shape: float
    n_users: int
    pairing: Pairing | None


@dataclass(frozen=True)
class _CoveragePoint:
    direction: str
    model: str
    alpha: float
    shape: float
    beta: float
    theta: float


def _clusters(cfg: ExperimentConfig) -> list:
    out = [(int(n), None) for n in cfg.n_users]
    out += [(len(p.selection), p) for p in cfg.pairings]
    return out


def accuracy_points(cfg: ExperimentConfig) -> list:
    return [
        _AccuracyPoint(model, alpha, shape, n, pairing)
        for model in cfg.models
        for n, pairing in _clusters(cfg)
        for shape in cfg.shapes
        for alpha in cfg.alphas
    ]


def coverage_points(cfg: ExperimentConfig) -> list:
    return [
        _CoveragePoint(direction, model, alpha, shape, beta, theta)
        for direction in cfg.directions
        for model in cfg.models
        for shape in cfg.shapes
        for alpha in cfg.alphas
        for beta in cfg.betas
        for theta in cfg.thetas
    ]


def _point_fields(p: _AccuracyPoint) -> dict:
    return dict(
        model=p.model,
        alpha=p.alpha,
        m=p.shape,
        n_users=p.n_users,
        pool_size=None if p.pairing is None else p.pairing.pool_size,
        selection=None if p.pairing is None else p.pairing.selection,
    )


def _cluster_spec(cfg: ExperimentConfig, p: _AccuracyPoint) -> ClusterSpec:
    return ClusterSpec(
        cfg.distance_model(p.model),
        p.alpha,
        FadingModel(p.shape, cfg.omega),
        p.n_users,
        p.pairing,
    )


def _elapsed_ms(cfg: ExperimentConfig, start: float) -> int | None:
    return int(round((time.perf_counter() - start) * 1000)) if cfg.timing else None


def _error_row(kind: str, base: dict, exc: Exception) -> ResultRow:
    tag = "numerical" if isinstance(exc, NumericalError) else "parameter"
    return ResultRow(kind, method=ERROR_METHOD, reason=f"{tag}: {exc}", **base)


def _analytic_rows(cfg: ExperimentConfig, p: _AccuracyPoint) -> list:
    base = _point_fields(p)
    start = time.perf_counter()
    try:
        est = accuracy(_cluster_spec(cfg, p), mc_fallback=False)
    except (NomaAccuracyError, ValueError, ArithmeticError) as exc:
        return [_error_row("accuracy-analytic", base, exc)]
    return [
        ResultRow(
            "accuracy-analytic",
            method=est.method,
            value=est.value,
            error=est.error_bound,
            runtime_ms=_elapsed_ms(cfg, start),
            **base,
        )
    ]


def _mc_rows(cfg: ExperimentConfig, p: _AccuracyPoint) -> list:
    base = _point_fields(p)
    voronoi = cfg.voronoi and p.model == "ppp"
    start = time.perf_counter()
    n = cfg.samples_for("accuracy-mc")
    try:
        est = estimate_accuracy(_cluster_spec(cfg, p), n, cfg.seed, ground_truth_voronoi=voronoi)
    except (NomaAccuracyError, ValueError, ArithmeticError) as exc:
        return [_error_row("accuracy-mc", base, exc)]
    return [
        ResultRow(
            "accuracy-mc",
            method=VORONOI_METHOD if voronoi else "monte-carlo",
            value=est.estimate,
            error=est.stderr,
            n_samples=est.n_samples,
            seed=est.seed,
            runtime_ms=_elapsed_ms(cfg, start),
            **base,
        )
    ]


def _ranking_label(mode: str) -> str:
    return "msp-" + mode.replace("_", "-")


def _coverage_rows(cfg: ExperimentConfig, p: _CoveragePoint) -> list:
    kind = f"coverage-{p.direction}"
    base = dict(model=p.model, alpha=p.alpha, m=p.shape, n_users=2, theta=p.theta, beta=p.beta)
    start = time.perf_counter()
    n = cfg.samples_for("coverage-mc")
    try:
        cov = coverage_mc(
            CoverageConfig(
                direction=p.direction,
                theta=p.theta,
                beta=p.beta,
                p_tx=cfg.p_tx,
                p_bs=cfg.p_bs,
                a1=cfg.a1,
                a2=cfg.a2,
                noise=cfg.noise,
                model=cfg.distance_model(p.model),
                alpha=p.alpha,
                fading=FadingModel(p.shape, cfg.omega),
                lam=cfg.lam,
                msp_mode=cfg.msp_modes[0],
            ),
            n,
            cfg.seed,
        )
    except (NomaAccuracyError, ValueError, ArithmeticError) as exc:
        return [_error_row(kind, base, exc)]
    ms = _elapsed_ms(cfg, start)
    results = [("isp", cov.isp)] + [(_ranking_label(mode), cov.msp_by_mode[mode]) for mode in cfg.msp_modes]
    rows = []
    for label, res in results:
        # the user rank goes in the selection column: 1 near, 2 far
        for rank, est in ((1, res.p_cov_near), (2, res.p_cov_far)):
            rows.append(
                ResultRow(
                    kind,
                    selection=(rank,),
                    ranking=label,
                    method="monte-carlo",
                    value=est.estimate,
                    error=est.stderr,
                    n_samples=est.n_samples,
                    seed=est.seed,
                    runtime_ms=ms,
                    **base,
                )
            )
    return rows


def _tasks(cfg: ExperimentConfig) -> list:
    if cfg.kind == "coverage-mc":
        return [(_coverage_rows, p) for p in coverage_points(cfg)]
    pts = accuracy_points(cfg)
    tasks = []
    if cfg.kind in ("accuracy-analytic", "sweep"):
        tasks += [(_analytic_rows, p) for p in pts]
    if cfg.kind in ("accuracy-mc", "sweep"):
        tasks += [(_mc_rows, p) for p in pts]
    return tasks


def evaluate(config: ExperimentConfig) -> Iterator[ResultRow]:
    """Rows for every grid point, in grid order whatever the worker count."""
    tasks = _tasks(config)
    if config.workers <= 1:
        for fn, p in tasks:
            yield from fn(config, p)
        return
    with ThreadPoolExecutor(max_workers=config.workers) as pool:
        for rows in pool.map(lambda t: t[0](config, t[1]), tasks):
            yield from rows


# ---------------------------------------------------------------------------
# Running and reporting


@dataclass
class RunReport:
    rows: list
    output_path: str | None
    parameter_failures: int = 0
    numerical_failures: int = 0

    @property
    def exit_code(self) -> int:
        if self.numerical_failures:
            return 2
        if self.parameter_failures:
            return 1
        return 0


def _cell(x, width: int, spec: str) -> str:
    return f"{'':>{width}}" if x is None else f"{x:>{width}{spec}}"


def summary_table(rows: Iterable[ResultRow]) -> str:
    lines = [f"{'kind':<18} {'model':<5} {'alpha':>6} {'m':>5} {'N':>2} {'M':>2} {'sel':<6} {'theta':>9} {'beta':>5} {'ranking':<18} {'value':>10} {'error':>10}"]
    for r in rows:
        value = "FAILED" if r.failed else f"{r.value:.6f}"
        err = "" if r.error is None else f"{r.error:.2e}"
        lines.append(
            f"{r.kind:<18} {r.model or '':<5} {_cell(r.alpha, 6, '.3g')} {_cell(r.m, 5, '.3g')} "
            f"{_cell(r.n_users, 2, '')} {_cell(r.pool_size, 2, '')} "
            f"{format_selection(r.selection) if r.selection else '':<6} {_cell(r.theta, 9, '.4g')} "
            f"{_cell(r.beta, 5, '.3g')} {r.ranking or '':<18} {value:>10} {err:>10}"
        )
    return "\n".join(lines)


def _open_output(path: str | None):
    if path is None or path == "-":
        return None
    try:
        return open(path, "w", encoding="utf-8", newline="")
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc}") from exc


def run(config: ExperimentConfig, stream: TextIO | None = None, summary: TextIO | None = None) -> RunReport:
    """Evaluate the grid, write the CSV table and echo a summary.

    The table goes to ``config.output_path`` when set, else to ``stream``
    (stdout by default). The output file is opened before any work starts
    so an unwritable path fails fast.
    """
    handle = _open_output(config.output_path)
    rows = []
    try:
        rows = list(evaluate(config))
        target = handle if handle is not None else (stream if stream is not None else sys.stdout)
        buf = io.StringIO()
        write_rows(rows, buf, config.header_lines())
        try:
            target.write(buf.getvalue())
            target.flush()
        except OSError as exc:
            raise OutputError(f"cannot write results: {exc}") from exc
    finally:
        if handle is not None:
            handle.close()
    report = RunReport(rows, config.output_path)
    for r in rows:
        if r.failed:
            if r.reason and r.reason.startswith("numerical"):
                report.numerical_failures += 1
            else:
                report.parameter_failures += 1
    if summary is not None:
        summary.write(summary_table(rows) + "\n")
    return report


# ---------------------------------------------------------------------------
# Figure presets

FIGURES = ("fig1", "fig2", "fig3", "fig4", "fig5", "fig6")
ALPHA_GRID = (2.5, 3.0, 3.5, 4.0, 4.5, 5.0, 5.5, 6.0)
THETA_DB_GRID = (-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0)
PRESET_MC_SAMPLES = 10**5
PAIRING_GRID = (
    Pairing(2, (1, 2)),
    Pairing(3, (1, 3)),
    Pairing(4, (1, 4)),
    Pairing(6, (1, 6)),
    Pairing(3, (1, 2, 3)),
    Pairing(5, (1, 3, 5)),
)


def preset(figure: str) -> ExperimentConfig:
    """Config reproducing one figure of the accuracy/coverage study.

    Stated scenario parameters are used verbatim; grids and sample counts
    the source leaves open are listed in the header comments.
    """
    mc_note = "Monte Carlo sample count per point is a module default"
    if figure == "fig3":
        return ExperimentConfig(
            kind="sweep",
            alphas=ALPHA_GRID,
            n_users=(2, 3),
            n_samples=PRESET_MC_SAMPLES,
            voronoi=True,
            notes=("Rayleigh fading; alpha grid 2.5..6 step 0.5 is a module default", mc_note),
        )
    if figure == "fig4":
        return ExperimentConfig(
            kind="sweep",
            alphas=ALPHA_GRID,
            shapes=(0.5, 1.0, 2.0),
            n_users=(2, 3),
            n_samples=PRESET_MC_SAMPLES,
            voronoi=True,
            notes=("Nakagami shapes 0.5, 1, 2; alpha grid 2.5..6 step 0.5 is a module default", mc_note),
        )
    if figure == "fig5":
        return ExperimentConfig(
            kind="accuracy-analytic",
            alphas=(4.0,),
            shapes=(0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0),
            n_users=(2, 3),
            notes=("alpha = 4; shape grid 0.5..4 step 0.5 is a module default",),
        )
    if figure == "fig6":
        return ExperimentConfig(
            kind="sweep",
            alphas=ALPHA_GRID,
            n_users=(),
            pairings=PAIRING_GRID,
            n_samples=PRESET_MC_SAMPLES,
            voronoi=True,
            notes=(
                "Rayleigh fading; pool sizes and rank sets "
                + " ".join(f"{p.pool_size}:{p.label()}" for p in PAIRING_GRID)
                + " are module defaults",
                mc_note,
            ),
        )
    if figure in ("fig1", "fig2"):
        direction = "uplink" if figure == "fig1" else "downlink"
        return ExperimentConfig(
            kind="coverage-mc",
            models=("mcp",),
            alphas=(4.0,),
            n_users=(2,),
            thetas=tuple(10 ** (db / 10.0) for db in THETA_DB_GRID),
            betas=(0.0, 0.5),
            directions=(direction,),
            msp_modes=("first_term", "unconditional"),
            lam=1e-4,
            radius=10.0,
            noise=0.0,
            n_samples=PRESET_MC_SAMPLES,
            notes=(
                "theta grid -10..20 dB step 5 (written as linear values) is a module default",
                mc_note,
            ),
        )
    raise ParameterError(f"unknown figure {figure!r}; choose from {FIGURES}")


def reproduce(figure: str, output_path: str | None = None, summary: TextIO | None = None, **overrides) -> RunReport:
    """Run a figure preset; keyword overrides replace preset fields."""
    cfg = preset(figure)
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = set(overrides) - known
    if unknown:
        raise ParameterError(f"unknown config fields {sorted(unknown)}")
    cfg = replace(cfg, output_path=output_path, **overrides)
    cfg = replace(cfg, notes=(f"preset {figure}",) + cfg.notes)
    return run(cfg, summary=summary)


__all__ = [
    "CSV_HEADER",
    "ExperimentConfig",
    "FIGURES",
    "OutputError",
    "ResultRow",
    "RunReport",
    "csv_body",
    "evaluate",
    "preset",
    "read_rows",
    "reproduce",
    "run",
    "write_rows",
]
