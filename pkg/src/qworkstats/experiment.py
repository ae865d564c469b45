"""Parameter sweeps: configuration, per-point pipeline, CSV/JSON emission."""
from __future__ import annotations

import csv
import json
import logging
import math
import platform
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from . import __version__
from .analytic import LRTParams, lrt_moments, wn_moments
from .lattice import Graph, cycle_graph, graph_diameter, heavy_hex_layout, load_graph, path_graph
from .oracle import MAX_TABLE_QUBITS, exact_tpm_distribution
from .protocol import DriveParams
from .samples import TPMSamples, load_samples
from .sim import DEFAULT_MAX_QUBITS, NoiseSpec, make_rng, parity_filter, run_tpm
from .sqt import DEFAULT_DELTA, DEFAULT_MAX_DIM, ext_sqt_estimate, sqt_from_samples
from .workstats import (ESTIMATOR_TAGS, TUR_TOL_EXACT, WorkStatistics, raw_estimators, tur_bound,
                        variance_std_error, work_values)

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

log = logging.getLogger(__name__)

FAMILIES = ("scan", "coupling", "size", "custom")
SAMPLED = ("raw", "sqt", "ext_sqt")
DEFAULT_SHOTS = 20000
SCAN_TAUS = tuple(round(0.1 * k, 1) for k in range(1, 41))
SCAN_BETAS = (10.0, 5.0, 2.0, 1.0, 0.5, 0.2, 0.1)
COUPLING_GAMMAS = tuple(round(0.25 * k, 2) for k in range(1, 25))
SWEPT = {"scan": "tau", "coupling": "gamma", "size": "n_spin", "custom": "tau"}


class ConfigError(ValueError):
    pass


def _family_defaults(family: str) -> dict:
    from .lattice import LAYOUT_SIZES, SCAN_SIZES

    if family == "scan":
        return dict(n_spin=list(SCAN_SIZES), tau=list(SCAN_TAUS), gamma=[1.0],
                    beta=list(SCAN_BETAS), n_trotter=[10])
    if family == "coupling":
        return dict(n_spin=[15], tau=[1.0], gamma=list(COUPLING_GAMMAS),
                    beta=list(SCAN_BETAS), n_trotter=list(range(1, 9)))
    if family == "size":
        return dict(n_spin=list(LAYOUT_SIZES), tau=[1.0], gamma=[1.0],
                    beta=list(SCAN_BETAS), n_trotter="diameter")
    return dict(n_spin=[5], tau=[1.0], gamma=[1.0], beta=[1.0], n_trotter=[10])


@dataclass(frozen=True)
class GridPoint:
    n_spin: int
    tau: float
    gamma: float
    beta: float
    n_trotter: int


@dataclass
class ExperimentConfig:
    family: str = "scan"
    graph: dict = field(default_factory=lambda: {"kind": "heavy-hex"})
    n_spin: list = field(default_factory=list)
    tau: list = field(default_factory=list)
    gamma: list = field(default_factory=list)
    beta: list = field(default_factory=list)
    n_trotter: list | str = field(default_factory=list)
    shots: int = DEFAULT_SHOTS
    p2: float = 0.0
    p_read: float = 0.0
    estimators: tuple = ESTIMATOR_TAGS
    delta: float = DEFAULT_DELTA
    seed: int = 0
    out: str = "results.csv"
    max_statevector_qubits: int = DEFAULT_MAX_QUBITS
    max_subspace_dim: int = DEFAULT_MAX_DIM
    samples_in: str | None = None
    workers: int = 1

    @classmethod
    def for_family(cls, family: str, **kw) -> "ExperimentConfig":
        if family not in FAMILIES:
            raise ConfigError(f"unknown family {family!r}; expected one of {FAMILIES}")
        base = _family_defaults(family)
        base.update({k: v for k, v in kw.items() if v is not None})
        cfg = cls(family=family, **base)
        cfg.validate()
        return cfg

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        data = dict(data)
        family = data.pop("family", "scan")
        flat: dict = {}
        grid = data.pop("grid", {})
        noise = data.pop("noise", {})
        if not isinstance(grid, dict) or not isinstance(noise, dict):
            raise ConfigError("[grid] and [noise] must be tables")
        for key in grid:
            if key not in ("n_spin", "tau", "gamma", "beta", "n_trotter"):
                raise ConfigError(f"unknown grid key {key!r}")
        for key in noise:
            if key not in ("p2", "p_read"):
                raise ConfigError(f"unknown noise key {key!r}")
        flat.update(grid)
        flat.update(noise)
        known = {f.name for f in fields(cls)}
        for key, value in data.items():
            if key not in known:
                raise ConfigError(f"unknown config key {key!r}")
            flat[key] = value
        if "estimators" in flat:
            flat["estimators"] = tuple(flat["estimators"])
        try:
            return cls.for_family(family, **flat)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_toml(cls, path: str | Path) -> "ExperimentConfig":
        try:
            with open(path, "rb") as fh:
                data = tomllib.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
        return cls.from_dict(data)

    def with_overrides(self, **kw) -> "ExperimentConfig":
        cfg = replace(self, **{k: v for k, v in kw.items() if v is not None})
        cfg.validate()
        return cfg

    def validate(self) -> None:
        if self.family not in FAMILIES:
            raise ConfigError(f"unknown family {self.family!r}")
        for name in ("n_spin", "tau", "gamma", "beta"):
            values = getattr(self, name)
            if not isinstance(values, (list, tuple)) or len(values) == 0:
                raise ConfigError(f"grid {name!r} must be a nonempty list")
        if self.n_trotter != "diameter":
            if not isinstance(self.n_trotter, (list, tuple)) or not self.n_trotter:
                raise ConfigError("grid 'n_trotter' must be a nonempty list or \"diameter\"")
            if any(int(k) != k or k < 1 for k in self.n_trotter):
                raise ConfigError("n_trotter values must be integers >= 1")
        if any(int(n) != n or n < 1 for n in self.n_spin):
            raise ConfigError("n_spin values must be integers >= 1")
        if any(not b >= 1e-3 for b in self.beta):
            raise ConfigError("beta values must be >= 1e-3")
        if any(not t > 0 for t in self.tau):
            raise ConfigError("tau values must be > 0")
        if any(not math.isfinite(g) for g in self.gamma):
            raise ConfigError("gamma values must be finite")
        if int(self.shots) != self.shots or self.shots < 1:
            raise ConfigError("shots must be an integer >= 1")
        if not (0 <= self.p2 <= 1 and 0 <= self.p_read <= 1):
            raise ConfigError("noise probabilities must lie in [0, 1]")
        bad = [e for e in self.estimators if e not in ESTIMATOR_TAGS]
        if bad or not self.estimators:
            raise ConfigError(f"unknown estimators {bad}; choose from {ESTIMATOR_TAGS}")
        if not 0 <= self.delta < 1:
            raise ConfigError("delta must be in [0, 1)")
        if self.max_statevector_qubits < 1 or self.workers < 1 or self.max_subspace_dim < 1:
            raise ConfigError("caps and worker count must be >= 1")
        kind = self.graph.get("kind", "heavy-hex") if isinstance(self.graph, dict) else None
        if kind not in ("heavy-hex", "file", "cycle", "path"):
            raise ConfigError(f"graph kind must be heavy-hex, file, cycle or path, got {kind!r}")
        if kind == "file" and "path" not in self.graph:
            raise ConfigError("graph kind 'file' needs a path")

    def make_graph(self, n_spin: int) -> Graph:
        kind = self.graph.get("kind", "heavy-hex")
        try:
            if kind == "file":
                g = load_graph(self.graph["path"])
                if g.n_vertices != n_spin:
                    raise ConfigError(f"graph file has {g.n_vertices} vertices, grid asks for {n_spin}")
                return g
            if kind == "cycle":
                return cycle_graph(n_spin)
            if kind == "path":
                return path_graph(n_spin)
            return heavy_hex_layout(size_hint=n_spin)
        except (ValueError, OSError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"graph for n_spin={n_spin}: {exc}") from exc

    def grid(self) -> list[GridPoint]:
        """Deterministic row order: n_spin, n_T, gamma, tau, beta."""
        points = []
        for n in self.n_spin:
            if self.n_trotter == "diameter":
                steps = [graph_diameter(self.make_graph(int(n)))]
            else:
                steps = self.n_trotter
            for k in steps:
                for gam in self.gamma:
                    for tau in self.tau:
                        for beta in self.beta:
                            points.append(GridPoint(int(n), float(tau), float(gam), float(beta), int(k)))
        return points

    def echo(self) -> dict:
        d = asdict(self)
        d["estimators"] = list(self.estimators)
        return d


RESULT_COLUMNS = ("n_spin", "n_edges", "beta", "tau", "gamma", "n_T", "estimator_tag", "mean_W",
                  "var_W", "sigma", "tur_bound", "tur_satisfied", "n_samples", "n_kept", "M",
                  "gibbs_mass", "seed")


@dataclass(frozen=True)
class ResultRow:
    n_spin: int
    n_edges: int
    beta: float
    tau: float
    gamma: float
    n_T: int
    estimator_tag: str
    mean_W: float
    var_W: float
    sigma: float
    tur_bound: float
    tur_satisfied: bool
    n_samples: int
    n_kept: int | None
    M: int | None
    gibbs_mass: float | None
    seed: int

    def as_csv(self) -> list[str]:
        out = []
        for name in RESULT_COLUMNS:
            v = getattr(self, name)
            if v is None:
                out.append("")
            elif isinstance(v, bool):
                out.append("true" if v else "false")
            elif isinstance(v, float):
                out.append(repr(v))
            else:
                out.append(str(v))
        return out

    @classmethod
    def from_csv(cls, rec: dict) -> "ResultRow":
        def opt(conv, s):
            return None if s == "" else conv(s)

        return cls(int(rec["n_spin"]), int(rec["n_edges"]), float(rec["beta"]), float(rec["tau"]),
                   float(rec["gamma"]), int(rec["n_T"]), rec["estimator_tag"], float(rec["mean_W"]),
                   float(rec["var_W"]), float(rec["sigma"]), float(rec["tur_bound"]),
                   rec["tur_satisfied"] == "true", int(rec["n_samples"]), opt(int, rec["n_kept"]),
                   opt(int, rec["M"]), opt(float, rec["gibbs_mass"]), int(rec["seed"]))


def _row(pt: GridPoint, g: Graph, stats: WorkStatistics, seed: int, n_kept=None, m=None,
         mass=None, tol: float = TUR_TOL_EXACT) -> ResultRow:
    sigma = pt.beta * stats.mean
    bound = tur_bound(stats.mean, pt.beta)
    return ResultRow(pt.n_spin, g.n_edges, pt.beta, pt.tau, pt.gamma, pt.n_trotter,
                     stats.estimator_tag, float(stats.mean), float(stats.variance), float(sigma),
                     float(bound), bool(stats.variance >= bound - tol), stats.n_samples, n_kept,
                     m, mass, seed)


@dataclass
class PointResult:
    rows: list[ResultRow]
    notices: list[str]
    wall_time: float


def run_point(cfg: ExperimentConfig, index: int, pt: GridPoint,
              loaded: TPMSamples | None = None) -> PointResult:
    """All requested estimators for one grid point, using ``make_rng(seed, index)``."""
    t0 = time.perf_counter()
    g = cfg.make_graph(pt.n_spin)
    p = DriveParams(pt.beta, pt.tau, pt.gamma, pt.n_trotter)
    rows: list[ResultRow] = []
    notices: list[str] = []
    wanted = [e for e in ESTIMATOR_TAGS if e in cfg.estimators]

    samples = None
    if any(e in SAMPLED for e in wanted):
        if loaded is not None:
            if loaded.n_qubits != pt.n_spin:
                raise ConfigError(f"loaded samples have {loaded.n_qubits} bits, grid point has "
                                  f"n_spin={pt.n_spin}")
            samples = loaded
        elif pt.n_spin > cfg.max_statevector_qubits:
            notices.append(f"point {index}: n_spin={pt.n_spin} exceeds the statevector cap "
                           f"{cfg.max_statevector_qubits}; sampled estimators skipped")
        else:
            noise = NoiseSpec(cfg.p2, cfg.p_read)
            samples = run_tpm(g, p, int(cfg.shots), noise if noise.active else None,
                              rng=make_rng(cfg.seed, index), max_qubits=cfg.max_statevector_qubits)

    if samples is not None:
        kept, _ = parity_filter(samples)
        n_kept = len(kept)
        if n_kept < 2:
            notices.append(f"point {index}: {n_kept} samples survive the parity filter; "
                           "sampled estimators skipped")
        else:
            # sampled rows get a two-standard-error allowance on the variance
            slack = TUR_TOL_EXACT + 2 * variance_std_error(work_values(kept))
            if "raw" in wanted:
                r = raw_estimators(kept)
                stats = WorkStatistics(r.mean, r.variance, len(samples), "raw")
                rows.append(_row(pt, g, stats, cfg.seed, n_kept, tol=slack))
            for tag, fn in (("sqt", sqt_from_samples), ("ext_sqt", ext_sqt_estimate)):
                if tag not in wanted:
                    continue
                kw = {"max_dim": cfg.max_subspace_dim}
                if tag == "ext_sqt":
                    kw["delta"] = cfg.delta
                est = fn(g, kept, p, **kw)
                stats = WorkStatistics(est.mean, est.variance, len(samples), tag)
                rows.append(_row(pt, g, stats, cfg.seed, n_kept, est.subspace_dim,
                                 est.gibbs_mass_captured, tol=slack))

    if "exact" in wanted:
        if pt.n_spin > MAX_TABLE_QUBITS:
            notices.append(f"point {index}: n_spin={pt.n_spin} exceeds the oracle cap "
                           f"{MAX_TABLE_QUBITS}; exact skipped")
        else:
            mean, var = exact_tpm_distribution(g, p).moments()
            rows.append(_row(pt, g, WorkStatistics(mean, var, 0, "exact"), cfg.seed))
    if "lrt" in wanted:
        k1, k2 = lrt_moments(LRTParams(pt.beta, pt.gamma, pt.tau, g.n_edges))
        rows.append(_row(pt, g, WorkStatistics(k1, k2, 0, "lrt"), cfg.seed))
    if "wn" in wanted:
        mean, var = wn_moments(pt.n_spin, pt.beta)
        rows.append(_row(pt, g, WorkStatistics(mean, var, 0, "wn"), cfg.seed))
    return PointResult(rows, notices, time.perf_counter() - t0)


def _run_indexed(args):
    cfg, index, pt, loaded = args
    return run_point(cfg, index, pt, loaded)


@dataclass
class RunResult:
    rows: list[ResultRow]
    manifest: dict


def run_experiment(cfg: ExperimentConfig, write: bool = True) -> RunResult:
    cfg.validate()
    t0 = time.perf_counter()
    points = cfg.grid()
    loaded = load_samples(cfg.samples_in) if cfg.samples_in else None
    jobs = [(cfg, i, pt, loaded) for i, pt in enumerate(points)]
    if cfg.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(_run_indexed, jobs))
    else:
        results = [_run_indexed(j) for j in jobs]
    rows = [r for res in results for r in res.rows]
    notices = [msg for res in results for msg in res.notices]
    for msg in notices:
        log.warning(msg)
    manifest = {
        "config": cfg.echo(),
        "versions": {"qworkstats": __version__, "python": platform.python_version(),
                     "numpy": np.__version__, "scipy": _scipy_version()},
        "n_points": len(points),
        "n_rows": len(rows),
        "notices": notices,
        "point_wall_times": [round(res.wall_time, 6) for res in results],
        "wall_time": round(time.perf_counter() - t0, 6),
        "started": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
    }
    if write:
        write_results(rows, cfg.out)
        manifest_path(cfg.out).write_text(json.dumps(manifest, indent=2) + "\n")
    return RunResult(rows, manifest)


def _scipy_version() -> str:
    import scipy

    return scipy.__version__


def manifest_path(out: str | Path) -> Path:
    out = Path(out)
    return out.with_name(out.stem + ".manifest.json")


def write_results(rows: list[ResultRow], path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RESULT_COLUMNS)
        for r in rows:
            w.writerow(r.as_csv())


def read_results(path: str | Path) -> list[ResultRow]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != RESULT_COLUMNS:
            raise ConfigError(f"{path}: not a results file (header {reader.fieldnames})")
        return [ResultRow.from_csv(rec) for rec in reader]


def emit_plotdata(rows: list[ResultRow], family: str, out_dir: str | Path,
                  estimators=None) -> list[Path]:
    """Per-panel CSVs: mean vs parameter, variance vs parameter, and (bound, variance) pairs.

    Rows are grouped by estimator and the parameters held fixed in the panel;
    within a group points are ordered by the swept parameter.
    """
    if not rows:
        raise ValueError("no rows to emit")
    if family not in SWEPT:
        raise ConfigError(f"unknown family {family!r}")
    param = SWEPT[family]
    key = {"tau": lambda r: r.tau, "gamma": lambda r: r.gamma, "n_spin": lambda r: r.n_spin}[param]
    fixed = [c for c in ("n_spin", "n_T", "gamma", "tau", "beta") if c != param]
    if param == "n_spin":
        fixed.remove("n_T")
    if estimators is not None:
        rows = [r for r in rows if r.estimator_tag in estimators]
    out_dir = Path(out_dir)
    if not rows:
        log.warning("no rows for estimators %s; plot data skipped", list(estimators or []))
        return []
    out_dir.mkdir(parents=True, exist_ok=True)
    ordered = sorted(rows, key=lambda r: (ESTIMATOR_TAGS.index(r.estimator_tag),
                                          *[getattr(r, c) for c in fixed], key(r)))
    panels = {
        f"{family}_mean_vs_{param}.csv": ("mean_W", lambda r: [key(r), r.mean_W]),
        f"{family}_var_vs_{param}.csv": ("var_W", lambda r: [key(r), r.var_W]),
        f"{family}_tur_parametric.csv": (None, lambda r: [key(r), r.tur_bound, r.var_W]),
    }
    written = []
    for name, (col, fn) in panels.items():
        header = ["estimator_tag", *fixed, param] + ([col] if col else ["tur_bound", "var_W"])
        path = out_dir / name
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for r in ordered:
                vals = [r.estimator_tag, *[getattr(r, c) for c in fixed], *fn(r)]
                w.writerow([repr(v) if isinstance(v, float) else v for v in vals])
        written.append(path)
    return written
