"""Batch t-sweeps of the decoder learner, persistence and exponential fits.

Every realization gets its own 64-bit seed derived from (master seed, t,
index), and that seed alone regenerates U, the annealing chain and the
teleported state.  Records are appended to ``records.jsonl`` as they finish
so an interrupted sweep can pick up where it stopped; tables are always
sorted by (t, index) before export, so the output does not depend on the
number of workers.
"""
from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np
from scipy.optimize import least_squares

from .anneal import AnnealConfig, train
from .circuit import Circuit, sample_doped_circuit, synthesize_dense
from .fidelity import DegenerateCostError, basis_state, fidelity, haar_state, teleport_fidelity
from .linalg import MATRIX_QUBIT_CAP
from .metrics import Partition

log = logging.getLogger(__name__)

CSV_FIELDS = (
    "run_id",
    "seed",
    "t",
    "n",
    "n_a",
    "n_c",
    "steps",
    "accepted",
    "final_fidelity",
    "teleport_fidelity",
    "overlap_uv",
    "wall_s",
)

PROFILES = {
    "desk": {"n": 8, "n_a": 2, "n_c": 1, "t_values": (0, 2, 4, 6, 8), "realizations": 30},
    "paper": {"n": 10, "n_a": 2, "n_c": 1, "t_values": tuple(range(13)), "realizations": 200},
}

RECORDS_FILE = "records.jsonl"
FAILURES_FILE = "failures.jsonl"
CONFIG_FILE = "sweep_config.json"


class SweepError(RuntimeError):
    pass


class FitError(RuntimeError):
    pass


@dataclass
class SweepConfig:
    n: int = 8
    n_a: int = 2
    n_c: int = 1
    t_values: tuple[int, ...] = (0, 2, 4, 6, 8)
    realizations: int = 30
    anneal: AnnealConfig = field(default_factory=AnnealConfig)
    gates_per_layer: int | None = None  # None: 3 n^2 per Clifford block
    teleport: bool = False
    psi_source: str = "haar"  # haar | zero
    seed: int = 0
    jobs: int = 1
    timing: bool = True  # False leaves wall_s empty so reruns compare byte for byte

    def __post_init__(self):
        self.t_values = tuple(int(t) for t in self.t_values)
        if not self.t_values:
            raise ValueError("t range is empty")
        if any(t < 0 for t in self.t_values) or len(set(self.t_values)) != len(self.t_values):
            raise ValueError("t values must be distinct and non-negative")
        if self.realizations < 1:
            raise ValueError("need at least one realization")
        if self.n > MATRIX_QUBIT_CAP:
            raise ValueError(f"n={self.n} exceeds the dense cap of {MATRIX_QUBIT_CAP}")
        if self.jobs < 1:
            raise ValueError("jobs must be >= 1")
        if self.psi_source not in ("haar", "zero"):
            raise ValueError(f"unknown psi source {self.psi_source!r}")
        if isinstance(self.anneal, dict):
            self.anneal = AnnealConfig.from_dict(self.anneal)
        Partition(self.n, self.n_a, self.n_c)

    @property
    def partition(self) -> Partition:
        return Partition(self.n, self.n_a, self.n_c)

    @classmethod
    def from_profile(cls, name: str, **overrides) -> "SweepConfig":
        if name not in PROFILES:
            raise ValueError(f"unknown profile {name!r}")
        return cls(**{**PROFILES[name], **overrides})

    def to_dict(self) -> dict:
        d = asdict(self)
        d["t_values"] = list(self.t_values)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SweepConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    def science_dict(self) -> dict:
        """Everything that affects the numbers (not jobs or timing)."""
        d = self.to_dict()
        del d["jobs"], d["timing"]
        return d


@dataclass
class RunRecord:
    run_id: str
    seed: int
    t: int
    n: int
    n_a: int
    n_c: int
    steps: int
    accepted: int
    final_fidelity: float
    teleport_fidelity: float | None
    overlap_uv: float
    wall_s: float | None
    index: int = field(default=0, compare=False)
    v_circuit: str | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        for name in ("seed", "t", "n", "n_a", "n_c", "steps", "accepted", "index"):
            setattr(self, name, int(getattr(self, name)))
        for name in ("final_fidelity", "teleport_fidelity", "overlap_uv", "wall_s"):
            val = getattr(self, name)
            if val is not None:
                setattr(self, name, float(val))
        for name in ("final_fidelity", "teleport_fidelity"):
            val = getattr(self, name)
            if val is not None and not -1e-12 <= val <= 1 + 1e-9:
                raise ValueError(f"{name}={val} outside [0, 1]")

    def csv_row(self) -> list[str]:
        out = []
        for name in CSV_FIELDS:
            val = getattr(self, name)
            out.append("" if val is None else repr(val) if isinstance(val, float) else str(val))
        return out


@dataclass
class RunTable:
    records: list[RunRecord]
    config: SweepConfig | None = field(default=None, compare=False)

    def __post_init__(self):
        self.records = sorted(self.records, key=lambda r: (r.t, r.index, r.run_id))

    def __len__(self) -> int:
        return len(self.records)

    def t_values(self) -> list[int]:
        return sorted({r.t for r in self.records})

    def column(self, name: str, t: int | None = None) -> np.ndarray:
        rows = [r for r in self.records if t is None or r.t == t]
        return np.array([np.nan if getattr(r, name) is None else getattr(r, name) for r in rows], dtype=float)

    def stats(self, name: str = "final_fidelity") -> list[tuple[int, float, float, int]]:
        """Per-t (t, mean, standard error, count) of a numeric column."""
        out = []
        for t in self.t_values():
            vals = self.column(name, t)
            vals = vals[~np.isnan(vals)]
            if len(vals) == 0:
                continue
            se = float(vals.std(ddof=1) / math.sqrt(len(vals))) if len(vals) > 1 else math.nan
            out.append((t, float(vals.mean()), se, len(vals)))
        return out


def run_id(t: int, index: int) -> str:
    return f"t{t:02d}-r{index:04d}"


def run_seed(master: int, t: int, index: int) -> int:
    """64-bit seed of realization ``index`` at doping ``t``."""
    return int(np.random.SeedSequence([master, t, index]).generate_state(1, np.uint64)[0])


def realization_streams(seed: int) -> tuple[np.random.Generator, np.random.Generator, np.random.Generator]:
    """Independent generators for U, the annealing chain and psi."""
    return tuple(np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(3))


def sample_scrambler(cfg: SweepConfig, t: int, seed: int) -> Circuit:
    rng_u, _, _ = realization_streams(seed)
    return sample_doped_circuit(cfg.n, t, rng_u, cfg.gates_per_layer)


def run_realization(cfg: SweepConfig, t: int, index: int) -> RunRecord:
    seed = run_seed(cfg.seed, t, index)
    rng_u, rng_anneal, rng_psi = realization_streams(seed)
    part = cfg.partition
    u = synthesize_dense(sample_doped_circuit(cfg.n, t, rng_u, cfg.gates_per_layer))
    res = train(u, part, cfg.anneal, rng_anneal)
    f_psi = None
    if cfg.teleport:
        psi = haar_state(part.n_a, rng_psi) if cfg.psi_source == "haar" else basis_state(part.n_a, 0)
        try:
            f_psi = teleport_fidelity(u, res.v_dense, psi, part)
        except DegenerateCostError:
            f_psi = None
    return RunRecord(
        run_id=run_id(t, index),
        seed=seed,
        t=t,
        n=cfg.n,
        n_a=cfg.n_a,
        n_c=cfg.n_c,
        steps=res.steps,
        accepted=res.accepted,
        final_fidelity=res.fidelity,
        teleport_fidelity=f_psi,
        overlap_uv=res.overlap,
        wall_s=res.wall_time if cfg.timing else None,
        index=index,
        v_circuit=res.circuit.to_text(),
    )


def _worker(args):
    cfg, t, index = args
    try:
        return run_realization(cfg, t, index), None
    except Exception as exc:  # recorded, the sweep carries on
        return None, {"run_id": run_id(t, index), "t": t, "index": index, "error": f"{type(exc).__name__}: {exc}"}


def _record_to_json(r: RunRecord) -> dict:
    return asdict(r)


def _record_from_json(d: dict) -> RunRecord:
    return RunRecord(**d)


def _load_existing(out_dir: Path, cfg: SweepConfig) -> dict[str, RunRecord]:
    cfg_path = out_dir / CONFIG_FILE
    if cfg_path.exists():
        stored = json.loads(cfg_path.read_text())
        if SweepConfig.from_dict(stored).science_dict() != cfg.science_dict():
            raise SweepError(f"{out_dir} holds a sweep with a different configuration")
    done = {}
    rec_path = out_dir / RECORDS_FILE
    if rec_path.exists():
        with open(rec_path) as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                try:
                    rec = _record_from_json(json.loads(line))
                except (json.JSONDecodeError, TypeError):
                    # a torn final line from an interrupted write; rerun it
                    log.warning("skipping unreadable record line in %s", rec_path)
                    continue
                done[rec.run_id] = rec
    return done


def run_sweep(
    cfg: SweepConfig,
    out_dir: str | os.PathLike | None = None,
    max_runs: int | None = None,
) -> RunTable:
    """Train one decoder per (t, realization) and collect the records.

    With ``out_dir`` the sweep is resumable: finished runs found in
    ``records.jsonl`` are not repeated.  ``max_runs`` caps the number of new
    realizations (used to stop a sweep part way).
    """
    tasks = [(t, i) for t in cfg.t_values for i in range(cfg.realizations)]
    done: dict[str, RunRecord] = {}
    rec_fh = fail_fh = None
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        done = _load_existing(out, cfg)
        (out / CONFIG_FILE).write_text(json.dumps(cfg.to_dict(), indent=2) + "\n")
        rec_fh = open(out / RECORDS_FILE, "a")
        fail_fh = open(out / FAILURES_FILE, "a")
    todo = [(cfg, t, i) for t, i in tasks if run_id(t, i) not in done]
    if max_runs is not None:
        todo = todo[:max_runs]
    log.info("sweep: %d runs done, %d to go", len(done), len(todo))
    try:
        if cfg.jobs == 1 or len(todo) <= 1:
            results = map(_worker, todo)
            _collect(results, done, rec_fh, fail_fh)
        else:
            with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
                _collect(pool.map(_worker, todo), done, rec_fh, fail_fh)
    finally:
        if rec_fh is not None:
            rec_fh.close()
            fail_fh.close()
    wanted = {run_id(t, i) for t, i in tasks}
    return RunTable([r for k, r in done.items() if k in wanted], cfg)


def _collect(results, done, rec_fh, fail_fh) -> None:
    for rec, failure in results:
        if failure is not None:
            log.error("run %s failed: %s", failure["run_id"], failure["error"])
            if fail_fh is not None:
                fail_fh.write(json.dumps(failure) + "\n")
                fail_fh.flush()
            continue
        done[rec.run_id] = rec
        if rec_fh is not None:
            rec_fh.write(json.dumps(_record_to_json(rec)) + "\n")
            rec_fh.flush()


def resume_sweep(out_dir: str | os.PathLike, jobs: int | None = None) -> RunTable:
    cfg_path = Path(out_dir) / CONFIG_FILE
    if not cfg_path.exists():
        raise SweepError(f"no {CONFIG_FILE} in {out_dir}")
    cfg = SweepConfig.from_dict(json.loads(cfg_path.read_text()))
    if jobs is not None:
        cfg = replace(cfg, jobs=jobs)
    return run_sweep(cfg, out_dir)


def audit_record(rec: RunRecord, cfg: SweepConfig) -> float:
    """|F_recorded - F(U, V)| with U regenerated from the stored seed."""
    if rec.v_circuit is None:
        raise ValueError("record carries no decoder circuit")
    u = synthesize_dense(sample_scrambler(cfg, rec.t, rec.seed))
    v = synthesize_dense(Circuit.from_text(rec.v_circuit))
    part = Partition(rec.n, rec.n_a, rec.n_c)
    try:
        f = fidelity(u, v, part)
    except DegenerateCostError:
        f = 0.0
    return abs(f - rec.final_fidelity)


# ---------------------------------------------------------------- export


def export_table(table: RunTable, path: str | os.PathLike, fmt: str = "csv") -> Path:
    if not table.records:
        raise ValueError("nothing to export")
    path = Path(path)
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_FIELDS)
        for r in table.records:
            w.writerow(r.csv_row())
        path.write_text(buf.getvalue())
    elif fmt == "json":
        doc = {
            "config": table.config.to_dict() if table.config is not None else None,
            "records": [_record_to_json(r) for r in table.records],
        }
        path.write_text(json.dumps(doc, indent=1) + "\n")
    else:
        raise ValueError(f"unknown format {fmt!r}")
    return path


def _parse_float(s: str) -> float | None:
    return None if s == "" else float(s)


def import_table(path: str | os.PathLike) -> RunTable:
    path = Path(path)
    text = path.read_text()
    if text.lstrip().startswith("{"):
        doc = json.loads(text)
        cfg = SweepConfig.from_dict(doc["config"]) if doc.get("config") else None
        return RunTable([_record_from_json(d) for d in doc["records"]], cfg)
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or tuple(rows[0]) != CSV_FIELDS:
        raise ValueError(f"{path} does not have the run-table header")
    recs = []
    for row in rows[1:]:
        d = dict(zip(CSV_FIELDS, row))
        idx = int(d["run_id"].rsplit("-r", 1)[1]) if "-r" in d["run_id"] else 0
        recs.append(
            RunRecord(
                run_id=d["run_id"],
                seed=int(d["seed"]),
                t=int(d["t"]),
                n=int(d["n"]),
                n_a=int(d["n_a"]),
                n_c=int(d["n_c"]),
                steps=int(d["steps"]),
                accepted=int(d["accepted"]),
                final_fidelity=float(d["final_fidelity"]),
                teleport_fidelity=_parse_float(d["teleport_fidelity"]),
                overlap_uv=float(d["overlap_uv"]),
                wall_s=_parse_float(d["wall_s"]),
                index=idx,
            )
        )
    return RunTable(recs)


# ---------------------------------------------------------------- fitting


@dataclass
class FitResult:
    a: float
    alpha: float
    b: float
    residual_norm: float
    t: np.ndarray
    mean: np.ndarray
    stderr: np.ndarray
    degenerate: bool = False
    nfev: int = 0

    def curve(self, t) -> np.ndarray:
        return self.a * np.exp(-self.alpha * np.asarray(t, dtype=float)) + self.b

    @property
    def a_plus_b(self) -> float:
        return self.a + self.b

    def residuals(self) -> np.ndarray:
        return self.curve(self.t) - self.mean

    def to_dict(self) -> dict:
        return {
            "a": self.a,
            "alpha": self.alpha,
            "b": self.b,
            "a_plus_b": self.a_plus_b,
            "residual_norm": self.residual_norm,
            "degenerate": self.degenerate,
            "nfev": self.nfev,
            "points": [
                {"t": float(t), "mean": float(m), "stderr": None if math.isnan(s) else float(s)}
                for t, m, s in zip(self.t, self.mean, self.stderr)
            ],
        }


def fit_exponential(points, tol: float = 1e-10, max_nfev: int = 10_000) -> FitResult:
    """Least-squares fit of a exp(-alpha t) + b to (t, mean[, stderr]) points.

    Levenberg-Marquardt from the fixed start a0 = F(t_min) - F(t_max),
    b0 = F(t_max), alpha0 = 0.15; a + b is left free.  Constant data returns
    a = alpha = 0, b = mean with ``degenerate`` set.
    """
    pts = [tuple(p) for p in points]
    t = np.array([p[0] for p in pts], dtype=float)
    y = np.array([p[1] for p in pts], dtype=float)
    se = np.array([p[2] if len(p) > 2 and p[2] is not None else np.nan for p in pts], dtype=float)
    if len(set(t.tolist())) < 3:
        raise ValueError("need at least three distinct t values")
    if not np.all(np.isfinite(y)):
        raise ValueError("non-finite means")
    order = np.argsort(t, kind="stable")
    t, y, se = t[order], y[order], se[order]
    if np.ptp(y) <= 1e-12 * max(1.0, abs(y.mean())):
        return FitResult(0.0, 0.0, float(y.mean()), float(np.linalg.norm(y - y.mean())), t, y, se, degenerate=True)

    def resid(p):
        a, alpha, b = p
        return a * np.exp(-alpha * t) + b - y

    x0 = np.array([y[0] - y[-1], 0.15, y[-1]])
    sol = least_squares(resid, x0, method="lm", xtol=tol, ftol=tol, gtol=tol, max_nfev=max_nfev)
    if sol.status <= 0 or not np.all(np.isfinite(sol.x)):
        raise FitError(
            f"fit did not converge ({sol.message}); start {x0.tolist()}, "
            f"last {sol.x.tolist()}, nfev {sol.nfev}"
        )
    a, alpha, b = (float(v) for v in sol.x)
    return FitResult(a, alpha, b, float(np.linalg.norm(sol.fun)), t, y, se, nfev=int(sol.nfev))


def fit_table(table: RunTable, column: str = "final_fidelity") -> FitResult:
    return fit_exponential(table.stats(column))


def emit_plot_data(
    table: RunTable,
    fit: FitResult | None,
    out_dir: str | os.PathLike,
    stem: str = "learnability",
    column: str = "final_fidelity",
    n_curve: int = 200,
    figure: bool = True,
) -> dict[str, Path]:
    """Write per-t points (mean, stderr, count), fitted-curve samples and a PNG."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stats = table.stats(column)
    paths = {"points": out / f"{stem}_points.csv"}
    with open(paths["points"], "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "mean", "stderr", "count"])
        for t, m, s, k in stats:
            w.writerow([t, repr(m), "" if math.isnan(s) else repr(s), k])
    curve = None
    if fit is not None:
        lo, hi = min(s[0] for s in stats), max(s[0] for s in stats)
        if hi == lo:
            hi = lo + 1
        tt = np.linspace(lo, hi, max(n_curve, 100))
        curve = (tt, fit.curve(tt))
        paths["curve"] = out / f"{stem}_fit.csv"
        with open(paths["curve"], "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "fit"])
            for a, b in zip(*curve):
                w.writerow([repr(float(a)), repr(float(b))])
    if figure:
        from .plotting import plot_learnability

        paths["figure"] = plot_learnability(stats, fit, curve, out / f"{stem}.png", ylabel=column)
    return paths
