"""Sweep orchestration, resumable result store and CSV exports."""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import io
import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .protocol import (
    HPST_THRESHOLD,
    MIXED_THRESHOLD,
    ScanConfig,
    ScanExhausted,
    critical_length,
    one_excitation_eigensystem,
    run_protocol,
)
from .lattice import ChainSpec
from .spectral import SpectralProfile, phase_window, spectral_profile
from .twoqubit import VERTICES, CreationRecord, EigenTriple, TwoQubitScan, _create_at, eigenvalue_critical_length, lattice_points

__all__ = [
    "MODES",
    "SweepConfig",
    "ResultStore",
    "load_config",
    "run_sweep",
    "export_table",
    "read_table",
    "export_plotdata",
    "read_plotdata",
    "write_matrix_csv",
    "read_matrix_csv",
    "spectrum_to_file",
    "spectrum_from_file",
]

MODES = ("hpst_table", "mixed_table", "spectrum", "two_qubit_vertex", "two_qubit_lattice", "accuracy_curve")

# desk-scale cap on critical-length scans; lifted by --extended
DESK_N_MAX = 300
# explicit chains longer than this need --extended
EXTENDED_N = 1000


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


@dataclass
class SweepConfig:
    """Everything a sweep depends on. Fields marked ``meta`` do not enter the hash."""

    mode: str = "hpst_table"
    ns: list = field(default_factory=lambda: [1, 2, 3])
    nr: list = field(default_factory=lambda: [1, 2, 3])
    n: list = field(default_factory=list)
    threshold: float | None = None
    targets: list = field(default_factory=lambda: ["L1", "L2", "L3", "L4"])
    resolution: int = 12
    window_factor: float = 0.5
    dt: float = 0.05
    n_refine: int = 5
    k_fail: int = 10
    n_start: int | None = None
    n_max: int | None = DESK_N_MAX
    two_qubit_n_max: int | None = 40
    restarts: int = 32
    seed: int = 0
    eps_threshold: float = 1e-8
    stop_below: float | None = 1e-12
    p_min_fraction: float = 0.01
    nearest_neighbor: bool = False
    out: str = field(default="results", metadata={"meta": True})
    workers: int = field(default=1, metadata={"meta": True})
    extended: bool = field(default=False, metadata={"meta": True})

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}; expected one of {', '.join(MODES)}")
        if self.mode in ("hpst_table", "mixed_table", "spectrum") and (not self.ns or not self.nr):
            raise ValueError("sender and receiver ranges must be nonempty")
        for key in ("ns", "nr", "n"):
            if any(int(v) < 1 for v in getattr(self, key)):
                raise ValueError(f"range {key} must contain positive integers only")
        if self.mode in ("spectrum", "accuracy_curve") and not self.n:
            raise ValueError(f"mode {self.mode} needs a nonempty range of chain lengths")
        if self.mode == "two_qubit_vertex":
            bad = [t for t in self.targets if t not in VERTICES]
            if bad or not self.targets:
                raise ValueError(f"unknown vertex targets {bad}")
        if self.extended:
            self.n_max = None

    @property
    def effective_threshold(self) -> float:
        if self.threshold is not None:
            return self.threshold
        return MIXED_THRESHOLD if self.mode == "mixed_table" else HPST_THRESHOLD

    def config_hash(self) -> str:
        d = {
            f.name: getattr(self, f.name)
            for f in dataclasses.fields(self)
            if not f.metadata.get("meta") and f.name not in ("ns", "nr", "n", "targets")
        }
        d["threshold"] = self.effective_threshold
        blob = json.dumps(d, sort_keys=True, default=str).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def scan(self) -> ScanConfig:
        return ScanConfig(
            n_start=self.n_start,
            k_fail=self.k_fail,
            window_factor=self.window_factor,
            dt=self.dt,
            n_refine=self.n_refine,
            n_max=self.n_max,
            nearest_neighbor=self.nearest_neighbor,
        )

    def two_qubit_scan(self) -> TwoQubitScan:
        return TwoQubitScan(
            k_fail=self.k_fail,
            n_max=self.two_qubit_n_max if not self.extended else None,
            restarts=self.restarts,
            seed=self.seed,
            eps_threshold=self.eps_threshold,
            stop_below=self.stop_below,
            window_factor=self.window_factor,
            dt=self.dt,
            svd_scan=dataclasses.replace(self.scan(), n_start=None),
        )


def _parse_value(raw: str):
    raw = raw.strip()
    low = raw.lower()
    if low in ("none", "null", ""):
        return None
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    try:
        return int(raw)
    except ValueError:
        pass
    try:
        return float(raw)
    except ValueError:
        return raw


def parse_range(text) -> list:
    """``"1-3"`` -> ``[1, 2, 3]``; ``"1,4,6-7"`` -> ``[1, 4, 6, 7]``."""
    if isinstance(text, (list, tuple)):
        return [int(v) for v in text]
    if isinstance(text, int):
        return [text]
    out = []
    for part in str(text).split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part:
            lo, hi = part.split("-", 1)
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    return out


def load_config(path=None, **overrides) -> SweepConfig:
    """Read a flat ``key = value`` file, then apply keyword overrides.

    Blank lines and ``#`` comments are ignored. Range keys (``ns``, ``nr``,
    ``n``) accept the ``1-3,5`` syntax, ``targets`` a comma list.
    """
    values = {}
    if path is not None:
        for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value'")
            key, raw = (s.strip() for s in line.split("=", 1))
            values[key] = raw if key in ("ns", "nr", "n", "targets") else _parse_value(raw)
    values.update({k: v for k, v in overrides.items() if v is not None})
    known = {f.name for f in dataclasses.fields(SweepConfig)}
    unknown = set(values) - known
    if unknown:
        raise ValueError(f"unknown configuration keys: {', '.join(sorted(unknown))}")
    for key in ("ns", "nr", "n"):
        if key in values:
            values[key] = parse_range(values[key])
    if isinstance(values.get("targets"), str):
        values["targets"] = [t.strip() for t in values["targets"].split(",") if t.strip()]
    return SweepConfig(**values)


STORE_FIELDS = ["mode", "kind", "n_s", "n_r", "n", "target", "config_hash", "t0", "objective", "n_c", "flag", "timestamp"]


class ResultStore:
    """Append-only CSV log of computed cells and per-length evaluations.

    Records are keyed by ``(mode, kind, n_s, n_r, n, target)``; only records
    carrying the current configuration hash are reused on resume.
    """

    def __init__(self, path, config_hash: str = ""):
        self.path = Path(path)
        self.config_hash = config_hash
        self._records: dict = {}
        if self.path.exists():
            with self.path.open(newline="") as fh:
                for row in csv.DictReader(fh):
                    if row["config_hash"] == config_hash:
                        self._records[self._key(row)] = row

    @staticmethod
    def _key(row) -> tuple:
        return tuple(str(row[k]) for k in ("mode", "kind", "n_s", "n_r", "n", "target"))

    def __len__(self):
        return len(self._records)

    def records(self, mode=None, kind=None) -> list[dict]:
        return [
            r
            for r in self._records.values()
            if (mode is None or r["mode"] == mode) and (kind is None or r["kind"] == kind)
        ]

    def get(self, mode, kind, n_s="", n_r="", n="", target=""):
        return self._records.get(tuple(_fmt(v) if not isinstance(v, str) else v for v in (mode, kind, n_s, n_r, n, target)))

    def append(self, mode, kind, n_s=None, n_r=None, n=None, target="", t0=None, objective=None, n_c=None, flag=""):
        row = {
            "mode": mode,
            "kind": kind,
            "n_s": _fmt(n_s),
            "n_r": _fmt(n_r),
            "n": _fmt(n),
            "target": target,
            "config_hash": self.config_hash,
            "t0": _fmt(t0),
            "objective": _fmt(objective),
            "n_c": _fmt(n_c),
            "flag": flag,
            "timestamp": f"{time.time():.3f}",
        }
        key = self._key(row)
        if key in self._records:
            return self._records[key]
        new = not self.path.exists()
        self.path.parent.mkdir(parents=True, exist_ok=True)
        with self.path.open("a", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=STORE_FIELDS)
            if new:
                writer.writeheader()
            writer.writerow(row)
            fh.flush()
            os.fsync(fh.fileno())
        self._records[key] = row
        return row


# ---------------------------------------------------------------- table export

TABLE_HEADER = ["n_s", "n_r", "n_c", "t0", "w1"]


def export_table(store: ResultStore, mode: str, path=None, ns=None, nr=None) -> str:
    """Critical-length table as CSV text (also written to ``path`` if given).

    With ``ns``/``nr`` grids every grid cell gets a row and missing cells have
    empty fields; otherwise only completed cells are listed.
    """
    cells = {(int(r["n_s"]), int(r["n_r"])): r for r in store.records(mode, "cell")}
    keys = [(a, b) for a in ns for b in nr] if ns is not None and nr is not None else sorted(cells)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TABLE_HEADER)
    for a, b in keys:
        r = cells.get((a, b))
        if r is None:
            w.writerow([a, b, "", "", ""])
        else:
            w.writerow([a, b, r["n_c"], r["t0"], r["objective"]])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text


def read_table(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def write_table_rows(rows: list[dict], path=None) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=TABLE_HEADER, lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text


def format_grid(store: ResultStore, mode: str, ns, nr) -> str:
    """Human-readable N_c grid: rows are N_R, columns N_S."""
    cells = {(int(r["n_s"]), int(r["n_r"])): r["n_c"] for r in store.records(mode, "cell")}
    width = 6
    lines = ["N_R\\N_S" + "".join(f"{a:>{width}}" for a in ns)]
    for b in nr:
        lines.append(f"{b:<7}" + "".join(f"{cells.get((a, b), '-') or '-':>{width}}" for a in ns))
    return "\n".join(lines)


# ------------------------------------------------------------------ plot data

PLOT_COLUMNS = {
    "spectrum": ["k", "P_Nk", "phi_Nk", "phi_tilde_Nk", "Phi_Nk"],
    "profile": ["n", "abs_f_n"],
    "sender": ["n", "abs_u", "arg_u"],
    "receiver": ["n", "abs_v", "arg_v"],
    "accuracy": ["N", "eps_L3", "eps_L4"],
    "lattice": ["lambda1", "lambda2", "lambda3", "N_c", "eps_at_Nc", "t0"],
    "w1_curve": ["t", "w1"],
}


def export_plotdata(kind: str, columns_data, path=None, meta: dict | None = None) -> str:
    """Comma-separated numeric columns under a single ``#`` header line.

    ``meta`` entries are appended to the header as ``| key=value`` pairs.
    """
    if kind not in PLOT_COLUMNS:
        raise ValueError(f"unknown plot-data kind {kind!r}")
    cols = PLOT_COLUMNS[kind]
    data = [np.asarray(c) for c in columns_data]
    if len(data) != len(cols):
        raise ValueError(f"{kind} expects {len(cols)} columns, got {len(data)}")
    header = "# " + ",".join(cols)
    if meta:
        header += " | " + ",".join(f"{k}={_fmt(v)}" for k, v in meta.items())
    lines = [header]
    for row in zip(*data):
        lines.append(",".join(_fmt(v) if not isinstance(v, str) else v for v in row))
    text = "\n".join(lines) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text


def read_plotdata(path) -> tuple[list[str], np.ndarray, dict]:
    """Columns, data (empty fields become NaN) and header metadata of a plot file."""
    lines = Path(path).read_text().splitlines()
    header = lines[0].lstrip("#").strip()
    meta = {}
    if " | " in header:
        header, tail = header.split(" | ", 1)
        for item in tail.split(","):
            k, v = item.split("=", 1)
            meta[k] = float(v)
    cols = header.split(",")
    rows = [[float(v) if v else np.nan for v in line.split(",")] for line in lines[1:] if line]
    return cols, np.array(rows, dtype=float).reshape(-1, len(cols)), meta


def spectrum_to_file(profile: SpectralProfile, path=None) -> str:
    k = np.arange(1, profile.n_modes + 1)
    return export_plotdata(
        "spectrum",
        [k, profile.amplitudes, profile.phases, profile.shifted_phases, profile.resulting_phases],
        path,
        meta={"t0": profile.t0, "p_min": profile.p_min, "global_phase": profile.global_phase},
    )


def spectrum_from_file(path) -> SpectralProfile:
    _, data, meta = read_plotdata(path)
    return SpectralProfile(
        data[:, 1].copy(), data[:, 2].copy(), data[:, 4].copy(), meta["t0"], meta["p_min"], meta.get("global_phase", 0.0)
    )


def write_matrix_csv(matrix, path=None) -> str:
    """Dense matrix as CSV; complex entries are written as ``a+bj``."""
    M = np.asarray(matrix)
    is_complex = np.iscomplexobj(M)
    lines = []
    for row in np.atleast_2d(M):
        if is_complex:
            lines.append(",".join(repr(complex(v)).strip("()") for v in row))
        else:
            lines.append(",".join(repr(float(v)) for v in row))
    text = "\n".join(lines) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text


def read_matrix_csv(path) -> np.ndarray:
    rows = [line.split(",") for line in Path(path).read_text().splitlines() if line.strip()]
    if any("j" in v for row in rows for v in row):
        return np.array([[complex(v) for v in row] for row in rows])
    return np.array([[float(v) for v in row] for row in rows])


# -------------------------------------------------------------------- sweeps


def _table_cell(args):
    n_s, n_r, threshold, scan, known = args
    try:
        return n_s, n_r, critical_length(n_s, n_r, threshold, scan, known=known), None
    except ScanExhausted as exc:
        return n_s, n_r, None, str(exc)


def _run_table(config: SweepConfig, store: ResultStore, out: Path, log) -> list[dict]:
    mode, threshold, scan = config.mode, config.effective_threshold, config.scan()
    delta = []
    todo = []
    for a in config.ns:
        for b in config.nr:
            if store.get(mode, "cell", a, b) is not None:
                continue
            known = {
                int(r["n"]): (float(r["t0"]), float(r["objective"]))
                for r in store.records(mode, "point")
                if r["n_s"] == str(a) and r["n_r"] == str(b)
            }
            todo.append((a, b, known))

    def finish(a, b, rec, err):
        if rec is None:
            delta.append(store.append(mode, "cell", a, b, flag=f"exhausted: {err}"))
            return
        for n, (t0, w1) in sorted(rec.evaluations.items()):
            store.append(mode, "point", a, b, n, t0=t0, objective=w1)
        flag = "capped" if rec.capped else ""
        delta.append(store.append(mode, "cell", a, b, t0=rec.t0_at_critical, objective=rec.w1_at_critical, n_c=rec.n_critical, flag=flag))
        log(f"{mode} N_S={a} N_R={b}: N_c={rec.n_critical}{' (capped)' if flag else ''}")

    if config.workers > 1 and len(todo) > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            for a, b, rec, err in pool.map(_table_cell, [(a, b, threshold, scan, k) for a, b, k in todo]):
                finish(a, b, rec, err)
    else:
        for a, b, known in todo:
            # checkpoint every evaluated length so an interrupted scan resumes mid-cell
            def checkpoint(n, t0, w1, a=a, b=b):
                store.append(mode, "point", a, b, n, t0=t0, objective=w1)

            try:
                rec = critical_length(a, b, threshold, scan, known=known, on_evaluate=checkpoint)
                finish(a, b, rec, None)
            except ScanExhausted as exc:
                finish(a, b, None, str(exc))

    export_table(store, mode, out / f"{mode}.csv", config.ns, config.nr)
    log(format_grid(store, mode, config.ns, config.nr))
    return delta


def _run_spectrum(config: SweepConfig, store: ResultStore, out: Path, log) -> list[dict]:
    delta = []
    for n in config.n:
        for a in config.ns:
            for b in config.nr:
                if n > EXTENDED_N and not config.extended:
                    raise ValueError(f"a {n}-node chain needs --extended")
                spec = ChainSpec(n, a, b)
                eig = one_excitation_eigensystem(n, config.nearest_neighbor)
                res = run_protocol(
                    spec,
                    eig=eig,
                    window=(n * (1 - config.window_factor), n * (1 + config.window_factor)),
                    dt=config.dt,
                    n_refine=config.n_refine,
                )
                prof = spectral_profile(eig, spec, res.sender_vector, res.receiver_row, res.t0)
                prof.p_min = config.p_min_fraction * float(prof.amplitudes.max())
                stem = out / f"N{n}_S{a}_R{b}"
                spectrum_to_file(prof, f"{stem}_spectrum.dat")
                export_plotdata("profile", [np.arange(1, n + 1), res.f_profile], f"{stem}_profile.dat", {"t0": res.t0})
                export_plotdata(
                    "sender",
                    [np.arange(1, a + 1), np.abs(res.sender_vector), np.angle(res.sender_vector)],
                    f"{stem}_sender.dat",
                )
                export_plotdata(
                    "receiver",
                    [np.arange(1, b + 1), np.abs(res.receiver_row), np.angle(res.receiver_row)],
                    f"{stem}_receiver.dat",
                )
                win = phase_window(prof)
                flag = "" if win is None else f"window={win[0]}-{win[1]}"
                delta.append(store.append("spectrum", "cell", a, b, n, t0=res.t0, objective=res.w1, flag=flag))
                log(f"N={n} N_S={a} N_R={b}: t0={res.t0:.6f} w1^2={res.w1**2:.6f} {flag}")
    return delta


def _target_label(t: EigenTriple) -> str:
    return ":".join(_fmt(v) for v in t.as_tuple())


def _record_row(store, mode, rec: CreationRecord, target_label):
    flag = "unbounded" if rec.unbounded else ("" if rec.feasible else "infeasible")
    return store.append(
        mode, "cell", 4, 2, target=target_label, t0=rec.t0, objective=rec.epsilon, n_c=rec.n_total, flag=flag
    )


def _run_vertices(config: SweepConfig, store: ResultStore, out: Path, log) -> list[dict]:
    delta = []
    scan = config.two_qubit_scan()
    for name in config.targets:
        if store.get(config.mode, "cell", 4, 2, "", name) is None:
            rec = eigenvalue_critical_length(VERTICES[name], scan)
            delta.append(_record_row(store, config.mode, rec, name))
            log(f"{name}: N_c={rec.n_total}{' (unbounded within scan)' if rec.unbounded else ''} eps={rec.epsilon:.3e}")
    rows = [store.get(config.mode, "cell", 4, 2, "", name) for name in config.targets]
    lam = [VERTICES[name].as_tuple() for name in config.targets]
    export_plotdata(
        "lattice",
        [
            [l[0] for l in lam],
            [l[1] for l in lam],
            [l[2] for l in lam],
            [r["n_c"] for r in rows],
            [r["objective"] for r in rows],
            [r["t0"] for r in rows],
        ],
        out / "vertices.csv",
    )
    return delta


def _run_lattice(config: SweepConfig, store: ResultStore, out: Path, log) -> list[dict]:
    delta = []
    scan = config.two_qubit_scan()
    pts = lattice_points(config.resolution)
    for t in pts:
        label = _target_label(t)
        if store.get(config.mode, "cell", 4, 2, "", label) is not None:
            continue
        try:
            rec = eigenvalue_critical_length(t, scan)
        except ScanExhausted:
            rec = CreationRecord(t, None, None, None, float("inf"), False)
        delta.append(_record_row(store, config.mode, rec, label))
        log(f"lambda={t.as_tuple()}: N_c={rec.n_total}")
    rows = [store.get(config.mode, "cell", 4, 2, "", _target_label(t)) for t in pts]
    export_plotdata(
        "lattice",
        [
            [t.lambda1 for t in pts],
            [t.lambda2 for t in pts],
            [t.lambda3 for t in pts],
            [r["n_c"] for r in rows],
            [r["objective"] for r in rows],
            [r["t0"] for r in rows],
        ],
        out / "lattice.csv",
    )
    return delta


def _run_accuracy(config: SweepConfig, store: ResultStore, out: Path, log) -> list[dict]:
    delta = []
    scan = config.two_qubit_scan()
    for n in config.n:
        for name in ("L3", "L4"):
            if store.get(config.mode, "point", 4, 2, n, name) is None:
                rec = _create_at(VERTICES[name], n, scan)
                delta.append(store.append(config.mode, "point", 4, 2, n, name, t0=rec.t0, objective=rec.epsilon))
                log(f"N={n} {name}: eps={rec.epsilon:.3e}")
    eps = {
        name: [store.get(config.mode, "point", 4, 2, n, name)["objective"] for n in config.n] for name in ("L3", "L4")
    }
    export_plotdata("accuracy", [config.n, eps["L3"], eps["L4"]], out / "accuracy.csv")
    return delta


_RUNNERS = {
    "hpst_table": _run_table,
    "mixed_table": _run_table,
    "spectrum": _run_spectrum,
    "two_qubit_vertex": _run_vertices,
    "two_qubit_lattice": _run_lattice,
    "accuracy_curve": _run_accuracy,
}


def run_sweep(config: SweepConfig, resume: bool = True, log=print) -> list[dict]:
    """Compute every requested cell not already in the store; return new records.

    Results land in ``config.out``: the append-only ``store.csv`` plus the
    mode's exported CSV/plot files. Without ``resume`` an existing store is
    moved aside first.
    """
    out = Path(config.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc}") from exc
    if not os.access(out, os.W_OK):
        raise PermissionError(f"output directory {out} is not writable")
    store_path = out / "store.csv"
    if not resume and store_path.exists():
        store_path.rename(out / f"store.{int(time.time())}.csv")
    store = ResultStore(store_path, config.config_hash())
    return _RUNNERS[config.mode](config, store, out, log)
