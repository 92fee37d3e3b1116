import subprocess
import sys

import numpy as np
import pytest

from spinline.cli import main
from spinline.harness import (
    ResultStore,
    SweepConfig,
    export_plotdata,
    export_table,
    load_config,
    parse_range,
    read_matrix_csv,
    read_plotdata,
    read_table,
    run_sweep,
    write_matrix_csv,
    write_table_rows,
)

quiet = lambda *a, **k: None


def _table_cfg(tmp_path, name="out", **kw):
    base = dict(mode="hpst_table", ns=[1, 2, 3], nr=[1, 2, 3], out=str(tmp_path / name))
    base.update(kw)
    return SweepConfig(**base)


def test_parse_range():
    assert parse_range("1-3") == [1, 2, 3]
    assert parse_range("1,4,6-7") == [1, 4, 6, 7]
    assert parse_range([2, 5]) == [2, 5]


def test_config_validation():
    with pytest.raises(ValueError):
        SweepConfig(mode="nope")
    with pytest.raises(ValueError):
        SweepConfig(mode="hpst_table", ns=[])
    with pytest.raises(ValueError):
        SweepConfig(mode="hpst_table", ns=[0, 1])
    with pytest.raises(ValueError):
        SweepConfig(mode="spectrum", n=[])
    with pytest.raises(ValueError):
        SweepConfig(mode="two_qubit_vertex", targets=["L9"])


def test_config_file_and_overrides(tmp_path):
    path = tmp_path / "sweep.cfg"
    path.write_text("# table sweep\nmode = mixed_table\nns = 1-2\nnr = 1,2\nk_fail = 7\ndt = 0.025\n")
    cfg = load_config(path, k_fail=12)
    assert cfg.mode == "mixed_table" and cfg.ns == [1, 2] and cfg.nr == [1, 2]
    assert cfg.k_fail == 12 and cfg.dt == 0.025
    assert cfg.effective_threshold == 0.5
    path.write_text("bogus = 1\n")
    with pytest.raises(ValueError):
        load_config(path)


def test_config_hash_ignores_meta_fields(tmp_path):
    a = _table_cfg(tmp_path, workers=1)
    b = _table_cfg(tmp_path, name="elsewhere", workers=4)
    c = _table_cfg(tmp_path, dt=0.02)
    assert a.config_hash() == b.config_hash() != c.config_hash()


def test_empty_store_exports_header_only(tmp_path):
    store = ResultStore(tmp_path / "store.csv", "h")
    text = export_table(store, "hpst_table", tmp_path / "t.csv")
    assert text == "n_s,n_r,n_c,t0,w1\n"
    assert (tmp_path / "t.csv").read_text() == text


def test_missing_cells_are_empty_fields(tmp_path):
    store = ResultStore(tmp_path / "store.csv", "h")
    store.append("hpst_table", "cell", 1, 1, t0=5.5, objective=0.95, n_c=4)
    text = export_table(store, "hpst_table", ns=[1, 2], nr=[1])
    assert text.splitlines()[2] == "2,1,,,"


def test_store_reuses_only_matching_hash(tmp_path):
    path = tmp_path / "store.csv"
    s = ResultStore(path, "aaa")
    s.append("hpst_table", "cell", 1, 1, t0=1.0, objective=0.9, n_c=4)
    s.append("hpst_table", "cell", 1, 1, t0=2.0, objective=0.8, n_c=5)  # duplicate key: no-op
    assert len(ResultStore(path, "aaa")) == 1
    assert ResultStore(path, "aaa").get("hpst_table", "cell", 1, 1)["n_c"] == "4"
    assert len(ResultStore(path, "bbb")) == 0


def test_table_sweep_and_roundtrip(tmp_path):
    cfg = _table_cfg(tmp_path)
    delta = run_sweep(cfg, log=quiet)
    assert len(delta) == 9
    path = tmp_path / "out" / "hpst_table.csv"
    rows = read_table(path)
    grid = {(int(r["n_s"]), int(r["n_r"])): int(r["n_c"]) for r in rows}
    assert grid == {(1, 1): 4, (1, 2): 4, (1, 3): 9, (2, 1): 4, (2, 2): 17, (2, 3): 17, (3, 1): 9, (3, 2): 17, (3, 3): 22}
    assert write_table_rows(rows) == path.read_text()


def test_resume_is_idempotent(tmp_path):
    cfg = _table_cfg(tmp_path)
    run_sweep(cfg, log=quiet)
    out = tmp_path / "out"
    table = (out / "hpst_table.csv").read_text()
    store = (out / "store.csv").read_text()
    assert run_sweep(cfg, log=quiet) == []
    assert (out / "hpst_table.csv").read_text() == table
    assert (out / "store.csv").read_text() == store


def test_resume_after_interruption(tmp_path):
    cfg = _table_cfg(tmp_path)
    run_sweep(cfg, log=quiet)
    reference = (tmp_path / "out" / "hpst_table.csv").read_text()

    # a store holding only some cells and a partial per-length log of another
    partial = _table_cfg(tmp_path, name="partial")
    full = ResultStore(tmp_path / "out" / "store.csv", cfg.config_hash())
    (tmp_path / "partial").mkdir()
    cut = ResultStore(tmp_path / "partial" / "store.csv", cfg.config_hash())
    for r in full.records():
        keep = r["kind"] == "cell" and r["n_s"] == "1"
        keep |= r["kind"] == "point" and r["n_s"] == "3" and r["n_r"] == "3" and int(r["n"]) < 15
        if keep:
            opt = lambda v, cast: cast(v) if v else None
            cut.append(
                r["mode"], r["kind"], int(r["n_s"]), int(r["n_r"]), opt(r["n"], int),
                t0=float(r["t0"]), objective=float(r["objective"]), n_c=opt(r["n_c"], int), flag=r["flag"],
            )
    delta = run_sweep(partial, log=quiet)
    assert len([d for d in delta if d["kind"] == "cell"]) == 6
    assert (tmp_path / "partial" / "hpst_table.csv").read_text() == reference


def test_parallel_matches_serial(tmp_path):
    serial = _table_cfg(tmp_path, name="s", mode="mixed_table", ns=[1, 2], nr=[1, 2])
    parallel = _table_cfg(tmp_path, name="p", mode="mixed_table", ns=[1, 2], nr=[1, 2], workers=2)
    run_sweep(serial, log=quiet)
    run_sweep(parallel, log=quiet)
    a = (tmp_path / "s" / "mixed_table.csv").read_text()
    assert a == (tmp_path / "p" / "mixed_table.csv").read_text()
    strip = lambda p: sorted(line.rsplit(",", 1)[0] for line in p.read_text().splitlines())
    assert strip(tmp_path / "s" / "store.csv") == strip(tmp_path / "p" / "store.csv")
    grid = {(int(r["n_s"]), int(r["n_r"])): int(r["n_c"]) for r in read_table(tmp_path / "s" / "mixed_table.csv")}
    assert grid == {(1, 1): 22, (1, 2): 37, (2, 1): 37, (2, 2): 109}


def test_deterministic_outputs(tmp_path):
    for name in ("a", "b"):
        run_sweep(SweepConfig(mode="spectrum", n=[31], ns=[10], nr=[1], out=str(tmp_path / name)), log=quiet)
    for f in ("N31_S10_R1_spectrum.dat", "N31_S10_R1_profile.dat", "N31_S10_R1_sender.dat"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_spectrum_sweep_files(tmp_path):
    run_sweep(SweepConfig(mode="spectrum", n=[31], ns=[10], nr=[1], out=str(tmp_path)), log=quiet)
    cols, data, meta = read_plotdata(tmp_path / "N31_S10_R1_spectrum.dat")
    assert cols == ["k", "P_Nk", "phi_Nk", "phi_tilde_Nk", "Phi_Nk"]
    assert data.shape == (31, 5) and abs(meta["t0"] - 39.3815) < 1e-3
    cols, data, _ = read_plotdata(tmp_path / "N31_S10_R1_profile.dat")
    assert cols == ["n", "abs_f_n"] and data.shape == (31, 2)
    assert abs(np.sum(data[:, 1] ** 2) - 1) < 1e-10


def test_plotdata_unknown_kind_and_width():
    with pytest.raises(ValueError):
        export_plotdata("histogram", [[1]])
    with pytest.raises(ValueError):
        export_plotdata("profile", [[1, 2]])


def test_accuracy_plotdata_columns(tmp_path):
    text = export_plotdata("accuracy", [[16, 17], [1e-16, 6e-6], [1e-16, 2e-4]], tmp_path / "acc.csv")
    assert text.splitlines()[0] == "# N,eps_L3,eps_L4"
    cols, data, _ = read_plotdata(tmp_path / "acc.csv")
    assert data[1, 2] == 2e-4


@pytest.mark.parametrize("cplx", [False, True])
def test_matrix_csv_roundtrip(tmp_path, rng, cplx):
    M = rng.normal(size=(5, 3))
    if cplx:
        M = M + 1j * rng.normal(size=(5, 3))
    write_matrix_csv(M, tmp_path / "m.csv")
    assert np.array_equal(read_matrix_csv(tmp_path / "m.csv"), M)


def test_two_qubit_accuracy_sweep(tmp_path):
    cfg = SweepConfig(mode="accuracy_curve", n=[6], restarts=1, out=str(tmp_path))
    run_sweep(cfg, log=quiet)
    cols, data, _ = read_plotdata(tmp_path / "accuracy.csv")
    assert cols == ["N", "eps_L3", "eps_L4"]
    assert data[0, 0] == 6 and np.all(data[0, 1:] < 1e-8)


def test_two_qubit_vertex_sweep(tmp_path):
    cfg = SweepConfig(mode="two_qubit_vertex", targets=["L1", "L2"], two_qubit_n_max=8, out=str(tmp_path))
    run_sweep(cfg, log=quiet)
    cols, data, _ = read_plotdata(tmp_path / "vertices.csv")
    assert cols[3] == "N_c"
    assert data[1, 3] == 191
    store = ResultStore(tmp_path / "store.csv", cfg.config_hash())
    assert store.get("two_qubit_vertex", "cell", 4, 2, "", "L1")["flag"] == "unbounded"


# ------------------------------------------------------------------- CLI


def test_cli_table(tmp_path, capsys):
    assert main(["table", "--mode", "hpst", "--ns", "1-2", "--nr", "1-2", "--out", str(tmp_path)]) == 0
    assert "N_c=17" in capsys.readouterr().out
    assert (tmp_path / "hpst_table.csv").exists()


def test_cli_resume_keeps_store(tmp_path):
    args = ["table", "--ns", "1", "--nr", "1", "--out", str(tmp_path)]
    assert main(args) == 0
    before = (tmp_path / "store.csv").read_text()
    assert main(args + ["--resume"]) == 0
    assert (tmp_path / "store.csv").read_text() == before


@pytest.mark.parametrize(
    "args",
    [
        ["table", "--ns", "0-2"],
        ["spectrum", "--n", "2000", "--ns", "1", "--nr", "1"],
        ["spectrum", "--n", "5", "--ns", "4", "--nr", "4"],
        ["two-qubit", "vertex", "--targets", "L7"],
    ],
)
def test_cli_errors_exit_nonzero(tmp_path, capsys, args):
    assert main(args + ["--out", str(tmp_path)]) != 0
    assert "error" in capsys.readouterr().err


def test_cli_unwritable_output(tmp_path, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert main(["table", "--ns", "1", "--nr", "1", "--out", str(blocker / "sub")]) != 0


def test_cli_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "spinline", "profile", "--n", "12", "--ns", "2", "--nr", "2", "--out", str(tmp_path)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "N12_S2_R2_profile.dat").exists()
    bad = subprocess.run([sys.executable, "-m", "spinline", "table", "--mode", "bogus"], capture_output=True, text=True)
    assert bad.returncode != 0
