import csv
import json
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from bhdecode.anneal import AnnealConfig
from bhdecode.harness import (
    CSV_FIELDS,
    FitError,
    RunRecord,
    RunTable,
    SweepConfig,
    SweepError,
    audit_record,
    emit_plot_data,
    export_table,
    fit_exponential,
    import_table,
    resume_sweep,
    run_seed,
    run_sweep,
)

# a + b and alpha rows of the reference decay fits (final and teleport fidelity, n_C = 1 and 2)
TABLE_ROWS = [
    (0.7243, 0.167, 0.2757),
    (0.8483, 0.129, 0.1517),
    (0.5860, 0.167, 0.4140),
    (0.6794, 0.129, 0.3206),
]


def small_config(**kw):
    base = dict(n=5, n_a=1, n_c=1, t_values=(0, 2), realizations=3, seed=7, timing=False,
                anneal=AnnealConfig(t_max_factor=8))
    base.update(kw)
    return SweepConfig(**base)


def test_config_roundtrip_and_validation():
    cfg = small_config(teleport=True)
    assert SweepConfig.from_dict(json.loads(json.dumps(cfg.to_dict()))) == cfg
    with pytest.raises(ValueError):
        SweepConfig.from_dict({**cfg.to_dict(), "bogus": 1})
    for bad in ({"t_values": ()}, {"t_values": (1, 1)}, {"realizations": 0}, {"n": 13}, {"n_a": 9},
                {"psi_source": "x"}, {"jobs": 0}):
        with pytest.raises(ValueError):
            small_config(**bad)
    assert SweepConfig.from_profile("desk").t_values == (0, 2, 4, 6, 8)
    assert SweepConfig.from_profile("paper").n == 10


def test_run_seed_distinct():
    seeds = {run_seed(0, t, i) for t in range(5) for i in range(50)}
    assert len(seeds) == 250
    assert run_seed(0, 1, 2) == run_seed(0, 1, 2) != run_seed(1, 1, 2)


def test_sweep_records(tmp_path):
    cfg = small_config(n=6, t_values=(0, 1, 2, 3, 4), realizations=1, teleport=True)
    table = run_sweep(cfg, tmp_path)
    assert len(table) == 5
    for r in table.records:
        assert 0 <= r.final_fidelity <= 1
        assert r.teleport_fidelity is None or 0 <= r.teleport_fidelity <= 1
        assert r.wall_s is None
        assert audit_record(r, cfg) < 1e-10
    assert [r.t for r in table.records] == [0, 1, 2, 3, 4]


def _csv_bytes(table, path):
    return export_table(table, path).read_bytes()


def test_jobs_and_resume_give_identical_csv(tmp_path):
    cfg = small_config()
    serial = _csv_bytes(run_sweep(cfg, tmp_path / "a"), tmp_path / "a.csv")
    par = _csv_bytes(run_sweep(small_config(jobs=2), tmp_path / "b"), tmp_path / "b.csv")
    assert serial == par
    part = run_sweep(cfg, tmp_path / "c", max_runs=2)
    assert len(part) == 2
    resumed = resume_sweep(tmp_path / "c", jobs=2)
    assert _csv_bytes(resumed, tmp_path / "c.csv") == serial
    again = run_sweep(cfg, tmp_path / "c")
    assert _csv_bytes(again, tmp_path / "d.csv") == serial


def test_mismatched_resume_refused(tmp_path):
    run_sweep(small_config(), tmp_path, max_runs=1)
    with pytest.raises(SweepError):
        run_sweep(small_config(seed=8), tmp_path)
    with pytest.raises(SweepError):
        resume_sweep(tmp_path / "missing")


def test_roundtrips(tmp_path):
    cfg = small_config(teleport=True)
    table = run_sweep(cfg)
    for fmt in ("csv", "json"):
        back = import_table(export_table(table, tmp_path / f"runs.{fmt}", fmt))
        assert back == table
    assert import_table(tmp_path / "runs.json").config == cfg
    with open(tmp_path / "runs.csv") as fh:
        rows = list(csv.reader(fh))
    assert tuple(rows[0]) == CSV_FIELDS
    assert (tmp_path / "runs.csv").read_text().splitlines()[0] == ",".join(CSV_FIELDS)


def test_empty_teleport_field(tmp_path):
    rec = RunRecord("t00-r0000", 1, 0, 4, 1, 1, 10, 5, 0.5, None, 3.0, None)
    path = export_table(RunTable([rec]), tmp_path / "x.csv")
    assert path.read_text().splitlines()[1] == "t00-r0000,1,0,4,1,1,10,5,0.5,,3.0,"
    assert import_table(path).records[0].teleport_fidelity is None


def test_record_rejects_bad_fidelity():
    with pytest.raises(ValueError):
        RunRecord("t00-r0000", 1, 0, 4, 1, 1, 10, 5, 1.5, None, 3.0, None)
    rec = RunRecord("t00-r0000", np.int64(1), 0, 4, 1, 1, 10, 5, np.float64(0.25), None, 3.0, None)
    assert type(rec.final_fidelity) is float and rec.csv_row()[8] == "0.25"


def test_import_rejects_foreign_csv(tmp_path):
    p = tmp_path / "f.csv"
    p.write_text("a,b\n1,2\n")
    with pytest.raises(ValueError):
        import_table(p)


@pytest.mark.parametrize("a,alpha,b", TABLE_ROWS)
def test_fit_recovers_rows(a, alpha, b):
    t = np.arange(13)
    fit = fit_exponential(list(zip(t, a * np.exp(-alpha * t) + b)))
    assert_allclose([fit.a, fit.alpha, fit.b], [a, alpha, b], atol=1e-6)
    assert fit.a_plus_b == pytest.approx(1.0, abs=1e-6)
    assert fit.residual_norm < 1e-8


def test_fit_edge_cases():
    fit = fit_exponential([(0, 0.5), (1, 0.5), (2, 0.5)])
    assert fit.degenerate and fit.a == 0 and fit.b == 0.5
    with pytest.raises(ValueError):
        fit_exponential([(0, 1.0), (1, 0.5), (1, 0.4)])
    with pytest.raises(ValueError):
        fit_exponential([(0, 1.0), (1, math.nan), (2, 0.4)])
    with pytest.raises(FitError):
        fit_exponential([(0, 1.0), (1, 0.5), (2, 0.3)], max_nfev=1)


def test_fit_noisy_input_in_any_order():
    rng = np.random.default_rng(3)
    t = np.arange(0, 13, 2)
    y = 0.72 * np.exp(-0.167 * t) + 0.28 + rng.normal(0, 0.005, t.size)
    f1 = fit_exponential(list(zip(t, y)))
    f2 = fit_exponential(list(zip(t[::-1], y[::-1])))
    assert f1.alpha == pytest.approx(f2.alpha, abs=1e-12)
    assert 0.12 < f1.alpha < 0.22


def test_stats_and_plot_data(tmp_path):
    rng = np.random.default_rng(0)
    recs = []
    for t in (0, 2, 4, 6):
        for i in range(40):
            f = float(np.clip(0.7 * math.exp(-0.2 * t) + 0.3 + rng.normal(0, 0.05), 0, 1))
            recs.append(RunRecord(f"t{t:02d}-r{i:04d}", i, t, 8, 2, 1, 1, 1, f, None, 1.0, None, index=i))
    table = RunTable(recs)
    stats = table.stats()
    assert [s[0] for s in stats] == [0, 2, 4, 6] and all(s[3] == 40 for s in stats)
    assert_allclose(stats[0][2], table.column("final_fidelity", 0).std(ddof=1) / math.sqrt(40))
    fit = fit_exponential(stats)
    paths = emit_plot_data(table, fit, tmp_path)
    with open(paths["curve"]) as fh:
        assert len(list(csv.reader(fh))) - 1 >= 100
    with open(paths["points"]) as fh:
        rows = list(csv.DictReader(fh))
    assert [int(r["count"]) for r in rows] == [40] * 4
    assert paths["figure"].stat().st_size > 1000
    assert table.stats("teleport_fidelity") == []


def test_stderr_scaling():
    rng = np.random.default_rng(1)
    se = []
    for k in (100, 400, 1600):
        vals = rng.normal(0.5, 0.1, k).clip(0, 1)
        recs = [RunRecord(f"t00-r{i:04d}", i, 0, 4, 1, 1, 1, 1, float(v), None, 1.0, None, index=i)
                for i, v in enumerate(vals)]
        se.append(RunTable(recs).stats()[0][2])
    assert se[0] / se[1] == pytest.approx(2, rel=0.2)
    assert se[1] / se[2] == pytest.approx(2, rel=0.2)
