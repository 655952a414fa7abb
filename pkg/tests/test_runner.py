import numpy as np
import pytest

from fedsim import config, runner
from fedsim.clients import AttackSpec
from fedsim.core import SERVER_STREAM, make_rng
from fedsim.metrics import RoundReport
from fedsim.runner import CSV_HEADER, sample_participants, write_report_csv


def small_config(tmp_path, **overrides):
    table = {
        "rounds": 20,
        "seed": 5,
        "participation_fraction": 0.5,
        "out_dir": str(tmp_path),
        "algorithm.kind": "fedavg",
        "model.kind": "logistic",
        "model.input_dim": 4,
        "model.num_classes": 3,
        "data.partition": "shard",
        "data.num_users": 6,
        "data.shards_per_user": 1,
        "data.n_total": 180,
        "client.k": 1,
        "client.b": 8,
        "client.lr": 0.05,
    }
    table.update(overrides)
    return config.build_config(table)


# ------------------------------------------------------------ participation

def test_full_participation_is_all_users_sorted():
    rng = make_rng(0, SERVER_STREAM)
    assert sample_participants(7, 1.0, rng, AttackSpec()) == list(range(7))


def test_sample_size_is_ceil_of_fraction():
    rng = make_rng(1, SERVER_STREAM)
    for _ in range(50):
        chosen = sample_participants(100, 0.1, rng, AttackSpec())
        assert len(chosen) == 10
        assert len(set(chosen)) == 10
        assert chosen == sorted(chosen)
    assert len(sample_participants(10, 0.25, rng, AttackSpec())) == 3  # ceil(2.5)


def test_forced_adversary_always_present():
    rng = make_rng(2, SERVER_STREAM)
    attack = AttackSpec("bias", 5.0, adversary_id=13, always_participates=True)
    for _ in range(300):
        assert 13 in sample_participants(40, 0.1, rng, attack)


def test_unforced_attack_does_not_perturb_sampling():
    honest = make_rng(3, SERVER_STREAM)
    attacked = make_rng(3, SERVER_STREAM)
    attack = AttackSpec("bias", 5.0, adversary_id=2, always_participates=False)
    for _ in range(50):
        assert (sample_participants(30, 0.2, honest, AttackSpec())
                == sample_participants(30, 0.2, attacked, attack))


# -------------------------------------------------------------------- runs

def test_noop_run_keeps_initial_weights(tmp_path):
    cfg = small_config(tmp_path, **{"rounds": 1, "participation_fraction": 1.0,
                                    "client.lr": 0.0})
    result = runner.run(cfg)
    np.testing.assert_array_equal(result.final_w,
                                  np.zeros(cfg.model.param_dim))
    assert len(result.reports) == 1


def test_identical_configs_produce_identical_csv_bytes(tmp_path):
    cfg_a = small_config(tmp_path / "a")
    cfg_b = small_config(tmp_path / "b")
    res_a = runner.run(cfg_a)
    res_b = runner.run(cfg_b)
    bytes_a = open(res_a.csv_path, "rb").read()
    bytes_b = open(res_b.csv_path, "rb").read()
    assert bytes_a == bytes_b
    np.testing.assert_array_equal(res_a.final_w, res_b.final_w)


def test_thread_count_does_not_change_results(tmp_path, monkeypatch):
    monkeypatch.setenv("FEDSIM_THREADS", "1")
    res_serial = runner.run(small_config(tmp_path / "serial"))
    monkeypatch.setenv("FEDSIM_THREADS", "4")
    res_pool = runner.run(small_config(tmp_path / "pool"))
    assert open(res_serial.csv_path, "rb").read() == open(res_pool.csv_path, "rb").read()


def test_mlp_run_smoke(tmp_path):
    cfg = small_config(tmp_path, **{"model.kind": "mlp", "model.hidden_dim": 4,
                                    "model.l2_reg": 0.01, "rounds": 5,
                                    "algorithm.kind": "fedmgda_plus",
                                    "algorithm.global_lr.initial": 0.5})
    result = runner.run(cfg)
    assert np.all(np.isfinite(result.final_w))
    assert all(0 <= r.pct_improved <= 1 for r in result.reports)
    assert all(r.worst5_acc <= r.avg_test_acc <= r.best5_acc for r in result.reports)


def test_fedmgda_plus_with_closed_box_matches_fedavg(tmp_path):
    res_avg = runner.run(small_config(tmp_path / "avg"))
    res_mgda = runner.run(small_config(
        tmp_path / "mgda", **{"algorithm.kind": "fedmgda_plus",
                              "algorithm.epsilon": 0.0,
                              "algorithm.normalize": False}))
    a = np.array([r.avg_train_loss for r in res_avg.reports])
    b = np.array([r.avg_train_loss for r in res_mgda.reports])
    np.testing.assert_allclose(a, b, rtol=0, atol=1e-9)


# --------------------------------------------------------------------- csv

def test_csv_header_only_for_zero_rounds(tmp_path):
    path = tmp_path / "empty.csv"
    write_report_csv([], str(path), "fedavg")
    assert path.read_text() == CSV_HEADER + "\n"


def test_csv_round_trip_and_shape(tmp_path):
    rng = np.random.default_rng(0)
    reports = [RoundReport(t, *(float(x) for x in rng.uniform(size=7)), (0, 1), 0)
               for t in range(7)]
    path = tmp_path / "r.csv"
    write_report_csv(reports, str(path), "qfedavg")
    lines = path.read_text().splitlines()
    assert lines[0] == CSV_HEADER
    assert len(lines) == 8
    ncols = len(CSV_HEADER.split(","))
    for line, rep in zip(lines[1:], reports):
        cells = line.split(",")
        assert len(cells) == ncols
        assert cells[1] == "qfedavg"
        assert int(cells[0]) == rep.round
        for got, want in zip(cells[2:9], (
                rep.avg_test_acc, rep.std_test_acc, rep.worst5_acc, rep.best5_acc,
                rep.avg_train_loss, rep.pct_improved, rep.min_norm_objective)):
            assert float(got) == pytest.approx(want, rel=1e-9)
        assert cells[-1] == "0"


def test_csv_uses_lf_line_endings(tmp_path):
    res = runner.run(small_config(tmp_path, rounds=2))
    blob = open(res.csv_path, "rb").read()
    assert b"\r" not in blob


def test_run_from_csv_dataset(tmp_path):
    rng = np.random.default_rng(3)
    path = tmp_path / "pool.csv"
    with open(path, "w") as fh:
        for _ in range(120):
            label = int(rng.integers(0, 3))
            feats = rng.standard_normal(4) + label
            fh.write(",".join(f"{v:.6f}" for v in feats) + f",{label}\n")
    cfg = small_config(tmp_path, **{
        "rounds": 5,
        "data.source": "csv",
        "data.csv_path": str(path),
        "data.label_column": -1,
        "data.partition": "iid",
        "data.num_users": 6,
    })
    result = runner.run(cfg)
    assert len(result.reports) == 5
    assert np.all(np.isfinite(result.final_w))
