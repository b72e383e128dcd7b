import json

import numpy as np
import pytest

from hopgeo.cli import main
from hopgeo.infogeo import fisher_matrix, spectrum
from hopgeo.kernel_core import KernelConfig, generate_patterns, gram, load_patterns
from hopgeo.klr import load_weights


def train_cfg_text(**overrides):
    values = dict(
        num_patterns=3,
        num_neurons=16,
        gamma=0.05,
        seed=11,
        learning_rate=0.02,
        max_epochs=4000,
        grad_tol=1e-6,
    )
    values["lambda"] = 1e-5
    values.update(overrides)
    return "".join(f"{k} = {v}\n" for k, v in values.items())


def grid_cfg_text():
    return (
        "gamma_values = 0.02 0.2\n"
        "load_values = 0.25\n"
        "num_neurons = 8\n"
        "trials_per_cell = 2\n"
        "base_seed = 3\n"
        "learning_rate = 0.02\n"
        "lambda = 1e-5\n"
        "max_epochs = 500\n"
        "metrics = lambda_max d_eff rank1_residual\n"
    )


def run_train(tmp_path, sub="run", **overrides):
    cfg = tmp_path / "train.cfg"
    cfg.write_text(train_cfg_text(**overrides))
    out = tmp_path / sub
    code = main(["train", "--config", str(cfg), "--out", str(out)])
    return code, out


def digests(manifest_path):
    return json.loads(manifest_path.read_text())["outputs"]


def test_train_produces_artifacts_and_manifest(tmp_path):
    code, out = run_train(tmp_path)
    assert code == 0
    assert (out / "patterns.txt").exists()
    assert (out / "weights.txt").exists()
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["resolved_config"]["gamma"] == 0.05
    assert manifest["seeds"]["pattern_seed"] == 11
    assert set(manifest["outputs"]) == {"patterns.txt", "weights.txt"}
    # trained artifacts are loadable and mutually consistent
    ps = load_patterns(out / "patterns.txt")
    w = load_weights(out / "weights.txt")
    assert ps.num_patterns == 3
    assert w.alpha.shape == (3, 16)
    assert w.gamma == 0.05


def test_train_rerun_is_byte_identical_except_manifest(tmp_path):
    _, a = run_train(tmp_path, "a")
    _, b = run_train(tmp_path, "b")
    for name in ("patterns.txt", "weights.txt"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    assert digests(a / "manifest.json") == digests(b / "manifest.json")


def test_train_seed_flag_overrides_config(tmp_path):
    _, a = run_train(tmp_path, "a")
    cfg = tmp_path / "train.cfg"
    out = tmp_path / "c"
    code = main(["train", "--config", str(cfg), "--out", str(out), "--seed", "99"])
    assert code == 0
    assert (a / "patterns.txt").read_bytes() != (out / "patterns.txt").read_bytes()
    assert load_patterns(out / "patterns.txt").seed == 99


def test_train_bad_gamma_exits_2_and_names_field(tmp_path, capsys):
    code, _ = run_train(tmp_path, gamma=-1)
    assert code == 2
    assert "gamma" in capsys.readouterr().err


def test_train_unknown_key_exits_2(tmp_path, capsys):
    cfg = tmp_path / "train.cfg"
    cfg.write_text(train_cfg_text() + "typo_key = 1\n")
    code = main(["train", "--config", str(cfg), "--out", str(tmp_path / "x")])
    assert code == 2
    assert "typo_key" in capsys.readouterr().err


def test_train_missing_config_exits_2(tmp_path):
    code = main(["train", "--config", str(tmp_path / "nope.cfg"),
                 "--out", str(tmp_path / "x")])
    assert code == 2


def test_train_divergence_exits_3_and_removes_partials(tmp_path, capsys):
    code, out = run_train(
        tmp_path, gamma=1e-4, num_patterns=8, num_neurons=8,
        learning_rate=5.0, max_epochs=200,
    )
    assert code == 3
    assert not (out / "patterns.txt").exists()
    assert not (out / "weights.txt").exists()
    assert "numeric failure" in capsys.readouterr().err


def test_usage_error_exit_code():
    assert main(["train"]) == 2
    assert main(["frobnicate"]) == 2


def test_spectrum_command_matches_in_process_oracle(tmp_path):
    _, out = run_train(tmp_path)
    csv_path = tmp_path / "spectrum.csv"
    svg_path = tmp_path / "spectrum.svg"
    code = main(["spectrum", "--weights", str(out),
                 "--out", str(csv_path), "--svg", str(svg_path)])
    assert code == 0
    assert svg_path.exists()
    lines = csv_path.read_text().splitlines()
    assert lines[0] == "neuron,k,lambda_k,lambda_k_over_lambda_1"
    assert len(lines) == 1 + 16 * 3  # N neurons x P modes
    # check one neuron against an in-process recomputation
    ps = load_patterns(out / "patterns.txt")
    w = load_weights(out / "weights.txt")
    K = gram(ps, KernelConfig(gamma=w.gamma))
    spec = spectrum(fisher_matrix(w.alpha[:, 0], K))
    row0 = lines[1].split(",")
    assert int(row0[0]) == 0 and int(row0[1]) == 1
    assert float(row0[2]) == pytest.approx(spec.lambda_max, rel=1e-12)
    assert float(row0[3]) == 1.0


def test_spectrum_missing_artifacts_exits_2(tmp_path):
    code = main(["spectrum", "--weights", str(tmp_path),
                 "--out", str(tmp_path / "s.csv")])
    assert code == 2


def test_phase_writes_grid_and_svgs(tmp_path, capsys):
    cfg = tmp_path / "grid.cfg"
    cfg.write_text(grid_cfg_text())
    out = tmp_path / "phase"
    code = main(["phase", "--config", str(cfg), "--out", str(out), "--workers", "1"])
    assert code == 0
    lines = (out / "grid.csv").read_text().splitlines()
    assert len(lines) == 1 + 2  # header + one row per cell
    for metric in ("lambda_max", "d_eff", "rank1_residual"):
        assert (out / f"{metric}.svg").exists()
    assert (out / "manifest.json").exists()


def test_phase_worker_count_invariance(tmp_path):
    cfg = tmp_path / "grid.cfg"
    cfg.write_text(grid_cfg_text())
    a = tmp_path / "w1"
    b = tmp_path / "w2"
    assert main(["phase", "--config", str(cfg), "--out", str(a), "--workers", "1"]) == 0
    assert main(["phase", "--config", str(cfg), "--out", str(b), "--workers", "2"]) == 0
    assert digests(a / "manifest.json") == digests(b / "manifest.json")


def test_phase_bad_config_exits_2(tmp_path, capsys):
    cfg = tmp_path / "grid.cfg"
    cfg.write_text("gamma_values = 0.1\nload_values = 0.5\n")  # missing num_neurons
    code = main(["phase", "--config", str(cfg), "--out", str(tmp_path / "x")])
    assert code == 2
    assert "num_neurons" in capsys.readouterr().err


def test_recall_zero_corruption_is_perfect(tmp_path):
    _, out = run_train(tmp_path)
    rc_path = tmp_path / "recall.csv"
    code = main(["recall", "--weights", str(out), "--flip-fractions", "0",
                 "--trials", "2", "--out", str(rc_path)])
    assert code == 0
    lines = rc_path.read_text().splitlines()
    assert lines[0] == "trial,target,flip_fraction,steps,converged,overlap,success"
    rows = [l for l in lines if l and not l.startswith("#")][1:]
    assert len(rows) == 2 * 3  # trials x patterns
    assert all(r.endswith(",true") for r in rows)
    summaries = [l for l in lines if l.startswith("# success_rate")]
    assert len(summaries) == 1
    assert "rate=1" in summaries[0]


def test_recall_multiple_fractions_and_determinism(tmp_path):
    _, out = run_train(tmp_path)
    p1 = tmp_path / "r1.csv"
    p2 = tmp_path / "r2.csv"
    args = ["recall", "--weights", str(out), "--flip-fractions", "0 0.1",
            "--trials", "3", "--seed", "5"]
    assert main(args + ["--out", str(p1)]) == 0
    assert main(args + ["--out", str(p2)]) == 0
    assert p1.read_bytes() == p2.read_bytes()
    summaries = [l for l in p1.read_text().splitlines() if l.startswith("#")]
    assert len(summaries) == 2


def test_recall_bad_fraction_exits_2(tmp_path):
    _, out = run_train(tmp_path)
    assert main(["recall", "--weights", str(out), "--flip-fractions", "1.5",
                 "--out", str(tmp_path / "r.csv")]) == 2
    assert main(["recall", "--weights", str(out), "--flip-fractions", "0.1",
                 "--trials", "0", "--out", str(tmp_path / "r.csv")]) == 2


def test_render_from_existing_grid(tmp_path):
    cfg = tmp_path / "grid.cfg"
    cfg.write_text(grid_cfg_text())
    out = tmp_path / "phase"
    assert main(["phase", "--config", str(cfg), "--out", str(out), "--workers", "1"]) == 0
    rout = tmp_path / "rendered"
    code = main(["render", "--grid", str(out / "grid.csv"),
                 "--metrics", "lambda_max d_eff", "--out", str(rout)])
    assert code == 0
    assert (rout / "lambda_max.svg").read_bytes() == (out / "lambda_max.svg").read_bytes()
    assert (rout / "d_eff.svg").read_bytes() == (out / "d_eff.svg").read_bytes()


def test_render_unknown_metric_exits_2(tmp_path):
    cfg = tmp_path / "grid.cfg"
    cfg.write_text(grid_cfg_text())
    out = tmp_path / "phase"
    assert main(["phase", "--config", str(cfg), "--out", str(out), "--workers", "1"]) == 0
    assert main(["render", "--grid", str(out / "grid.csv"),
                 "--metrics", "bogus", "--out", str(tmp_path / "x")]) == 2


def test_version_flag_exits_zero():
    assert main(["--version"]) == 0
