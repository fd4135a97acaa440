from __future__ import annotations

import json

import pytest

from mospoison.errors import ConfigError
from mospoison.harness import (
    RESULTS_COLUMNS,
    SWEEP_COLUMNS,
    config_from_dict,
    experiment_id,
    gen_corpus,
    load_config,
    run_experiment,
    sweep_poisoning_rate,
    sweep_target_label,
    transfer_matrix,
)


def tiny_config_dict(out_dir, **overrides):
    d = {
        "seed": 3,
        "corpus": {"n_clips": 30, "duration_s": 2.5},
        "trigger": {"kind": "packet_loss"},
        "poison": {"rate": 0.1, "target_label": 5.0},
        "train": {"epochs": 2, "batch_size": 8},
        "output_dir": str(out_dir),
    }
    d.update(overrides)
    return d


@pytest.fixture()
def tiny_cfg(tmp_path):
    return config_from_dict(tiny_config_dict(tmp_path / "out"))


def test_config_defaults():
    cfg = config_from_dict({})
    assert cfg.corpus.n_clips == 1000
    assert cfg.trigger.kind == "packet_loss"
    assert cfg.poison_rate == 0.03
    assert cfg.target_label == 5.0
    assert cfg.train.epochs == 60


def test_config_rejects_unknown_fields():
    with pytest.raises(ConfigError):
        config_from_dict({"bogus": 1})
    with pytest.raises(ConfigError):
        config_from_dict({"trigger": {"kind": "packet_loss", "zap": 2}})


def test_config_sub_seeds_derive_from_master():
    a = config_from_dict({"seed": 1})
    b = config_from_dict({"seed": 2})
    assert a.corpus.seed != b.corpus.seed
    assert a.train.seed != b.train.seed
    pinned = config_from_dict({"seed": 2, "corpus": {"n_clips": 30, "duration_s": 2.5, "seed": 99}})
    assert pinned.corpus.seed == 99


def test_load_config_overrides(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(tiny_config_dict(tmp_path / "a")))
    cfg = load_config(path, seed=42, out=str(tmp_path / "b"))
    assert cfg.seed == 42
    assert cfg.output_dir == tmp_path / "b"


def test_load_config_errors(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(bad)
    arr = tmp_path / "arr.json"
    arr.write_text("[1, 2]")
    with pytest.raises(ConfigError):
        load_config(arr)


def test_experiment_id_stable_and_sensitive(tiny_cfg):
    assert experiment_id(tiny_cfg) == experiment_id(tiny_cfg)
    other = config_from_dict({**tiny_cfg.to_dict(), "seed": 4})
    assert experiment_id(other) != experiment_id(tiny_cfg)


def test_run_experiment_outputs(tiny_cfg):
    result = run_experiment(tiny_cfg)
    out = tiny_cfg.output_dir
    lines = (out / "results.csv").read_text().splitlines()
    assert lines[0] == "schema_version,1"
    assert lines[1] == ",".join(RESULTS_COLUMNS)
    assert len(lines) == 2 + 4  # four quadrant rows
    for line in lines[2:]:
        fields = line.split(",")
        assert fields[-1] == "NA"  # wall_time_s stays out of deterministic outputs
        if fields[5] == "poisoned":
            assert fields[6] == "NA"  # PLCC undefined on constant labels
    assert (out / "model_clean.json").exists()
    assert (out / "model_poisoned.json").exists()
    assert (out / "run_manifest.json").exists()
    assert (out / "config.json").exists()
    assert (out / "timings.json").exists()
    assert len(result.rows) == 4
    report = json.loads((out / "report.json").read_text())
    assert set(report["quadrants"]) == {
        "clean/clean",
        "clean/poisoned",
        "poisoned/clean",
        "poisoned/poisoned",
    }
    assert report["quadrants"]["poisoned/poisoned"]["plcc"] is None


def test_run_experiment_rate_zero_degenerates(tmp_path):
    cfg = config_from_dict(tiny_config_dict(tmp_path / "out", poison={"rate": 0.0, "target_label": 5.0}))
    result = run_experiment(cfg)
    assert result.arm.poisoned_params.equals_exactly(result.state.clean_params)
    for test_set in ("clean", "poisoned"):
        a = result.arm.report.get("clean", test_set)
        b = result.arm.report.get("poisoned", test_set)
        assert (a.plcc, a.asr_percent, a.n) == (b.plcc, b.asr_percent, b.n)


def test_run_experiment_rerun_is_byte_identical(tmp_path):
    cfg_a = config_from_dict(tiny_config_dict(tmp_path / "a"))
    cfg_b = config_from_dict(tiny_config_dict(tmp_path / "b"))
    run_experiment(cfg_a)
    run_experiment(cfg_b)
    a = (tmp_path / "a" / "results.csv").read_bytes()
    assert a == (tmp_path / "b" / "results.csv").read_bytes()
    run_experiment(cfg_a)  # and rerunning into the same directory
    assert (tmp_path / "a" / "results.csv").read_bytes() == a


def test_save_audio_materializes_poisoned_sets(tmp_path):
    cfg = config_from_dict(tiny_config_dict(tmp_path / "out"))
    run_experiment(cfg, save_audio=True)
    assert (cfg.output_dir / "poisoned_train" / "manifest.json").exists()
    assert (cfg.output_dir / "poisoned_test" / "manifest.json").exists()
    wavs = list((cfg.output_dir / "poisoned_train" / "clips").glob("*.wav"))
    assert len(wavs) == 21  # 70% of 30


def test_sweep_rate_shares_clean_model(tmp_path):
    cfg = config_from_dict(tiny_config_dict(tmp_path / "out"))
    sweep = sweep_poisoning_rate(cfg, [0.1, 0.3])
    clean_plccs = {
        row.plcc
        for row in sweep.rows
        if row.model_variant == "clean" and row.test_set == "clean"
    }
    assert len(clean_plccs) == 1  # one shared clean model across rate groups
    lines = (cfg.output_dir / "sweep_curve.csv").read_text().splitlines()
    assert lines[0] == "schema_version,1"
    assert lines[1] == ",".join(SWEEP_COLUMNS)
    assert len(lines) == 4
    assert lines[2].startswith("poison_rate,0.1,")
    assert lines[3].startswith("poison_rate,0.3,")


def test_sweep_single_rate_matches_run(tmp_path):
    d = tiny_config_dict(tmp_path / "a")
    run_result = run_experiment(config_from_dict(d))
    sweep = sweep_poisoning_rate(config_from_dict({**d, "output_dir": str(tmp_path / "b")}), [0.1])
    want = [(r.model_variant, r.test_set, r.plcc, r.asr_percent, r.n_test) for r in run_result.rows]
    got = [(r.model_variant, r.test_set, r.plcc, r.asr_percent, r.n_test) for r in sweep.rows]
    assert want == got


def test_sweep_rate_validation(tiny_cfg):
    with pytest.raises(ConfigError):
        sweep_poisoning_rate(tiny_cfg, [])
    with pytest.raises(ConfigError):
        sweep_poisoning_rate(tiny_cfg, [0.5, 1.5])


def test_sweep_target_runs_per_target(tmp_path):
    cfg = config_from_dict(tiny_config_dict(tmp_path / "out"))
    sweep = sweep_target_label(cfg, [1.0, 5.0])
    targets = {row.target_label for row in sweep.rows}
    assert targets == {1.0, 5.0}
    with pytest.raises(ConfigError):
        sweep_target_label(cfg, [0.5])


def test_transfer_matrix_square_and_deterministic(tmp_path):
    d = tiny_config_dict(
        tmp_path / "out", trigger={"kind": "spectral_signature", "signature_seed": 0}
    )
    cfg = config_from_dict(d)
    result = transfer_matrix(cfg, [0, 1])
    assert result.asr_matrix.shape == (2, 2)
    lines = (cfg.output_dir / "transfer_matrix.csv").read_text().splitlines()
    assert lines[0] == "schema_version,1"
    assert lines[1] == "source_seed,0,1"
    assert lines[2].startswith("0,") and lines[3].startswith("1,")


def test_transfer_one_by_one_matches_run(tmp_path):
    d = tiny_config_dict(
        tmp_path / "a", trigger={"kind": "spectral_signature", "signature_seed": 4}
    )
    run_result = run_experiment(config_from_dict(d))
    want = run_result.arm.report.get("poisoned", "poisoned").asr_percent
    cfg_b = config_from_dict({**d, "output_dir": str(tmp_path / "b")})
    result = transfer_matrix(cfg_b, [4])
    assert result.asr_matrix.shape == (1, 1)
    assert result.asr_matrix[0, 0] == want


def test_transfer_requires_spectral_trigger(tiny_cfg):
    with pytest.raises(ConfigError):
        transfer_matrix(tiny_cfg, [0, 1])


def test_gen_corpus_writes_manifest(tmp_path):
    cfg = config_from_dict(tiny_config_dict(tmp_path / "corpus"))
    manifest = gen_corpus(cfg)
    doc = json.loads(manifest.read_text())
    assert doc["n_clips"] == 30
    wavs = list((tmp_path / "corpus" / "clips").glob("*.wav"))
    assert len(wavs) == 30
