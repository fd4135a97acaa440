"""Experiment orchestration: configs, single runs, sweeps, transfer matrices.

Every run is a pure function of its resolved config: corpus, split, poison
selection, trigger draws, and training all derive from the master seed, so
rerunning a config reproduces every output file byte for byte.  Measured
wall times are deliberately kept out of results.csv (they go to a
timings.json sidecar) to preserve that property; the wall_time_s column is
always "NA".
"""

from __future__ import annotations

import hashlib
import json
import sys
import time
from contextlib import contextmanager
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .corpus import CorpusSpec, Dataset, build_corpus, save_dataset, split_dataset
from .errors import ConfigError
from .evaluation import EvalReport, asr, evaluate_quadrants
from .features import FeatureFrames, extract_features
from .poisoning import (
    PoisonedDataset,
    PoisonPlan,
    build_poisoned_test_set,
    poison_training_set,
    save_poisoned_dataset,
)
from .regressor import RegressorParams, TrainConfig, predict_batch, save_params, train
from .rng import derive_seed
from .triggers import TriggerSpec

RESULTS_SCHEMA_VERSION = 1

RESULTS_COLUMNS = (
    "experiment_id",
    "poison_rate",
    "target_label",
    "trigger_kind",
    "model_variant",
    "test_set",
    "plcc",
    "asr_percent",
    "n_test",
    "wall_time_s",
)

SWEEP_COLUMNS = ("sweep_param", "value", "asr_percent_poisoned_test", "plcc_clean_test")

DEFAULT_RATE_GRID = (0.01, 0.03, 0.05, 0.10)
DEFAULT_TARGET_GRID = (1.0, 5.0)
DEFAULT_SIGNATURE_SEEDS = (0, 1, 2)

# master-seed stream tags
_CORPUS_STREAM = 0
_TRAIN_STREAM = 1
_SPLIT_STREAM = 2
_POISON_STREAM = 3


@dataclass
class ExperimentConfig:
    seed: int = 0
    corpus: CorpusSpec = field(default_factory=lambda: CorpusSpec(n_clips=1000))
    trigger: TriggerSpec = field(default_factory=lambda: TriggerSpec(kind="packet_loss"))
    poison_rate: float = 0.03
    target_label: float = 5.0
    train: TrainConfig = field(default_factory=TrainConfig)
    output_dir: Path = Path("mospoison_out")

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "corpus": {
                "n_clips": self.corpus.n_clips,
                "duration_s": self.corpus.duration_s,
                "noise_floor_dbfs": self.corpus.noise_floor_dbfs,
                "degradation_mix": dict(self.corpus.degradation_mix),
                "seed": self.corpus.seed,
            },
            "trigger": self.trigger.to_dict(),
            "poison": {"rate": self.poison_rate, "target_label": self.target_label},
            "train": self.train.to_dict(),
            "output_dir": str(self.output_dir),
        }


def config_from_dict(d: dict) -> ExperimentConfig:
    """Build a config; sub-seeds not given explicitly derive from the master."""
    try:
        known = {"seed", "corpus", "trigger", "poison", "train", "output_dir"}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        seed = int(d.get("seed", 0))
        corpus_d = dict(d.get("corpus", {}))
        corpus_d.setdefault("n_clips", 1000)
        corpus_d.setdefault("seed", derive_seed(seed, _CORPUS_STREAM))
        trigger_d = dict(d.get("trigger", {"kind": "packet_loss"}))
        poison_d = dict(d.get("poison", {}))
        train_d = dict(d.get("train", {}))
        train_d.setdefault("seed", derive_seed(seed, _TRAIN_STREAM))
        return ExperimentConfig(
            seed=seed,
            corpus=CorpusSpec(**corpus_d),
            trigger=TriggerSpec.from_dict(trigger_d),
            poison_rate=float(poison_d.get("rate", 0.03)),
            target_label=float(poison_d.get("target_label", 5.0)),
            train=TrainConfig(**train_d),
            output_dir=Path(d.get("output_dir", "mospoison_out")),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path: str | Path | None, seed: int | None = None, out: str | None = None) -> ExperimentConfig:
    """Load JSON config (defaults when path is None) with CLI overrides."""
    if path is None:
        d: dict = {}
    else:
        try:
            d = json.loads(Path(path).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
        if not isinstance(d, dict):
            raise ConfigError(f"config {path} must hold a JSON object")
    if seed is not None:
        # sub-seeds re-derive from the override unless pinned in the file
        d["seed"] = seed
    if out is not None:
        d["output_dir"] = out
    return config_from_dict(d)


def experiment_id(cfg: ExperimentConfig) -> str:
    """Short stable id: hash of the resolved config (output location excluded)."""
    doc = cfg.to_dict()
    doc.pop("output_dir")
    blob = json.dumps(doc, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:12]


@dataclass
class ResultRow:
    experiment_id: str
    poison_rate: float
    target_label: float
    trigger_kind: str
    model_variant: str
    test_set: str
    plcc: float | None
    asr_percent: float
    n_test: int
    wall_time_s: None = None  # kept out of deterministic outputs; see timings.json

    def as_csv(self) -> str:
        plcc_s = "NA" if self.plcc is None else f"{self.plcc:.6f}"
        return ",".join(
            [
                self.experiment_id,
                f"{self.poison_rate:g}",
                f"{self.target_label:g}",
                self.trigger_kind,
                self.model_variant,
                self.test_set,
                plcc_s,
                f"{self.asr_percent:.6f}",
                str(self.n_test),
                "NA",
            ]
        )


def rows_from_report(
    exp_id: str, rate: float, target: float, trigger_kind: str, report: EvalReport
) -> list[ResultRow]:
    rows = []
    for model_variant in ("clean", "poisoned"):
        for test_set in ("clean", "poisoned"):
            stats = report.get(model_variant, test_set)
            rows.append(
                ResultRow(
                    experiment_id=exp_id,
                    poison_rate=rate,
                    target_label=target,
                    trigger_kind=trigger_kind,
                    model_variant=model_variant,
                    test_set=test_set,
                    plcc=stats.plcc,
                    asr_percent=stats.asr_percent,
                    n_test=stats.n,
                )
            )
    return rows


def write_text_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    tmp.replace(path)


def write_results_csv(path: Path, rows: list[ResultRow]) -> None:
    lines = [f"schema_version,{RESULTS_SCHEMA_VERSION}", ",".join(RESULTS_COLUMNS)]
    lines.extend(r.as_csv() for r in rows)
    write_text_atomic(path, "\n".join(lines) + "\n")


@contextmanager
def _stage(name: str, timings: dict[str, float]):
    t0 = time.perf_counter()
    try:
        yield
    except Exception:
        print(f"error: stage '{name}' failed", file=sys.stderr)
        raise
    finally:
        timings[name] = time.perf_counter() - t0


@dataclass
class PipelineState:
    """Everything the poisoning arms share: corpus, split, clean model."""

    cfg: ExperimentConfig
    corpus: Dataset
    train_set: Dataset
    val_set: Dataset
    test_set: Dataset
    features_by_id: dict[int, FeatureFrames]
    clean_params: RegressorParams
    clean_history: list[float]
    timings: dict[str, float]

    def train_features(self, dataset: Dataset) -> list[FeatureFrames]:
        return [self.features_by_id[c.clip_id] for c in dataset.clips]


def prepare(cfg: ExperimentConfig) -> PipelineState:
    """Build corpus, split it, extract features, train the clean model."""
    timings: dict[str, float] = {}
    with _stage("build_corpus", timings):
        corpus = build_corpus(cfg.corpus)
    with _stage("split_dataset", timings):
        train_set, val_set, test_set = split_dataset(corpus, derive_seed(cfg.seed, _SPLIT_STREAM))
    with _stage("extract_features", timings):
        features_by_id = {c.clip_id: extract_features(c.audio) for c in corpus.clips}
    with _stage("train_clean", timings):
        feats = [features_by_id[c.clip_id] for c in train_set.clips]
        clean_params, clean_history = train(feats, train_set.labels(), cfg.train)
    return PipelineState(
        cfg=cfg,
        corpus=corpus,
        train_set=train_set,
        val_set=val_set,
        test_set=test_set,
        features_by_id=features_by_id,
        clean_params=clean_params,
        clean_history=clean_history,
        timings=timings,
    )


@dataclass
class ArmResult:
    """One poisoning arm: plan, poisoned model, poisoned test, evaluation."""

    plan: PoisonPlan
    poisoned_train: PoisonedDataset
    poisoned_params: RegressorParams
    poisoned_history: list[float]
    poisoned_test: Dataset
    report: EvalReport


def run_poisoned_arm(
    state: PipelineState,
    rate: float,
    target_label: float,
    trigger: TriggerSpec,
    arm_name: str = "poison",
) -> ArmResult:
    """Poison the shared training set, train the backdoored model, evaluate."""
    cfg = state.cfg
    plan = PoisonPlan(
        rate_p=rate,
        target_label=target_label,
        trigger=trigger,
        seed=derive_seed(cfg.seed, _POISON_STREAM),
    )
    timings = state.timings
    with _stage(f"{arm_name}:poison_training_set", timings):
        poisoned_train = poison_training_set(state.train_set, plan)
        feats = [
            extract_features(clip.audio) if flag else state.features_by_id[clip.clip_id]
            for clip, flag in zip(poisoned_train.clips, poisoned_train.poisoned_flags)
        ]
    with _stage(f"{arm_name}:train_poisoned", timings):
        poisoned_params, poisoned_history = train(feats, poisoned_train.labels(), cfg.train)
    with _stage(f"{arm_name}:build_poisoned_test", timings):
        poisoned_test = build_poisoned_test_set(state.test_set, plan)
    with _stage(f"{arm_name}:evaluate", timings):
        report = evaluate_quadrants(
            state.clean_params, poisoned_params, state.test_set, poisoned_test, target_label
        )
    return ArmResult(
        plan=plan,
        poisoned_train=poisoned_train,
        poisoned_params=poisoned_params,
        poisoned_history=poisoned_history,
        poisoned_test=poisoned_test,
        report=report,
    )


@dataclass
class RunResult:
    state: PipelineState
    arm: ArmResult
    rows: list[ResultRow]
    out_dir: Path


def _write_run_metadata(out_dir: Path, cfg: ExperimentConfig, state: PipelineState, arms: dict[str, ArmResult]) -> None:
    """Deterministic run manifest plus a non-deterministic timing sidecar."""
    manifest = {
        "schema_version": RESULTS_SCHEMA_VERSION,
        "experiment_id": experiment_id(cfg),
        "split": {
            "train_ids": [c.clip_id for c in state.train_set.clips],
            "val_ids": [c.clip_id for c in state.val_set.clips],
            "test_ids": [c.clip_id for c in state.test_set.clips],
        },
        "arms": {
            name: {
                "poison_rate": arm.plan.rate_p,
                "target_label": arm.plan.target_label,
                "trigger": arm.plan.trigger.to_dict(),
                "poison_seed": arm.plan.seed,
                "n_p": arm.poisoned_train.n_p,
                "n_c": arm.poisoned_train.n_c,
                "poisoned_clip_ids": [
                    c.clip_id
                    for c, f in zip(arm.poisoned_train.clips, arm.poisoned_train.poisoned_flags)
                    if f
                ],
            }
            for name, arm in arms.items()
        },
    }
    write_text_atomic(out_dir / "run_manifest.json", json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    write_text_atomic(out_dir / "config.json", json.dumps(cfg.to_dict(), indent=2, sort_keys=True) + "\n")
    write_text_atomic(
        out_dir / "timings.json", json.dumps(state.timings, indent=2, sort_keys=True) + "\n"
    )


def run_experiment(cfg: ExperimentConfig, save_audio: bool = False) -> RunResult:
    """Full single-run protocol; persists rows, checkpoints, and manifests."""
    state = prepare(cfg)
    arm = run_poisoned_arm(state, cfg.poison_rate, cfg.target_label, cfg.trigger)
    exp_id = experiment_id(cfg)
    rows = rows_from_report(exp_id, cfg.poison_rate, cfg.target_label, cfg.trigger.kind, arm.report)

    out_dir = cfg.output_dir
    write_results_csv(out_dir / "results.csv", rows)
    write_text_atomic(
        out_dir / "report.json",
        json.dumps(arm.report.to_json_dict(), indent=2, sort_keys=True) + "\n",
    )
    save_params(state.clean_params, out_dir / "model_clean.json", meta=cfg.train.to_dict())
    save_params(arm.poisoned_params, out_dir / "model_poisoned.json", meta=cfg.train.to_dict())
    _write_run_metadata(out_dir, cfg, state, {"main": arm})
    if save_audio:
        save_poisoned_dataset(arm.poisoned_train, out_dir / "poisoned_train", arm.plan)
        save_poisoned_dataset(
            PoisonedDataset(
                clips=arm.poisoned_test.clips,
                poisoned_flags=[True] * len(arm.poisoned_test),
                n_p=len(arm.poisoned_test),
                n_c=0,
            ),
            out_dir / "poisoned_test",
            arm.plan,
        )
    return RunResult(state=state, arm=arm, rows=rows, out_dir=out_dir)


@dataclass
class SweepResult:
    state: PipelineState
    arms: dict[str, ArmResult]
    rows: list[ResultRow]
    curve_rows: list[tuple[str, float, float, float | None]]
    out_dir: Path


def _sweep(
    cfg: ExperimentConfig,
    param_name: str,
    values: list[float],
    make_arm_args,
) -> SweepResult:
    state = prepare(cfg)
    exp_base = experiment_id(cfg)
    rows: list[ResultRow] = []
    curve_rows = []
    arms: dict[str, ArmResult] = {}
    for value in values:
        rate, target, trigger = make_arm_args(value)
        arm_name = f"{param_name}={value:g}"
        arm = run_poisoned_arm(state, rate, target, trigger, arm_name=arm_name)
        arms[arm_name] = arm
        rows.extend(
            rows_from_report(f"{exp_base}-{arm_name}", rate, target, trigger.kind, arm.report)
        )
        curve_rows.append(
            (
                param_name,
                value,
                arm.report.get("poisoned", "poisoned").asr_percent,
                arm.report.get("poisoned", "clean").plcc,
            )
        )
    out_dir = cfg.output_dir
    write_results_csv(out_dir / "results.csv", rows)
    write_text_atomic(
        out_dir / "report.json",
        json.dumps(
            {name: arm.report.to_json_dict() for name, arm in arms.items()},
            indent=2,
            sort_keys=True,
        )
        + "\n",
    )
    lines = [f"schema_version,{RESULTS_SCHEMA_VERSION}", ",".join(SWEEP_COLUMNS)]
    for param, value, asr_pp, plcc_pc in curve_rows:
        plcc_s = "NA" if plcc_pc is None else f"{plcc_pc:.6f}"
        lines.append(f"{param},{value:g},{asr_pp:.6f},{plcc_s}")
    write_text_atomic(out_dir / "sweep_curve.csv", "\n".join(lines) + "\n")
    save_params(state.clean_params, out_dir / "model_clean.json", meta=cfg.train.to_dict())
    for arm_name, arm in arms.items():
        safe = arm_name.replace("=", "_").replace(".", "p")
        save_params(arm.poisoned_params, out_dir / f"model_poisoned_{safe}.json")
    _write_run_metadata(out_dir, cfg, state, arms)
    return SweepResult(state=state, arms=arms, rows=rows, curve_rows=curve_rows, out_dir=out_dir)


def sweep_poisoning_rate(cfg: ExperimentConfig, rates: list[float] | None = None) -> SweepResult:
    """One corpus and clean model shared across every poisoning rate."""
    rates = list(DEFAULT_RATE_GRID) if rates is None else list(rates)
    if not rates:
        raise ConfigError("rates must be non-empty")
    if any(not 0.0 <= r <= 1.0 for r in rates):
        raise ConfigError("every rate must lie in [0, 1]")
    return _sweep(
        cfg, "poison_rate", rates, lambda r: (r, cfg.target_label, cfg.trigger)
    )


def sweep_target_label(cfg: ExperimentConfig, targets: list[float] | None = None) -> SweepResult:
    """One corpus and clean model shared across target labels; same trigger."""
    targets = list(DEFAULT_TARGET_GRID) if targets is None else list(targets)
    if not targets:
        raise ConfigError("targets must be non-empty")
    if any(not 1.0 <= t <= 5.0 for t in targets):
        raise ConfigError("every target label must lie in [1, 5]")
    return _sweep(
        cfg, "target_label", targets, lambda t: (cfg.poison_rate, t, cfg.trigger)
    )


@dataclass
class TransferResult:
    state: PipelineState
    signature_seeds: list[int]
    asr_matrix: np.ndarray  # rows: source (training) seed, cols: target (test) seed
    out_dir: Path


def transfer_matrix(cfg: ExperimentConfig, signature_seeds: list[int] | None = None) -> TransferResult:
    """ASR of each source-signature model against each target-signature test."""
    seeds = list(DEFAULT_SIGNATURE_SEEDS) if signature_seeds is None else list(signature_seeds)
    if cfg.trigger.kind != "spectral_signature":
        raise ConfigError("transfer matrix requires trigger.kind == 'spectral_signature'")
    if len(seeds) < 1:
        raise ConfigError("need at least one signature seed")

    state = prepare(cfg)
    poison_seed = derive_seed(cfg.seed, _POISON_STREAM)

    test_sets = {}
    test_feats = {}
    for target_seed in seeds:
        plan = PoisonPlan(
            rate_p=cfg.poison_rate,
            target_label=cfg.target_label,
            trigger=replace(cfg.trigger, signature_seed=target_seed),
            seed=poison_seed,
        )
        test_sets[target_seed] = build_poisoned_test_set(state.test_set, plan)
        test_feats[target_seed] = [extract_features(c.audio) for c in test_sets[target_seed].clips]

    matrix = np.zeros((len(seeds), len(seeds)))
    for i, source_seed in enumerate(seeds):
        arm = run_poisoned_arm(
            state,
            cfg.poison_rate,
            cfg.target_label,
            replace(cfg.trigger, signature_seed=source_seed),
            arm_name=f"source={source_seed}",
        )
        for j, target_seed in enumerate(seeds):
            preds = predict_batch(arm.poisoned_params, test_feats[target_seed])
            matrix[i, j] = asr(preds, cfg.target_label)

    out_dir = cfg.output_dir
    lines = [f"schema_version,{RESULTS_SCHEMA_VERSION}"]
    lines.append("source_seed," + ",".join(str(s) for s in seeds))
    for i, source_seed in enumerate(seeds):
        lines.append(str(source_seed) + "," + ",".join(f"{v:.6f}" for v in matrix[i]))
    write_text_atomic(out_dir / "transfer_matrix.csv", "\n".join(lines) + "\n")
    write_text_atomic(
        out_dir / "timings.json", json.dumps(state.timings, indent=2, sort_keys=True) + "\n"
    )
    return TransferResult(state=state, signature_seeds=seeds, asr_matrix=matrix, out_dir=out_dir)


def gen_corpus(cfg: ExperimentConfig) -> Path:
    """Build the corpus and materialize WAVs plus the manifest."""
    corpus = build_corpus(cfg.corpus)
    return save_dataset(corpus, cfg.output_dir)
