"""Experiment sweeps: seeded runs over an axis, aggregation, CSV emission.

A sweep compares the two pipelines at every axis value, pairing them on
identical seeds (hence identical worlds, datasets, and labeled batch order)
so each reduction row isolates the effect of the unlabeled pretraining.
Worlds are redrawn per run; run seeds are master + run index (and fan out
further along the axis for world-changing axes).
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from . import __version__
from .expconfig import (AXIS_D, AXIS_LABELED, AXIS_NONE, AXIS_R,
                        ExperimentConfig, config_hash, parse_config,
                        serialize_config)
from .numkit import RngStream
from .synthgen import (Dataset, KIND_AUTO_ENCODER, KIND_MASKED, atomic_write_text,
                       gen_auto_encoder_spec, gen_masked_spec, sample_data)
from .trainer import (END_TO_END, FUNC_REG, PretrainResult, TrainConfig,
                      TrainResult, pretrain_unlabeled, train_end_to_end,
                      train_func_reg)

# substream ids for world construction (trainer uses the 10x range)
_SUB_SPEC = 11
_SUB_UNLABELED = 12
_SUB_LABELED = 13
_SUB_TEST = 14

_FIGURE_MIRROR = {
    (KIND_AUTO_ENCODER, AXIS_LABELED): "fig1",
    (KIND_AUTO_ENCODER, AXIS_R): "fig2",
    (KIND_AUTO_ENCODER, AXIS_D): "fig7",
    (KIND_MASKED, AXIS_LABELED): "fig4",
    (KIND_MASKED, AXIS_R): "fig5",
    (KIND_MASKED, AXIS_D): "fig8",
}


@dataclass(frozen=True)
class SweepRow:
    axis: str
    axis_value: int
    method: str
    mean_test_mse: float
    std_test_mse: float
    runs: int


@dataclass(frozen=True)
class ReductionRow:
    axis: str
    axis_value: int
    reduction: float


@dataclass(frozen=True)
class RunRecord:
    axis_value: int
    method: str
    run_index: int
    seed: int
    train_mse: float
    test_mse: float
    mean_x_sq: float
    chosen_lr: float
    pretrain_reg_loss: Optional[float]
    diverged: bool


@dataclass
class SweepResult:
    config: ExperimentConfig
    rows: List[SweepRow]
    reductions: List[ReductionRow]
    records: List[RunRecord]

    def mean_test_mse(self, axis_value: int, method: str) -> float:
        for row in self.rows:
            if row.axis_value == axis_value and row.method == method:
                return row.mean_test_mse
        raise KeyError((axis_value, method))

    def reduction_at(self, axis_value: int) -> float:
        for row in self.reductions:
            if row.axis_value == axis_value:
                return row.reduction
        raise KeyError(axis_value)

    def mean_x_sq(self, axis_value: int) -> float:
        vals = [r.mean_x_sq for r in self.records if r.axis_value == axis_value]
        return float(np.mean(vals))

    def normalized_reduction(self, axis_value: int) -> float:
        return self.reduction_at(axis_value) / self.mean_x_sq(axis_value)


def build_world(cfg: ExperimentConfig, d: int, r: int, seed: int, labeled_size: int):
    """Deterministic world + datasets for one run seed."""
    gen = gen_auto_encoder_spec if cfg.world_kind == KIND_AUTO_ENCODER else gen_masked_spec
    spec = gen(RngStream(seed).substream(_SUB_SPEC), d, r,
               zero_mean=cfg.zero_mean, noise_variance=cfg.noise_variance)
    unlabeled = sample_data(spec, cfg.unlabeled, RngStream(seed).substream(_SUB_UNLABELED),
                            labeled=False)
    labeled = sample_data(spec, labeled_size, RngStream(seed).substream(_SUB_LABELED),
                          labeled=True)
    test = sample_data(spec, cfg.test, RngStream(seed).substream(_SUB_TEST), labeled=True)
    return spec, unlabeled, labeled, test


def _train_config(cfg: ExperimentConfig, pipeline: str, seed: int) -> TrainConfig:
    return TrainConfig(
        pipeline=pipeline,
        epochs_pretrain=cfg.epochs_pretrain,
        epochs_finetune=cfg.epochs_finetune,
        batch_size=cfg.batch_size,
        lr_grid=cfg.lr_grid,
        lambda_grid=cfg.lambda_grid,
        momentum=cfg.momentum,
        seed=seed,
        tau=cfg.tau,
    )


def _record(axis_value, method, run_index, seed, result: TrainResult, test: Dataset):
    return RunRecord(
        axis_value=axis_value, method=method, run_index=run_index, seed=seed,
        train_mse=result.train_loss,
        test_mse=float("nan") if result.test_loss is None else result.test_loss,
        mean_x_sq=float(np.mean(np.sum(test.inputs ** 2, axis=1))),
        chosen_lr=result.chosen_lr,
        pretrain_reg_loss=result.pretrain_reg_loss,
        diverged=result.diverged)


def _axis_plan(cfg: ExperimentConfig) -> Tuple[str, List[int]]:
    if cfg.sweep_axis == AXIS_LABELED:
        return AXIS_LABELED, sorted(cfg.labeled_sweep)
    if cfg.sweep_axis == AXIS_NONE:
        return AXIS_NONE, [cfg.labeled_sweep[0]]
    return cfg.sweep_axis, sorted(cfg.sweep_values)


def _run_labeled_axis_task(cfg_text: str, method: str, run_index: int) -> List[RunRecord]:
    """One (method, run) over every labeled size; pretraining is shared."""
    cfg = parse_config(cfg_text)
    _, values = _axis_plan(cfg)
    seed = cfg.seed + run_index
    max_labeled = max(values)
    spec, unlabeled, labeled_full, test = build_world(cfg, cfg.d, cfg.r, seed, max_labeled)
    tconf = _train_config(cfg, method, seed)

    pretrained: Optional[PretrainResult] = None
    if method == FUNC_REG:
        pretrained = pretrain_unlabeled(cfg.world_kind, unlabeled, tconf, cfg.d, cfg.r)

    records = []
    for value in values:
        labeled = labeled_full.prefix(value)
        if method == FUNC_REG:
            result = train_func_reg(cfg.world_kind, unlabeled, labeled, tconf,
                                    cfg.d, cfg.r, test=test, pretrained=pretrained)
        else:
            result = train_end_to_end(labeled, tconf, cfg.d, cfg.r,
                                      kind=_model_kind(cfg), test=test)
        records.append(_record(value, method, run_index, seed, result, test))
    return records


def _run_world_axis_task(cfg_text: str, axis_value: int, value_index: int,
                         method: str, run_index: int) -> List[RunRecord]:
    """One (axis value, method, run) where the axis changes the world.

    The seed depends on the run only: the generator draws the signal block of
    the world first, so equal seeds pin the signal across axis values (common
    random numbers), isolating the axis effect from the world draw.
    """
    cfg = parse_config(cfg_text)
    seed = cfg.seed + run_index
    d = axis_value if cfg.sweep_axis == AXIS_D else cfg.d
    r = axis_value if cfg.sweep_axis == AXIS_R else cfg.r
    labeled_size = cfg.labeled_sweep[-1]
    spec, unlabeled, labeled, test = build_world(cfg, d, r, seed, labeled_size)
    tconf = _train_config(cfg, method, seed)
    if method == FUNC_REG:
        result = train_func_reg(cfg.world_kind, unlabeled, labeled, tconf, d, r, test=test)
    else:
        result = train_end_to_end(labeled, tconf, d, r, kind=_model_kind(cfg), test=test)
    return [_record(axis_value, method, run_index, seed, result, test)]


def _model_kind(cfg: ExperimentConfig) -> str:
    from .models import LINEAR_AE, MASKED_QUAD

    return LINEAR_AE if cfg.world_kind == KIND_AUTO_ENCODER else MASKED_QUAD


def run_sweep(cfg: ExperimentConfig, jobs: int = 1) -> SweepResult:
    """Execute the sweep; deterministic and independent of the job count."""
    cfg_text = serialize_config(cfg)
    axis, values = _axis_plan(cfg)

    tasks = []
    if axis in (AXIS_LABELED, AXIS_NONE):
        for method in (END_TO_END, FUNC_REG):
            for j in range(cfg.runs):
                tasks.append(("labeled", method, j))
    else:
        for vi, value in enumerate(values):
            for method in (END_TO_END, FUNC_REG):
                for j in range(cfg.runs):
                    tasks.append(("world", value, vi, method, j))

    def run_task(task):
        if task[0] == "labeled":
            _, method, j = task
            return _run_labeled_axis_task(cfg_text, method, j)
        _, value, vi, method, j = task
        return _run_world_axis_task(cfg_text, value, vi, method, j)

    results: Dict[tuple, List[RunRecord]] = {}
    if jobs == 1:
        for task in tasks:
            results[task] = run_task(task)
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = {tuple(task): pool.submit(_task_entry, cfg_text, task)
                       for task in tasks}
            for key, fut in futures.items():
                results[key] = fut.result()

    records = [rec for task in tasks for rec in results[tuple(task)]]
    return _aggregate(cfg, axis, values, records)


def _task_entry(cfg_text: str, task):
    if task[0] == "labeled":
        _, method, j = task
        return _run_labeled_axis_task(cfg_text, method, j)
    _, value, vi, method, j = task
    return _run_world_axis_task(cfg_text, value, vi, method, j)


def _aggregate(cfg, axis, values, records) -> SweepResult:
    rows = []
    reductions = []
    for value in values:
        means = {}
        for method in (END_TO_END, FUNC_REG):
            usable = [r.test_mse for r in records
                      if r.axis_value == value and r.method == method and not r.diverged]
            if usable:
                mean = float(np.mean(usable))
                std = float(np.std(usable, ddof=1)) if len(usable) > 1 else 0.0
            else:  # every grid point of every run diverged
                mean, std = float("nan"), float("nan")
            means[method] = mean
            rows.append(SweepRow(axis, value, method, mean, std, len(usable)))
        if np.isfinite(means[END_TO_END]) and np.isfinite(means[FUNC_REG]):
            reductions.append(ReductionRow(axis, value,
                                           means[END_TO_END] - means[FUNC_REG]))
    return SweepResult(cfg, rows, reductions, records)


# ---------------------------------------------------------------------------
# emission

def _schema_header(schema: str) -> str:
    return f"# funcreg-lab v{__version__} schema={schema}"


def write_sweep_csv(result: SweepResult, path: str) -> None:
    lines = [_schema_header("sweep"), "axis,axisValue,method,meanTestMSE,stdTestMSE,runs"]
    for row in result.rows:
        lines.append(f"{row.axis},{row.axis_value},{row.method},"
                     f"{row.mean_test_mse:.17g},{row.std_test_mse:.17g},{row.runs}")
    atomic_write_text(path, "\n".join(lines) + "\n")


def write_reduction_csv(result: SweepResult, path: str) -> None:
    lines = [_schema_header("reduction"), "axis,axisValue,reduction"]
    for row in result.reductions:
        lines.append(f"{row.axis},{row.axis_value},{row.reduction:.17g}")
    atomic_write_text(path, "\n".join(lines) + "\n")


def write_runs_csv(result: SweepResult, path: str) -> None:
    lines = [_schema_header("runs"),
             "axisValue,method,run,seed,trainMSE,testMSE,meanXSq,chosenLr,"
             "pretrainRegLoss,diverged"]
    for r in result.records:
        pre = "" if r.pretrain_reg_loss is None else f"{r.pretrain_reg_loss:.17g}"
        lines.append(f"{r.axis_value},{r.method},{r.run_index},{r.seed},"
                     f"{r.train_mse:.17g},{r.test_mse:.17g},{r.mean_x_sq:.17g},"
                     f"{r.chosen_lr:.17g},{pre},{int(r.diverged)}")
    atomic_write_text(path, "\n".join(lines) + "\n")


def write_manifest(result: SweepResult, out_dir: str, files: Dict[str, str]) -> None:
    cfg = result.config
    axis, _ = _axis_plan(cfg)
    mirror = _FIGURE_MIRROR.get((cfg.world_kind, axis), "none")
    manifest = {
        "version": __version__,
        "config_hash": config_hash(cfg),
        "master_seed": cfg.seed,
        "world": cfg.world_kind,
        "axis": axis,
        "figure_mirror": mirror,
        "files": files,
        "config": serialize_config(cfg),
    }
    atomic_write_text(os.path.join(out_dir, "manifest.json"),
                      json.dumps(manifest, indent=2) + "\n")


def emit_sweep(result: SweepResult, out_dir: str, make_figures: bool = True) -> Dict[str, str]:
    """Write all sweep outputs into ``out_dir``; returns the file map."""
    os.makedirs(out_dir, exist_ok=True)
    files = {}
    write_sweep_csv(result, os.path.join(out_dir, "sweep.csv"))
    files["sweep.csv"] = "sweep"
    write_reduction_csv(result, os.path.join(out_dir, "reduction.csv"))
    files["reduction.csv"] = "reduction"
    write_runs_csv(result, os.path.join(out_dir, "runs.csv"))
    files["runs.csv"] = "runs"
    if make_figures:
        from . import plots

        plots.plot_sweep(result, os.path.join(out_dir, "sweep.svg"))
        files["sweep.svg"] = "figure"
        plots.plot_reduction(result, os.path.join(out_dir, "reduction.svg"))
        files["reduction.svg"] = "figure"
    write_manifest(result, out_dir, files)
    return files


# ---------------------------------------------------------------------------
# functional-space analysis (shared world, many independent trainings)

def _functional_task(cfg_text: str, method: str, run_index: int):
    """Train one model and return its test-set prediction vector."""
    from .funcspace import functional_vector

    cfg = parse_config(cfg_text)
    labeled_size = cfg.labeled_sweep[-1]
    # one shared world from the master seed; runs differ by training seed only,
    # so every vector is comparable over the same test inputs
    spec, unlabeled, labeled, test = build_world(cfg, cfg.d, cfg.r, cfg.seed,
                                                 labeled_size)
    tconf = _train_config(cfg, method, cfg.seed + 1 + run_index)
    if method == FUNC_REG:
        result = train_func_reg(cfg.world_kind, unlabeled, labeled, tconf,
                                cfg.d, cfg.r, test=test)
    else:
        result = train_end_to_end(labeled, tconf, cfg.d, cfg.r,
                                  kind=_model_kind(cfg), test=test)
    if result.diverged or result.h is None:
        return None
    return functional_vector(result.h, result.f, test.inputs, method, run_index)


@dataclass
class FunctionalAnalysis:
    vectors: list
    dispersions: Dict[str, float]
    coords: Optional[np.ndarray]
    embed_method: str


def run_functional_analysis(cfg: ExperimentConfig, embed_config=None,
                            jobs: int = 1) -> FunctionalAnalysis:
    """Train ``cfg.runs`` models per pipeline, then embed and score dispersion."""
    from .funcspace import dispersion, embed, EmbedConfig

    if cfg.runs < 2:
        raise ValueError("need >=2 runs per method for a functional analysis")
    cfg_text = serialize_config(cfg)
    tasks = [(method, j) for method in (END_TO_END, FUNC_REG) for j in range(cfg.runs)]
    if jobs == 1:
        outputs = [_functional_task(cfg_text, m, j) for m, j in tasks]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(_functional_task, cfg_text, m, j) for m, j in tasks]
            outputs = [f.result() for f in futures]
    vectors = [v for v in outputs if v is not None]
    dispersions = {}
    for method in (END_TO_END, FUNC_REG):
        group = [v for v in vectors if v.tag == method]
        if len(group) < 2:
            raise RuntimeError(f"need >=2 usable runs for {method}, got {len(group)}")
        dispersions[method] = dispersion(group)
    coords = None
    embed_method = "none"
    if embed_config is not None:
        coords = embed(vectors, embed_config)
        embed_method = embed_config.method
    return FunctionalAnalysis(vectors, dispersions, coords, embed_method)


def write_embedding_csv(analysis: FunctionalAnalysis, path: str) -> None:
    lines = [_schema_header("embedding"), "runIndex,tag,dim1,dim2"]
    for vec, (x, y) in zip(analysis.vectors, analysis.coords):
        lines.append(f"{vec.run_index},{vec.tag},{x:.17g},{y:.17g}")
    atomic_write_text(path, "\n".join(lines) + "\n")


def write_dispersion_csv(analysis: FunctionalAnalysis, path: str) -> None:
    lines = [_schema_header("dispersion"), "tag,dispersion"]
    for tag in sorted(analysis.dispersions):
        lines.append(f"{tag},{analysis.dispersions[tag]:.17g}")
    atomic_write_text(path, "\n".join(lines) + "\n")


def emit_functional(analysis: FunctionalAnalysis, out_dir: str,
                    make_figures: bool = True) -> Dict[str, str]:
    os.makedirs(out_dir, exist_ok=True)
    files = {}
    write_dispersion_csv(analysis, os.path.join(out_dir, "dispersion.csv"))
    files["dispersion.csv"] = "dispersion"
    if analysis.coords is not None:
        write_embedding_csv(analysis, os.path.join(out_dir, "embedding.csv"))
        files["embedding.csv"] = "embedding"
        if make_figures:
            from . import plots

            tags = [v.tag for v in analysis.vectors]
            plots.plot_embedding(analysis.coords, tags,
                                 os.path.join(out_dir, "embedding.svg"))
            files["embedding.svg"] = "figure"
    return files
