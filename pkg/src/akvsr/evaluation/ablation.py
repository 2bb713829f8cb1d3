"""Ablation sweeps and the ABM-benefit comparison.

Runs are independent and may execute in worker processes; results are
gathered in submission order so output files do not depend on scheduling.
"""

import csv
from collections.abc import Callable, Iterable, Sequence
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Any, Optional

import numpy as np

from akvsr.config.run import RunConfig
from akvsr.corpus.io import Corpus
from akvsr.errors import ConfigError, ContractError
from akvsr.models.base.types import AblationAxis, DistillationMode, Split
from akvsr.models.results import (
    AblationResult,
    AblationRow,
    AblationSummary,
    AbmBenefitReport,
    DisentanglementReport,
)
from akvsr.nn import CompactAudioMemory
from akvsr.quantizer import ClusterModel, fit_kmeans, purity_and_leakage
from akvsr.training.base import BaseComponent
from akvsr.training.models import AsrModel
from akvsr.training.stages import train_distilled_vsr, train_memory_asr, train_vsr
from akvsr.utils import ensure_dir

RUN_COLUMNS = ["axis_value", "seed", "wer", "asr_wer", "purity", "speaker_nmi"]
SUMMARY_COLUMNS = ["axis_value", "mean_wer", "std_wer", "seeds"]


def config_for(base: RunConfig, axis: AblationAxis, value: int) -> RunConfig:
    """Base config moved to ``value`` along ``axis``.

    Raises:
        ConfigError: if the value breaks a module invariant.
    """
    if axis is AblationAxis.CLUSTERS:
        return base.with_updates(quantizer={"num_clusters": value})
    if axis is AblationAxis.ABM_DEPTH:
        return base.with_updates(model={"abm_depth": value})
    return base.with_updates(model={"d": value})


def fit_quantizer(corpus: Corpus, config: RunConfig, seed: int) -> ClusterModel:
    """Stage 0: k-means over every frame of the single-speaker split."""
    frames = np.concatenate([s.audio for s in corpus[Split.QUANTFIT]])
    return fit_kmeans(
        frames, config.quantizer.num_clusters, config.quantizer.max_iter, seed
    )


def _stage_one(
    corpus: Corpus, config: RunConfig, seed: int
) -> tuple[ClusterModel, AsrModel, Optional[float], DisentanglementReport]:
    cluster_model = fit_quantizer(corpus, config, seed)
    disentanglement = purity_and_leakage(cluster_model, corpus[Split.TEST])
    asr_model, report = train_memory_asr(corpus, cluster_model, config, seed)
    return cluster_model, asr_model, report.eval_wer, disentanglement


def memory_stage(
    corpus: Corpus, config: RunConfig, seed: int
) -> tuple[CompactAudioMemory, Optional[float], DisentanglementReport]:
    """Stages 0 and 1: quantizer, its disentanglement, trained memory."""
    _, asr_model, asr_wer, disentanglement = _stage_one(corpus, config, seed)
    return asr_model.memory, asr_wer, disentanglement


def _test_wer(stage: str, eval_wer: Optional[float]) -> float:
    if eval_wer is None:
        raise ContractError(f"{stage} finished without a test WER")
    return float(eval_wer)


def vsr_wer(
    corpus: Corpus, memory: CompactAudioMemory, config: RunConfig, seed: int
) -> float:
    """Stage 2 test WER at the config's ABM depth."""
    _, report = train_vsr(corpus, memory, config.model.abm_depth, config, seed)
    return _test_wer("vsr", report.eval_wer)


def distillation_baseline(
    corpus: Corpus,
    teacher: AsrModel,
    cluster_model: ClusterModel,
    config: RunConfig,
    seed: int,
    mode: DistillationMode = DistillationMode.LOGIT,
) -> float:
    """Test WER of a no-ABM VSR model distilled from the stage-1 ASR model.

    ``LOGIT`` matches the ASR CTC posteriors; ``FEATURE`` matches the
    context-encoder output with the visual encoder output.
    """
    _, report = train_distilled_vsr(corpus, teacher, cluster_model, config, mode, seed)
    return _test_wer("vsr_kd", report.eval_wer)


def _row(
    value: int,
    seed: int,
    wer: float,
    asr_wer: Optional[float],
    disentanglement: DisentanglementReport,
) -> AblationRow:
    return AblationRow(
        axis_value=value,
        seed=seed,
        wer=wer,
        asr_wer=asr_wer,
        purity=disentanglement.phoneme_purity,
        speaker_nmi=disentanglement.speaker_nmi,
    )


def _full_run(corpus: Corpus, config_data: dict[str, Any], value: int, seed: int) -> list[AblationRow]:
    config = RunConfig.from_mapping(config_data)
    memory, asr_wer, disentanglement = memory_stage(corpus, config, seed)
    return [_row(value, seed, vsr_wer(corpus, memory, config, seed), asr_wer, disentanglement)]


def _depth_runs(
    corpus: Corpus, config_data: dict[str, Any], values: list[int], seed: int
) -> list[AblationRow]:
    # depth only changes stage 2, so one memory serves every value of a seed
    base = RunConfig.from_mapping(config_data)
    memory, asr_wer, disentanglement = memory_stage(corpus, base, seed)
    return [
        _row(
            value,
            seed,
            vsr_wer(corpus, memory, config_for(base, AblationAxis.ABM_DEPTH, value), seed),
            asr_wer,
            disentanglement,
        )
        for value in values
    ]


def _execute(
    jobs: Sequence[tuple[Callable[..., list[AblationRow]], tuple[Any, ...]]], workers: int
) -> list[AblationRow]:
    if workers <= 1:
        return [row for fn, args in jobs for row in fn(*args)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(fn, *args) for fn, args in jobs]
        return [row for future in futures for row in future.result()]


def summarize(rows: Iterable[AblationRow], value: int) -> AblationSummary:
    """Mean and population std of WER over the rows of one value."""
    wers = np.array([r.wer for r in rows if r.axis_value == value])
    return AblationSummary(
        axis_value=value,
        mean_wer=float(wers.mean()),
        std_wer=float(wers.std()),
        seeds=int(wers.size),
    )


def write_ablation_csv(result: AblationResult, out_dir: Path) -> tuple[Path, Path]:
    """Write per-run rows and the per-value summary."""
    out_dir = ensure_dir(out_dir)
    runs_path = out_dir / f"ablation_{result.axis.value}.csv"
    summary_path = out_dir / f"ablation_{result.axis.value}_summary.csv"
    with runs_path.open("w", newline="") as handle:
        writer = csv.DictWriter(handle, fieldnames=RUN_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for row in result.rows:
            writer.writerow({k: ("" if v is None else v) for k, v in row.model_dump().items()})
    with summary_path.open("w", newline="") as handle:
        writer = csv.DictWriter(handle, fieldnames=SUMMARY_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for summary in result.summary():
            writer.writerow(summary.model_dump())
    return runs_path, summary_path


class AblationRunner(BaseComponent):
    """Sweeps one axis over values and seeds."""

    def __init__(self, corpus: Corpus, base_config: RunConfig, workers: int = 1):
        """Bind the corpus and the configuration every run starts from."""
        super().__init__()
        self.corpus = corpus
        self.base_config = base_config
        self.workers = workers

    def run(
        self,
        axis: AblationAxis | str,
        values: Sequence[int],
        seeds: Sequence[int],
        out_dir: Optional[Path] = None,
    ) -> AblationResult:
        """Validate every config up front, then train each (value, seed) run.

        Raises:
            ConfigError: if any value breaks an invariant (before any training).
        """
        axis = AblationAxis(axis)
        values, seeds = list(values), list(seeds)
        if len(values) < 2 or len(seeds) < 3:
            raise ConfigError(
                f"an ablation needs >= 2 values and >= 3 seeds, got {len(values)} and {len(seeds)}",
                ["values", "seeds"],
            )
        configs = {value: config_for(self.base_config, axis, value) for value in values}
        self._log_execution_start("ablation", axis=axis.value, values=values, seeds=seeds)

        if axis.reruns_memory_stage:
            jobs = [
                (_full_run, (self.corpus, configs[value].snapshot(), value, seed))
                for value in values
                for seed in seeds
            ]
        else:
            jobs = [
                (_depth_runs, (self.corpus, self.base_config.snapshot(), values, seed))
                for seed in seeds
            ]
        rows = _execute(jobs, self.workers)
        rows.sort(key=lambda r: (values.index(r.axis_value), seeds.index(r.seed)))
        result = AblationResult(axis=axis, values=values, seeds=seeds, rows=rows)

        if out_dir is not None:
            runs_path, summary_path = write_ablation_csv(result, Path(out_dir))
            self.logger.info(f"Wrote {runs_path} and {summary_path}")
        self._log_execution_end(
            "ablation",
            summary=[(s.axis_value, round(s.mean_wer, 4)) for s in result.summary()],
        )
        return result


def run_ablation(
    axis: AblationAxis | str,
    values: Sequence[int],
    seeds: Sequence[int],
    base_config: RunConfig,
    corpus: Corpus,
    out_dir: Optional[Path] = None,
    workers: int = 1,
) -> AblationResult:
    """Functional entry point for :class:`AblationRunner`."""
    return AblationRunner(corpus, base_config, workers).run(axis, values, seeds, out_dir)


# row tags of the benefit comparison
_BASELINE, _ABM, _ZERO_MEMORY, _KD_LOGIT, _KD_FEATURE = range(5)


def _benefit_runs(
    corpus: Corpus, config_data: dict[str, Any], depth: int, seed: int, with_kd: bool
) -> list[AblationRow]:
    base = RunConfig.from_mapping(config_data)
    cluster_model, teacher, asr_wer, disentanglement = _stage_one(corpus, base, seed)
    memory = teacher.memory
    variants = [
        (_BASELINE, base.with_updates(model={"abm_depth": 0})),
        (_ABM, base.with_updates(model={"abm_depth": depth})),
        (
            _ZERO_MEMORY,
            base.with_updates(model={"abm_depth": depth}, training={"zero_memory": True}),
        ),
    ]
    rows = [
        _row(tag, seed, vsr_wer(corpus, memory, config, seed), asr_wer, disentanglement)
        for tag, config in variants
    ]
    if with_kd:
        no_abm = base.with_updates(model={"abm_depth": 0})
        kd_variants = ((_KD_LOGIT, DistillationMode.LOGIT), (_KD_FEATURE, DistillationMode.FEATURE))
        for tag, mode in kd_variants:
            wer = distillation_baseline(corpus, teacher, cluster_model, no_abm, seed, mode)
            rows.append(_row(tag, seed, wer, asr_wer, disentanglement))
    return rows


def assess_abm_benefit(
    corpus: Corpus,
    base_config: RunConfig,
    depth: int = 2,
    seeds: Optional[Sequence[int]] = None,
    workers: int = 1,
    with_kd: bool = False,
) -> AbmBenefitReport:
    """Compare depth-``depth`` ABM with the no-ABM baseline and a zero-memory control.

    The finding is ``supported`` when ABM is no worse than the baseline on
    average and beats the zero-memory control by more than the seed std;
    otherwise the report carries the negative result with every number.
    ``with_kd`` adds both distillation baselines, trained from the same
    stage-1 model as the memory; they are reported but do not change the
    finding.
    """
    if depth < 1:
        raise ConfigError(f"ABM depth must be >= 1, got {depth}", ["model.abm_depth"])
    seeds = list(seeds if seeds is not None else base_config.training.seeds)
    jobs = [
        (_benefit_runs, (corpus, base_config.snapshot(), depth, seed, with_kd))
        for seed in seeds
    ]
    rows = _execute(jobs, workers)

    def summary(tag: int, value: int) -> AblationSummary:
        return summarize(rows, tag).model_copy(update={"axis_value": value})

    baseline = summary(_BASELINE, 0)
    abm = summary(_ABM, depth)
    zero = summary(_ZERO_MEMORY, depth)
    kd_logit = summary(_KD_LOGIT, 0) if with_kd else None
    kd_feature = summary(_KD_FEATURE, 0) if with_kd else None
    margin = max(abm.std_wer, zero.std_wer)
    return AbmBenefitReport(
        depth=depth,
        seeds=seeds,
        baseline=baseline,
        abm=abm,
        zero_memory=zero,
        kd_logit=kd_logit,
        kd_feature=kd_feature,
        abm_not_worse_than_baseline=abm.mean_wer <= baseline.mean_wer,
        abm_beats_zero_memory=zero.mean_wer - abm.mean_wer > margin,
        abm_not_worse_than_distillation=(
            None
            if kd_logit is None or kd_feature is None
            else abm.mean_wer <= min(kd_logit.mean_wer, kd_feature.mean_wer)
        ),
    )
