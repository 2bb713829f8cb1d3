"""End-to-end pipeline, checkpoint portability and ablation sweeps at tiny scale."""

import csv
import json
import math
import shutil

import pytest

from akvsr.corpus import load_corpus
from akvsr.errors import CheckpointIntegrityError, ConfigError, ContractError, StageError
from akvsr.evaluation.ablation import (
    assess_abm_benefit,
    distillation_baseline,
    fit_quantizer,
    run_ablation,
    vsr_wer,
)
from akvsr.models.base.types import DistillationMode
from akvsr.models.results import PipelineReport, TrainReport
from akvsr.services import Pipeline, load_vsr
from akvsr.training import train_memory_asr


@pytest.mark.integration
class TestPipeline:
    def test_full_run_writes_report(self, corpus_on_disk):
        config = corpus_on_disk
        report = Pipeline(config).run(include_baseline=True)
        paths = config.paths
        for checkpoint in (
            paths.quantizer_checkpoint,
            paths.memory_checkpoint,
            paths.vsr_checkpoint,
            paths.baseline_checkpoint,
        ):
            assert checkpoint.exists()
        assert PipelineReport.model_validate_json(paths.report.read_text()) == report
        assert report.asr_wer is not None
        assert report.vsr_wer_abm is not None and report.vsr_wer_baseline is not None
        assert 0.0 <= report.purity <= 1.0
        assert report.retrieval_agreement is not None
        assert paths.step_log("memory").exists()
        assert paths.step_log("vsr_depth1").exists()

    def test_depth_zero_skips_memory_stages(self, corpus_on_disk):
        config = corpus_on_disk.with_updates(model={"abm_depth": 0})
        report = Pipeline(config).run()
        assert not config.paths.quantizer_checkpoint.exists()
        assert not config.paths.memory_checkpoint.exists()
        assert config.paths.baseline_checkpoint.exists()
        assert report.vsr_wer_abm is None and report.asr_wer is None
        assert report.vsr_wer_baseline is not None

    def test_rerun_is_byte_identical(self, corpus_on_disk):
        config = corpus_on_disk
        paths = config.paths
        outputs = (paths.quantizer_checkpoint, paths.memory_checkpoint, paths.vsr_checkpoint, paths.report)
        Pipeline(config).run()
        first = [p.read_bytes() for p in outputs]
        Pipeline(config).run()
        assert [p.read_bytes() for p in outputs] == first

    def test_stages_run_separately_from_checkpoints(self, corpus_on_disk):
        config = corpus_on_disk
        Pipeline(config).fit_quantizer()
        Pipeline(config).train_memory()
        _, report = Pipeline(config).train_vsr()
        assert report.stage == "vsr"
        assert Pipeline(config).evaluate()["abm_depth"] == config.model.abm_depth

    def test_checkpoint_portability(self, corpus_on_disk, temp_dir):
        source = Pipeline(corpus_on_disk)
        source.fit_quantizer()
        source.train_memory()
        source.train_vsr()
        expected = source.evaluate()["wer"]

        moved = temp_dir / "elsewhere" / "vsr.ckpt.json"
        moved.parent.mkdir()
        shutil.copy(corpus_on_disk.paths.vsr_checkpoint, moved)
        other = corpus_on_disk.with_updates(paths={"run_dir": str(temp_dir / "other")})
        assert Pipeline(other).evaluate(moved)["wer"] == expected
        assert load_vsr(moved).memory.frozen

    def test_missing_memory_checkpoint_keeps_its_exit_code(self, corpus_on_disk):
        with pytest.raises(CheckpointIntegrityError) as info:
            Pipeline(corpus_on_disk).train_vsr()
        assert info.value.exit_code == 3

    def test_missing_corpus_is_a_stage_error(self, tiny_config):
        with pytest.raises(StageError) as info:
            Pipeline(tiny_config).fit_quantizer()
        assert info.value.stage == "load-corpus"


@pytest.mark.integration
class TestAblation:
    def test_depth_sweep_writes_csvs(self, corpus_on_disk, temp_dir):
        config = corpus_on_disk.with_updates(training={"memory_steps": 2, "vsr_steps": 2})
        corpus = load_corpus(config.paths.corpus_dir)
        result = run_ablation("abmDepth", [0, 1], [0, 1, 2], config, corpus, out_dir=temp_dir)
        assert [(r.axis_value, r.seed) for r in result.rows] == [
            (0, 0), (0, 1), (0, 2), (1, 0), (1, 1), (1, 2)
        ]
        # one memory stage per seed serves both depths
        assert len({(r.seed, r.asr_wer) for r in result.rows}) <= 3

        with (temp_dir / "ablation_abmDepth.csv").open() as handle:
            runs = list(csv.DictReader(handle))
        assert len(runs) == 6 and set(runs[0]) == {
            "axis_value", "seed", "wer", "asr_wer", "purity", "speaker_nmi"
        }
        with (temp_dir / "ablation_abmDepth_summary.csv").open() as handle:
            summary = list(csv.DictReader(handle))
        assert [row["axis_value"] for row in summary] == ["0", "1"]
        assert all(row["seeds"] == "3" for row in summary)

    @pytest.mark.parametrize(
        "axis,values,seeds",
        [
            ("abmDepth", [1, 9], [0, 1, 2]),
            ("clusters", [6, 1], [0, 1, 2]),
            ("memoryDim", [8, 9], [0, 1, 2]),
            ("abmDepth", [1], [0, 1, 2]),
            ("abmDepth", [0, 1], [0, 1]),
        ],
    )
    def test_invalid_sweeps_fail_before_training(self, corpus_on_disk, mocker, axis, values, seeds):
        memory_stage = mocker.patch("akvsr.evaluation.ablation.memory_stage")
        corpus = load_corpus(corpus_on_disk.paths.corpus_dir)
        with pytest.raises(ConfigError):
            run_ablation(axis, values, seeds, corpus_on_disk, corpus)
        memory_stage.assert_not_called()

    def test_benefit_needs_positive_depth(self, session_corpus, tiny_config):
        with pytest.raises(ConfigError):
            assess_abm_benefit(session_corpus, tiny_config, depth=0)

    def test_benefit_report_carries_every_number(self, session_corpus, tiny_config):
        config = tiny_config.with_updates(training={"memory_steps": 2, "vsr_steps": 2})
        report = assess_abm_benefit(session_corpus, config, depth=1, seeds=[0, 1, 2])
        assert report.finding in {"supported", "negative"}
        assert report.baseline.axis_value == 0
        assert report.abm.axis_value == report.zero_memory.axis_value == 1
        assert report.abm.seeds == report.baseline.seeds == report.zero_memory.seeds == 3
        assert json.loads(report.model_dump_json())["abm_beats_zero_memory"] in (True, False)
        assert report.kd_logit is None and report.abm_not_worse_than_distillation is None

    @pytest.mark.parametrize("mode", list(DistillationMode))
    def test_distillation_baseline_reports_a_wer(self, session_corpus, tiny_config, mode):
        config = tiny_config.with_updates(
            model={"abm_depth": 0}, training={"memory_steps": 2, "vsr_steps": 2}
        )
        cluster_model = fit_quantizer(session_corpus, config, 0)
        teacher, _ = train_memory_asr(session_corpus, cluster_model, config, seed=0)
        before = teacher.state_dict()
        wer = distillation_baseline(session_corpus, teacher, cluster_model, config, 0, mode)
        assert math.isfinite(wer) and wer >= 0.0
        after = teacher.state_dict()
        assert all((before[k] == after[k]).all() for k in before)

    def test_benefit_with_distillation(self, session_corpus, tiny_config):
        config = tiny_config.with_updates(training={"memory_steps": 2, "vsr_steps": 2})
        report = assess_abm_benefit(session_corpus, config, depth=1, seeds=[0, 1, 2], with_kd=True)
        assert report.kd_logit.seeds == report.kd_feature.seeds == 3
        assert report.kd_logit.axis_value == report.kd_feature.axis_value == 0
        assert math.isfinite(report.kd_logit.mean_wer) and math.isfinite(report.kd_feature.mean_wer)
        assert report.abm_not_worse_than_distillation in (True, False)

    def test_missing_test_wer_is_an_error(self, session_corpus, tiny_config, mocker):
        mocker.patch(
            "akvsr.evaluation.ablation.train_vsr",
            return_value=(None, TrainReport(stage="vsr", steps=0)),
        )
        with pytest.raises(ContractError, match="without a test WER"):
            vsr_wer(session_corpus, None, tiny_config, 0)
