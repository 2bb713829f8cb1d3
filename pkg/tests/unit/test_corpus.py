"""Synthetic corpus: inventory geometry, grammar, rendering and storage."""

import json
import logging

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from pydantic import ValidationError

from akvsr.config import CorpusConfig
from akvsr.corpus import (
    build_corpus,
    build_grammar,
    generate_corpus,
    inventory_for,
    load_corpus,
    make_inventory,
    orthonormal_rows,
    read_split,
    render,
    sample_utterance,
    write_split,
)
from akvsr.errors import ConfigError, CorpusFileError, DataError, ParameterError
from akvsr.models.base.types import Split
from akvsr.models.corpus import SyntheticSample, Utterance


@pytest.fixture
def corpus_config(tiny_config) -> CorpusConfig:
    return tiny_config.corpus


@pytest.mark.unit
class TestInventory:
    def test_orthonormal_rows(self, rng):
        rows = orthonormal_rows(5, 8, rng)
        np.testing.assert_allclose(rows @ rows.T, np.eye(5), atol=1e-12)

    def test_too_many_rows(self, rng):
        with pytest.raises(ConfigError):
            orthonormal_rows(9, 8, rng)

    @settings(max_examples=50, deadline=None)
    @given(
        phonemes=st.integers(min_value=3, max_value=20),
        data=st.data(),
    )
    def test_balanced_surjective_viseme_map(self, phonemes, data):
        visemes = data.draw(st.integers(min_value=1, max_value=phonemes - 1))
        inventory = make_inventory(phonemes, visemes, seed=3, audio_dim=phonemes + 2, num_speakers=2)
        sizes = [len(c) for c in inventory.viseme_classes()]
        assert sum(sizes) == phonemes
        assert min(sizes) >= 1
        assert max(sizes) - min(sizes) <= 1
        # V < P forces at least one ambiguous class
        assert max(sizes) >= 2

    def test_speakers_orthogonal_to_phonemes(self):
        inventory = make_inventory(6, 3, seed=0, audio_dim=8, num_speakers=2)
        cross = inventory.phoneme_embeddings @ inventory.speaker_directions.T
        np.testing.assert_allclose(cross, 0.0, atol=1e-12)
        assert inventory.speaker_directions.shape == (2, 8)

    def test_deterministic_in_seed(self):
        a = make_inventory(6, 3, seed=4, audio_dim=8, num_speakers=2)
        b = make_inventory(6, 3, seed=4, audio_dim=8, num_speakers=2)
        assert a.viseme_of == b.viseme_of
        np.testing.assert_array_equal(a.phoneme_embeddings, b.phoneme_embeddings)

    @pytest.mark.parametrize(
        "phonemes,visemes,audio_dim,field",
        [(4, 4, 8, "num_visemes"), (4, 6, 8, "num_visemes"), (6, 3, 7, "audio_dim")],
    )
    def test_invalid_inventories(self, phonemes, visemes, audio_dim, field):
        with pytest.raises(ConfigError) as info:
            make_inventory(phonemes, visemes, seed=0, audio_dim=audio_dim, num_speakers=2)
        assert field in info.value.fields

    def test_config_rejects_visemes_not_fewer_than_phonemes(self):
        with pytest.raises(ValidationError, match="V < P"):
            CorpusConfig(num_phonemes=4, num_visemes=4, audio_dim=8)


@pytest.mark.unit
class TestGrammar:
    def test_class_members_have_disjoint_successors(self, corpus_config):
        inventory = inventory_for(corpus_config)
        grammar = build_grammar(inventory, corpus_config.seed)
        for members in inventory.viseme_classes():
            for i, a in enumerate(members):
                assert grammar.successors[a]
                for b in members[i + 1 :]:
                    assert not set(grammar.successors[a]) & set(grammar.successors[b])

    def test_utterances_follow_grammar(self, corpus_config):
        inventory = inventory_for(corpus_config)
        grammar = build_grammar(inventory, 0)
        for seed in range(20):
            utt = sample_utterance(inventory, grammar, 1, seed, 2, 6)
            assert 2 <= len(utt.transcript) <= 6
            idx = [inventory.index_of(s) for s in utt.transcript]
            assert all(grammar.is_allowed(a, b) for a, b in zip(idx, idx[1:]))

    def test_unknown_speaker(self, corpus_config):
        inventory = inventory_for(corpus_config)
        with pytest.raises(ParameterError):
            sample_utterance(inventory, build_grammar(inventory, 0), 7, 0)


@pytest.mark.unit
class TestRender:
    @pytest.fixture
    def sample(self, corpus_config) -> SyntheticSample:
        inventory = inventory_for(corpus_config)
        utterance = Utterance(transcript=["a", "b", "c"], speaker_id=1, rng_seed=17)
        return render(utterance, inventory, corpus_config, "s0")

    def test_audio_is_twice_visual(self, sample, corpus_config):
        assert sample.audio.shape[0] == 2 * sample.visual.shape[0]
        assert sample.audio.shape[1] == corpus_config.audio_dim
        assert sample.visual.shape[1] == corpus_config.visual_dim

    def test_alignment_follows_transcript(self, sample, corpus_config):
        runs = [k for i, k in enumerate(sample.align) if i == 0 or sample.align[i - 1] != k]
        assert runs == [0, 1, 2]
        assert len(sample.visual_align) == sample.visual.shape[0]
        durations = np.bincount(sample.align)
        assert durations.min() >= corpus_config.dur_min

    def test_render_is_deterministic(self, corpus_config):
        inventory = inventory_for(corpus_config)
        utterance = Utterance(transcript=["b", "a"], speaker_id=0, rng_seed=5)
        a = render(utterance, inventory, corpus_config)
        b = render(utterance, inventory, corpus_config)
        np.testing.assert_array_equal(a.audio, b.audio)
        np.testing.assert_array_equal(a.visual, b.visual)

    def test_frame_ratio_is_validated(self):
        with pytest.raises(ValidationError, match="twice"):
            SyntheticSample(
                id="x",
                utterance=Utterance(transcript=["a"], speaker_id=0, rng_seed=0),
                audio=np.zeros((3, 2)),
                visual=np.zeros((1, 2)),
                align=[0, 0, 0],
            )


@pytest.mark.unit
class TestBuild:
    def test_split_sizes_and_speakers(self, session_corpus):
        config = session_corpus.config
        assert len(session_corpus[Split.TRAIN]) == config.n_train
        assert len(session_corpus[Split.TEST]) == config.n_test
        quantfit = session_corpus["quantfit"]
        assert len(quantfit) == config.single_speaker_n
        assert {s.speaker for s in quantfit} == {0}
        assert {s.speaker for s in session_corpus[Split.TRAIN]} == set(range(config.num_speakers))

    def test_ids_are_unique_per_split(self, session_corpus):
        for split in Split:
            ids = [s.id for s in session_corpus[split]]
            assert len(ids) == len(set(ids))

    def test_counts_must_be_positive(self, corpus_config):
        with pytest.raises(DataError, match="n_test"):
            build_corpus(corpus_config, 3, 0, 1)

    def test_unavoidable_train_transcript_is_logged(self, corpus_config, mocker, caplog):
        fixed = Utterance(transcript=["a", "b"], speaker_id=0, rng_seed=7)
        mocker.patch("akvsr.corpus.io._MAX_REDRAWS", 3)
        mocker.patch(
            "akvsr.corpus.io.sample_utterance",
            side_effect=lambda inventory, grammar, speaker, *rest: fixed.model_copy(
                update={"speaker_id": speaker}
            ),
        )
        with caplog.at_level(logging.WARNING, logger="akvsr.corpus.io"):
            corpus = build_corpus(corpus_config, 2, 2, 1)
        assert [s.utterance.transcript for s in corpus[Split.TEST]] == [["a", "b"]] * 2
        warnings = [r.getMessage() for r in caplog.records if r.levelno == logging.WARNING]
        assert len(warnings) == 2
        assert all("no unseen transcript after 3 draws" in m for m in warnings)


@pytest.mark.unit
class TestStorage:
    def test_split_round_trip(self, session_corpus, temp_dir):
        path = temp_dir / "train.jsonl"
        samples = session_corpus[Split.TRAIN][:3]
        assert write_split(path, samples) == 3
        loaded = read_split(path)
        assert [s.id for s in loaded] == [s.id for s in samples]
        np.testing.assert_array_equal(loaded[0].audio, samples[0].audio)
        assert loaded[0].utterance == samples[0].utterance

    def test_failed_write_keeps_the_previous_split(self, session_corpus, temp_dir):
        path = temp_dir / "train.jsonl"
        samples = session_corpus[Split.TRAIN][:2]
        write_split(path, samples)
        before = path.read_bytes()

        def broken():
            yield samples[0]
            raise DataError("renderer failed")

        with pytest.raises(DataError):
            write_split(path, broken())
        assert path.read_bytes() == before
        assert [p.name for p in temp_dir.iterdir()] == ["train.jsonl"]

    def test_generation_is_byte_identical(self, corpus_config, temp_dir):
        first = generate_corpus(corpus_config, temp_dir / "a")
        second = generate_corpus(corpus_config, temp_dir / "b")
        for split in Split:
            assert first[split].read_bytes() == second[split].read_bytes()

    def test_load_corpus(self, corpus_on_disk):
        corpus = load_corpus(corpus_on_disk.paths.corpus_dir)
        assert corpus.config == corpus_on_disk.corpus
        assert len(corpus[Split.TEST]) == corpus_on_disk.corpus.n_test
        meta = json.loads((corpus_on_disk.paths.corpus_dir / "corpus.json").read_text())
        assert meta["config"]["seed"] == corpus_on_disk.corpus.seed

    def test_missing_corpus(self, temp_dir):
        with pytest.raises(CorpusFileError):
            load_corpus(temp_dir / "nope")

    def test_malformed_record(self, temp_dir):
        path = temp_dir / "bad.jsonl"
        path.write_text('{"id": "x"}\n')
        with pytest.raises(CorpusFileError, match="malformed"):
            read_split(path)
