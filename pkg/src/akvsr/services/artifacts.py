"""Stage artifacts stored as checkpoints: quantizer, memory stage, VSR model."""

from pathlib import Path
from typing import Any

from akvsr.config.run import RunConfig
from akvsr.errors import CheckpointIntegrityError
from akvsr.nn import CompactAudioMemory, Vocab
from akvsr.quantizer import ClusterModel
from akvsr.services.checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from akvsr.tensor import Tensor
from akvsr.training.models import AsrModel, VsrModel

CENTROIDS = "quantizer.centroids"
SLOTS = "memory.slots"


def _require(checkpoint: Checkpoint, path: Path | str, *names: str) -> None:
    missing = [n for n in names if n not in checkpoint.tensors]
    if missing:
        raise CheckpointIntegrityError(path, f"missing tensors {missing}")


def _meta(config: RunConfig, kind: str, **extra: Any) -> dict[str, Any]:
    return {"kind": kind, "config": config.snapshot(), **extra}


def save_quantizer(path: Path | str, model: ClusterModel, config: RunConfig) -> str:
    """Persist centroids with their fit statistics."""
    return save_checkpoint(
        path,
        {CENTROIDS: model.centroids},
        _meta(
            config,
            "quantizer",
            iterations=model.iterations,
            inertia_history=model.inertia_history,
        ),
    )


def load_quantizer(path: Path | str) -> ClusterModel:
    """Inverse of :func:`save_quantizer`."""
    checkpoint = load_checkpoint(path)
    _require(checkpoint, path, CENTROIDS)
    return ClusterModel(
        centroids=checkpoint.tensors[CENTROIDS],
        iterations=checkpoint.meta.get("iterations", 0),
        inertia_history=checkpoint.meta.get("inertia_history", []),
    )


def save_memory_stage(
    path: Path | str, model: AsrModel, config: RunConfig, **meta: Any
) -> str:
    """Persist the memory, context encoder, decoder and CTC head of stage 1."""
    return save_checkpoint(
        path,
        model.state_dict(),
        _meta(config, "memory", phonemes=model.decoder.vocab.phonemes, **meta),
    )


def load_memory(path: Path | str) -> CompactAudioMemory:
    """The trained memory of a stage-1 checkpoint (trainable until frozen)."""
    checkpoint = load_checkpoint(path)
    _require(checkpoint, path, SLOTS)
    return CompactAudioMemory(Tensor(checkpoint.tensors[SLOTS], requires_grad=True))


def load_memory_stage(path: Path | str, seed: int = 0) -> AsrModel:
    """Rebuild the full stage-1 recognizer from its checkpoint."""
    checkpoint = load_checkpoint(path)
    _require(checkpoint, path, SLOTS)
    config = RunConfig.from_mapping(checkpoint.meta["config"])
    vocab = Vocab(phonemes=checkpoint.meta["phonemes"])
    memory = CompactAudioMemory(Tensor(checkpoint.tensors[SLOTS], requires_grad=True))
    model = AsrModel(config.model, vocab, memory, seed)
    model.load_state_dict(checkpoint.tensors)
    return model


def save_vsr(
    path: Path | str, model: VsrModel, config: RunConfig, **meta: Any
) -> str:
    """Persist the stage-2 recognizer, including the memory it read."""
    return save_checkpoint(
        path,
        model.state_dict(),
        _meta(
            config,
            "vsr",
            abm_depth=model.abm.depth,
            visual_dim=model.input_projection.w.shape[0],
            phonemes=model.decoder.vocab.phonemes,
            **meta,
        ),
    )


def load_vsr(path: Path | str) -> VsrModel:
    """Rebuild a stage-2 recognizer; its memory comes back frozen."""
    checkpoint = load_checkpoint(path)
    _require(checkpoint, path, SLOTS)
    meta = checkpoint.meta
    config = RunConfig.from_mapping(meta["config"])
    model = VsrModel(
        config.model,
        Vocab(phonemes=meta["phonemes"]),
        int(meta["visual_dim"]),
        CompactAudioMemory(Tensor(checkpoint.tensors[SLOTS])),
        int(meta["abm_depth"]),
        config.seed,
    )
    model.load_state_dict(checkpoint.tensors)
    return model
