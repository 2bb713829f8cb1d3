"""Portable checkpoint format: base64 little-endian tensors inside JSON.

A checkpoint is a JSON object ``{"version", "tensors", "meta"}``. Each tensor
is ``{"shape", "dtype": "f64", "data"}`` with ``data`` the base64 encoding of
the array's little-endian float64 bytes. ``meta["digest"]`` is a git-style
blob SHA-1 over the canonical JSON of everything else, verified on load.
"""

import base64
import binascii
import hashlib
import json
import math
from collections.abc import Mapping
from pathlib import Path
from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from akvsr.errors import CheckpointIntegrityError, CheckpointVersionError
from akvsr.utils import atomic_write_text, get_logger

logger = get_logger(__name__)

FORMAT_VERSION = "akvsr-ckpt/1"
DIGEST_KEY = "digest"


class TensorRecord(BaseModel):
    """Serialized form of one array."""

    shape: list[int] = Field(..., description="Array extents")
    dtype: str = Field("f64", pattern="^f64$")
    data: str = Field(..., description="base64 of little-endian bytes")


class Checkpoint(BaseModel):
    """Decoded checkpoint: named arrays plus metadata."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    version: str = FORMAT_VERSION
    tensors: dict[str, np.ndarray] = Field(default_factory=dict)
    meta: dict[str, Any] = Field(default_factory=dict)


def encode_tensor(array: np.ndarray) -> TensorRecord:
    """Pin dtype and byte order, then base64-encode."""
    data = np.ascontiguousarray(array, dtype="<f8")
    return TensorRecord(
        shape=list(data.shape),
        data=base64.b64encode(data.tobytes()).decode("ascii"),
    )


def decode_tensor(name: str, record: TensorRecord, path: Path | str) -> np.ndarray:
    """Inverse of :func:`encode_tensor`, checking the byte length."""
    try:
        raw = base64.b64decode(record.data.encode("ascii"), validate=True)
    except (binascii.Error, ValueError) as e:
        raise CheckpointIntegrityError(path, f"tensor '{name}' is not valid base64") from e
    expected = 8 * math.prod(record.shape)
    if len(raw) != expected:
        raise CheckpointIntegrityError(
            path, f"tensor '{name}' has {len(raw)} bytes, expected {expected}"
        )
    return np.frombuffer(raw, dtype="<f8").reshape(record.shape).astype(np.float64)


def _canonical(body: Mapping[str, Any]) -> bytes:
    return json.dumps(body, sort_keys=True, separators=(",", ":")).encode("utf-8")


def content_digest(body: Mapping[str, Any]) -> str:
    """SHA-1 of ``b"blob <len>\\0" + payload``, as git hashes file contents."""
    payload = _canonical(body)
    return hashlib.sha1(b"blob %d\0" % len(payload) + payload).hexdigest()


def save_checkpoint(
    path: Path | str,
    tensors: Mapping[str, np.ndarray],
    meta: Mapping[str, Any] | None = None,
) -> str:
    """Write a checkpoint atomically and return its digest.

    Output bytes depend only on the inputs, so identical runs produce
    identical files.
    """
    body: dict[str, Any] = {
        "version": FORMAT_VERSION,
        "tensors": {
            name: encode_tensor(array).model_dump() for name, array in sorted(tensors.items())
        },
        "meta": {k: v for k, v in (meta or {}).items() if k != DIGEST_KEY},
    }
    digest = content_digest(body)
    body["meta"][DIGEST_KEY] = digest
    atomic_write_text(path, json.dumps(body, sort_keys=True, indent=1) + "\n")
    logger.info(f"Saved checkpoint {path} ({len(tensors)} tensors, {digest[:12]})")
    return digest


def load_checkpoint(path: Path | str) -> Checkpoint:
    """Read and verify a checkpoint.

    Raises:
        CheckpointIntegrityError: on unreadable, truncated or tampered files.
        CheckpointVersionError: when written by another format version.
    """
    try:
        body = json.loads(Path(path).read_text())
    except OSError as e:
        raise CheckpointIntegrityError(path, f"unreadable: {e}") from e
    except ValueError as e:
        raise CheckpointIntegrityError(path, f"malformed JSON: {e}") from e
    if not isinstance(body, dict) or not isinstance(body.get("meta"), dict):
        raise CheckpointIntegrityError(path, "missing checkpoint structure")

    version = body.get("version")
    if version != FORMAT_VERSION:
        raise CheckpointVersionError(path, str(version), FORMAT_VERSION)

    meta = dict(body["meta"])
    stored = meta.pop(DIGEST_KEY, None)
    actual = content_digest({**body, "meta": meta})
    if stored != actual:
        raise CheckpointIntegrityError(path, f"digest {stored} != content {actual}")

    try:
        records = {
            name: TensorRecord.model_validate(rec)
            for name, rec in body.get("tensors", {}).items()
        }
    except (ValidationError, AttributeError) as e:
        raise CheckpointIntegrityError(path, f"bad tensor record: {e}") from e
    tensors = {name: decode_tensor(name, rec, path) for name, rec in records.items()}
    return Checkpoint(version=version, tensors=tensors, meta={**meta, DIGEST_KEY: stored})
