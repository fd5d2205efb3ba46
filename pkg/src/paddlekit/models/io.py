"""Portable model envelope.

Byte layout: 7 magic bytes ``STRKMDL``, one ASCII version digit, a 4-byte
big-endian payload length, then the payload: canonical JSON (sorted keys,
UTF-8) holding kind, hyperparameters, registry digest, phase, parameters
and format_version.  JSON floats use the shortest round-tripping decimal
form, so a load/save cycle scores bit-identically.
"""

from __future__ import annotations

import json
import struct

from ..errors import CorruptModel, VersionUnsupported
from .base import ModelKind, TrainedModel

_MAGIC = b"STRKMDL"
_VERSION = b"1"
SUPPORTED_FORMAT_VERSION = 1


def save_model(model: TrainedModel) -> bytes:
    if model.format_version != SUPPORTED_FORMAT_VERSION:
        raise VersionUnsupported(f"cannot write format_version {model.format_version}")
    payload = json.dumps(
        {
            "format_version": model.format_version,
            "kind": model.kind.value,
            "hyperparams": model.hyperparams,
            "registry_digest": model.registry_digest,
            "phase": model.phase,
            "params": model.params,
        },
        sort_keys=True,
        separators=(",", ":"),
    ).encode("utf-8")
    return _MAGIC + _VERSION + struct.pack(">I", len(payload)) + payload


def load_model(data: bytes) -> TrainedModel:
    if len(data) < len(_MAGIC) + 1 + 4:
        raise CorruptModel("model file shorter than its header")
    if data[: len(_MAGIC)] != _MAGIC:
        raise CorruptModel("bad magic header")
    version = data[len(_MAGIC) : len(_MAGIC) + 1]
    if version != _VERSION:
        raise VersionUnsupported(f"unknown envelope version {version!r}")
    (length,) = struct.unpack(">I", data[len(_MAGIC) + 1 : len(_MAGIC) + 5])
    payload = data[len(_MAGIC) + 5 :]
    if len(payload) != length:
        raise CorruptModel(f"payload length {len(payload)} != declared {length}")
    try:
        doc = json.loads(payload.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CorruptModel(f"payload is not valid JSON: {exc}") from exc

    if doc.get("format_version") != SUPPORTED_FORMAT_VERSION:
        raise VersionUnsupported(f"format_version {doc.get('format_version')}")
    try:
        return TrainedModel(
            kind=ModelKind(doc["kind"]),
            hyperparams=doc["hyperparams"],
            registry_digest=doc["registry_digest"],
            phase=doc["phase"],
            params=doc["params"],
            format_version=doc["format_version"],
        )
    except (KeyError, ValueError) as exc:
        raise CorruptModel(f"malformed model document: {exc}") from exc
