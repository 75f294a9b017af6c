"""
Restart checkpoints: b"SKFLCKPT", a format version, the SHA-256 of the
payload and an npz payload holding arrays plus a JSON metadata entry.
"""
import hashlib
import io
import json
import logging
from typing import Any, Dict, Tuple

import numpy as np

from app.errors import CheckpointError
from app.io.atomic import PathLike, write_bytes

logger = logging.getLogger(__name__)

MAGIC = b"SKFLCKPT"
VERSION = 1
_HEADER = len(MAGIC) + 2 + 32


def checkpoint(path: PathLike, arrays: Dict[str, np.ndarray], metadata: Dict[str, Any]) -> None:
    buffer = io.BytesIO()
    np.savez(buffer, __metadata__=np.array(json.dumps(metadata, sort_keys=True)),
             **{k: np.asarray(v) for k, v in arrays.items()})
    payload = buffer.getvalue()
    digest = hashlib.sha256(payload).digest()
    write_bytes(path, MAGIC + VERSION.to_bytes(2, "little") + digest + payload)
    logger.info(f"Checkpoint written to {path} ({len(payload)} bytes)")


def restore(path: PathLike) -> Tuple[Dict[str, np.ndarray], Dict[str, Any]]:
    try:
        with open(path, "rb") as handle:
            blob = handle.read()
    except OSError as exc:
        raise CheckpointError("Cannot read checkpoint", details={"path": str(path)}) from exc
    if len(blob) < _HEADER or not blob.startswith(MAGIC):
        raise CheckpointError("Not a checkpoint file", details={"path": str(path)})
    version = int.from_bytes(blob[len(MAGIC):len(MAGIC) + 2], "little")
    if version != VERSION:
        raise CheckpointError("Unsupported checkpoint version",
                              details={"version": version, "supported": VERSION})
    digest, payload = blob[len(MAGIC) + 2:_HEADER], blob[_HEADER:]
    if hashlib.sha256(payload).digest() != digest:
        raise CheckpointError("Checkpoint checksum mismatch", details={"path": str(path)})
    with np.load(io.BytesIO(payload), allow_pickle=False) as data:
        arrays = {k: data[k] for k in data.files if k != "__metadata__"}
        metadata = json.loads(str(data["__metadata__"]))
    return arrays, metadata
