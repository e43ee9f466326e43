"""
Checkpoint storage: raw little-endian float32 parameters plus a JSON manifest.

Layout of a checkpoint directory:

    params.bin      parameters concatenated in manifest order
    manifest.json   names, shapes, offsets, step count, config hash
    optimizer.bin   Adam first then second moments (optional)
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from discograms.utils.exceptions import SchemaViolation, UnreadableFile, UnwritableFile

logger = logging.getLogger(__name__)

PARAMS_FILE = 'params.bin'
MANIFEST_FILE = 'manifest.json'
OPTIMIZER_FILE = 'optimizer.bin'
WIRE_DTYPE = np.dtype('<f4')
FORMAT_VERSION = 1


def _pack(arrays: Sequence[np.ndarray]) -> bytes:
    if not arrays:
        return b''
    return np.concatenate([np.asarray(a).astype(WIRE_DTYPE).reshape(-1) for a in arrays]).tobytes()


def _write(path: Path, payload: Union[bytes, str]) -> None:
    try:
        if isinstance(payload, str):
            path.write_text(payload, encoding='utf-8')
        else:
            path.write_bytes(payload)
    except OSError as e:
        raise UnwritableFile(f"Cannot write {path}: {e}", {'path': str(path)}) from e


def _read_bytes(path: Path) -> bytes:
    try:
        return path.read_bytes()
    except OSError as e:
        raise UnreadableFile(f"Cannot read {path}: {e}", {'path': str(path)}) from e


def save_checkpoint(directory: Union[str, Path], named: Sequence[Tuple[str, np.ndarray]],
                    step: int, config_hash: str, extra: Optional[Mapping[str, Any]] = None,
                    optimizer: Optional[Tuple[Sequence[np.ndarray], Sequence[np.ndarray]]] = None
                    ) -> Path:
    """
    Write a checkpoint directory.

    Args:
        directory: Target directory (created if missing)
        named: (name, array) pairs in a stable order
        step: Optimizer step count
        config_hash: Hash of the model configuration
        extra: Additional manifest entries
        optimizer: Optional (first moments, second moments) aligned with ``named``

    Returns:
        The checkpoint directory

    Raises:
        UnwritableFile: If any file cannot be written
    """
    directory = Path(directory)
    try:
        directory.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise UnwritableFile(f"Cannot create checkpoint directory {directory}: {e}",
                             {'path': str(directory)}) from e

    entries: List[Dict[str, Any]] = []
    offset = 0
    for name, array in named:
        size = int(np.asarray(array).size)
        entries.append({'name': name, 'shape': list(np.shape(array)), 'offset': offset, 'size': size})
        offset += size

    manifest: Dict[str, Any] = {
        'format_version': FORMAT_VERSION,
        'dtype': 'float32-le',
        'params': entries,
        'total': offset,
        'step': int(step),
        'config_hash': config_hash,
    }
    if extra:
        manifest.update(extra)

    _write(directory / PARAMS_FILE, _pack([a for _, a in named]))
    if optimizer is not None:
        first, second = optimizer
        _write(directory / OPTIMIZER_FILE, _pack(list(first) + list(second)))
        manifest['optimizer'] = {'file': OPTIMIZER_FILE, 'step': int(step)}
    _write(directory / MANIFEST_FILE, json.dumps(manifest, indent=2, sort_keys=True))

    logger.info(f"Checkpoint written to {directory} ({len(entries)} tensors, {offset} values, step {step})")
    return directory


def read_manifest(directory: Union[str, Path]) -> Dict[str, Any]:
    """
    Read and sanity-check a checkpoint manifest.

    Raises:
        UnreadableFile: If the manifest cannot be read
        SchemaViolation: If it is not a valid manifest
    """
    path = Path(directory) / MANIFEST_FILE
    try:
        manifest = json.loads(_read_bytes(path))
    except json.JSONDecodeError as e:
        raise SchemaViolation(f"Manifest {path} is not JSON: {e}", {'path': str(path)}) from e
    for key in ('params', 'step', 'config_hash', 'total'):
        if key not in manifest:
            raise SchemaViolation(f"Manifest {path} lacks '{key}'", {'path': str(path), 'field': key})
    return manifest


def load_checkpoint(directory: Union[str, Path]) -> Tuple[Dict[str, np.ndarray], Dict[str, Any]]:
    """
    Read a checkpoint directory.

    Returns:
        (name -> float32 array, manifest)

    Raises:
        UnreadableFile: If files are missing
        SchemaViolation: If the payload size disagrees with the manifest
    """
    directory = Path(directory)
    manifest = read_manifest(directory)
    flat = np.frombuffer(_read_bytes(directory / PARAMS_FILE), dtype=WIRE_DTYPE)
    if flat.size != manifest['total']:
        raise SchemaViolation(
            f"{PARAMS_FILE} holds {flat.size} values, manifest expects {manifest['total']}",
            {'path': str(directory)}
        )

    arrays = {}
    for entry in manifest['params']:
        chunk = flat[entry['offset']:entry['offset'] + entry['size']]
        arrays[entry['name']] = chunk.astype(np.float32).reshape(entry['shape'])
    logger.debug(f"Loaded {len(arrays)} tensors from {directory}")
    return arrays, manifest


def load_optimizer_state(directory: Union[str, Path], manifest: Mapping[str, Any]
                         ) -> Optional[Tuple[List[np.ndarray], List[np.ndarray]]]:
    """Adam moments stored alongside the parameters, or None when absent."""
    if 'optimizer' not in manifest:
        return None
    flat = np.frombuffer(_read_bytes(Path(directory) / manifest['optimizer']['file']), dtype=WIRE_DTYPE)
    total = manifest['total']
    if flat.size != 2 * total:
        raise SchemaViolation(f"Optimizer state holds {flat.size} values, expected {2 * total}")

    first, second = [], []
    for entry in manifest['params']:
        lo, hi = entry['offset'], entry['offset'] + entry['size']
        first.append(flat[lo:hi].astype(np.float32).reshape(entry['shape']))
        second.append(flat[total + lo:total + hi].astype(np.float32).reshape(entry['shape']))
    return first, second
