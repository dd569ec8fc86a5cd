"""On-disk formats: binary PGM label maps, SFT tensors, and JSON sidecars.

Formats
-------
* Label maps: binary PGM ("P5", maxval 255), one byte per pixel holding the
  class id; 255 is the ignore id.
* Tensors: "SFT" — magic ``SFT1``, then little-endian u8 dtype code
  (0 = float32, 1 = float64), u8 rank, rank u32 dimensions, row-major payload.
  Round-trips are bit-exact.
* Class specs and dataset manifests: JSON (schemas documented in the README).
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import ClassSpec, LabelMap, ProbMap, validate_probmap
from .errors import EmptyInputError, FormatError, ShapeMismatchError

SFT_MAGIC = b"SFT1"
_SFT_CODES = {0: np.dtype("<f4"), 1: np.dtype("<f8")}
_SFT_FOR_DTYPE = {np.dtype(np.float32): 0, np.dtype(np.float64): 1}


# ---------------------------------------------------------------------------
# PGM


def write_pgm(path, data) -> None:
    data = np.asarray(data)
    if data.ndim != 2:
        raise FormatError(f"PGM payload must be 2-D, got shape {data.shape}")
    if not np.issubdtype(data.dtype, np.integer):
        raise FormatError(f"PGM payload must be integer, got dtype {data.dtype}")
    if data.size and (data.min() < 0 or data.max() > 255):
        raise FormatError("PGM values must fit in one byte (0..255)")
    header = f"P5\n{data.shape[1]} {data.shape[0]}\n255\n".encode("ascii")
    Path(path).write_bytes(header + data.astype(np.uint8).tobytes(order="C"))


def read_pgm(path) -> np.ndarray:
    """Read a binary PGM into an H×W uint8 array (maxval must be 255)."""
    blob = Path(path).read_bytes()
    pos = 0

    def next_token() -> bytes:
        nonlocal pos
        while pos < len(blob):
            if blob[pos : pos + 1].isspace():
                pos += 1
            elif blob[pos : pos + 1] == b"#":
                while pos < len(blob) and blob[pos] != 0x0A:
                    pos += 1
            else:
                break
        start = pos
        while pos < len(blob) and not blob[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise FormatError(f"{path}: truncated PGM header")
        return blob[start:pos]

    if next_token() != b"P5":
        raise FormatError(f"{path}: not a binary PGM (expected magic P5)")
    try:
        width, height, maxval = (int(next_token()) for _ in range(3))
    except ValueError as exc:
        raise FormatError(f"{path}: non-numeric PGM header field") from exc
    if maxval != 255:
        raise FormatError(f"{path}: unsupported maxval {maxval} (only 255)")
    if width <= 0 or height <= 0:
        raise FormatError(f"{path}: invalid dimensions {width}x{height}")
    pos += 1  # single whitespace byte separates header and raster
    payload = blob[pos:]
    if len(payload) != width * height:
        raise FormatError(
            f"{path}: expected {width * height} raster bytes, found {len(payload)}"
        )
    return np.frombuffer(payload, dtype=np.uint8).reshape(height, width).copy()


def read_label_map(path, spec: ClassSpec) -> LabelMap:
    return LabelMap.from_array(read_pgm(path), spec)


def write_label_map(path, label_map: LabelMap) -> None:
    write_pgm(path, label_map.data)


# ---------------------------------------------------------------------------
# SFT tensors


def write_sft(path, array) -> None:
    array = np.asarray(array)
    code = _SFT_FOR_DTYPE.get(array.dtype)
    if code is None:
        raise FormatError(f"SFT stores float32/float64 tensors, got dtype {array.dtype}")
    if array.ndim == 0 or array.ndim > 255:
        raise FormatError(f"SFT rank must be 1..255, got {array.ndim}")
    if any(d <= 0 or d >= 2**32 for d in array.shape):
        raise FormatError(f"SFT dimensions must be positive u32 values, got {array.shape}")
    header = SFT_MAGIC + bytes([code, array.ndim])
    header += struct.pack(f"<{array.ndim}I", *array.shape)
    payload = np.ascontiguousarray(array).astype(array.dtype.newbyteorder("<")).tobytes()
    Path(path).write_bytes(header + payload)


def read_sft(path) -> np.ndarray:
    blob = Path(path).read_bytes()
    if len(blob) < 6 or blob[:4] != SFT_MAGIC:
        raise FormatError(f"{path}: missing SFT1 magic")
    code, rank = blob[4], blob[5]
    dtype = _SFT_CODES.get(code)
    if dtype is None:
        raise FormatError(f"{path}: unknown SFT dtype code {code}")
    if rank == 0:
        raise FormatError(f"{path}: SFT rank must be at least 1")
    header_end = 6 + 4 * rank
    if len(blob) < header_end:
        raise FormatError(f"{path}: truncated SFT dimension table")
    dims = struct.unpack(f"<{rank}I", blob[6:header_end])
    if any(d == 0 for d in dims):
        raise FormatError(f"{path}: zero-sized SFT dimension in {dims}")
    expected = int(np.prod(dims)) * dtype.itemsize
    payload = blob[header_end:]
    if len(payload) != expected:
        raise FormatError(f"{path}: expected {expected} payload bytes, found {len(payload)}")
    return np.frombuffer(payload, dtype=dtype).reshape(dims).copy()


def read_prob_map(path, spec: ClassSpec | None = None) -> ProbMap:
    arr = read_sft(path)
    if arr.ndim != 3:
        raise FormatError(f"{path}: probability maps are rank-3 SFT tensors, got rank {arr.ndim}")
    if spec is not None and arr.shape[2] != spec.num_classes:
        raise ShapeMismatchError(
            f"{path}: {arr.shape[2]} channels but the class spec declares {spec.num_classes}"
        )
    pm = ProbMap(arr)
    validate_probmap(pm)
    return pm


def write_prob_map(path, prob_map: ProbMap) -> None:
    write_sft(path, prob_map.data)


# ---------------------------------------------------------------------------
# JSON: class specs and manifests


def class_spec_to_dict(spec: ClassSpec) -> dict:
    return {"names": list(spec.names), "ignore_id": spec.ignore_id}


def class_spec_from_dict(payload: dict) -> ClassSpec:
    try:
        names = tuple(payload["names"])
    except (KeyError, TypeError) as exc:
        raise FormatError("class spec JSON needs a 'names' list") from exc
    return ClassSpec(names=names, ignore_id=int(payload.get("ignore_id", 255)))


def save_class_spec(path, spec: ClassSpec) -> None:
    Path(path).write_text(json.dumps(class_spec_to_dict(spec), indent=2) + "\n")


def load_class_spec(path) -> ClassSpec:
    return class_spec_from_dict(load_json(path))


@dataclass(frozen=True)
class ManifestEntry:
    probs: Path | None
    labels: Path | None


@dataclass(frozen=True)
class DatasetManifest:
    """Paired probability/label map paths plus the class spec they share."""

    entries: tuple[ManifestEntry, ...]
    class_spec: ClassSpec

    def require_labels(self) -> list[Path]:
        paths = []
        for i, entry in enumerate(self.entries):
            if entry.labels is None:
                raise FormatError(f"manifest entry {i} has no label map path")
            paths.append(entry.labels)
        return paths

    def require_probs(self) -> list[Path]:
        paths = []
        for i, entry in enumerate(self.entries):
            if entry.probs is None:
                raise FormatError(f"manifest entry {i} has no probability map path")
            paths.append(entry.probs)
        return paths


def load_manifest(path) -> DatasetManifest:
    path = Path(path)
    payload = load_json(path)
    if "classes" not in payload or "entries" not in payload:
        raise FormatError(f"{path}: manifest JSON needs 'classes' and 'entries'")
    spec = class_spec_from_dict(payload["classes"])
    entries = []
    for i, item in enumerate(payload["entries"]):
        if not isinstance(item, dict):
            raise FormatError(f"{path}: entry {i} must be an object")
        probs = item.get("probs")
        labels = item.get("labels")
        if probs is None and labels is None:
            raise FormatError(f"{path}: entry {i} lists neither probs nor labels")
        entries.append(
            ManifestEntry(
                probs=path.parent / probs if probs else None,
                labels=path.parent / labels if labels else None,
            )
        )
    return DatasetManifest(entries=tuple(entries), class_spec=spec)


def load_label_maps(manifest: DatasetManifest) -> list[LabelMap]:
    """Load every label map, enforcing a single shared resolution."""
    paths = manifest.require_labels()
    if not paths:
        raise EmptyInputError("manifest lists no entries")
    maps = [read_label_map(p, manifest.class_spec) for p in paths]
    first = maps[0].data.shape
    for p, lm in zip(paths, maps):
        if lm.data.shape != first:
            raise ShapeMismatchError(
                f"{p}: resolution {lm.data.shape} differs from {first} used by the manifest"
            )
    return maps


def load_pairs(manifest: DatasetManifest) -> list[tuple[ProbMap, LabelMap]]:
    """Load (probability map, label map) pairs, enforcing one resolution."""
    if not manifest.entries:
        raise EmptyInputError("manifest lists no entries")
    manifest.require_probs()
    manifest.require_labels()
    pairs = []
    shape = None
    for entry in manifest.entries:
        pm = read_prob_map(entry.probs, manifest.class_spec)
        lm = read_label_map(entry.labels, manifest.class_spec)
        for candidate, p in ((pm.data.shape[:2], entry.probs), (lm.data.shape, entry.labels)):
            if shape is None:
                shape = candidate
            elif candidate != shape:
                raise ShapeMismatchError(
                    f"{p}: resolution {candidate} differs from {shape} used by the manifest"
                )
        pairs.append((pm, lm))
    return pairs


def sha256_file(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def load_json(path):
    """Parse a JSON file, mapping parse failures to FormatError."""
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON ({exc})") from exc
