"""POVM manifest (JSON) and binary matrix sidecar formats.

A manifest stores the frequency grid, mode functions and element list.
Matrices are written inline as nested ``[re, im]`` pairs (row-major,
graded-lexicographic basis order) or, for larger dimensions, into a little
endian binary sidecar next to the manifest::

    magic   16 bytes  b"POVMBIN1" padded with NUL
    D       u64
    repeated per element:
        label length  u64
        label         UTF-8 bytes
        clicks        u64
        matrix        D*D*2 float64, row-major, re/im interleaved
"""

from __future__ import annotations

import hashlib
import json
import math
import struct
from pathlib import Path

import numpy as np

from .exceptions import (
    DegenerateModeSet,
    DimensionMismatch,
    GridMismatch,
    ParseError,
    ValidationFailed,
)
from .hilbert import FockBasis, FrequencyGrid, ModeBasis, ModeFunction, enumerate_fock, fock_dimension
from .povm import Povm, PovmElement, validate

FORMAT_VERSION = 1
MAGIC = b"POVMBIN1".ljust(16, b"\0")
INLINE_MAX_DIMENSION = 64
_U64 = struct.Struct("<Q")


def _pairs(a: np.ndarray) -> list:
    """Complex array -> nested lists ending in ``[re, im]`` pairs."""
    return np.stack([a.real, a.imag], axis=-1).tolist()


def _from_pairs(data, what: str) -> np.ndarray:
    try:
        arr = np.asarray(data, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"{what}: expected numbers in [re, im] pairs ({exc})") from None
    if arr.ndim < 1 or arr.shape[-1] != 2:
        raise ParseError(f"{what}: expected [re, im] pairs, got shape {arr.shape}")
    return arr[..., 0] + 1j * arr[..., 1]


def write_sidecar(path, elements) -> None:
    elements = list(elements)
    d = elements[0].dimension if elements else 0
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(_U64.pack(d))
        for e in elements:
            label = e.label.encode("utf-8")
            fh.write(_U64.pack(len(label)))
            fh.write(label)
            fh.write(_U64.pack(e.clicks))
            m = np.ascontiguousarray(e.matrix, dtype="<c16")
            fh.write(m.tobytes(order="C"))


def read_sidecar(path) -> list[tuple[str, int, np.ndarray]]:
    """Parse a sidecar into ``(label, clicks, matrix)`` triples."""
    data = Path(path).read_bytes()
    if len(data) < 24:
        raise ParseError("sidecar shorter than its 24-byte header", offset=len(data))
    if data[:16] != MAGIC:
        raise ParseError("bad sidecar magic", offset=0)
    (d,) = _U64.unpack_from(data, 16)
    pos = 24
    nbytes = d * d * 16
    out = []
    while pos < len(data):
        start = pos
        if pos + 8 > len(data):
            raise ParseError("truncated label length", offset=pos)
        (n,) = _U64.unpack_from(data, pos)
        pos += 8
        if pos + n > len(data):
            raise ParseError(f"truncated label of element starting at {start}", offset=pos)
        try:
            label = data[pos : pos + n].decode("utf-8")
        except UnicodeDecodeError:
            raise ParseError("label is not valid UTF-8", offset=pos) from None
        pos += n
        if pos + 8 > len(data):
            raise ParseError(f"truncated click count of element {label!r}", offset=pos)
        (clicks,) = _U64.unpack_from(data, pos)
        pos += 8
        if pos + nbytes > len(data):
            raise ParseError(
                f"truncated matrix of element {label!r}: need {nbytes} bytes, "
                f"{len(data) - pos} left",
                offset=pos,
            )
        m = np.frombuffer(data, dtype="<c16", count=d * d, offset=pos).reshape(d, d)
        pos += nbytes
        out.append((label, int(clicks), m.astype(complex)))
    return out


def povm_to_manifest(povm: Povm, sidecar_name: str | None = None) -> dict:
    basis = povm.basis
    grid = basis.mode_basis.grid
    elements = []
    for k, e in enumerate(povm.elements):
        entry = {"label": e.label, "clicks": e.clicks}
        if sidecar_name is None:
            entry["matrix"] = _pairs(e.matrix)
        else:
            entry["matrix_ref"] = k
        elements.append(entry)
    manifest = {
        "format_version": FORMAT_VERSION,
        "M": basis.num_modes,
        "N_max": basis.n_max,
        "D": basis.dimension,
        "frequency_grid": {
            "omega_min": grid.omega_min,
            "omega_max": grid.omega_max,
            "num_points": grid.num_points,
        },
        "mode_functions": [_pairs(m.amplitudes) for m in basis.mode_basis],
        "elements": elements,
        "metadata": _jsonable(povm.metadata),
    }
    if sidecar_name is not None:
        manifest["sidecar"] = sidecar_name
    return manifest


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else repr(f)
    if obj is None or isinstance(obj, str):
        return obj
    return repr(obj)


def dump_manifest(manifest: dict) -> str:
    return json.dumps(manifest, sort_keys=True, indent=1, allow_nan=False) + "\n"


def save(povm: Povm, path, inline: bool | None = None) -> Path:
    """Write ``povm`` to ``path``; large matrices go to ``<path>.bin``."""
    path = Path(path)
    if inline is None:
        inline = povm.dimension <= INLINE_MAX_DIMENSION
    sidecar = None
    if not inline:
        sidecar = path.with_name(path.name + ".bin")
        write_sidecar(sidecar, povm.elements)
    manifest = povm_to_manifest(povm, None if inline else sidecar.name)
    path.write_text(dump_manifest(manifest), encoding="utf-8", newline="\n")
    return path


def _require(manifest, key, kind):
    if key not in manifest:
        raise ParseError(f"manifest is missing {key!r}")
    value = manifest[key]
    if kind is int and (isinstance(value, bool) or not isinstance(value, int)):
        raise ParseError(f"{key!r} must be an integer")
    if kind is not int and not isinstance(value, kind):
        raise ParseError(f"{key!r} has the wrong type")
    return value


def manifest_to_povm(manifest: dict, base_dir=None, *, check: bool = True) -> tuple[FockBasis, Povm]:
    if not isinstance(manifest, dict):
        raise ParseError("manifest must be a JSON object")
    version = _require(manifest, "format_version", int)
    if version != FORMAT_VERSION:
        raise ParseError(f"unsupported format_version {version}")
    m = _require(manifest, "M", int)
    n_max = _require(manifest, "N_max", int)
    if m < 1 or n_max < 0:
        raise ParseError("M must be >= 1 and N_max >= 0")
    d = fock_dimension(m, n_max)
    if "D" in manifest and manifest["D"] != d:
        raise DimensionMismatch(f"declared D={manifest['D']} but C(M+N_max, M) = {d}")
    g = _require(manifest, "frequency_grid", dict)
    try:
        grid = FrequencyGrid(float(g["omega_min"]), float(g["omega_max"]), int(g["num_points"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"bad frequency_grid: {exc}") from None
    raw_modes = _require(manifest, "mode_functions", list)
    if len(raw_modes) != m:
        raise DimensionMismatch(f"manifest declares M={m} but lists {len(raw_modes)} mode functions")
    try:
        modes = [ModeFunction(grid, _from_pairs(r, f"mode function {i}")) for i, r in enumerate(raw_modes)]
        mode_basis = ModeBasis(modes)
    except GridMismatch as exc:
        raise DimensionMismatch(str(exc)) from None
    except DegenerateModeSet as exc:
        raise ValidationFailed(f"mode functions: {exc}") from None
    basis = enumerate_fock(mode_basis, n_max)

    sidecar = None
    if manifest.get("sidecar") is not None:
        sc_path = Path(manifest["sidecar"])
        if base_dir is not None and not sc_path.is_absolute():
            sc_path = Path(base_dir) / sc_path
        try:
            sidecar = read_sidecar(sc_path)
        except OSError as exc:
            raise ParseError(f"cannot read sidecar {sc_path}: {exc}") from None
        if sidecar and sidecar[0][2].shape != (d, d):
            raise DimensionMismatch(f"sidecar matrices are {sidecar[0][2].shape}, expected {(d, d)}")

    elements = []
    for k, entry in enumerate(_require(manifest, "elements", list)):
        if not isinstance(entry, dict) or "label" not in entry:
            raise ParseError(f"element {k} must be an object with a label")
        label = str(entry["label"])
        clicks = entry.get("clicks", 1)
        if "matrix" in entry:
            mat = _from_pairs(entry["matrix"], f"element {label!r}")
        elif "matrix_ref" in entry:
            if sidecar is None:
                raise ParseError(f"element {label!r} refers to a sidecar but none is declared")
            ref = entry["matrix_ref"]
            if not isinstance(ref, int) or not 0 <= ref < len(sidecar):
                raise ParseError(f"element {label!r}: bad matrix_ref {ref!r}")
            sc_label, sc_clicks, mat = sidecar[ref]
            if sc_label != label:
                raise ParseError(f"element {label!r}: sidecar entry {ref} is labelled {sc_label!r}")
            if "clicks" not in entry:
                clicks = sc_clicks
        else:
            raise ParseError(f"element {label!r} has neither matrix nor matrix_ref")
        if mat.shape != (d, d):
            raise DimensionMismatch(f"element {label!r} is {mat.shape}, expected {(d, d)}")
        elements.append(PovmElement(label, clicks, mat))
    povm = Povm(basis, tuple(elements), dict(manifest.get("metadata") or {}))
    if check:
        report = validate(povm)
        if not report.valid:
            raise ValidationFailed(report.first_failure(), report)
    return basis, povm


def load(path, *, check: bool = True) -> tuple[FockBasis, Povm]:
    """Read and validate a manifest (plus sidecar, if any)."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from None
    try:
        manifest = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", offset=exc.pos) from None
    return manifest_to_povm(manifest, path.parent, check=check)


def file_digest(path) -> str:
    """SHA-256 over the manifest bytes followed by its sidecar, if any."""
    path = Path(path)
    h = hashlib.sha256()
    raw = path.read_bytes()
    h.update(raw)
    try:
        sc = json.loads(raw).get("sidecar")
    except (json.JSONDecodeError, AttributeError):
        sc = None
    if sc:
        sc_path = path.parent / sc
        if sc_path.exists():
            h.update(sc_path.read_bytes())
    return h.hexdigest()
