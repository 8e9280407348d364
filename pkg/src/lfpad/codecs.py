"""Binary containers for light fields and depth maps, plus the dataset manifest.

LF5D container (little-endian):
    magic "LF5D" | u8 version=1 | u8 channel_layout |
    u16 nu, nv, ns, nt, nc | nu*nv*ns*nt*nc float32 samples, row-major.

DPTH container (little-endian):
    magic "DPTH" | u8 version=1 | u16 h, w | h*w float32 values.

Manifest: UTF-8 text, one record per line, tab-separated fields
    lf5d-path <TAB> dpth-path <TAB> subject_id <TAB> class-name <TAB> train|test
with paths relative to the manifest's directory.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import BadMagic, NonFiniteSample, SizeMismatch, VersionUnsupported
from .lightfield import ChannelLayout, LightField
from .validation import check_depth_map

LF5D_MAGIC = b"LF5D"
DPTH_MAGIC = b"DPTH"
_LF5D_HEADER = struct.Struct("<4sBB5H")
_DPTH_HEADER = struct.Struct("<4sB2H")
VERSION = 1


def encode_lightfield(lf: LightField) -> bytes:
    header = _LF5D_HEADER.pack(
        LF5D_MAGIC, VERSION, int(lf.channel_layout), lf.nu, lf.nv, lf.ns, lf.nt, lf.nc
    )
    payload = np.ascontiguousarray(lf.samples, dtype="<f4").tobytes()
    return header + payload


def decode_lightfield(data: bytes) -> LightField:
    """Parse an LF5D container; round-trips bit-exactly with encode_lightfield."""
    if len(data) < _LF5D_HEADER.size:
        raise SizeMismatch("payload shorter than the LF5D header")
    magic, version, layout, nu, nv, ns, nt, nc = _LF5D_HEADER.unpack_from(data)
    if magic != LF5D_MAGIC:
        raise BadMagic(f"expected {LF5D_MAGIC!r}, got {magic!r}")
    if version != VERSION:
        raise VersionUnsupported(f"cannot read LF5D version {version}")
    try:
        layout = ChannelLayout(layout)
    except ValueError:
        raise VersionUnsupported(f"unknown channel layout {layout}") from None
    count = nu * nv * ns * nt * nc
    body = data[_LF5D_HEADER.size :]
    if len(body) != 4 * count:
        raise SizeMismatch(
            f"declared dims need {4 * count} payload bytes, got {len(body)}"
        )
    samples = np.frombuffer(body, dtype="<f4").reshape(nu, nv, ns, nt, nc)
    if not np.all(np.isfinite(samples)):
        raise NonFiniteSample("LF5D payload contains non-finite samples")
    return LightField(samples.copy(), layout)


def write_lightfield(path: Path | str, lf: LightField) -> None:
    Path(path).write_bytes(encode_lightfield(lf))


def read_lightfield(path: Path | str) -> LightField:
    return decode_lightfield(Path(path).read_bytes())


def encode_depthmap(values: np.ndarray) -> bytes:
    values = check_depth_map(values)
    h, w = values.shape
    header = _DPTH_HEADER.pack(DPTH_MAGIC, VERSION, h, w)
    return header + np.ascontiguousarray(values, dtype="<f4").tobytes()


def decode_depthmap(data: bytes) -> np.ndarray:
    if len(data) < _DPTH_HEADER.size:
        raise SizeMismatch("payload shorter than the DPTH header")
    magic, version, h, w = _DPTH_HEADER.unpack_from(data)
    if magic != DPTH_MAGIC:
        raise BadMagic(f"expected {DPTH_MAGIC!r}, got {magic!r}")
    if version != VERSION:
        raise VersionUnsupported(f"cannot read DPTH version {version}")
    body = data[_DPTH_HEADER.size :]
    if len(body) != 4 * h * w:
        raise SizeMismatch(f"declared dims need {4 * h * w} payload bytes, got {len(body)}")
    values = np.frombuffer(body, dtype="<f4").reshape(h, w).astype(np.float64)
    if not np.all(np.isfinite(values)):
        raise NonFiniteSample("DPTH payload contains non-finite values")
    if values.size and (values.min() < 0.0 or values.max() > 1.0):
        raise NonFiniteSample("DPTH values must lie in [0, 1]")
    return values


def write_depthmap(path: Path | str, values: np.ndarray) -> None:
    Path(path).write_bytes(encode_depthmap(values))


def read_depthmap(path: Path | str) -> np.ndarray:
    return decode_depthmap(Path(path).read_bytes())


@dataclass(frozen=True)
class ManifestRecord:
    lf_path: str
    depth_path: str
    subject_id: int
    class_name: str
    split: str  # "train" | "test"


def format_manifest(records: list[ManifestRecord]) -> str:
    lines = [
        f"{r.lf_path}\t{r.depth_path}\t{r.subject_id}\t{r.class_name}\t{r.split}"
        for r in records
    ]
    return "\n".join(lines) + "\n"


def parse_manifest(text: str) -> list[ManifestRecord]:
    records = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 5:
            raise ValueError(f"manifest line {lineno}: expected 5 tab-separated fields")
        lf_path, depth_path, subject, class_name, split = parts
        if split not in ("train", "test"):
            raise ValueError(f"manifest line {lineno}: bad split tag {split!r}")
        records.append(ManifestRecord(lf_path, depth_path, int(subject), class_name, split))
    return records
