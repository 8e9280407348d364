"""NNCK parameter checkpoints.

Layout (little-endian):
    magic "NNCK" | u8 version=1 | u32 layer count |
    per layer: u32 node id, u32 tensor count,
               per tensor: u8 rank, rank * u32 dims, float32 payload.

Only nodes holding parameters are written; within a node tensors appear in
sorted parameter-name order ("b" before "w"), which makes the container a
pure function of the network state.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from ..errors import BadMagic, ShapeMismatch, SizeMismatch, VersionUnsupported
from .network import Network

NNCK_MAGIC = b"NNCK"
VERSION = 1


def save_checkpoint(net: Network) -> bytes:
    entries = [
        (i, [layer.params[k] for k in sorted(layer.params)])
        for i, layer in enumerate(net.layers)
        if layer.params
    ]
    out = [NNCK_MAGIC, struct.pack("<B", VERSION), struct.pack("<I", len(entries))]
    for node_id, tensors in entries:
        out.append(struct.pack("<II", node_id, len(tensors)))
        for t in tensors:
            out.append(struct.pack("<B", t.ndim))
            out.append(struct.pack(f"<{t.ndim}I", *t.shape))
            out.append(np.ascontiguousarray(t, dtype="<f4").tobytes())
    return b"".join(out)


def read_checkpoint(data: bytes) -> dict[int, list[np.ndarray]]:
    """Parse NNCK bytes into {node id: [tensors]} without needing a network."""
    if len(data) < 9:
        raise SizeMismatch("payload shorter than the NNCK header")
    if data[:4] != NNCK_MAGIC:
        raise BadMagic(f"expected {NNCK_MAGIC!r}, got {data[:4]!r}")
    version = data[4]
    if version != VERSION:
        raise VersionUnsupported(f"cannot read NNCK version {version}")
    (n_layers,) = struct.unpack_from("<I", data, 5)
    pos = 9
    state: dict[int, list[np.ndarray]] = {}
    for _ in range(n_layers):
        node_id, n_tensors = struct.unpack_from("<II", data, pos)
        pos += 8
        tensors = []
        for _ in range(n_tensors):
            rank = data[pos]
            pos += 1
            dims = struct.unpack_from(f"<{rank}I", data, pos)
            pos += 4 * rank
            count = int(np.prod(dims)) if rank else 1
            end = pos + 4 * count
            if end > len(data):
                raise SizeMismatch("NNCK payload truncated")
            arr = np.frombuffer(data[pos:end], dtype="<f4").reshape(dims).copy()
            tensors.append(arr)
            pos = end
        state[node_id] = tensors
    if pos != len(data):
        raise SizeMismatch("trailing bytes after NNCK payload")
    return state


def load_checkpoint(net: Network, data: bytes) -> None:
    """Install checkpoint tensors into a structurally matching network."""
    state = read_checkpoint(data)
    expected = {i for i, layer in enumerate(net.layers) if layer.params}
    if set(state) != expected:
        raise ShapeMismatch(
            f"checkpoint nodes {sorted(state)} do not match network nodes {sorted(expected)}"
        )
    for node_id, tensors in state.items():
        layer = net.layers[node_id]
        names = sorted(layer.params)
        if len(names) != len(tensors):
            raise ShapeMismatch(f"node {node_id}: tensor count mismatch")
        for name, tensor in zip(names, tensors):
            if layer.params[name].shape != tensor.shape:
                raise ShapeMismatch(
                    f"node {node_id} param {name}: {layer.params[name].shape} vs {tensor.shape}"
                )
            layer.params[name] = tensor.astype(np.float32)
        layer.zero_grads()


def write_checkpoint(path: Path | str, net: Network) -> None:
    Path(path).write_bytes(save_checkpoint(net))


def read_checkpoint_file(path: Path | str, net: Network) -> None:
    load_checkpoint(net, Path(path).read_bytes())
