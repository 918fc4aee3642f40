"""Weight container: JSON manifest + raw little-endian float32 blob.

The manifest records the block topology and where each named tensor lives
inside the blob, so a file pair fully determines a block's parameters:

    {
      "format_version": 1,
      "dtype": "float32",
      "byte_order": "little",
      "blob": "weights.bin",
      "block": {"kind": "strip_block", "dilations": [1, 2, 3], ...},
      "tensors": [{"name": "project.weight", "shape": [4, 4], "offset": 0}, ...]
    }

Tensor names follow the block structure: ``branch{i}.vertical.weight``,
``rate{i}.project.bias``, ``point.weight`` and so on.  Also home to the
seeded random initializers used by tests and ``convcheck``.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from groundwire.blocks import (
    DTYPE,
    ChannelAttentionParams,
    PyramidParams,
    StripBlockParams,
    StripBranch,
    StripKernel,
)

__all__ = [
    "save_block",
    "load_block",
    "random_strip_kernel",
    "random_strip_block",
    "random_channel_attention",
    "random_pyramid",
]

FORMAT_VERSION = 1


def _flatten(block) -> tuple[dict, dict[str, np.ndarray]]:
    """Decompose a block into (topology dict, name -> tensor mapping)."""
    if isinstance(block, StripKernel):
        topo = {
            "kind": "strip_kernel",
            "orientation": block.orientation,
            "dilation": block.dilation,
        }
        return topo, {"weight": block.weight, "bias": block.bias}

    if isinstance(block, StripBlockParams):
        topo = {"kind": "strip_block", "dilations": [b.dilation for b in block.branches]}
        tensors: dict[str, np.ndarray] = {}
        for i, branch in enumerate(block.branches):
            tensors[f"branch{i}.vertical.weight"] = branch.vertical.weight
            tensors[f"branch{i}.vertical.bias"] = branch.vertical.bias
            tensors[f"branch{i}.horizontal.weight"] = branch.horizontal.weight
            tensors[f"branch{i}.horizontal.bias"] = branch.horizontal.bias
        tensors["project.weight"] = block.project_weight
        tensors["project.bias"] = block.project_bias
        return topo, tensors

    if isinstance(block, ChannelAttentionParams):
        return {"kind": "channel_attention"}, {"weight": block.weight, "bias": block.bias}

    if isinstance(block, PyramidParams):
        topo = {"kind": "strip_pyramid", "rates": list(block.rates)}
        tensors = {
            "point.weight": block.point_weight,
            "point.bias": block.point_bias,
            "pool.weight": block.pool_weight,
            "pool.bias": block.pool_bias,
            "project.weight": block.project_weight,
            "project.bias": block.project_bias,
        }
        for i, sub in enumerate(block.branches):
            _, sub_tensors = _flatten(sub)
            for name, arr in sub_tensors.items():
                tensors[f"rate{i}.{name}"] = arr
        return topo, tensors

    raise TypeError(f"unsupported block type: {type(block).__name__}")


def save_block(block, directory: str | Path, name: str = "weights") -> Path:
    """Write ``<name>.json`` + ``<name>.bin`` under ``directory``; returns the manifest path."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    topo, tensors = _flatten(block)

    blob = bytearray()
    entries = []
    for tensor_name in sorted(tensors):
        arr = np.ascontiguousarray(tensors[tensor_name], dtype=DTYPE)
        entries.append(
            {"name": tensor_name, "shape": list(arr.shape), "offset": len(blob)}
        )
        blob += arr.astype("<f4", copy=False).tobytes()

    blob_name = f"{name}.bin"
    (directory / blob_name).write_bytes(bytes(blob))
    manifest = {
        "format_version": FORMAT_VERSION,
        "dtype": "float32",
        "byte_order": "little",
        "blob": blob_name,
        "block": topo,
        "tensors": entries,
    }
    manifest_path = directory / f"{name}.json"
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest_path


def _read_tensors(manifest: dict, blob: bytes) -> dict[str, np.ndarray]:
    if manifest.get("format_version") != FORMAT_VERSION:
        raise ValueError(f"unsupported weight format version: {manifest.get('format_version')}")
    if manifest.get("dtype") != "float32" or manifest.get("byte_order") != "little":
        raise ValueError("weight blob must be little-endian float32")
    tensors = {}
    for entry in manifest["tensors"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        offset = entry["offset"]
        arr = np.frombuffer(blob, dtype="<f4", count=count, offset=offset)
        tensors[entry["name"]] = arr.reshape(shape).astype(DTYPE)
    return tensors


def _strip_kernel_from(tensors: dict[str, np.ndarray], orientation: str, dilation: int,
                       prefix: str = "") -> StripKernel:
    return StripKernel(
        orientation=orientation,
        weight=tensors[f"{prefix}weight"],
        bias=tensors[f"{prefix}bias"],
        dilation=dilation,
    )


def _strip_block_from(tensors: dict[str, np.ndarray], dilations: list[int],
                      prefix: str = "") -> StripBlockParams:
    branches = []
    for i, d in enumerate(dilations):
        branches.append(
            StripBranch(
                dilation=int(d),
                vertical=_strip_kernel_from(tensors, "vertical", int(d), f"{prefix}branch{i}.vertical."),
                horizontal=_strip_kernel_from(tensors, "horizontal", int(d), f"{prefix}branch{i}.horizontal."),
            )
        )
    return StripBlockParams(
        branches=tuple(branches),
        project_weight=tensors[f"{prefix}project.weight"],
        project_bias=tensors[f"{prefix}project.bias"],
    )


def load_block(manifest_path: str | Path):
    """Load a block saved by :func:`save_block`; the kind picks the type."""
    manifest_path = Path(manifest_path)
    manifest = json.loads(manifest_path.read_text())
    blob = (manifest_path.parent / manifest["blob"]).read_bytes()
    tensors = _read_tensors(manifest, blob)
    topo = manifest["block"]
    kind = topo.get("kind")

    if kind == "strip_kernel":
        return _strip_kernel_from(tensors, topo["orientation"], int(topo["dilation"]))
    if kind == "strip_block":
        return _strip_block_from(tensors, topo["dilations"])
    if kind == "channel_attention":
        return ChannelAttentionParams(weight=tensors["weight"], bias=tensors["bias"])
    if kind == "strip_pyramid":
        rates = [int(r) for r in topo["rates"]]
        branches = tuple(
            _strip_block_from(tensors, [r], prefix=f"rate{i}.") for i, r in enumerate(rates)
        )
        return PyramidParams(
            point_weight=tensors["point.weight"],
            point_bias=tensors["point.bias"],
            branches=branches,
            pool_weight=tensors["pool.weight"],
            pool_bias=tensors["pool.bias"],
            project_weight=tensors["project.weight"],
            project_bias=tensors["project.bias"],
        )
    raise ValueError(f"unknown block kind: {kind!r}")


def _uniform(rng: np.random.Generator, *shape: int) -> np.ndarray:
    return rng.uniform(-1.0, 1.0, size=shape).astype(DTYPE)


def random_strip_kernel(
    rng: np.random.Generator,
    out_channels: int,
    in_channels: int,
    length: int,
    orientation: str,
    dilation: int = 1,
) -> StripKernel:
    return StripKernel(
        orientation=orientation,
        weight=_uniform(rng, out_channels, in_channels, length),
        bias=_uniform(rng, out_channels),
        dilation=dilation,
    )


def random_strip_block(
    rng: np.random.Generator,
    in_channels: int,
    out_channels: int,
    dilations: tuple[int, ...],
    length: int = 3,
    mid_channels: int | None = None,
) -> StripBlockParams:
    mid = mid_channels or out_channels
    branches = tuple(
        StripBranch(
            dilation=d,
            vertical=random_strip_kernel(rng, mid, in_channels, length, "vertical", d),
            horizontal=random_strip_kernel(rng, mid, mid, length, "horizontal", d),
        )
        for d in dilations
    )
    return StripBlockParams(
        branches=branches,
        project_weight=_uniform(rng, out_channels, mid),
        project_bias=_uniform(rng, out_channels),
    )


def random_channel_attention(rng: np.random.Generator, channels: int) -> ChannelAttentionParams:
    return ChannelAttentionParams(
        weight=_uniform(rng, channels, channels),
        bias=_uniform(rng, channels),
    )


def random_pyramid(
    rng: np.random.Generator,
    channels: int,
    rates: tuple[int, ...] = (1, 6, 12, 18),
    length: int = 3,
    branch_channels: int | None = None,
) -> PyramidParams:
    bc = branch_channels or channels
    branches = tuple(
        random_strip_block(rng, channels, bc, (rate,), length) for rate in rates
    )
    concat = bc * (len(rates) + 2)
    return PyramidParams(
        point_weight=_uniform(rng, bc, channels),
        point_bias=_uniform(rng, bc),
        branches=branches,
        pool_weight=_uniform(rng, bc, channels),
        pool_bias=_uniform(rng, bc),
        project_weight=_uniform(rng, channels, concat) / np.float32(np.sqrt(concat)),
        project_bias=_uniform(rng, channels),
    )
