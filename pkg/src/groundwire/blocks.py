"""Forward passes of the strip-convolution feature blocks.

Everything operates on float32 feature maps laid out (channels, height,
width) with stride 1 and zero "same" padding, so spatial dimensions are
preserved end to end.  Three building blocks are provided on top of a plain
dense convolution:

* ``strip_conv`` - 1-D convolution (1xk or kx1) with dilation, implemented
  as a sum of shifted slices; cascading a vertical and a horizontal strip
  approximates a dense kxk kernel at a fraction of the cost.
* ``strip_block`` - parallel vertical->horizontal strip cascades at varying
  dilation rates, fused by elementwise sum and a pointwise projection.
* ``strip_pyramid`` - spatial-pyramid module: a pointwise branch, several
  single-rate strip blocks, and a global-pool branch, concatenated,
  projected back to the input width, and added to the input (identity
  residual).
* ``channel_attention`` - per-channel multiplicative gates computed with a
  1x1 convolution over the globally pooled channel vector.

``conv2d`` doubles as the reference oracle: every specialized block must be
numerically equivalent (within accumulation tolerance) to a composition of
dense convolutions with the strip weights embedded in 2-D kernels.

No training or autograd here; weights come from files (see
:mod:`groundwire.weights`).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

__all__ = [
    "conv2d",
    "StripKernel",
    "strip_conv",
    "StripBranch",
    "StripBlockParams",
    "strip_block",
    "ChannelAttentionParams",
    "channel_attention",
    "PyramidParams",
    "strip_pyramid",
]

DTYPE = np.float32


def _as_feature_map(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=DTYPE)
    if x.ndim != 3:
        raise ValueError(f"feature map must be (C, H, W), got shape {x.shape}")
    return x


def _same_pad(extent: int) -> tuple[int, int]:
    # Anchor at floor(center): even extents pad one less before than after.
    before = (extent - 1) // 2
    return before, extent - 1 - before


def conv2d(
    x: np.ndarray,
    weight: np.ndarray,
    bias: np.ndarray | None = None,
    dilation: tuple[int, int] = (1, 1),
) -> np.ndarray:
    """Dense 2-D cross-correlation with dilated taps and "same" zero padding.

    ``weight`` is (out_channels, in_channels, kh, kw); output spatial size
    equals the input's at stride 1.  This is the reference path the strip
    kernels are checked against.
    """
    x = _as_feature_map(x)
    weight = np.asarray(weight, dtype=DTYPE)
    if weight.ndim != 4:
        raise ValueError(f"weight must be (O, I, kh, kw), got shape {weight.shape}")
    out_c, in_c, kh, kw = weight.shape
    if in_c != x.shape[0]:
        raise ValueError(f"weight expects {in_c} input channels, feature map has {x.shape[0]}")
    dh, dw = dilation
    if dh < 1 or dw < 1:
        raise ValueError(f"dilation must be >= 1, got {dilation}")

    ext_h = (kh - 1) * dh + 1
    ext_w = (kw - 1) * dw + 1
    (pt, pb), (pl, pr) = _same_pad(ext_h), _same_pad(ext_w)
    padded = np.pad(x, ((0, 0), (pt, pb), (pl, pr)))
    # (C, H, W, ext_h, ext_w) view, then keep every d-th tap.
    windows = sliding_window_view(padded, (ext_h, ext_w), axis=(1, 2))
    taps = windows[:, :, :, ::dh, ::dw]
    out = np.tensordot(weight, taps, axes=([1, 2, 3], [0, 3, 4])).astype(DTYPE, copy=False)
    if bias is not None:
        out = out + np.asarray(bias, dtype=DTYPE)[:, None, None]
    return out


@dataclass(frozen=True)
class StripKernel:
    """A 1-D convolution kernel with dilation.

    ``weight`` is (out_channels, in_channels, k); ``orientation`` is
    ``"horizontal"`` (1xk, sweeping along width) or ``"vertical"`` (kx1,
    along height).  The nonzero footprint spans (k-1)*dilation + 1 pixels
    along the strip axis and 1 across it.
    """

    orientation: str
    weight: np.ndarray
    bias: np.ndarray
    dilation: int = 1

    def __post_init__(self):
        if self.orientation not in ("horizontal", "vertical"):
            raise ValueError(f"orientation must be horizontal|vertical, got {self.orientation!r}")
        if self.weight.ndim != 3:
            raise ValueError(f"strip weight must be (O, I, k), got shape {self.weight.shape}")
        if self.dilation < 1:
            raise ValueError(f"dilation must be >= 1, got {self.dilation}")
        object.__setattr__(self, "weight", np.asarray(self.weight, dtype=DTYPE))
        object.__setattr__(self, "bias", np.asarray(self.bias, dtype=DTYPE))

    @property
    def length(self) -> int:
        return self.weight.shape[2]

    @property
    def extent(self) -> int:
        """Effective footprint along the strip axis: (k-1)*d + 1."""
        return (self.length - 1) * self.dilation + 1

    def as_dense(self) -> np.ndarray:
        """Embed as a (O, I, 1, k) or (O, I, k, 1) dense kernel."""
        o, i, k = self.weight.shape
        if self.orientation == "horizontal":
            return self.weight.reshape(o, i, 1, k)
        return self.weight.reshape(o, i, k, 1)

    def dense_dilation(self) -> tuple[int, int]:
        if self.orientation == "horizontal":
            return (1, self.dilation)
        return (self.dilation, 1)


def strip_conv(x: np.ndarray, kern: StripKernel) -> np.ndarray:
    """Apply a dilated strip kernel, one shifted-slice accumulation per tap.

    Equals ``conv2d`` with the strip embedded in a dense 1xk / kx1 kernel at
    the same dilation, but never materializes the tap windows.
    """
    x = _as_feature_map(x)
    o, i, k = kern.weight.shape
    if i != x.shape[0]:
        raise ValueError(f"strip kernel expects {i} input channels, feature map has {x.shape[0]}")
    _, h, w = x.shape
    before, after = _same_pad(kern.extent)

    out = np.zeros((o, h, w), dtype=DTYPE)
    if kern.orientation == "horizontal":
        padded = np.pad(x, ((0, 0), (0, 0), (before, after)))
        for t in range(k):
            off = t * kern.dilation
            out += np.einsum(
                "oi,ihw->ohw", kern.weight[:, :, t], padded[:, :, off : off + w]
            )
    else:
        padded = np.pad(x, ((0, 0), (before, after), (0, 0)))
        for t in range(k):
            off = t * kern.dilation
            out += np.einsum(
                "oi,ihw->ohw", kern.weight[:, :, t], padded[:, off : off + h, :]
            )
    return out + kern.bias[:, None, None]


def _pointwise(x: np.ndarray, weight: np.ndarray, bias: np.ndarray) -> np.ndarray:
    # 1x1 convolution: weight (O, I).
    return (
        np.einsum("oi,ihw->ohw", np.asarray(weight, dtype=DTYPE), x)
        + np.asarray(bias, dtype=DTYPE)[:, None, None]
    )


@dataclass(frozen=True)
class StripBranch:
    """One vertical-then-horizontal strip cascade at a single dilation rate."""

    dilation: int
    vertical: StripKernel
    horizontal: StripKernel

    def __post_init__(self):
        if self.vertical.orientation != "vertical" or self.horizontal.orientation != "horizontal":
            raise ValueError("branch needs a vertical and a horizontal kernel, in that order")
        if not (self.vertical.dilation == self.horizontal.dilation == self.dilation):
            raise ValueError(
                f"branch dilation {self.dilation} does not match kernels "
                f"({self.vertical.dilation}, {self.horizontal.dilation})"
            )


@dataclass(frozen=True)
class StripBlockParams:
    """Parallel strip-cascade branches fused by sum and a 1x1 projection.

    All branches must agree on input and output channel counts; the
    projection maps the summed branch output to the block output.
    """

    branches: tuple[StripBranch, ...]
    project_weight: np.ndarray
    project_bias: np.ndarray

    def __post_init__(self):
        if not self.branches:
            raise ValueError("strip block needs at least one branch")
        in_chans = {b.vertical.weight.shape[1] for b in self.branches}
        out_chans = {b.horizontal.weight.shape[0] for b in self.branches}
        if len(in_chans) != 1 or len(out_chans) != 1:
            raise ValueError("all branches must share input and output channel counts")
        object.__setattr__(self, "project_weight", np.asarray(self.project_weight, dtype=DTYPE))
        object.__setattr__(self, "project_bias", np.asarray(self.project_bias, dtype=DTYPE))

    @property
    def in_channels(self) -> int:
        return self.branches[0].vertical.weight.shape[1]

    @property
    def out_channels(self) -> int:
        return self.project_weight.shape[0]


def strip_block(x: np.ndarray, params: StripBlockParams) -> np.ndarray:
    """Run every branch (vertical strip, then horizontal), sum, project."""
    x = _as_feature_map(x)
    acc = None
    for branch in params.branches:
        y = strip_conv(strip_conv(x, branch.vertical), branch.horizontal)
        acc = y if acc is None else acc + y
    return _pointwise(acc, params.project_weight, params.project_bias)


@dataclass(frozen=True)
class ChannelAttentionParams:
    """1x1 convolution (C -> C) applied to the pooled channel vector."""

    weight: np.ndarray
    bias: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weight, dtype=DTYPE)
        if w.ndim == 4:  # accept (C, C, 1, 1) storage
            w = w[:, :, 0, 0]
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise ValueError(f"attention weight must be square (C, C), got shape {self.weight.shape}")
        object.__setattr__(self, "weight", w)
        object.__setattr__(self, "bias", np.asarray(self.bias, dtype=DTYPE))


def channel_attention(x: np.ndarray, params: ChannelAttentionParams) -> np.ndarray:
    """Scale each channel by a logistic gate in (0, 1).

    gate = logistic(W @ mean_hw(x) + b); output[c] = x[c] * gate[c].
    """
    x = _as_feature_map(x)
    c = x.shape[0]
    if params.weight.shape[0] != c:
        raise ValueError(f"attention weights are for {params.weight.shape[0]} channels, input has {c}")
    pooled = x.mean(axis=(1, 2), dtype=DTYPE)
    z = (params.weight @ pooled + params.bias).astype(DTYPE, copy=False)
    gate = (1.0 / (1.0 + np.exp(-z))).astype(DTYPE, copy=False)
    return x * gate[:, None, None]


@dataclass(frozen=True)
class PyramidParams:
    """Spatial pyramid over strip blocks with an identity residual.

    Branches: 1x1 pointwise, one single-rate strip block per configured
    rate, and a global-average-pool -> 1x1 -> broadcast branch.  Branch
    outputs are concatenated along channels and projected back to the input
    channel count so the input can be added unchanged.
    """

    point_weight: np.ndarray
    point_bias: np.ndarray
    branches: tuple[StripBlockParams, ...]
    pool_weight: np.ndarray
    pool_bias: np.ndarray
    project_weight: np.ndarray
    project_bias: np.ndarray

    def __post_init__(self):
        for name in ("point_weight", "point_bias", "pool_weight", "pool_bias",
                     "project_weight", "project_bias"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=DTYPE))
        concat = (
            self.point_weight.shape[0]
            + sum(b.out_channels for b in self.branches)
            + self.pool_weight.shape[0]
        )
        if self.project_weight.shape[1] != concat:
            raise ValueError(
                f"projection expects {self.project_weight.shape[1]} channels, branches concat to {concat}"
            )

    @property
    def rates(self) -> tuple[int, ...]:
        return tuple(b.branches[0].dilation for b in self.branches)


def strip_pyramid(x: np.ndarray, params: PyramidParams) -> np.ndarray:
    """Concat pyramid branches, project, and add the input back."""
    x = _as_feature_map(x)
    c, h, w = x.shape
    if params.project_weight.shape[0] != c:
        raise ValueError(
            f"identity residual needs projection output == input channels "
            f"({params.project_weight.shape[0]} != {c})"
        )
    parts = [_pointwise(x, params.point_weight, params.point_bias)]
    parts.extend(strip_block(x, b) for b in params.branches)
    pooled = x.mean(axis=(1, 2), dtype=DTYPE)
    pool_vec = (params.pool_weight @ pooled + params.pool_bias).astype(DTYPE, copy=False)
    parts.append(np.broadcast_to(pool_vec[:, None, None], (pool_vec.shape[0], h, w)))
    stacked = np.concatenate(parts, axis=0)
    return _pointwise(stacked, params.project_weight, params.project_bias) + x
