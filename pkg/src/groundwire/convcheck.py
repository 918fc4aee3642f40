"""Randomized equivalence suite for the strip-convolution blocks.

Every specialized forward path is checked against a composition of plain
dense convolutions (:func:`groundwire.blocks.conv2d`) with the strip
weights embedded in 2-D kernels, plus impulse-response support checks that
pin the dilated footprint to (k-1)*d + 1 pixels along the strip axis and 1
across.  The suite is seeded and deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from groundwire.blocks import (
    DTYPE,
    PyramidParams,
    StripBlockParams,
    StripKernel,
    channel_attention,
    conv2d,
    strip_block,
    strip_conv,
    strip_pyramid,
)
from groundwire.weights import (
    random_channel_attention,
    random_pyramid,
    random_strip_block,
    random_strip_kernel,
)

__all__ = [
    "dense_strip_oracle",
    "dense_block_oracle",
    "dense_pyramid_oracle",
    "attention_oracle",
    "run_suite",
    "SuiteReport",
]

DEFAULT_TOLERANCE = 1e-5


def dense_strip_oracle(x: np.ndarray, kern: StripKernel) -> np.ndarray:
    return conv2d(x, kern.as_dense(), kern.bias, kern.dense_dilation())


def dense_block_oracle(x: np.ndarray, params: StripBlockParams) -> np.ndarray:
    acc = None
    for branch in params.branches:
        y = dense_strip_oracle(x, branch.vertical)
        y = dense_strip_oracle(y, branch.horizontal)
        acc = y if acc is None else acc + y
    return conv2d(acc, params.project_weight[:, :, None, None], params.project_bias)


def dense_pyramid_oracle(x: np.ndarray, params: PyramidParams) -> np.ndarray:
    c, h, w = x.shape
    parts = [conv2d(x, params.point_weight[:, :, None, None], params.point_bias)]
    parts.extend(dense_block_oracle(x, b) for b in params.branches)
    pooled = x.mean(axis=(1, 2), dtype=DTYPE)
    pool_vec = (params.pool_weight @ pooled + params.pool_bias).astype(DTYPE)
    parts.append(np.broadcast_to(pool_vec[:, None, None], (pool_vec.shape[0], h, w)).copy())
    stacked = np.concatenate(parts, axis=0)
    return conv2d(stacked, params.project_weight[:, :, None, None], params.project_bias) + x


def attention_oracle(x: np.ndarray, params) -> np.ndarray:
    pooled = np.asarray(x, dtype=DTYPE).mean(axis=(1, 2), dtype=DTYPE)
    z = params.weight @ pooled + params.bias
    gate = 1.0 / (1.0 + np.exp(-z.astype(DTYPE)))
    return x * gate.astype(DTYPE)[:, None, None]


def _rand_map(rng: np.random.Generator, channels: int, h: int, w: int) -> np.ndarray:
    return rng.uniform(-1.0, 1.0, size=(channels, h, w)).astype(DTYPE)


def _strip_case(rng: np.random.Generator) -> float:
    c_in = int(rng.integers(1, 5))
    c_out = int(rng.integers(1, 5))
    h = int(rng.integers(1, 18))
    w = int(rng.integers(1, 18))
    k = int(rng.integers(1, 6))
    d = int(rng.integers(1, 5))
    orientation = "horizontal" if rng.integers(0, 2) else "vertical"
    x = _rand_map(rng, c_in, h, w)
    kern = random_strip_kernel(rng, c_out, c_in, k, orientation, d)
    got = strip_conv(x, kern)
    want = dense_strip_oracle(x, kern)
    return float(np.abs(got - want).max())


def _block_case(rng: np.random.Generator) -> float:
    c_in = int(rng.integers(1, 4))
    c_out = int(rng.integers(1, 4))
    h = int(rng.integers(2, 14))
    w = int(rng.integers(2, 14))
    n_branches = int(rng.integers(1, 4))
    dilations = tuple(int(rng.integers(1, 4)) for _ in range(n_branches))
    k = int(rng.integers(1, 4))
    x = _rand_map(rng, c_in, h, w)
    params = random_strip_block(rng, c_in, c_out, dilations, k)
    got = strip_block(x, params)
    want = dense_block_oracle(x, params)
    return float(np.abs(got - want).max())


def _pyramid_case(rng: np.random.Generator) -> float:
    c = int(rng.integers(1, 4))
    h = int(rng.integers(3, 13))
    w = int(rng.integers(3, 13))
    n_rates = int(rng.integers(1, 4))
    rates = tuple(int(rng.integers(1, 5)) for _ in range(n_rates))
    k = int(rng.integers(1, 4))
    x = _rand_map(rng, c, h, w)
    params = random_pyramid(rng, c, rates, k)
    got = strip_pyramid(x, params)
    want = dense_pyramid_oracle(x, params)
    return float(np.abs(got - want).max())


def _attention_case(rng: np.random.Generator) -> float:
    c = int(rng.integers(1, 9))
    h = int(rng.integers(1, 10))
    w = int(rng.integers(1, 10))
    x = _rand_map(rng, c, h, w)
    params = random_channel_attention(rng, c)
    got = channel_attention(x, params)
    want = attention_oracle(x, params)
    return float(np.abs(got - want).max())


def _support_case(rng: np.random.Generator) -> tuple[int, int, int, int]:
    """Returns (along_expected, along_got, across_expected, across_got)."""
    k = int(rng.integers(1, 6))
    d = int(rng.integers(1, 5))
    extent = (k - 1) * d + 1
    orientation = "horizontal" if rng.integers(0, 2) else "vertical"
    size = extent + int(rng.integers(2, 6)) * 2
    x = np.zeros((1, size, size), dtype=DTYPE)
    x[0, size // 2, size // 2] = 1.0
    # strictly positive taps so no response pixel can cancel to zero
    weight = rng.uniform(0.5, 1.0, size=(1, 1, k)).astype(DTYPE)
    kern = StripKernel(orientation=orientation, weight=weight, bias=np.zeros(1, DTYPE), dilation=d)
    y = strip_conv(x, kern)[0]
    rows = np.nonzero(np.abs(y).max(axis=1) > 0)[0]
    cols = np.nonzero(np.abs(y).max(axis=0) > 0)[0]
    # dilation leaves zero pixels between taps, so the footprint is the
    # first-to-last nonzero span, not the nonzero count
    col_span = int(cols.max() - cols.min() + 1) if len(cols) else 0
    row_span = int(rows.max() - rows.min() + 1) if len(rows) else 0
    if orientation == "horizontal":
        return extent, col_span, 1, row_span
    return extent, row_span, 1, col_span


@dataclass
class SuiteReport:
    cases: dict = field(default_factory=dict)
    max_deviation: dict = field(default_factory=dict)
    support_cases: int = 0
    support_failures: int = 0
    tolerance: float = DEFAULT_TOLERANCE

    @property
    def overall_max(self) -> float:
        return max(self.max_deviation.values(), default=0.0)

    @property
    def passed(self) -> bool:
        return self.overall_max <= self.tolerance and self.support_failures == 0

    def lines(self) -> list[str]:
        out = []
        for kind in sorted(self.cases):
            out.append(
                f"{kind:>18}: {self.cases[kind]:4d} cases, max deviation {self.max_deviation[kind]:.3e}"
            )
        out.append(
            f"{'impulse support':>18}: {self.support_cases:4d} cases, {self.support_failures} failures"
        )
        out.append(
            f"{'overall':>18}: max deviation {self.overall_max:.3e} "
            f"(tolerance {self.tolerance:.1e}) -> {'PASS' if self.passed else 'FAIL'}"
        )
        return out


def run_suite(
    cases: int = 200,
    seed: int = 0,
    tolerance: float = DEFAULT_TOLERANCE,
    support_cases: int = 50,
) -> SuiteReport:
    """Run ~``cases`` randomized equivalence checks (split 50/30/20 across
    strip/block/pyramid, plus attention) and ``support_cases`` impulse
    footprints."""
    rng = np.random.default_rng(seed)
    report = SuiteReport(tolerance=tolerance)
    split = {
        "strip_conv": max(cases // 2, 1),
        "strip_block": max((cases * 3) // 10, 1),
        "strip_pyramid": max(cases - cases // 2 - (cases * 3) // 10, 1),
        "channel_attention": max(cases // 10, 1),
    }
    runners = {
        "strip_conv": _strip_case,
        "strip_block": _block_case,
        "strip_pyramid": _pyramid_case,
        "channel_attention": _attention_case,
    }
    for kind, n in split.items():
        worst = 0.0
        for _ in range(n):
            worst = max(worst, runners[kind](rng))
        report.cases[kind] = n
        report.max_deviation[kind] = worst

    failures = 0
    for _ in range(support_cases):
        along_want, along_got, across_want, across_got = _support_case(rng)
        if along_got != along_want or across_got != across_want:
            failures += 1
    report.support_failures = failures
    report.support_cases = support_cases
    return report
