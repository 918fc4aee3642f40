"""Independent brute-force reference implementations.

Everything here is deliberately written the slow, obvious way (python
loops, dict buckets) and shares no code with the package, so a test
comparing the two genuinely checks the fast path.
"""

from __future__ import annotations

import math
from collections import deque

import numpy as np


def erode_bruteforce(mask: np.ndarray, rows: int, cols: int) -> np.ndarray:
    h, w = mask.shape
    anchor_r = (rows - 1) // 2
    anchor_c = (cols - 1) // 2
    out = np.zeros_like(mask, dtype=bool)
    for y in range(h):
        for x in range(w):
            keep = True
            for dy in range(rows):
                for dx in range(cols):
                    yy = y + dy - anchor_r
                    xx = x + dx - anchor_c
                    if yy < 0 or yy >= h or xx < 0 or xx >= w or not mask[yy, xx]:
                        keep = False
            out[y, x] = keep
    return out


def dilate_bruteforce(mask: np.ndarray, rows: int, cols: int) -> np.ndarray:
    h, w = mask.shape
    anchor_r = (rows - 1) // 2
    anchor_c = (cols - 1) // 2
    out = np.zeros_like(mask, dtype=bool)
    for y in range(h):
        for x in range(w):
            hit = False
            for dy in range(rows):
                for dx in range(cols):
                    yy = y + dy - anchor_r
                    xx = x + dx - anchor_c
                    if 0 <= yy < h and 0 <= xx < w and mask[yy, xx]:
                        hit = True
            out[y, x] = hit
    return out


def regions_bruteforce(mask: np.ndarray, connectivity: int = 8):
    """BFS flood fill; regions returned in raster order of their first pixel
    as (pixel set, area, (cx, cy)) tuples."""
    h, w = mask.shape
    if connectivity == 8:
        neighbors = [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)]
    else:
        neighbors = [(-1, 0), (0, -1), (0, 1), (1, 0)]
    seen = np.zeros_like(mask, dtype=bool)
    regions = []
    for y in range(h):
        for x in range(w):
            if not mask[y, x] or seen[y, x]:
                continue
            pixels = set()
            queue = deque([(y, x)])
            seen[y, x] = True
            while queue:
                cy, cx = queue.popleft()
                pixels.add((cy, cx))
                for dy, dx in neighbors:
                    ny, nx = cy + dy, cx + dx
                    if 0 <= ny < h and 0 <= nx < w and mask[ny, nx] and not seen[ny, nx]:
                        seen[ny, nx] = True
                        queue.append((ny, nx))
            area = len(pixels)
            cx_mean = sum(px for _, px in pixels) / area
            cy_mean = sum(py for py, _ in pixels) / area
            regions.append((pixels, area, (cx_mean, cy_mean)))
    return regions


def conv2d_naive(x, weight, bias=None, dilation=(1, 1)):
    """Six nested loops in float64; "same" zero padding anchored at floor(center)."""
    x = np.asarray(x, dtype=np.float64)
    weight = np.asarray(weight, dtype=np.float64)
    out_c, in_c, kh, kw = weight.shape
    _, h, w = x.shape
    dh, dw = dilation
    ext_h = (kh - 1) * dh + 1
    ext_w = (kw - 1) * dw + 1
    pad_t = (ext_h - 1) // 2
    pad_l = (ext_w - 1) // 2
    out = np.zeros((out_c, h, w), dtype=np.float64)
    for o in range(out_c):
        for oy in range(h):
            for ox in range(w):
                acc = 0.0
                for i in range(in_c):
                    for ky in range(kh):
                        for kx in range(kw):
                            yy = oy - pad_t + ky * dh
                            xx = ox - pad_l + kx * dw
                            if 0 <= yy < h and 0 <= xx < w:
                                acc += weight[o, i, ky, kx] * x[i, yy, xx]
                out[o, oy, ox] = acc + (bias[o] if bias is not None else 0.0)
    return out


def greedy_match_bruteforce(previous, centroids, threshold):
    """Repeated full-scan global-minimum matching (ties by (d, id, index)).

    ``previous`` is [(track_id, (x, y))], ``centroids`` is [(x, y)].
    Returns {region index: track id}.
    """
    remaining_prev = dict(previous)
    remaining_idx = set(range(len(centroids)))
    matched = {}
    while remaining_prev and remaining_idx:
        best = None
        for pid, (px, py) in remaining_prev.items():
            for idx in remaining_idx:
                d = math.hypot(centroids[idx][0] - px, centroids[idx][1] - py)
                if d < threshold:
                    key = (d, pid, idx)
                    if best is None or key < best:
                        best = key
        if best is None:
            break
        _, pid, idx = best
        matched[idx] = pid
        del remaining_prev[pid]
        remaining_idx.remove(idx)
    return matched


def voxel_bruteforce(points, leaf):
    """Dict-bucket voxel centroids; sequential accumulation in point order,
    output sorted by ascending voxel index."""
    buckets: dict[tuple[int, int, int], list] = {}
    for p in points:
        key = (
            int(math.floor(p[0] / leaf)),
            int(math.floor(p[1] / leaf)),
            int(math.floor(p[2] / leaf)),
        )
        buckets.setdefault(key, []).append(p)
    out = []
    for key in sorted(buckets):
        members = buckets[key]
        total = np.zeros(3, dtype=np.float64)
        for p in members:
            total += p
        out.append(total / len(members))
    return np.array(out) if out else np.zeros((0, 3))


def confusion_naive(pred, gt):
    """Per-pixel double loop; returns (tp, fp, fn, tn)."""
    tp = fp = fn = tn = 0
    h, w = pred.shape
    for y in range(h):
        for x in range(w):
            p, g = bool(pred[y, x]), bool(gt[y, x])
            if p and g:
                tp += 1
            elif p and not g:
                fp += 1
            elif not p and g:
                fn += 1
            else:
                tn += 1
    return tp, fp, fn, tn
