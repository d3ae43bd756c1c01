"""Pareto dominance, exact hypervolume (up to three objectives) and PHV traces.

All objectives are minimized.
"""

from __future__ import annotations

import csv
from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field

import numpy as np

from .errors import ArityUnsupported

REFERENCE = 1.1  # reference coordinate on every min-max normalized axis


def dominates(a, b) -> bool:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError("objective vectors differ in arity")
    return bool(np.all(a <= b) and np.any(a < b))


def nondominated_mask(points) -> np.ndarray:
    """Boolean mask of points not dominated by any other; duplicates keep the first."""
    pts = np.asarray(points, dtype=float)
    n = len(pts)
    if n == 0:
        return np.zeros(0, dtype=bool)
    if pts.ndim == 1:
        pts = pts[:, None]
    m = pts.shape[1]
    keep = np.zeros(n, dtype=bool)
    idx = np.arange(n)
    if m == 1:
        keep[int(np.argmin(pts[:, 0]))] = True
        return keep
    # lexicographic sort; ties broken by first appearance
    order = np.lexsort((idx,) + tuple(pts[:, c] for c in range(m - 1, -1, -1)))
    if m == 2:
        best_y = np.inf
        for i in order:
            if pts[i, 1] < best_y:
                keep[i] = True
                best_y = pts[i, 1]
        return keep
    if m == 3:
        # staircase of kept (y, z): ys ascending, zs strictly descending
        ys: list[float] = []
        zs: list[float] = []
        for i in order:
            y, z = pts[i, 1], pts[i, 2]
            pos = bisect_right(ys, y) - 1
            if pos >= 0 and zs[pos] <= z:
                continue
            keep[i] = True
            ins = bisect_left(ys, y)
            end = ins
            while end < len(ys) and zs[end] >= z:
                end += 1
            ys[ins:end] = [y]
            zs[ins:end] = [z]
        return keep
    for i in order:
        kept = pts[keep]
        if kept.size and np.any(np.all(kept <= pts[i], axis=1)):
            continue
        keep[i] = True
    return keep


def pareto_filter(points) -> list:
    """Nondominated subset in order of first appearance."""
    pts = list(points)
    if not pts:
        return []
    mask = nondominated_mask(np.asarray(pts, dtype=float))
    return [p for p, k in zip(pts, mask) if k]


def _hv2d(xs, ys, rx, ry) -> float:
    order = np.argsort(xs, kind="stable")
    area = 0.0
    best_y = ry
    stair = []
    for i in order:
        if ys[i] < best_y:
            stair.append((xs[i], ys[i]))
            best_y = ys[i]
    for k, (x, y) in enumerate(stair):
        x_next = stair[k + 1][0] if k + 1 < len(stair) else rx
        area += (x_next - x) * (ry - y)
    return area


def _hv3d(pts: np.ndarray, ref: np.ndarray) -> float:
    rx, ry, rz = ref
    order = np.argsort(pts[:, 2], kind="stable")
    xs: list[float] = []
    ys: list[float] = []
    area = 0.0
    volume = 0.0
    z_prev = None
    for i in order:
        x, y, z = pts[i]
        if z_prev is not None:
            volume += area * (z - z_prev)
        z_prev = z
        pos = bisect_right(xs, x) - 1
        if pos >= 0 and ys[pos] <= y:
            continue
        ins = bisect_left(xs, x)
        end = ins
        while end < len(xs) and ys[end] >= y:
            end += 1
        x_next = xs[end] if end < len(xs) else rx
        # area lost from removed points and the shrunk left neighbour
        removed = 0.0
        for k in range(ins, end):
            xn = xs[k + 1] if k + 1 < len(xs) else rx
            removed += (xn - xs[k]) * (ry - ys[k])
        if ins > 0:
            first_after = xs[ins] if ins < len(xs) else rx
            removed += (first_after - x) * (ry - ys[ins - 1])
        added = (x_next - x) * (ry - y)
        area += added - removed
        xs[ins:end] = [x]
        ys[ins:end] = [y]
    if z_prev is not None:
        volume += area * (rz - z_prev)
    return volume


def hypervolume(front, reference) -> float:
    """Exact volume dominated by ``front`` and bounded by ``reference``.

    Points not strictly better than the reference on every axis contribute
    nothing and are dropped.
    """
    ref = np.atleast_1d(np.asarray(reference, dtype=float))
    m = ref.size
    if m > 3:
        raise ArityUnsupported(f"exact hypervolume supports at most 3 objectives, got {m}")
    pts = np.asarray(front, dtype=float).reshape(-1, m) if len(front) else np.zeros((0, m))
    pts = pts[np.all(pts < ref, axis=1)]
    if len(pts) == 0:
        return 0.0
    if m == 1:
        return float(ref[0] - pts[:, 0].min())
    if m == 2:
        return float(_hv2d(pts[:, 0], pts[:, 1], ref[0], ref[1]))
    return float(max(_hv3d(pts, ref), 0.0))


def normalize(points, lower, upper) -> np.ndarray:
    lower = np.asarray(lower, dtype=float)
    span = np.asarray(upper, dtype=float) - lower
    span = np.where(span > 0, span, 1.0)
    return (np.asarray(points, dtype=float) - lower) / span


@dataclass
class FrontSample:
    elapsed: float
    evaluations: int
    phv: float
    front: np.ndarray = field(repr=False, default=None)


class PhvTracker:
    """Running nondominated archive of every point fed, with timed snapshots.

    Points are buffered by :meth:`feed` and merged at each :meth:`sample`.
    The archive remembers when each member entered and left, so the PHV
    series can be computed afterwards under any normalization; a
    comparison fixes one normalization for all of its runs.
    """

    def __init__(self, n_objectives: int):
        self.m = n_objectives
        self._points: list[np.ndarray] = []
        self._payload: list = []
        self._enter: list[int] = []
        self._leave: list[float] = []
        self._alive: list[int] = []
        self._buffer: list[tuple[np.ndarray, object]] = []
        self.samples: list[tuple[float, int]] = []

    def feed(self, point, payload=None) -> None:
        p = np.asarray(point, dtype=float).reshape(self.m)
        self._buffer.append((p, payload))

    def sample(self, elapsed: float, evaluations: int) -> None:
        s = len(self.samples)
        if self._buffer:
            alive_pts = [self._points[i] for i in self._alive]
            cand = np.array(alive_pts + [p for p, _ in self._buffer]).reshape(-1, self.m)
            keep = nondominated_mask(cand)
            n_alive = len(self._alive)
            survivors = []
            for pos, idx in enumerate(self._alive):
                if keep[pos]:
                    survivors.append(idx)
                else:
                    self._leave[idx] = s
            for b, (p, payload) in enumerate(self._buffer):
                if keep[n_alive + b]:
                    survivors.append(len(self._points))
                    self._points.append(p)
                    self._payload.append(payload)
                    self._enter.append(s)
                    self._leave.append(np.inf)
            self._alive = survivors
            self._buffer = []
        self.samples.append((float(elapsed), int(evaluations)))

    def front(self) -> np.ndarray:
        return np.array([self._points[i] for i in self._alive]).reshape(-1, self.m)

    def front_payloads(self) -> list:
        return [self._payload[i] for i in self._alive]

    def all_points(self) -> np.ndarray:
        """Every point that was ever part of the archive."""
        return np.array(self._points).reshape(-1, self.m)

    def front_at(self, s: int) -> np.ndarray:
        enter = np.asarray(self._enter)
        leave = np.asarray(self._leave)
        alive = (enter <= s) & (leave > s)
        return self.all_points()[alive]

    def series(self, lower, upper, reference: float = REFERENCE) -> list[FrontSample]:
        """PHV at every sample in the normalized space defined by ``lower``/``upper``."""
        ref = np.full(self.m, reference)
        enter = np.asarray(self._enter)
        leave = np.asarray(self._leave)
        pts = normalize(self.all_points(), lower, upper) if self._points else np.zeros((0, self.m))
        out = []
        phv = 0.0
        for s, (elapsed, evals) in enumerate(self.samples):
            alive = (enter <= s) & (leave > s)
            # the archive only changes when a point enters
            if s == 0 or np.any(enter == s):
                phv = hypervolume(pts[alive], ref) if alive.any() else 0.0
            out.append(FrontSample(elapsed, evals, phv, self.all_points()[alive]))
        return out


def write_trace_csv(samples, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["elapsed_s", "evaluations", "phv"])
        for s in samples:
            w.writerow([f"{s.elapsed:.6f}", s.evaluations, repr(float(s.phv))])
