"""Motion-change key-frame extraction from frame sequences.

Pipeline: grayscale conversion, windowed Lucas-Kanade optical flow, moving
object clustering and tracking, per-frame motion state vectors, and key-frame
selection where a frame's state deviates from the linear interpolation of its
neighbors by more than a threshold.

Positions and velocities are in pixels and pixels/frame. Single-level flow
with a 5x5 window only: fixtures are small-displacement synthetic scenes, no
pyramid is built.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import ndimage

DEFAULT_WINDOW = 5
DEFAULT_VELOCITY_WEIGHT = 1.0
DEFAULT_ALPHA = 0.2
MIN_EIGEN_THRESHOLD = 1e-2
MOVING_PIXEL_THRESHOLD = 0.25
TAU_FLOOR = 0.5


@dataclass(frozen=True)
class GrayFrame:
    width: int
    height: int
    pixels: np.ndarray  # (height, width) float array, values in [0, 255]
    timestamp: float

    def __post_init__(self) -> None:
        if self.pixels.shape != (self.height, self.width):
            raise ValueError("pixel buffer does not match width x height")


@dataclass(frozen=True)
class StateRow:
    object_id: int
    x: float
    y: float
    vx: float
    vy: float


@dataclass(frozen=True)
class MotionStateVector:
    frame_index: int
    rows: tuple[StateRow, ...]

    def __post_init__(self) -> None:
        ids = [r.object_id for r in self.rows]
        if len(ids) != len(set(ids)):
            raise ValueError("duplicate object id in motion state vector")
        for r in self.rows:
            if not all(map(math.isfinite, (r.x, r.y, r.vx, r.vy))):
                raise ValueError("non-finite motion state value")

    def row_map(self) -> dict[int, StateRow]:
        return {r.object_id: r for r in self.rows}


@dataclass(frozen=True)
class KeyFrameSequence:
    indices: tuple[int, ...]
    deviations: tuple[float, ...]

    def __post_init__(self) -> None:
        if list(self.indices) != sorted(set(self.indices)):
            raise ValueError("key frame indices must be strictly increasing")
        if len(self.indices) != len(self.deviations):
            raise ValueError("one deviation per retained frame")


@dataclass(frozen=True)
class PointFlow:
    x: float
    y: float
    vx: float
    vy: float
    tracked: bool


def to_grayscale(rgb: np.ndarray, timestamp: float = 0.0) -> GrayFrame:
    """Convert an (H, W, 3) image to luminance, 0.299 R + 0.587 G + 0.114 B."""
    arr = np.asarray(rgb, dtype=float)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValueError("expected an (H, W, 3) RGB array")
    lum = np.rint(0.299 * arr[..., 0] + 0.587 * arr[..., 1] + 0.114 * arr[..., 2])
    return GrayFrame(
        width=arr.shape[1], height=arr.shape[0], pixels=lum, timestamp=timestamp
    )


def _flow_tensors(prev: GrayFrame, nxt: GrayFrame, window: int):
    """Windowed structure tensor and mismatch sums for every pixel."""
    a = prev.pixels.astype(float)
    b = nxt.pixels.astype(float)
    ix = np.gradient(a, axis=1)
    iy = np.gradient(a, axis=0)
    it = b - a
    w2 = window * window

    def wsum(img):
        return ndimage.uniform_filter(img, size=window, mode="nearest") * w2

    sxx, sxy, syy = wsum(ix * ix), wsum(ix * iy), wsum(iy * iy)
    sxt, syt = wsum(ix * it), wsum(iy * it)
    return sxx, sxy, syy, sxt, syt


def _solve_flow(sxx, sxy, syy, sxt, syt):
    """Least-squares flow and minimum eigenvalue of the structure tensor."""
    det = sxx * syy - sxy * sxy
    trace = sxx + syy
    disc = np.sqrt(np.maximum(trace * trace - 4.0 * det, 0.0))
    lam_min = 0.5 * (trace - disc)
    safe = np.where(np.abs(det) > 1e-12, det, 1.0)
    vx = (-syy * sxt + sxy * syt) / safe
    vy = (sxy * sxt - sxx * syt) / safe
    return vx, vy, lam_min


def lucas_kanade_flow(
    prev: GrayFrame,
    nxt: GrayFrame,
    points: list[tuple[float, float]],
    window: int = DEFAULT_WINDOW,
) -> list[PointFlow]:
    """Per-point displacement between two frames.

    Points whose structure tensor is ill-conditioned (textureless or
    aperture-limited neighborhoods) come back with tracked=False.
    """
    if (prev.width, prev.height) != (nxt.width, nxt.height):
        raise ValueError("frame size mismatch")
    if not points:
        raise ValueError("empty point list")
    half = window // 2
    for x, y in points:
        if not (half <= x < prev.width - half and half <= y < prev.height - half):
            raise ValueError(f"point ({x}, {y}) too close to the frame border")

    vx, vy, lam_min = _solve_flow(*_flow_tensors(prev, nxt, window))
    out = []
    for x, y in points:
        c, r = int(round(x)), int(round(y))
        tracked = bool(lam_min[r, c] > MIN_EIGEN_THRESHOLD)
        out.append(
            PointFlow(
                x=float(x),
                y=float(y),
                vx=float(vx[r, c]) if tracked else 0.0,
                vy=float(vy[r, c]) if tracked else 0.0,
                tracked=tracked,
            )
        )
    return out


@dataclass
class _Track:
    object_id: int
    frames: list[int] = field(default_factory=list)
    xs: list[float] = field(default_factory=list)
    ys: list[float] = field(default_factory=list)


def track_objects(
    frames: list[GrayFrame],
    window: int = DEFAULT_WINDOW,
    moving_threshold: float = MOVING_PIXEL_THRESHOLD,
    max_displacement: float = 3.0,
) -> dict[int, list[tuple[int, float, float]]]:
    """Cluster moving pixels into objects and track their centroids.

    Objects are connected components of pixels whose flow magnitude exceeds
    the moving threshold; association across frames is nearest-neighbor with
    a gating radius of twice the expected maximum displacement. A track that
    cannot be matched is retired; re-appearing blobs get fresh ids.
    """
    if len(frames) < 2:
        raise ValueError("need at least two frames to track")
    ts = [f.timestamp for f in frames]
    if any(t1 <= t0 for t0, t1 in zip(ts, ts[1:])):
        raise ValueError("timestamps must be strictly increasing")

    tracks: dict[int, _Track] = {}
    active: dict[int, tuple[float, float]] = {}
    next_id = 0
    gate = 2.0 * max_displacement

    for f in range(len(frames) - 1):
        vx, vy, lam_min = _solve_flow(*_flow_tensors(frames[f], frames[f + 1], window))
        mag = np.hypot(vx, vy)
        moving = (mag > moving_threshold) & (lam_min > MIN_EIGEN_THRESHOLD)
        labels, count = ndimage.label(moving)
        detections = []
        for lbl in range(1, count + 1):
            rows, cols = np.nonzero(labels == lbl)
            if rows.size < 2:
                continue
            detections.append((float(cols.mean()), float(rows.mean())))

        matched: dict[int, tuple[float, float]] = {}
        used = set()
        for tid, (px, py) in sorted(active.items()):
            best, best_d = None, gate
            for di, (dx, dy) in enumerate(detections):
                if di in used:
                    continue
                d = math.hypot(dx - px, dy - py)
                if d < best_d:
                    best, best_d = di, d
            if best is not None:
                used.add(best)
                matched[tid] = detections[best]
        for di, det in enumerate(detections):
            if di not in used:
                tid = next_id
                next_id += 1
                tracks[tid] = _Track(tid)
                if f == 0 or tid not in matched:
                    matched[tid] = det

        for tid, (cx, cy) in matched.items():
            tr = tracks[tid]
            if not tr.frames:
                tr.frames.append(f)
                tr.xs.append(cx)
                tr.ys.append(cy)
            tr.frames.append(f + 1)
            tr.xs.append(cx)
            tr.ys.append(cy)
        active = matched

    return {
        tid: list(zip(tr.frames, tr.xs, tr.ys))
        for tid, tr in tracks.items()
        if len(tr.frames) >= 2
    }


def build_motion_states(
    tracks: dict[int, list[tuple[int, float, float]]], n_frames: int
) -> list[MotionStateVector]:
    """One motion state vector per frame from per-object centroid tracks.

    Velocities are backward per-frame displacements; the first frame of each
    track copies the first displacement. A single missing frame inside a
    track is filled by linear interpolation, longer gaps are an error.
    """
    filled: dict[int, dict[int, tuple[float, float]]] = {}
    for oid, samples in tracks.items():
        samples = sorted(samples)
        per: dict[int, tuple[float, float]] = {}
        for (f0, x0, y0), (f1, x1, y1) in zip(samples, samples[1:]):
            if f1 - f0 > 2:
                raise ValueError(
                    f"track {oid}: gap of {f1 - f0 - 1} frames; re-register the object"
                )
            per[f0] = (x0, y0)
            if f1 - f0 == 2:
                per[f0 + 1] = ((x0 + x1) / 2.0, (y0 + y1) / 2.0)
        last = samples[-1]
        per[last[0]] = (last[1], last[2])
        filled[oid] = per

    states = []
    for f in range(n_frames):
        rows = []
        for oid in sorted(filled):
            per = filled[oid]
            if f not in per:
                continue
            x, y = per[f]
            if f - 1 in per:
                px, py = per[f - 1]
                vx, vy = x - px, y - py
            elif f + 1 in per:
                nx_, ny_ = per[f + 1]
                vx, vy = nx_ - x, ny_ - y
            else:
                vx = vy = 0.0
            rows.append(StateRow(oid, x, y, vx, vy))
        states.append(MotionStateVector(frame_index=f, rows=tuple(rows)))
    return states


def interpolate_state(
    prev: MotionStateVector,
    nxt: MotionStateVector,
    alpha: float,
    frame_index: int | None = None,
) -> MotionStateVector:
    """Componentwise (1-alpha) * prev + alpha * next over matched object ids."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha {alpha} outside [0, 1]")
    nmap = nxt.row_map()
    rows = []
    for r in prev.rows:
        other = nmap.get(r.object_id)
        if other is None:
            continue
        rows.append(
            StateRow(
                r.object_id,
                (1 - alpha) * r.x + alpha * other.x,
                (1 - alpha) * r.y + alpha * other.y,
                (1 - alpha) * r.vx + alpha * other.vx,
                (1 - alpha) * r.vy + alpha * other.vy,
            )
        )
    idx = prev.frame_index if frame_index is None else frame_index
    return MotionStateVector(frame_index=idx, rows=tuple(rows))


def motion_deviation(
    actual: MotionStateVector,
    interpolated: MotionStateVector,
    velocity_weight: float = DEFAULT_VELOCITY_WEIGHT,
    unmatched_penalty: float = 2.0 * TAU_FLOOR,
) -> float:
    """Summed per-object positional L2 plus weighted velocity L2 difference.

    Object ids present in only one of the two vectors contribute the fixed
    penalty each: appearing/disappearing objects are key events themselves.
    """
    amap, imap = actual.row_map(), interpolated.row_map()
    total = 0.0
    for oid in amap.keys() & imap.keys():
        a, b = amap[oid], imap[oid]
        total += math.hypot(a.x - b.x, a.y - b.y)
        total += velocity_weight * math.hypot(a.vx - b.vx, a.vy - b.vy)
    total += unmatched_penalty * len(amap.keys() ^ imap.keys())
    return total


def extract_key_frames(
    states: list[MotionStateVector],
    alpha: float = DEFAULT_ALPHA,
    tau: float | None = None,
    velocity_weight: float = DEFAULT_VELOCITY_WEIGHT,
) -> KeyFrameSequence:
    """Retain frames whose deviation from neighbor interpolation exceeds tau.

    The first and last frames are always retained so downstream description
    covers scenario start and end. When tau is None it defaults to
    max(0.5, 3 * median absolute deviation over the sequence).
    """
    if len(states) < 3:
        raise ValueError("need at least 3 frames")
    deviations = {}
    for f in range(1, len(states) - 1):
        interp = interpolate_state(
            states[f - 1], states[f + 1], alpha, frame_index=states[f].frame_index
        )
        # penalty placeholder; recomputed against the final tau below
        deviations[f] = (states[f], interp)

    def dev(f: int, penalty: float) -> float:
        actual, interp = deviations[f]
        return motion_deviation(
            actual, interp, velocity_weight=velocity_weight, unmatched_penalty=penalty
        )

    if tau is None:
        rough = sorted(dev(f, 2.0 * TAU_FLOOR) for f in deviations)
        median = rough[len(rough) // 2] if rough else 0.0
        tau = max(TAU_FLOOR, 3.0 * median)

    indices = [0]
    devs = [0.0]
    for f in sorted(deviations):
        value = dev(f, 2.0 * tau)
        if value > tau:
            indices.append(f)
            devs.append(value)
    if indices[-1] != len(states) - 1:
        indices.append(len(states) - 1)
        devs.append(0.0)
    return KeyFrameSequence(indices=tuple(indices), deviations=tuple(devs))


# -- file interfaces ---------------------------------------------------------


def read_frame(path: Path | str) -> GrayFrame:
    """Read a PGM (P5) or PPM (P6) frame; timestamp comes from the caller."""
    data = Path(path).read_bytes()
    m = re.match(rb"(P[56])\s+(?:#[^\n]*\s+)*(\d+)\s+(\d+)\s+(\d+)\s", data)
    if m is None:
        raise ValueError(f"{path}: not a binary PGM/PPM file")
    magic, width, height, maxval = m.group(1), *map(int, m.groups()[1:])
    if maxval > 255:
        raise ValueError(f"{path}: 16-bit samples not supported")
    raw = np.frombuffer(data, dtype=np.uint8, offset=m.end())
    if magic == b"P5":
        pix = raw[: width * height].reshape(height, width).astype(float)
        return GrayFrame(width, height, pix, timestamp=0.0)
    rgb = raw[: width * height * 3].reshape(height, width, 3)
    return to_grayscale(rgb)


def load_frame_dir(
    directory: Path | str, frame_interval: float = 1.0
) -> list[GrayFrame]:
    """Frames from a directory; lexicographic name order is temporal order."""
    paths = sorted(
        p
        for p in Path(directory).iterdir()
        if p.suffix.lower() in {".pgm", ".ppm"}
    )
    if not paths:
        raise FileNotFoundError(f"no PGM/PPM frames in {directory}")
    frames = []
    for i, p in enumerate(paths):
        frame = read_frame(p)
        frames.append(
            GrayFrame(frame.width, frame.height, frame.pixels, timestamp=i * frame_interval)
        )
    return frames


def states_to_json(states: list[MotionStateVector]) -> dict:
    return {
        "motion_states": [
            {
                "frame_index": s.frame_index,
                "rows": [
                    {"object_id": r.object_id, "x": r.x, "y": r.y, "vx": r.vx, "vy": r.vy}
                    for r in s.rows
                ],
            }
            for s in states
        ]
    }


def states_from_json(data: dict) -> list[MotionStateVector]:
    return [
        MotionStateVector(
            frame_index=int(s["frame_index"]),
            rows=tuple(
                StateRow(int(r["object_id"]), r["x"], r["y"], r["vx"], r["vy"])
                for r in s["rows"]
            ),
        )
        for s in data["motion_states"]
    ]


def load_states(path: Path | str) -> list[MotionStateVector]:
    with open(path, encoding="utf-8") as fh:
        return states_from_json(json.load(fh))


def keyframes_to_json(seq: KeyFrameSequence) -> dict:
    return {
        "key_frames": [
            {"frame_index": i, "deviation": d}
            for i, d in zip(seq.indices, seq.deviations)
        ]
    }
