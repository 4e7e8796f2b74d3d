import math

import numpy as np
import pytest

from scenforge.flowkey import (
    GrayFrame,
    MotionStateVector,
    StateRow,
    build_motion_states,
    extract_key_frames,
    interpolate_state,
    keyframes_to_json,
    load_frame_dir,
    lucas_kanade_flow,
    motion_deviation,
    read_frame,
    states_from_json,
    states_to_json,
    to_grayscale,
    track_objects,
)


def linear_states(n, x0=0.0, vx=1.0, oid=0):
    return [
        MotionStateVector(
            frame_index=f, rows=(StateRow(oid, x0 + vx * f, 0.0, vx, 0.0),)
        )
        for f in range(n)
    ]


def test_grayscale_luminance_formula():
    rgb = np.array([[[200, 30, 60]]], dtype=np.uint8)
    frame = to_grayscale(rgb)
    expected = round(0.299 * 200 + 0.587 * 30 + 0.114 * 60)
    assert frame.pixels[0, 0] == expected


def test_grayscale_rejects_non_rgb():
    with pytest.raises(ValueError):
        to_grayscale(np.zeros((4, 4)))


def test_state_vector_rejects_duplicate_ids():
    with pytest.raises(ValueError):
        MotionStateVector(
            frame_index=0,
            rows=(StateRow(1, 0, 0, 0, 0), StateRow(1, 1, 0, 0, 0)),
        )


def test_interpolation_midpoint():
    a = MotionStateVector(0, (StateRow(0, 0.0, 0.0, 2.0, 0.0),))
    b = MotionStateVector(2, (StateRow(0, 4.0, 2.0, 2.0, 4.0),))
    mid = interpolate_state(a, b, 0.5, frame_index=1)
    row = mid.rows[0]
    assert (row.x, row.y, row.vx, row.vy) == (2.0, 1.0, 2.0, 2.0)


def test_interpolation_alpha_range():
    a = MotionStateVector(0, (StateRow(0, 0, 0, 0, 0),))
    with pytest.raises(ValueError):
        interpolate_state(a, a, 1.5)


def test_deviation_zero_for_identical():
    s = MotionStateVector(1, (StateRow(0, 3.0, 4.0, 1.0, 0.0),))
    assert motion_deviation(s, s) == 0.0


def test_deviation_penalizes_unmatched_objects():
    a = MotionStateVector(1, (StateRow(0, 0, 0, 0, 0),))
    b = MotionStateVector(1, (StateRow(1, 0, 0, 0, 0),))
    assert motion_deviation(a, b, unmatched_penalty=1.5) == pytest.approx(3.0)


def test_constant_velocity_keeps_only_endpoints():
    states = linear_states(8)
    seq = extract_key_frames(states, alpha=0.5, tau=0.5)
    assert seq.indices == (0, 7)


def test_sudden_stop_is_retained():
    # 1 unit/frame for 5 frames, then frozen
    states = []
    for f in range(10):
        x = min(f, 4)
        vx = 1.0 if f <= 4 else 0.0
        states.append(MotionStateVector(f, (StateRow(0, float(x), 0.0, vx, 0.0),)))
    seq = extract_key_frames(states, alpha=0.5, tau=0.5)
    assert 4 in seq.indices or 5 in seq.indices


def test_needs_three_frames():
    with pytest.raises(ValueError):
        extract_key_frames(linear_states(2))


def test_states_json_roundtrip():
    states = linear_states(4)
    again = states_from_json(states_to_json(states))
    assert again == states


def test_keyframes_json_shape():
    seq = extract_key_frames(linear_states(5), alpha=0.5, tau=0.5)
    data = keyframes_to_json(seq)
    assert [e["frame_index"] for e in data["key_frames"]] == [0, 4]


def _square_frame(x, size=(48, 64), ts=0.0):
    img = np.full(size, 20.0)
    img[20:28, x : x + 8] = 200.0
    return GrayFrame(width=size[1], height=size[0], pixels=img, timestamp=ts)


def test_lucas_kanade_tracks_translation():
    a = _square_frame(10)
    b = _square_frame(12)
    flows = lucas_kanade_flow(a, b, [(10.0, 20.0), (18.0, 24.0)])
    tracked = [f for f in flows if f.tracked]
    assert tracked, "corner points should be trackable"
    for f in tracked:
        assert f.vx > 0.5
        assert abs(f.vy) < 1.0


def test_track_objects_follows_square():
    frames = [_square_frame(6 + 2 * i, ts=0.5 * i) for i in range(6)]
    tracks = track_objects(frames)
    assert len(tracks) >= 1
    oid, pts = max(tracks.items(), key=lambda kv: len(kv[1]))
    xs = [x for _, x, _ in pts]
    assert xs == sorted(xs)
    states = build_motion_states(tracks, len(frames))
    assert len(states) == len(frames)
    moving = [r for s in states for r in s.rows if abs(r.vx) > 0.5]
    assert moving


def test_frame_io_pgm_ppm(tmp_path):
    img = np.arange(12, dtype=np.uint8).reshape(3, 4)
    (tmp_path / "a.pgm").write_bytes(b"P5\n4 3\n255\n" + img.tobytes())
    rgb = np.dstack([img] * 3)
    (tmp_path / "b.ppm").write_bytes(b"P6\n4 3\n255\n" + rgb.tobytes())
    frames = load_frame_dir(tmp_path, frame_interval=0.5)
    assert len(frames) == 2
    assert frames[0].pixels.shape == (3, 4)
    single = read_frame(tmp_path / "a.pgm")
    assert single.pixels[2, 3] == 11


def test_linear_motion_alpha_bias_formula():
    # with S_f the exact midpoint, deviation equals
    # sum over rows of |0.5 - alpha| * (|dpos| + w_v * |dvel|)
    prev = MotionStateVector(0, (StateRow(0, 1.0, 2.0, 3.0, -1.0),))
    nxt = MotionStateVector(2, (StateRow(0, 7.0, -2.0, 5.0, 3.0),))
    mid = MotionStateVector(
        1, (StateRow(0, 4.0, 0.0, 4.0, 1.0),)
    )
    for alpha in (0.0, 0.2, 0.5, 0.8):
        interp = interpolate_state(prev, nxt, alpha, frame_index=1)
        dpos = math.hypot(7.0 - 1.0, -2.0 - 2.0)
        dvel = math.hypot(5.0 - 3.0, 3.0 - (-1.0))
        expected = abs(0.5 - alpha) * (dpos + dvel)
        assert motion_deviation(mid, interp) == pytest.approx(expected, abs=1e-12)
