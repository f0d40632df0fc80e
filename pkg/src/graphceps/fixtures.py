"""A 13-microphone, 5-device living-room replica used for experiments and tests.

The room is 6 m x 5 m. Devices I-III carry three microphones each, devices
IV and V two each; microphones on one device are synchronized with each
other and sit within a few tens of centimetres. The group membership is
an assumption of this replica (channels are numbered device by device),
as are the scene layouts.
"""

from __future__ import annotations

import math

from .graph import MicGraph
from .sync_sim import SceneSpec, Source

DEVICE_CENTERS = {
    "I": (0.8, 0.8),
    "II": (5.2, 0.8),
    "III": (3.0, 2.6),
    "IV": (0.8, 4.2),
    "V": (5.2, 4.2),
}
DEVICE_SIZES = {"I": 3, "II": 3, "III": 3, "IV": 2, "V": 2}
DEVICE_RADIUS = 0.25


def _device_mics(center, count, radius=DEVICE_RADIUS):
    cx, cy = center
    return [
        (cx + radius * math.cos(2 * math.pi * k / count + 0.3), cy + radius * math.sin(2 * math.pi * k / count + 0.3))
        for k in range(count)
    ]


def mic_positions() -> list[tuple[float, float]]:
    out = []
    for name, center in DEVICE_CENTERS.items():
        out.extend(_device_mics(center, DEVICE_SIZES[name]))
    return out


def mic_groups() -> tuple[tuple[int, ...], ...]:
    groups, start = [], 0
    for name in DEVICE_CENTERS:
        groups.append(tuple(range(start, start + DEVICE_SIZES[name])))
        start += DEVICE_SIZES[name]
    return tuple(groups)


def fixture_graph(alpha: float = 0.01) -> MicGraph:
    return MicGraph(13, mic_groups(), (), alpha)


def _scene(label, *sources, noise_floor_db=-55.0):
    return SceneSpec(
        label,
        tuple(sources),
        tuple(mic_positions()),
        noise_floor_db=noise_floor_db,
        position_jitter=0.3,
        level_jitter_db=3.0,
    )


def fixture_scenes() -> list[SceneSpec]:
    """Nine living-room scenes with intermittent, spatially distinct sources."""
    nb = "noise-band"
    it = "impulse-train"
    return [
        _scene(
            "vacuuming",
            Source((2.0, 2.0), nb, 0.30, {"low": 100, "high": 4000}, on_s=2.0, off_s=0.4),
            Source((3.8, 1.6), nb, 0.20, {"low": 100, "high": 4000}, on_s=1.0, off_s=1.0),
        ),
        _scene(
            "cooking",
            Source((0.4, 0.5), nb, 0.12, {"low": 500, "high": 6000}, on_s=1.0, off_s=0.6),
            Source((1.4, 0.4), "tone", 0.08, {"freq": 800}, on_s=0.5, off_s=0.8),
        ),
        _scene(
            "dishwashing",
            Source((1.1, 1.3), it, 0.15, {"rate": 6, "decay": 0.03}, on_s=1.0, off_s=0.5),
            Source((0.5, 1.0), nb, 0.10, {"low": 200, "high": 5000}, on_s=1.5, off_s=0.8),
        ),
        _scene(
            "eating",
            Source((3.1, 3.2), it, 0.06, {"rate": 3, "decay": 0.02}, on_s=1.0, off_s=0.5),
            Source((3.6, 2.2), nb, 0.05, {"low": 300, "high": 3000}, on_s=0.6, off_s=0.9),
        ),
        _scene(
            "reading_newspaper",
            Source((4.8, 4.4), it, 0.05, {"rate": 1.5, "decay": 0.05}, on_s=1.0, off_s=1.2),
            Source((4.9, 3.7), nb, 0.02, {"low": 1000, "high": 7000}, on_s=0.4, off_s=1.0),
        ),
        _scene(
            "operating_pc",
            Source((4.8, 1.2), it, 0.06, {"rate": 8, "decay": 0.01}, on_s=1.2, off_s=0.6),
            Source((5.6, 0.4), nb, 0.03, {"low": 100, "high": 1500}),
        ),
        _scene(
            "chatting",
            Source((2.4, 3.1), nb, 0.08, {"low": 300, "high": 3000}, on_s=0.7, off_s=0.7),
            Source((3.7, 3.0), nb, 0.08, {"low": 300, "high": 3000}, on_s=0.7, off_s=0.7),
        ),
        _scene(
            "watching_tv",
            Source((0.4, 4.6), nb, 0.15, {"low": 100, "high": 6000}, on_s=1.5, off_s=0.3),
            Source((1.3, 3.6), "tone", 0.04, {"freq": 300}, on_s=0.8, off_s=0.8),
        ),
        _scene(
            "doing_laundry",
            Source((5.6, 2.0), nb, 0.20, {"low": 50, "high": 800}, on_s=2.0, off_s=0.5),
            Source((5.0, 2.6), it, 0.05, {"rate": 2, "decay": 0.04}, on_s=1.0, off_s=1.0),
        ),
    ]
