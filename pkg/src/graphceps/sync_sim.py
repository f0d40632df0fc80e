"""Synthetic distributed-microphone scenes and inter-group desynchronization.

Propagation model: free field, no reverberation. Each source reaches a
microphone after ``distance / 343`` seconds (fractional delays applied as
a linear phase in the frequency domain) and is attenuated by
``1 / max(distance, 0.1)``. White noise at the room's floor level is
added independently to every channel.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy import fft as sfft

from .audio_io import AudioClip
from .errors import ConfigError, DataError

SPEED_OF_SOUND = 343.0
MIN_DISTANCE = 0.1
SIGNALS = ("tone", "noise-band", "impulse-train", "silence")
MAX_REDRAWS = 100


def derive_seed(*parts: int) -> int:
    """Mix integers into one 63-bit seed (``numpy.random.SeedSequence`` entropy mixing)."""
    state = np.random.SeedSequence([int(p) for p in parts]).generate_state(1, np.uint64)
    return int(state[0] >> np.uint64(1))


@dataclass(frozen=True)
class Source:
    position: tuple[float, float]
    signal: str = "noise-band"
    level: float = 0.1
    # signal parameters: tone -> freq; noise-band -> low/high; impulse-train -> rate
    params: dict = field(default_factory=dict)
    # mean on/off durations of the activity envelope; off_s == 0 means always on
    on_s: float = 1.0
    off_s: float = 0.0

    def __post_init__(self):
        if self.signal not in SIGNALS:
            raise ConfigError(f"unknown signal {self.signal!r}; choose from {SIGNALS}")
        if not all(math.isfinite(v) for v in self.position):
            raise ConfigError(f"source position {self.position} is not finite")
        if not self.level > 0:
            raise ConfigError(f"source level must be positive, got {self.level}")
        object.__setattr__(self, "position", tuple(float(v) for v in self.position))


@dataclass(frozen=True)
class SceneSpec:
    scene_label: str
    sources: tuple[Source, ...]
    mic_positions: tuple[tuple[float, float], ...]
    noise_floor_db: float | None = -60.0
    # per-clip randomization: uniform position jitter (m) and level jitter (dB)
    position_jitter: float = 0.0
    level_jitter_db: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "sources", tuple(self.sources))
        object.__setattr__(self, "mic_positions", tuple(tuple(map(float, p)) for p in self.mic_positions))
        if not np.all(np.isfinite(np.array(self.mic_positions, dtype=float))):
            raise ConfigError("microphone positions must be finite")

    def to_dict(self) -> dict:
        return {
            "scene_label": self.scene_label,
            "sources": [
                {
                    "position": list(s.position),
                    "signal": s.signal,
                    "level": s.level,
                    "params": s.params,
                    "on_s": s.on_s,
                    "off_s": s.off_s,
                }
                for s in self.sources
            ],
            "mic_positions": [list(p) for p in self.mic_positions],
            "room": {"attenuation": "inverse-distance", "noise_floor_db": self.noise_floor_db},
            "position_jitter": self.position_jitter,
            "level_jitter_db": self.level_jitter_db,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SceneSpec":
        try:
            room = d.get("room", {})
            return cls(
                d["scene_label"],
                tuple(
                    Source(
                        tuple(s["position"]),
                        s.get("signal", "noise-band"),
                        float(s.get("level", 0.1)),
                        dict(s.get("params", {})),
                        float(s.get("on_s", 1.0)),
                        float(s.get("off_s", 0.0)),
                    )
                    for s in d["sources"]
                ),
                tuple(tuple(p) for p in d["mic_positions"]),
                room.get("noise_floor_db", -60.0),
                float(d.get("position_jitter", 0.0)),
                float(d.get("level_jitter_db", 0.0)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"bad scene spec: {exc}") from exc


def load_scene_specs(path) -> list[SceneSpec]:
    data = json.loads(Path(path).read_text())
    items = data["scenes"] if isinstance(data, dict) else data
    return [SceneSpec.from_dict(d) for d in items]


def _activity(n: int, sr: float, on_s: float, off_s: float, rng) -> np.ndarray:
    """On/off envelope with exponentially distributed segment lengths and 5 ms ramps."""
    if off_s <= 0:
        return np.ones(n)
    env = np.zeros(n)
    pos = -int(rng.uniform(0, on_s + off_s) * sr)
    on = bool(rng.integers(2))
    while pos < n:
        length = max(1, int(rng.exponential(on_s if on else off_s) * sr))
        if on:
            env[max(pos, 0) : max(pos + length, 0)] = 1.0
        pos += length
        on = not on
    ramp = max(1, int(0.005 * sr))
    kernel = np.hanning(2 * ramp + 1)
    return np.convolve(env, kernel / kernel.sum(), mode="same")


def _waveform(src: Source, n: int, sr: float, rng) -> np.ndarray:
    """Unit-RMS source waveform (before the activity envelope)."""
    if src.signal == "silence":
        return np.zeros(n)
    t = np.arange(n) / sr
    if src.signal == "tone":
        freq = float(src.params.get("freq", 440.0))
        x = np.sin(2 * np.pi * freq * t + rng.uniform(0, 2 * np.pi))
    elif src.signal == "noise-band":
        lo = float(src.params.get("low", 100.0))
        hi = float(src.params.get("high", sr / 2))
        spec = sfft.rfft(rng.standard_normal(n))
        f = sfft.rfftfreq(n, 1 / sr)
        spec[(f < lo) | (f > hi)] = 0
        x = sfft.irfft(spec, n)
    else:  # impulse-train
        rate = float(src.params.get("rate", 4.0))
        decay = float(src.params.get("decay", 0.02))
        x = np.zeros(n)
        clicks = np.flatnonzero(rng.random(n) < rate / sr)
        x[clicks] = rng.choice([-1.0, 1.0], size=clicks.size)
        tail = np.exp(-np.arange(int(5 * decay * sr) + 1) / (decay * sr))
        x = np.convolve(x, tail)[:n]
    rms = math.sqrt(float(np.mean(x * x)))
    return x / rms if rms > 0 else x


def _delay(x: np.ndarray, delays: np.ndarray, sr: float) -> np.ndarray:
    """Delay ``x`` by each of ``delays`` seconds (band-limited, circular on the padded buffer)."""
    n = x.size
    spec = sfft.rfft(x)
    f = sfft.rfftfreq(n, 1 / sr)
    return sfft.irfft(spec[None, :] * np.exp(-2j * np.pi * f[None, :] * delays[:, None]), n, axis=1)


def synthesize_scene(spec: SceneSpec, duration_s: float, sample_rate: float, seed: int) -> AudioClip:
    """Render one clip of ``spec``. Identical arguments give identical samples."""
    mics = np.array(spec.mic_positions, dtype=float)
    if len(spec.sources) < 1:
        raise ConfigError("a scene needs at least one source")
    if len(mics) < 2:
        raise ConfigError("a scene needs at least two microphones")
    rng = np.random.default_rng(seed)
    n = int(round(duration_s * sample_rate))
    out = np.zeros((len(mics), n))
    max_dist = 0.0
    placed = []
    for src in spec.sources:
        pos = np.array(src.position) + rng.uniform(-1, 1, 2) * spec.position_jitter
        gain = src.level * 10 ** (rng.uniform(-1, 1) * spec.level_jitter_db / 20)
        dist = np.hypot(*(mics - pos).T)
        max_dist = max(max_dist, float(dist.max()))
        placed.append((src, gain, dist))
    pad = int(math.ceil(max_dist / SPEED_OF_SOUND * sample_rate)) + 64
    total = sfft.next_fast_len(n + pad, real=True)
    pad = total - n
    for src, gain, dist in placed:
        x = _waveform(src, total, sample_rate, rng) * _activity(total, sample_rate, src.on_s, src.off_s, rng)
        delayed = _delay(x, dist / SPEED_OF_SOUND, sample_rate)[:, pad:]
        out += gain * delayed / np.maximum(dist, MIN_DISTANCE)[:, None]
    if spec.noise_floor_db is not None and math.isfinite(spec.noise_floor_db):
        out += 10 ** (spec.noise_floor_db / 20) * rng.standard_normal(out.shape)
    ids = [f"mic{i + 1:02d}" for i in range(len(mics))]
    return AudioClip(out, float(sample_rate), ids, spec.scene_label)


@dataclass(frozen=True)
class DesyncSpec:
    groups: tuple[tuple[int, ...], ...]
    sigma_s: float
    seed: int = 0

    def __post_init__(self):
        if not self.sigma_s >= 0:
            raise ConfigError(f"sigma_s must be >= 0, got {self.sigma_s}")
        object.__setattr__(self, "groups", tuple(tuple(int(c) for c in g) for g in self.groups))


def _shift(x: np.ndarray, k: int) -> np.ndarray:
    """``y[t] = x[t - k]`` with zeros where ``t - k`` falls outside."""
    y = np.zeros_like(x)
    if k > 0:
        y[..., k:] = x[..., :-k]
    elif k < 0:
        y[..., :k] = x[..., -k:]
    else:
        y[...] = x
    return y


def inject_desync(clip: AudioClip, spec: DesyncSpec) -> tuple[AudioClip, np.ndarray]:
    """Shift every channel of each group by one shared Gaussian time offset.

    Offsets (seconds, drawn from N(0, sigma_s^2), then rounded to whole
    samples) are returned in group order. Channels outside all groups
    stay put; vacated samples are zero.
    """
    n = clip.n_samples
    for g in spec.groups:
        for ch in g:
            if not 0 <= ch < clip.n_channels:
                raise ConfigError(f"desync group channel {ch} outside clip's {clip.n_channels} channels")
    rng = np.random.default_rng(spec.seed)
    offsets = np.zeros(len(spec.groups), dtype=int)
    for i in range(len(spec.groups)):
        for _ in range(MAX_REDRAWS):
            k = int(round(rng.normal(0.0, spec.sigma_s) * clip.sample_rate)) if spec.sigma_s > 0 else 0
            if abs(k) < max(n, 1):
                offsets[i] = k
                break
        else:
            raise DataError(f"could not draw an offset shorter than the clip in {MAX_REDRAWS} tries")
    out = clip.samples.copy()
    for group, k in zip(spec.groups, offsets):
        if k:
            idx = list(group)
            out[idx] = _shift(clip.samples[idx], k)
    return replace(clip, samples=out), offsets
