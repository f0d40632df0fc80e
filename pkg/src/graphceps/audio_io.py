"""Multichannel WAV ingest, clip segmentation and manifest handling."""

from __future__ import annotations

import json
import os
import struct
import tempfile
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy.io import wavfile

from .errors import DataError, UnsupportedFormatError, WavFormatError

# WAVE_FORMAT_PCM, WAVE_FORMAT_IEEE_FLOAT, WAVE_FORMAT_EXTENSIBLE
_SUPPORTED_TAGS = {0x0001, 0x0003, 0xFFFE}
MAX_CHANNELS = 64


@dataclass(frozen=True)
class AudioClip:
    """A block of multichannel audio.

    ``samples`` has shape ``(n_channels, n_samples)`` with amplitudes in
    [-1, 1].
    """

    samples: np.ndarray
    sample_rate: float
    channel_ids: list[str] = field(default_factory=list)
    scene_label: str | None = None

    def __post_init__(self):
        samples = np.asarray(self.samples)
        if samples.ndim != 2:
            raise ValueError(f"samples must be 2-D (channels, samples), got shape {samples.shape}")
        if samples.shape[0] < 1:
            raise ValueError("an AudioClip needs at least one channel")
        if not self.sample_rate > 0:
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate}")
        object.__setattr__(self, "samples", samples)
        if not self.channel_ids:
            object.__setattr__(self, "channel_ids", [str(i) for i in range(samples.shape[0])])
        elif len(self.channel_ids) != samples.shape[0]:
            raise ValueError(
                f"{len(self.channel_ids)} channel ids for {samples.shape[0]} channels"
            )

    @property
    def n_channels(self) -> int:
        return self.samples.shape[0]

    @property
    def n_samples(self) -> int:
        return self.samples.shape[1]

    @property
    def duration(self) -> float:
        return self.n_samples / self.sample_rate


def _wav_format_tag(path: Path) -> int:
    """Read the fmt-chunk format tag, classifying header damage as WavFormatError."""
    with open(path, "rb") as fh:
        head = fh.read(12)
        if len(head) < 12 or head[:4] not in (b"RIFF", b"RIFX") or head[8:12] != b"WAVE":
            raise WavFormatError(f"{path}: not a RIFF/WAVE file")
        while True:
            chunk = fh.read(8)
            if len(chunk) < 8:
                raise WavFormatError(f"{path}: no fmt chunk")
            cid, size = chunk[:4], struct.unpack("<I", chunk[4:])[0]
            if cid == b"fmt ":
                body = fh.read(size)
                if len(body) < 16:
                    raise WavFormatError(f"{path}: truncated fmt chunk")
                tag = struct.unpack("<H", body[:2])[0]
                if tag == 0xFFFE and len(body) >= 26:
                    # extensible: the real codec is the first 2 bytes of the subformat GUID
                    tag = struct.unpack("<H", body[24:26])[0]
                return tag
            fh.seek(size + (size & 1), os.SEEK_CUR)


def _full_scale(dtype: np.dtype) -> float:
    if dtype == np.uint8:
        return 128.0
    if np.issubdtype(dtype, np.integer):
        return float(-np.iinfo(dtype).min)
    return 1.0


def load_wav(path, scene_label=None, channel_ids=None) -> AudioClip:
    """Load a PCM (8/16/24/32-bit) or IEEE-float WAV file.

    Integer samples are divided by the type's full-scale value
    (32768 for 16-bit), so +32767 maps to 0.99997. 24-bit data is
    returned by scipy left-justified in int32 and is therefore scaled by
    2**31 as well.
    """
    path = Path(path)
    tag = _wav_format_tag(path)
    if tag not in _SUPPORTED_TAGS:
        raise UnsupportedFormatError(f"{path}: unsupported WAV codec 0x{tag:04x}")
    try:
        rate, data = wavfile.read(path)
    except ValueError as exc:
        raise WavFormatError(f"{path}: {exc}") from exc
    data = np.atleast_2d(data.T) if data.ndim == 2 else data[None, :]
    if data.shape[0] > MAX_CHANNELS:
        raise UnsupportedFormatError(f"{path}: {data.shape[0]} channels exceeds {MAX_CHANNELS}")
    if data.dtype == np.uint8:
        samples = (data.astype(np.float64) - 128.0) / 128.0
    else:
        samples = data.astype(np.float64) / _full_scale(data.dtype)
    return AudioClip(samples, float(rate), list(channel_ids or []), scene_label)


def write_wav(path, clip: AudioClip, subtype="float32") -> None:
    """Write ``clip`` as an interleaved WAV.

    ``subtype`` is ``"float32"`` (round-trips float32-representable samples
    bit-exactly) or ``"pcm16"``.
    """
    if subtype == "float32":
        data = clip.samples.T.astype(np.float32)
    elif subtype == "pcm16":
        data = np.clip(np.round(clip.samples.T * 32768.0), -32768, 32767).astype(np.int16)
    else:
        raise ValueError(f"unsupported subtype {subtype!r}")
    rate = int(round(clip.sample_rate))
    _atomic_write(Path(path), lambda fh: wavfile.write(fh, rate, data))


def _atomic_write(path: Path, writer) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            writer(fh)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_manifest(path) -> AudioClip:
    """Assemble one multichannel clip from mono WAVs listed in a JSON manifest.

    Manifest layout::

        {"sample_rate": 48000,
         "channels": [{"id": "mic01", "path": "mic01.wav"}, ...],
         "scene_label": "cooking"}          # optional

    Relative paths resolve against the manifest's directory.
    """
    path = Path(path)
    try:
        spec = json.loads(path.read_text())
        entries = spec["channels"]
        rate = float(spec["sample_rate"])
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise DataError(f"{path}: bad manifest ({exc})") from exc
    if not entries:
        raise DataError(f"{path}: manifest lists no channels")
    rows, ids = [], []
    for entry in entries:
        mono = load_wav(path.parent / entry["path"])
        if mono.n_channels != 1:
            raise DataError(f"{entry['path']}: manifest channels must be mono files")
        if mono.sample_rate != rate:
            raise DataError(
                f"{entry['path']}: sample rate {mono.sample_rate} != manifest {rate}"
            )
        rows.append(mono.samples[0])
        ids.append(str(entry["id"]))
    lengths = {len(r) for r in rows}
    if len(lengths) != 1:
        raise DataError(f"{path}: channel files differ in length {sorted(lengths)}")
    return AudioClip(np.vstack(rows), rate, ids, spec.get("scene_label"))


def segment_clips(clip: AudioClip, clip_len_s: float) -> list[AudioClip]:
    """Cut ``clip`` into consecutive, non-overlapping clips of ``clip_len_s``.

    A trailing remainder shorter than one clip is dropped.
    """
    if not clip_len_s > 0:
        raise ValueError(f"clip_len_s must be positive, got {clip_len_s}")
    seg = int(round(clip_len_s * clip.sample_rate))
    if seg < 1:
        raise ValueError("clip length is shorter than one sample")
    count = clip.n_samples // seg
    return [
        replace(clip, samples=clip.samples[:, i * seg : (i + 1) * seg].copy())
        for i in range(count)
    ]


def clip_filename(stem: str, index: int) -> str:
    return f"{stem}_{index}.wav"
