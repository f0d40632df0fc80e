"""STFT analysis and the two log-amplitude views of a multichannel frame.

``freq_log_vectors`` collapses channels (RMS over microphones) and keeps
frequency; ``channel_log_vectors`` collapses frequency (RMS over bins) and
keeps microphones. The first feeds the classical cepstrum, the second the
spatial and graph cepstra.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy import fft as sfft
from scipy.signal import get_window

from .audio_io import AudioClip
from .errors import ContractError, EmptyInputError

LOG_FLOOR = 1e-12
WINDOWS = ("hann", "rect")


@dataclass(frozen=True)
class StftParams:
    frame_len: int = 960
    fft_size: int = 2048
    hop: int | None = None
    window: str = "hann"

    def __post_init__(self):
        if self.hop is None:
            object.__setattr__(self, "hop", max(1, self.frame_len // 2))
        if not 1 <= self.frame_len <= self.fft_size:
            raise ContractError(
                f"need 1 <= frame_len <= fft_size, got {self.frame_len}, {self.fft_size}"
            )
        if self.hop < 1:
            raise ContractError(f"hop must be >= 1, got {self.hop}")
        if self.window not in WINDOWS:
            raise ContractError(f"window must be one of {WINDOWS}, got {self.window!r}")

    @classmethod
    def from_ms(cls, sample_rate, frame_ms=20.0, fft_size=2048, hop_ms=None, window="hann"):
        frame_len = int(round(frame_ms * 1e-3 * sample_rate))
        hop = None if hop_ms is None else int(round(hop_ms * 1e-3 * sample_rate))
        return cls(frame_len, fft_size, hop, window)


@dataclass(frozen=True)
class StftTensor:
    """One-sided STFT, ``values[omega, tau, n]``."""

    values: np.ndarray
    frame_len: int
    fft_size: int
    hop: int
    sample_rate: float

    @property
    def n_bins(self) -> int:
        return self.values.shape[0]

    @property
    def n_frames(self) -> int:
        return self.values.shape[1]

    @property
    def n_channels(self) -> int:
        return self.values.shape[2]

    @property
    def amplitude(self) -> np.ndarray:
        return np.abs(self.values)


def _window(kind: str, length: int) -> np.ndarray:
    if kind == "rect":
        return np.ones(length)
    return get_window("hann", length, fftbins=True)


def stft(clip: AudioClip, frame_len=960, fft_size=2048, hop=None, window="hann") -> StftTensor:
    """Short-time Fourier transform of every channel of ``clip``.

    Each frame is windowed, zero-padded to ``fft_size`` and transformed
    with a real FFT, giving ``fft_size // 2 + 1`` bins. Only frames that
    fit entirely inside the clip are produced.
    """
    params = StftParams(frame_len, fft_size, hop, window)
    x = clip.samples
    if x.shape[1] < params.frame_len:
        raise EmptyInputError(
            f"clip has {x.shape[1]} samples, shorter than one frame ({params.frame_len})"
        )
    frames = sliding_window_view(x, params.frame_len, axis=1)[:, :: params.hop, :]
    spec = sfft.rfft(frames * _window(params.window, params.frame_len), n=params.fft_size, axis=-1)
    return StftTensor(
        spec.transpose(2, 1, 0),
        params.frame_len,
        params.fft_size,
        params.hop,
        clip.sample_rate,
    )


def stft_with(clip: AudioClip, params: StftParams) -> StftTensor:
    return stft(clip, params.frame_len, params.fft_size, params.hop, params.window)


def _log_rms(power_mean: np.ndarray, floor: float) -> np.ndarray:
    return np.log(np.maximum(floor, np.sqrt(power_mean)))


def freq_log_vectors(t: StftTensor, floor: float = LOG_FLOOR) -> np.ndarray:
    """Channel-RMS log spectrum for every frame, shape ``(T, Omega)``."""
    power = np.mean(t.values.real**2 + t.values.imag**2, axis=2)
    return _log_rms(power, floor).T.copy()


def channel_log_vectors(t: StftTensor, floor: float = LOG_FLOOR) -> np.ndarray:
    """Frequency-RMS log amplitude per channel for every frame, shape ``(T, N)``."""
    power = np.mean(t.values.real**2 + t.values.imag**2, axis=0)
    return _log_rms(power, floor)


def _check_frame(t: StftTensor, tau: int) -> None:
    if not 0 <= tau < t.n_frames:
        raise ContractError(f"frame index {tau} outside [0, {t.n_frames})")


def freq_log_vector(t: StftTensor, tau: int, floor: float = LOG_FLOOR) -> np.ndarray:
    """Log of the RMS over channels of frame ``tau``; length ``Omega``."""
    _check_frame(t, tau)
    a = np.abs(t.values[:, tau, :])
    return _log_rms(np.mean(a * a, axis=1), floor)


def channel_log_vector(t: StftTensor, tau: int, floor: float = LOG_FLOOR) -> np.ndarray:
    """Log of the RMS over frequency bins of frame ``tau``; length ``N``."""
    _check_frame(t, tau)
    a = np.abs(t.values[:, tau, :])
    return _log_rms(np.mean(a * a, axis=0), floor)


def clip_channel_logs(clip: AudioClip, params: StftParams) -> np.ndarray:
    return channel_log_vectors(stft_with(clip, params))


def clip_freq_logs(clip: AudioClip, params: StftParams) -> np.ndarray:
    return freq_log_vectors(stft_with(clip, params))
