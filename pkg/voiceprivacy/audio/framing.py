# Copyright 2024 voiceprivacy developers
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np
from scipy.signal import get_window

from voiceprivacy.audio.wav import AudioBuffer
from voiceprivacy.constants.defaults import (
    DEFAULT_FRAME_MS,
    DEFAULT_HOP_MS,
    DEFAULT_WINDOW,
    OLA_ENVELOPE_FLOOR,
    SUPPORTED_WINDOWS,
)
from voiceprivacy.utils.exceptions import ContractError

SignalLike = Union[AudioBuffer, Sequence[float], np.ndarray]


@dataclass(frozen=True)
class FramePlan:
    """
    Frame geometry of the analysis/synthesis loop.

    Parameters
    ----------
    frame_len : int
        Frame length in samples.

    hop : int
        Frame advance in samples, 0 < hop <= frame_len.

    window : {'rectangular', 'hann'}, default='hann'
        Analysis window applied to every frame; the same window is applied again at synthesis.
    """

    frame_len: int
    hop: int
    window: str = DEFAULT_WINDOW

    def __post_init__(self) -> None:
        if self.frame_len <= 0 or not (0 < self.hop <= self.frame_len):
            raise ContractError(
                f"voiceprivacy: frame plan requires 0 < hop <= frame_len, got frame_len={self.frame_len}, hop={self.hop}"
            )
        if self.window not in SUPPORTED_WINDOWS:
            raise ContractError(
                f"voiceprivacy: window must be one of {SUPPORTED_WINDOWS}, got {self.window!r}"
            )

    @classmethod
    def from_ms(
        cls,
        sample_rate: int,
        frame_ms: float = DEFAULT_FRAME_MS,
        hop_ms: float = DEFAULT_HOP_MS,
        window: str = DEFAULT_WINDOW,
    ) -> "FramePlan":
        """Builds a plan from durations in milliseconds at the given sample rate."""
        frame_len = int(round(frame_ms * 1e-3 * sample_rate))
        hop = int(round(hop_ms * 1e-3 * sample_rate))
        return cls(frame_len=frame_len, hop=hop, window=window)

    def window_values(self) -> np.ndarray:
        """Returns the analysis window as an array of length `frame_len`."""
        if self.window == "rectangular":
            return np.ones(self.frame_len)
        return get_window("hann", self.frame_len, fftbins=True)

    def num_frames(self, length: int) -> int:
        """Number of frames covering `length` samples: ceil((length - frame_len) / hop) + 1, at least 1."""
        if length <= self.frame_len:
            return 1
        return math.ceil((length - self.frame_len) / self.hop) + 1

    def padded_length(self, length: int) -> int:
        """Length of the zero-padded signal that the frames of `length` samples span."""
        return (self.num_frames(length) - 1) * self.hop + self.frame_len


def _as_array(signal: SignalLike) -> np.ndarray:
    if isinstance(signal, AudioBuffer):
        return signal.samples
    return np.asarray(signal, dtype=np.float64).reshape(-1)


def frame_signal(signal: SignalLike, plan: FramePlan) -> np.ndarray:
    """
    Splits a signal into windowed frames.

    Parameters
    ----------
    signal : AudioBuffer or array-like of float
        Input samples.

    plan : FramePlan
        Frame geometry.

    Returns
    -------
    np.ndarray of shape (n_frames, frame_len)
        Frame i holds samples [i*hop, i*hop + frame_len) multiplied by the analysis window;
        samples beyond the end of the signal are zero.
    """
    x = _as_array(signal)
    n_frames = plan.num_frames(x.shape[0])
    padded = np.zeros(plan.padded_length(x.shape[0]))
    padded[: x.shape[0]] = x
    starts = np.arange(n_frames) * plan.hop
    index = starts[:, None] + np.arange(plan.frame_len)[None, :]
    return padded[index] * plan.window_values()[None, :]


def window_envelope(plan: FramePlan, n_frames: int) -> np.ndarray:
    """Summed squared-window envelope of `n_frames` overlapped synthesis frames."""
    w2 = plan.window_values() ** 2
    envelope = np.zeros((n_frames - 1) * plan.hop + plan.frame_len)
    for i in range(n_frames):
        envelope[i * plan.hop : i * plan.hop + plan.frame_len] += w2
    return envelope


def overlap_add(
    frames: Union[np.ndarray, Sequence[Sequence[float]]],
    plan: FramePlan,
    sample_rate: int,
    length: Optional[int] = None,
) -> AudioBuffer:
    """
    Resynthesizes a signal by windowed overlap-add.

    Each frame is multiplied by the synthesis window (equal to the analysis window) and
    accumulated at offset i*hop. The sum is divided by the summed squared-window envelope;
    wherever that envelope is below 1e-8 the output is 0.

    Parameters
    ----------
    frames : array-like of shape (n_frames, frame_len)
        Frames to overlap.

    plan : FramePlan
        Frame geometry used to produce the frames.

    sample_rate : int
        Sample rate of the returned buffer.

    length : int, default=None
        Output length. If None, the full span (n_frames - 1) * hop + frame_len is returned.

    Returns
    -------
    AudioBuffer
        Reconstructed signal.
    """
    if isinstance(frames, np.ndarray) and frames.ndim == 2:
        stacked = frames.astype(np.float64, copy=False)
    else:
        lengths = {len(f) for f in frames}
        if len(lengths) > 1:
            raise ContractError(f"voiceprivacy: frames have mismatched lengths {sorted(lengths)}")
        stacked = np.asarray(frames, dtype=np.float64).reshape(len(frames), -1)
    if stacked.shape[0] == 0:
        raise ContractError("voiceprivacy: overlap_add requires at least one frame")
    if stacked.shape[1] != plan.frame_len:
        raise ContractError(
            f"voiceprivacy: frame length {stacked.shape[1]} does not match plan frame_len {plan.frame_len}"
        )

    n_frames = stacked.shape[0]
    w = plan.window_values()
    accumulated = np.zeros((n_frames - 1) * plan.hop + plan.frame_len)
    for i in range(n_frames):
        accumulated[i * plan.hop : i * plan.hop + plan.frame_len] += stacked[i] * w
    envelope = window_envelope(plan, n_frames)

    output = np.zeros_like(accumulated)
    covered = envelope >= OLA_ENVELOPE_FLOOR
    output[covered] = accumulated[covered] / envelope[covered]
    if length is not None:
        if length > output.shape[0]:
            output = np.concatenate([output, np.zeros(length - output.shape[0])])
        output = output[:length]
    return AudioBuffer(samples=output, sample_rate=sample_rate)
