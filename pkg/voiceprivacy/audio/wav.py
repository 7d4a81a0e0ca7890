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

import logging
import os
import re
import struct
import warnings
from dataclasses import dataclass, field
from typing import Union

import numpy as np
import soundfile as sf

from voiceprivacy.constants.defaults import WAV_SCALE, WAV_SUBTYPE
from voiceprivacy.utils.exceptions import AudioIOError, ContractError, WavFormatError

logger = logging.getLogger(__name__)

PathLike = Union[str, os.PathLike]

# libsndfile log line for a data chunk that runs past the end of the file, sizes in bytes
_SHORT_DATA_CHUNK = re.compile(r"data\s*:\s*(\d+)\s*\(should be\s*(\d+)\)")


@dataclass
class AudioBuffer:
    """
    Mono waveform with its sample rate.

    Parameters
    ----------
    samples : array-like of float
        Real amplitudes, nominally in [-1, 1]. Stored as a 1-D float64 array.

    sample_rate : int
        Sampling rate in Hz. Must be positive.
    """

    samples: np.ndarray
    sample_rate: int
    clip_count: int = field(default=0, compare=False)

    def __post_init__(self) -> None:
        self.samples = np.asarray(self.samples, dtype=np.float64).reshape(-1)
        if int(self.sample_rate) <= 0:
            raise ContractError(
                f"voiceprivacy: sample_rate must be positive, got {self.sample_rate}"
            )
        self.sample_rate = int(self.sample_rate)
        if not np.all(np.isfinite(self.samples)):
            raise ContractError("voiceprivacy: audio samples must be finite")

    def __len__(self) -> int:
        return self.samples.shape[0]

    @property
    def duration(self) -> float:
        """Duration in seconds."""
        return len(self) / self.sample_rate


def read_wav(path: PathLike) -> AudioBuffer:
    """
    Reads a mono 16-bit signed PCM RIFF/WAVE file.

    Parameters
    ----------
    path : str or PathLike
        Location of the WAV file.

    Returns
    -------
    AudioBuffer
        Samples scaled by 1/32768 into [-1, 1) and the header sample rate.

    Raises
    ------
    WavFormatError
        If the container is not WAV, the file is not mono, or the encoding is not 16-bit PCM.
    AudioIOError
        If the file is missing, unreadable or truncated.
    """
    if not os.path.isfile(path):
        raise AudioIOError(f"Audio file not found: {path}")
    try:
        info = sf.info(str(path))
    except RuntimeError as err:
        raise AudioIOError(f"Unable to read WAV header of {path}: {err}") from err

    if info.format != "WAV":
        raise WavFormatError(
            f"{path}: unsupported container {info.format!r}, expected RIFF/WAVE", field="container"
        )
    if info.channels != 1:
        raise WavFormatError(
            f"{path}: unsupported channel count {info.channels}, expected mono (1)",
            field="channels",
        )
    if info.subtype != WAV_SUBTYPE:
        offending = "bits_per_sample" if info.subtype.startswith("PCM_") else "encoding"
        raise WavFormatError(
            f"{path}: unsupported {offending} ({info.subtype}), expected 16-bit signed PCM",
            field=offending,
        )

    # libsndfile clamps the frame count to the bytes present and only notes the short chunk in its log
    short_chunk = _SHORT_DATA_CHUNK.search(info.extra_info or "")
    if short_chunk is not None:
        declared, present = (int(n) // 2 for n in short_chunk.groups())
        raise AudioIOError(
            f"{path}: truncated data chunk, header declares {declared} samples but the file holds {present}"
        )
    with open(path, "rb") as f:
        tag, riff_size = struct.unpack("<4sI", f.read(8))
    if tag == b"RIFF" and riff_size + 8 > os.path.getsize(path):
        raise AudioIOError(
            f"{path}: truncated data chunk, RIFF header declares {riff_size + 8} bytes "
            f"but the file holds {os.path.getsize(path)}"
        )

    try:
        data, sample_rate = sf.read(str(path), dtype="int16", always_2d=False)
    except RuntimeError as err:
        raise AudioIOError(f"Unable to read samples of {path}: {err}") from err
    if data.shape[0] != info.frames:
        raise AudioIOError(
            f"{path}: truncated data chunk, header declares {info.frames} samples but {data.shape[0]} were read"
        )

    logger.debug("Read %s: %d samples at %d Hz", path, data.shape[0], sample_rate)
    return AudioBuffer(samples=data.astype(np.float64) / WAV_SCALE, sample_rate=sample_rate)


def quantize(samples: np.ndarray):
    """
    Converts float samples to 16-bit integers.

    Returns
    -------
    tuple of (np.ndarray, int)
        The int16 samples and the number of input samples that lay outside [-1, 1].
    """
    samples = np.asarray(samples, dtype=np.float64)
    clip_count = int(np.count_nonzero(np.abs(samples) > 1.0))
    scaled = np.round(samples * WAV_SCALE)
    pcm = np.clip(scaled, -WAV_SCALE, WAV_SCALE - 1).astype(np.int16)
    return pcm, clip_count


def write_wav(buffer: AudioBuffer, path: PathLike) -> int:
    """
    Writes a buffer as a mono 16-bit PCM WAV file.

    Samples outside [-1, 1] are clipped rather than rejected; the number of clipped
    samples is returned and stored on ``buffer.clip_count``.

    Parameters
    ----------
    buffer : AudioBuffer
        Audio to write.

    path : str or PathLike
        Destination file.

    Returns
    -------
    int
        Number of clipped samples.
    """
    pcm, clip_count = quantize(buffer.samples)
    try:
        sf.write(str(path), pcm, buffer.sample_rate, subtype=WAV_SUBTYPE, format="WAV")
    except (RuntimeError, OSError) as err:
        raise AudioIOError(f"Unable to write {path}: {err}") from err

    buffer.clip_count = clip_count
    if clip_count:
        warnings.warn(f"{clip_count} samples clipped while writing {path}")
    logger.debug("Wrote %s: %d samples, %d clipped", path, len(buffer), clip_count)
    return clip_count
