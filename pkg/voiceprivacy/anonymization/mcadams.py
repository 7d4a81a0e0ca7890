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

import asyncio
import logging
import os
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from tqdm import tqdm

from voiceprivacy.audio import AudioBuffer, FramePlan, frame_signal, overlap_add, read_wav, write_wav
from voiceprivacy.constants.defaults import (
    ANGLE_EPS,
    DEFAULT_ALPHA,
    DEFAULT_FRAME_MS,
    DEFAULT_HOP_MS,
    DEFAULT_LPC_ORDER,
    DEFAULT_SEED,
    DEFAULT_STABILITY_CLAMP,
    DEFAULT_WINDOW,
    FAILURE_MESSAGE,
    PRE_EMPHASIS,
)
from voiceprivacy.lpc import (
    PoleSet,
    analyze,
    de_emphasis,
    find_poles,
    inverse_filter,
    poles_to_coeffs,
    pre_emphasis,
    synthesis_filter,
)
from voiceprivacy.utils.exceptions import ContractError, NumericalError, VoicePrivacyError
from voiceprivacy.utils.seeding import stream_rng

logger = logging.getLogger(__name__)

SYNTHESIS_MODES = ["ola", "continuous"]


@dataclass(frozen=True)
class McAdamsParams:
    """
    Settings of the McAdams-coefficient anonymizer.

    Parameters
    ----------
    alpha : float, default=0.8
        McAdams coefficient. Pole angles phi become phi**alpha; 1 is the identity.

    lpc_order : int, default=20
        Prediction order of the per-frame LPC analysis.

    frame_ms, hop_ms : float, default=20, 10
        Frame length and hop in milliseconds.

    window : {'hann', 'rectangular'}, default='hann'
        Analysis/synthesis window.

    stability_clamp : float, default=0.998
        Upper bound on pole moduli after the transform, in (0, 1).

    rng_seed : int, default=0
        Seed of the randomized-alpha draw. Unused unless `alpha_range` is set.

    alpha_range : tuple of float, default=None
        If given, alpha is drawn uniformly from [low, high] per utterance (or per speaker).

    pre_emphasis : bool, default=False
        Apply 0.97 pre-emphasis before analysis and the matching de-emphasis after synthesis.

    synthesis : {'ola', 'continuous'}, default='ola'
        'ola' resynthesizes windowed frames and overlap-adds them. 'continuous' fits the LPC
        model on windowed frames but filters the unwindowed signal hop by hop, carrying the
        inverse- and synthesis-filter state across frames.
    """

    alpha: float = DEFAULT_ALPHA
    lpc_order: int = DEFAULT_LPC_ORDER
    frame_ms: float = DEFAULT_FRAME_MS
    hop_ms: float = DEFAULT_HOP_MS
    window: str = DEFAULT_WINDOW
    stability_clamp: float = DEFAULT_STABILITY_CLAMP
    rng_seed: int = DEFAULT_SEED
    alpha_range: Optional[Tuple[float, float]] = None
    pre_emphasis: bool = False
    synthesis: str = "ola"

    def __post_init__(self) -> None:
        if not self.alpha > 0:
            raise ContractError(f"voiceprivacy: alpha must be positive, got {self.alpha}")
        if not 0 < self.stability_clamp < 1:
            raise ContractError(
                f"voiceprivacy: stability_clamp must lie in (0, 1), got {self.stability_clamp}"
            )
        if self.lpc_order < 1:
            raise ContractError(f"voiceprivacy: lpc_order must be >= 1, got {self.lpc_order}")
        if self.synthesis not in SYNTHESIS_MODES:
            raise ContractError(f"voiceprivacy: synthesis must be one of {SYNTHESIS_MODES}")
        if self.alpha_range is not None:
            low, high = self.alpha_range
            if not 0 < low <= high:
                raise ContractError(
                    f"voiceprivacy: alpha_range must satisfy 0 < low <= high, got {self.alpha_range}"
                )

    def frame_plan(self, sample_rate: int) -> FramePlan:
        return FramePlan.from_ms(sample_rate, self.frame_ms, self.hop_ms, self.window)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class SynthesisStats:
    """Counters accumulated while anonymizing a buffer."""

    frames: int = 0
    degenerate_frames: int = 0
    clamped_poles: int = 0


def transform_poles(
    poleset: PoleSet,
    alpha: float,
    stability_clamp: float = DEFAULT_STABILITY_CLAMP,
    angle_eps: float = ANGLE_EPS,
) -> PoleSet:
    """
    Raises the angle of every complex pole to the power `alpha`.

    Real poles keep their position. For each conjugate pair the representative with angle
    phi in (0, pi) moves to angle phi**alpha, clamped to (eps, pi - eps), with its modulus
    preserved; the partner is its conjugate. Moduli above `stability_clamp` are reduced to it.
    With alpha == 1 the input is returned unchanged.

    Parameters
    ----------
    poleset : PoleSet
        Conjugate-closed poles.

    alpha : float
        McAdams coefficient.

    stability_clamp : float, default=0.998
        Maximum pole modulus after the transform.

    angle_eps : float, default=1e-4
        Margin keeping transformed angles away from 0 and pi.

    Returns
    -------
    PoleSet
        Transformed poles, real poles first, then conjugate pairs.
    """
    if alpha == 1:
        return PoleSet(poleset.poles.copy())

    real = poleset.real_mask()
    reals = poleset.poles[real].real
    upper = poleset.poles[~real & (poleset.poles.imag > 0)]

    angles = np.clip(np.angle(upper) ** alpha, angle_eps, np.pi - angle_eps)
    moduli = np.minimum(np.abs(upper), stability_clamp)
    shifted = moduli * np.exp(1j * angles)

    reals = np.clip(reals, -stability_clamp, stability_clamp)
    pairs = np.column_stack([shifted, np.conj(shifted)]).reshape(-1)
    return PoleSet(np.concatenate([reals.astype(np.complex128), pairs]))


def count_clamped(poleset: PoleSet, stability_clamp: float) -> int:
    """Number of poles whose modulus exceeds `stability_clamp`."""
    return int(np.count_nonzero(poleset.moduli > stability_clamp))


def anonymize_frame(
    frame: Union[Sequence[float], np.ndarray],
    params: McAdamsParams,
    alpha: Optional[float] = None,
    frame_index: Optional[int] = None,
    stats: Optional[SynthesisStats] = None,
) -> np.ndarray:
    """
    Anonymizes one analysis frame.

    LPC analysis, residual extraction, pole finding, McAdams pole transform, conversion back to
    coefficients and resynthesis from the retained residual. Silent frames pass through unchanged.

    Parameters
    ----------
    frame : array-like of float
        Windowed frame.

    params : McAdamsParams
        Anonymizer settings.

    alpha : float, default=None
        Overrides `params.alpha` (used by the randomized-alpha extension).

    frame_index : int, default=None
        Reported in numerical errors.

    stats : SynthesisStats, default=None
        Counters updated in place.

    Returns
    -------
    np.ndarray
        Resynthesized frame of the same length.
    """
    x = np.asarray(frame, dtype=np.float64).reshape(-1)
    alpha = params.alpha if alpha is None else alpha
    stats = stats if stats is not None else SynthesisStats()
    stats.frames += 1
    try:
        model = analyze(x, params.lpc_order, frame_index=frame_index)
        if model.degenerate:
            stats.degenerate_frames += 1
            return x.copy()
        residual = inverse_filter(x, model)
        new_model = _shift_model(model, alpha, params, stats)
        return synthesis_filter(residual, new_model)
    except NumericalError as err:
        if err.frame_index is not None:
            raise
        raise err.at_frame(frame_index) from err


def _shift_model(model, alpha, params: McAdamsParams, stats: SynthesisStats):
    poles = find_poles(model)
    if alpha != 1:
        stats.clamped_poles += count_clamped(poles, params.stability_clamp)
    shifted = transform_poles(poles, alpha, params.stability_clamp)
    return poles_to_coeffs(shifted, gain=model.gain)


def anonymize_buffer(
    buffer: AudioBuffer,
    params: McAdamsParams,
    alpha: Optional[float] = None,
    stats: Optional[SynthesisStats] = None,
) -> AudioBuffer:
    """
    Anonymizes a whole waveform.

    The signal is padded with `frame_len - hop` zeros on each side so that every sample is
    covered by the full overlap of the window, framed, anonymized frame by frame and
    overlap-added (or filtered continuously, see `McAdamsParams.synthesis`). The output has the
    input's length and sample rate.

    Raises
    ------
    NumericalError
        If a frame fails or the result is not finite.
    """
    stats = stats if stats is not None else SynthesisStats()
    alpha = params.alpha if alpha is None else alpha
    x = buffer.samples
    if x.shape[0] == 0:
        return AudioBuffer(samples=np.zeros(0), sample_rate=buffer.sample_rate)
    if params.pre_emphasis:
        x = pre_emphasis(x, PRE_EMPHASIS)

    plan = params.frame_plan(buffer.sample_rate)
    if plan.frame_len <= params.lpc_order:
        raise ContractError(
            f"voiceprivacy: frame of {plan.frame_len} samples is too short for LPC order {params.lpc_order}"
        )
    if params.synthesis == "ola":
        y = _synthesize_ola(x, plan, params, alpha, stats, buffer.sample_rate)
    else:
        y = _synthesize_continuous(x, plan, params, alpha, stats)

    if params.pre_emphasis:
        y = de_emphasis(y, PRE_EMPHASIS)
    if not np.all(np.isfinite(y)):
        raise NumericalError("anonymized signal contains non-finite samples")
    return AudioBuffer(samples=y, sample_rate=buffer.sample_rate)


def _synthesize_ola(x, plan: FramePlan, params, alpha, stats, sample_rate) -> np.ndarray:
    pad = plan.frame_len - plan.hop
    padded = np.concatenate([np.zeros(pad), x, np.zeros(pad)])
    frames = frame_signal(padded, plan)
    out = np.empty_like(frames)
    for i, frame in enumerate(frames):
        out[i] = anonymize_frame(frame, params, alpha=alpha, frame_index=i, stats=stats)
    y = overlap_add(out, plan, sample_rate, length=padded.shape[0]).samples
    return y[pad : pad + x.shape[0]]


def _synthesize_continuous(x, plan: FramePlan, params, alpha, stats) -> np.ndarray:
    # Frame i is centered on the hop segment [i*hop, (i+1)*hop).
    center = (plan.frame_len - plan.hop) // 2
    n_segments = -(-x.shape[0] // plan.hop)
    padded = np.concatenate([np.zeros(center), x, np.zeros(plan.frame_len)])
    frames = frame_signal(padded, plan)[:n_segments]
    y = np.zeros_like(x)
    order = params.lpc_order
    for i, frame in enumerate(frames):
        start, stop = i * plan.hop, min((i + 1) * plan.hop, x.shape[0])
        stats.frames += 1
        try:
            model = analyze(frame, order, frame_index=i)
            if model.degenerate:
                stats.degenerate_frames += 1
                y[start:stop] = x[start:stop]
                continue
            residual = inverse_filter(x[start:stop], model, history=x[max(0, start - order) : start])
            new_model = _shift_model(model, alpha, params, stats)
            y[start:stop] = synthesis_filter(
                residual, new_model, initial_state=y[max(0, start - order) : start]
            )
        except NumericalError as err:
            if err.frame_index is not None:
                raise
            raise err.at_frame(i) from err
    return y


def draw_alpha(params: McAdamsParams, key: str) -> float:
    """
    McAdams coefficient for the utterance or speaker identified by `key`.

    Returns `params.alpha` unless `params.alpha_range` is set, in which case alpha is drawn
    uniformly from the range with a generator seeded by (`params.rng_seed`, `key`).
    """
    if params.alpha_range is None:
        return params.alpha
    low, high = params.alpha_range
    return float(stream_rng(params.rng_seed, "alpha", key).uniform(low, high))


################################################################################
# Corpus-level anonymization
################################################################################
class McAdamsAnonymizer:
    def __init__(
        self,
        params: Optional[McAdamsParams] = None,
        jobs: int = 1,
        speaker_map: Optional[Dict[str, str]] = None,
        show_progress: bool = True,
    ) -> None:
        """
        Class for anonymizing a corpus of WAV files with the McAdams coefficient.

        Parameters
        ----------
        params : McAdamsParams, default=None
            Anonymizer settings. If None, the defaults are used.

        jobs : int, default=1
            Number of files processed concurrently.

        speaker_map : dict, default=None
            Utterance-to-speaker map. When given together with `params.alpha_range`, the
            randomized alpha is drawn once per speaker instead of once per utterance.

        show_progress : bool, default=True
            Whether to display a progress bar.
        """
        assert jobs >= 1, "voiceprivacy: jobs must be a positive integer"
        self.params = params if params is not None else McAdamsParams()
        self.jobs = jobs
        self.speaker_map = speaker_map
        self.show_progress = show_progress

    def anonymize_file(self, utt_id: str, input_path: Path, output_path: Path) -> Dict[str, Any]:
        """Anonymizes one file and returns its report entry. Errors are recorded, not raised."""
        entry = {
            "utterance_id": utt_id,
            "input": str(input_path),
            "output": str(output_path),
            "status": "ok",
            "error": None,
            "alpha": None,
            "clip_count": 0,
            "clamped_poles": 0,
            "degenerate_frames": 0,
            "frames": 0,
        }
        key = utt_id
        if self.speaker_map is not None:
            key = self.speaker_map.get(utt_id, utt_id)
        alpha = draw_alpha(self.params, key)
        entry["alpha"] = alpha
        try:
            stats = SynthesisStats()
            buffer = read_wav(input_path)
            anonymized = anonymize_buffer(buffer, self.params, alpha=alpha, stats=stats)
            entry["clip_count"] = write_wav(anonymized, output_path)
            entry.update(
                clamped_poles=stats.clamped_poles,
                degenerate_frames=stats.degenerate_frames,
                frames=stats.frames,
            )
            if stats.clamped_poles:
                warnings.warn(
                    f"{utt_id}: {stats.clamped_poles} poles clamped to modulus {self.params.stability_clamp}"
                )
        except (VoicePrivacyError, OSError, ValueError) as err:
            logger.error("%s: %s (%s)", utt_id, FAILURE_MESSAGE, err)
            entry.update(status="failed", error=f"{FAILURE_MESSAGE}: {err}")
        return entry

    async def anonymize_corpus(
        self, manifest: Sequence[Tuple[str, Union[str, os.PathLike]]], out_dir: Union[str, os.PathLike]
    ) -> Dict[str, Any]:
        """
        Anonymizes every file of a manifest into `out_dir`, keeping base names.

        Parameters
        ----------
        manifest : sequence of (utterance_id, wav_path)
            Files to anonymize.

        out_dir : str or PathLike
            Output directory; created if missing.

        Returns
        -------
        dict
            A dictionary with two keys: 'files' and 'metadata'.

            'files' : list of dict
                One entry per manifest line, in manifest order, with status, error, alpha,
                clip count, stability-clamp count and degenerate-frame count.
            'metadata' : dict
                Parameters, processed/failed/clipped counts and failure rate. Nothing in it depends on
                timing or on the job count.
        """
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        started = time.perf_counter()

        jobs, seen = [], {}
        for utt_id, wav_path in manifest:
            output_path = out_dir / Path(wav_path).name
            jobs.append((utt_id, Path(wav_path), output_path, seen.get(output_path.name)))
            seen.setdefault(output_path.name, utt_id)

        loop = asyncio.get_running_loop()
        progress = tqdm(total=len(jobs), desc="Anonymizing", disable=not self.show_progress)
        with ThreadPoolExecutor(max_workers=self.jobs) as executor:
            tasks = [self._run(loop, executor, progress, *job) for job in jobs]
            entries = await asyncio.gather(*tasks)
        progress.close()

        failed = sum(entry["status"] != "ok" for entry in entries)
        metadata = {
            "params": self.params.to_dict(),
            "total": len(entries),
            "processed": len(entries) - failed,
            "failed": failed,
            "clipped": sum(entry["clip_count"] for entry in entries),
            "clamped_poles": sum(entry["clamped_poles"] for entry in entries),
            "failure_rate": failed / len(entries) if entries else 0.0,
        }
        logger.info(
            "Anonymized %d/%d files (%d failed, %d samples clipped) in %.2f s with %d jobs",
            metadata["processed"],
            metadata["total"],
            failed,
            metadata["clipped"],
            time.perf_counter() - started,
            self.jobs,
        )
        return {"files": list(entries), "metadata": metadata}

    async def _run(self, loop, executor, progress, utt_id, input_path, output_path, clash):
        if clash is not None:
            progress.update(1)
            return {
                "utterance_id": utt_id,
                "input": str(input_path),
                "output": str(output_path),
                "status": "failed",
                "error": f"{FAILURE_MESSAGE}: output name {output_path.name} already used by {clash}",
                "alpha": None,
                "clip_count": 0,
                "clamped_poles": 0,
                "degenerate_frames": 0,
                "frames": 0,
            }
        entry = await loop.run_in_executor(
            executor, self.anonymize_file, utt_id, input_path, output_path
        )
        progress.update(1)
        return entry


def anonymize_corpus(
    manifest: Sequence[Tuple[str, Union[str, os.PathLike]]],
    params: McAdamsParams,
    out_dir: Union[str, os.PathLike],
    jobs: int = 1,
    show_progress: bool = False,
) -> Dict[str, Any]:
    """Synchronous wrapper around `McAdamsAnonymizer.anonymize_corpus`."""
    anonymizer = McAdamsAnonymizer(params=params, jobs=jobs, show_progress=show_progress)
    return asyncio.run(anonymizer.anonymize_corpus(manifest, out_dir))


def failed_entries(report: Dict[str, Any]) -> List[Dict[str, Any]]:
    return [entry for entry in report["files"] if entry["status"] != "ok"]
