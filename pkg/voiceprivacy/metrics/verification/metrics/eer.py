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

from dataclasses import dataclass
from typing import Any, Tuple

import numpy as np

from voiceprivacy.metrics.verification.metrics.baseclass.metrics import (
    Metric,
    ScoreSet,
    as_score_set,
)


@dataclass(frozen=True)
class ErrorRates:
    threshold: float
    p_fa: float
    p_miss: float


def _sorted_counts(scores: ScoreSet, thresholds: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """False-accept and miss counts at each threshold (accept when score > threshold)."""
    tar = np.sort(scores.target_scores)
    imp = np.sort(scores.impostor_scores)
    n_fa = scores.n_impostor - np.searchsorted(imp, thresholds, side="right")
    n_miss = np.searchsorted(tar, thresholds, side="right")
    return n_fa, n_miss


def error_rates(scores: ScoreSet, threshold: float) -> ErrorRates:
    """
    False-acceptance and miss rates at a decision threshold. A trial is accepted when its score is
    strictly greater than the threshold.

    Parameters
    ----------
    scores : ScoreSet
        Target and impostor scores, both non-empty.

    threshold : float
        Decision threshold.

    Returns
    -------
    ErrorRates
    """
    scores.require_nonempty()
    n_fa, n_miss = _sorted_counts(scores, np.array([threshold], dtype=np.float64))
    return ErrorRates(
        threshold=float(threshold),
        p_fa=float(n_fa[0]) / scores.n_impostor,
        p_miss=float(n_miss[0]) / scores.n_target,
    )


def eer_with_threshold(scores: Any, impostor_scores: Any = None) -> Tuple[float, float]:
    """
    Equal error rate in percent together with the threshold it was read at.

    Candidate thresholds are the observed score values. The selected thresholds minimize
    |P_fa - P_miss|. When several candidates tie, typically the two thresholds either side of the
    crossing, the EER is the mean of their (P_fa + P_miss) / 2 midpoints and the lowest of them is
    reported. Averaging over the tied set makes the result invariant to swapping the target and
    impostor lists and negating all scores.
    """
    scores = as_score_set(scores, impostor_scores)
    scores.require_nonempty()
    thresholds = np.unique(np.concatenate([scores.target_scores, scores.impostor_scores]))
    n_fa, n_miss = _sorted_counts(scores, thresholds)
    # integer cross-multiplied gap and midpoint sum keep ties and the average exact
    gap = np.abs(n_fa * scores.n_target - n_miss * scores.n_impostor)
    tied = np.flatnonzero(gap == gap.min())
    total = int(np.sum(n_fa[tied] * scores.n_target + n_miss[tied] * scores.n_impostor))
    denominator = 2 * scores.n_target * scores.n_impostor * tied.size
    return (100 * total) / denominator, float(thresholds[tied[0]])


def eer(scores: Any, impostor_scores: Any = None) -> float:
    """Equal error rate in percent, in [0, 100]."""
    return eer_with_threshold(scores, impostor_scores)[0]


class EqualErrorRate(Metric):
    def __init__(self) -> None:
        """
        This class computes the equal error rate of a verification system, the operating point where
        false-acceptance and miss rates coincide. Reported in percent.
        """
        self.name = "EER"

    def evaluate(self, scores: ScoreSet) -> float:
        """
        This method computes the equal error rate.

        Parameters
        ----------
        scores : ScoreSet
            Target and impostor scores, both non-empty.

        Returns
        -------
        float
            EER in percent
        """
        return eer(scores)
