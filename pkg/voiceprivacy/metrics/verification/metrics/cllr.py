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

from typing import Any

import numpy as np

from voiceprivacy.metrics.verification.metrics.baseclass.metrics import (
    Metric,
    ScoreSet,
    as_score_set,
)


def cllr_from_llrs(target_llrs: np.ndarray, impostor_llrs: np.ndarray) -> float:
    """
    Log-likelihood-ratio cost in bits. Infinite LLRs are allowed on the side where they cost
    nothing (+inf for targets, -inf for impostors).
    """
    target_llrs = np.asarray(target_llrs, dtype=np.float64)
    impostor_llrs = np.asarray(impostor_llrs, dtype=np.float64)
    # log2(1 + e^x) without overflow
    c_tar = np.mean(np.logaddexp(0.0, -target_llrs)) / np.log(2.0)
    c_imp = np.mean(np.logaddexp(0.0, impostor_llrs)) / np.log(2.0)
    return float(0.5 * (c_tar + c_imp))


def cllr(scores: Any, impostor_scores: Any = None) -> float:
    """
    Log-likelihood-ratio cost of scores interpreted as natural-log LLRs.

    Parameters
    ----------
    scores : ScoreSet or array-like
        Target scores, or a ScoreSet holding both lists.

    impostor_scores : array-like, default=None
        Impostor scores when `scores` is an array.

    Returns
    -------
    float
        C_llr in bits; 1.0 for an uninformative system that always outputs 0.
    """
    scores = as_score_set(scores, impostor_scores)
    scores.require_nonempty()
    return cllr_from_llrs(scores.target_scores, scores.impostor_scores)


class Cllr(Metric):
    def __init__(self) -> None:
        """
        This class computes the log-likelihood-ratio cost, which penalizes both poor discrimination
        and poor calibration of LLR scores.
        """
        self.name = "Cllr"

    def evaluate(self, scores: ScoreSet) -> float:
        return cllr(scores)
