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
from dataclasses import dataclass
from typing import Any, List

import numpy as np

from voiceprivacy.metrics.verification.metrics.baseclass.metrics import (
    Metric,
    ScoreSet,
    as_score_set,
)
from voiceprivacy.metrics.verification.metrics.cllr import cllr, cllr_from_llrs

logger = logging.getLogger(__name__)


@dataclass
class PavCalibration:
    """
    Monotone score-to-LLR map fitted by pool-adjacent-violators.

    Attributes
    ----------
    points : np.ndarray
        Sorted unique training scores.

    block_of_point : np.ndarray
        Block index of each point; non-decreasing.

    block_targets, block_sizes : np.ndarray
        Target count and trial count per block.

    prior : float
        Empirical target prior N_tar / (N_tar + N_imp).

    n_total : int
        Number of training trials.
    """

    points: np.ndarray
    block_of_point: np.ndarray
    block_targets: np.ndarray
    block_sizes: np.ndarray
    prior: float
    n_total: int

    @property
    def n_blocks(self) -> int:
        return self.block_sizes.shape[0]

    @property
    def block_posteriors(self) -> np.ndarray:
        return self.block_targets / self.block_sizes

    def fitted(self) -> np.ndarray:
        """Isotonic fit (posterior) at each unique training score."""
        return self.block_posteriors[self.block_of_point]

    def block_llrs(self, clip: bool = True) -> np.ndarray:
        """
        Block LLRs with the prior log-odds removed. With `clip`, posteriors are held inside
        [1/(2N), 1 - 1/(2N)] so that pure blocks stay finite; without it pure blocks map to +-inf.
        """
        p = self.block_posteriors
        if clip:
            bound = 1.0 / (2.0 * self.n_total)
            p = np.clip(p, bound, 1.0 - bound)
        with np.errstate(divide="ignore"):
            logit = np.log(p) - np.log1p(-p)
        return logit - (np.log(self.prior) - np.log1p(-self.prior))

    def __call__(self, scores: Any, clip: bool = True) -> np.ndarray:
        """Maps scores to LLRs; scores below the lowest training score fall in the first block."""
        scores = np.asarray(scores, dtype=np.float64)
        idx = np.searchsorted(self.points, scores, side="right") - 1
        idx = np.clip(idx, 0, self.points.shape[0] - 1)
        return self.block_llrs(clip=clip)[self.block_of_point[idx]]


def pav_calibrate(scores: Any, impostor_scores: Any = None) -> PavCalibration:
    """
    Fits the optimal monotone calibration of a score set.

    Labels (impostor 0, target 1) are regressed isotonically on the scores. Trials sharing a score
    value are pooled before fitting, and adjacent blocks with equal means are merged, so the block
    structure is the coarsest one with strictly increasing posteriors.

    Parameters
    ----------
    scores : ScoreSet or array-like
        Target scores, or a ScoreSet holding both lists.

    impostor_scores : array-like, default=None
        Impostor scores when `scores` is an array.

    Returns
    -------
    PavCalibration
    """
    scores = as_score_set(scores, impostor_scores)
    scores.require_nonempty()
    all_scores = np.concatenate([scores.target_scores, scores.impostor_scores])
    labels = np.concatenate(
        [np.ones(scores.n_target, dtype=np.int64), np.zeros(scores.n_impostor, dtype=np.int64)]
    )
    points, inverse = np.unique(all_scores, return_inverse=True)
    group_targets = np.bincount(inverse, weights=labels, minlength=points.shape[0]).astype(np.int64)
    group_sizes = np.bincount(inverse, minlength=points.shape[0]).astype(np.int64)

    # each block: [targets, size, number of points]
    blocks: List[List[int]] = []
    for k, n in zip(group_targets.tolist(), group_sizes.tolist()):
        blocks.append([k, n, 1])
        # merge while previous mean >= last mean, compared exactly on integers
        while len(blocks) > 1 and blocks[-2][0] * blocks[-1][1] >= blocks[-1][0] * blocks[-2][1]:
            k_last, n_last, m_last = blocks.pop()
            blocks[-1][0] += k_last
            blocks[-1][1] += n_last
            blocks[-1][2] += m_last

    block_of_point = np.repeat(np.arange(len(blocks)), [b[2] for b in blocks])
    n_total = scores.n_target + scores.n_impostor
    logger.debug("PAV pooled %d scores into %d blocks", n_total, len(blocks))
    return PavCalibration(
        points=points,
        block_of_point=block_of_point,
        block_targets=np.array([b[0] for b in blocks], dtype=np.float64),
        block_sizes=np.array([b[1] for b in blocks], dtype=np.float64),
        prior=scores.n_target / n_total,
        n_total=n_total,
    )


def cllr_min(scores: Any, impostor_scores: Any = None) -> float:
    """
    Discrimination part of C_llr: the cost after optimal monotone calibration.

    Evaluated with the exact PAV posteriors. Pure blocks then carry infinite LLRs on the side
    where they cost nothing, which keeps the result at most C_llr and at most 1.
    """
    scores = as_score_set(scores, impostor_scores)
    calibration = pav_calibrate(scores)
    return cllr_from_llrs(
        calibration(scores.target_scores, clip=False),
        calibration(scores.impostor_scores, clip=False),
    )


def calibration_loss(scores: Any, impostor_scores: Any = None) -> float:
    """C_llr - C_llr_min; non-negative up to rounding."""
    scores = as_score_set(scores, impostor_scores)
    return max(cllr(scores) - cllr_min(scores), 0.0)


class CllrMin(Metric):
    def __init__(self) -> None:
        """
        This class computes the minimum log-likelihood-ratio cost, i.e. C_llr after PAV calibration.
        It measures discrimination alone.
        """
        self.name = "Cllr min"

    def evaluate(self, scores: ScoreSet) -> float:
        return cllr_min(scores)


class CalibrationLoss(Metric):
    def __init__(self) -> None:
        """This class computes the calibration part of C_llr."""
        self.name = "Calibration loss"

    def evaluate(self, scores: ScoreSet) -> float:
        return calibration_loss(scores)
