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

from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Any, Sequence, Union

import numpy as np

from voiceprivacy.utils.exceptions import ContractError


@dataclass
class ScoreSet:
    """
    Target and impostor (non-target) verification scores, interpreted as LLRs where needed.

    Parameters
    ----------
    target_scores : array-like of float
        Scores of trials whose enrollment and test speakers match.

    impostor_scores : array-like of float
        Scores of trials whose speakers differ.
    """

    target_scores: np.ndarray
    impostor_scores: np.ndarray

    def __post_init__(self) -> None:
        self.target_scores = np.asarray(self.target_scores, dtype=np.float64).reshape(-1)
        self.impostor_scores = np.asarray(self.impostor_scores, dtype=np.float64).reshape(-1)
        if not (np.all(np.isfinite(self.target_scores)) and np.all(np.isfinite(self.impostor_scores))):
            raise ContractError("voiceprivacy: scores must be finite")

    @property
    def n_target(self) -> int:
        return self.target_scores.shape[0]

    @property
    def n_impostor(self) -> int:
        return self.impostor_scores.shape[0]

    def require_nonempty(self) -> None:
        if self.n_target == 0 or self.n_impostor == 0:
            raise ContractError(
                f"voiceprivacy: metric needs target and impostor scores, got {self.n_target} and {self.n_impostor}"
            )

    def swapped(self) -> "ScoreSet":
        """Target and impostor lists exchanged and all scores negated."""
        return ScoreSet(-self.impostor_scores, -self.target_scores)


ScoresLike = Union[ScoreSet, Sequence[Sequence[float]]]


def as_score_set(scores: Any, impostor_scores: Any = None) -> ScoreSet:
    """Accepts a ScoreSet, or target and impostor arrays."""
    if isinstance(scores, ScoreSet):
        return scores
    return ScoreSet(scores, impostor_scores)


class Metric(ABC):
    """
    Abstract base class of all verification metrics. Serves as a template for creating new metric
    functions.
    """

    @abstractmethod
    def evaluate(self, scores: ScoreSet) -> float:
        """
        Abstract method that needs to be implemented by the user when creating a new metric function.
        """
        pass
