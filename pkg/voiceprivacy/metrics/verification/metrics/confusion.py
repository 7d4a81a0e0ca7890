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

from collections import defaultdict
from dataclasses import dataclass
from typing import Dict, Iterable, List, Tuple

import numpy as np

from voiceprivacy.utils.exceptions import ContractError, ReconciliationError


@dataclass
class SpeakerConfusion:
    """
    Speaker-by-speaker confusion matrix. Row A, column B holds the mean score of enrollment speaker A
    against test utterances of speaker B, normalized by the sum of absolute entries.
    """

    speakers: List[str]
    matrix: np.ndarray

    def diag_ratio(self) -> float:
        return diag_ratio(self.matrix)

    def to_dict(self) -> Dict[str, object]:
        return {"speakers": list(self.speakers), "matrix": self.matrix.tolist()}


def diag_ratio(matrix: np.ndarray) -> float:
    """mean(diagonal) / mean(off-diagonal) of a square matrix with at least 2 rows."""
    matrix = np.asarray(matrix, dtype=np.float64)
    n = matrix.shape[0]
    if matrix.ndim != 2 or matrix.shape[1] != n or n < 2:
        raise ContractError("voiceprivacy: diag_ratio needs a square matrix of at least 2 speakers")
    off = matrix[~np.eye(n, dtype=bool)]
    off_mean = float(np.mean(off))
    if off_mean == 0.0:
        raise ContractError("voiceprivacy: off-diagonal mean is zero, ratio undefined")
    return float(np.mean(np.diag(matrix))) / off_mean


def speaker_confusion(
    score_rows: Iterable[Tuple[str, str, float]],
    utt2spk: Dict[str, str],
) -> SpeakerConfusion:
    """
    Builds the confusion matrix from `<enrollment-speaker> <test-utterance> <score>` rows.

    Parameters
    ----------
    score_rows : iterable of (str, str, float)
        Enrollment speaker ID, test utterance ID, score.

    utt2spk : dict
        Test utterance ID to speaker ID.

    Returns
    -------
    SpeakerConfusion
        Restricted to speakers seen both as enrollment and as test speakers.
    """
    sums: Dict[Tuple[str, str], float] = defaultdict(float)
    counts: Dict[Tuple[str, str], int] = defaultdict(int)
    missing = set()
    for enroll, test_utt, score in score_rows:
        if test_utt not in utt2spk:
            missing.add(test_utt)
            continue
        key = (enroll, utt2spk[test_utt])
        sums[key] += float(score)
        counts[key] += 1
    if missing:
        raise ReconciliationError("voiceprivacy: test utterances without a speaker", keys=sorted(missing))

    enrolled = {a for a, _ in counts}
    tested = {b for _, b in counts}
    speakers = sorted(enrolled & tested)
    if len(speakers) < 2:
        raise ContractError(
            f"voiceprivacy: speaker confusion needs at least 2 speakers, found {len(speakers)}"
        )
    index = {s: i for i, s in enumerate(speakers)}
    matrix = np.zeros((len(speakers), len(speakers)), dtype=np.float64)
    for (a, b), n in counts.items():
        if a in index and b in index:
            matrix[index[a], index[b]] = sums[(a, b)] / n
    total = float(np.sum(np.abs(matrix)))
    if total > 0.0:
        matrix = matrix / total
    return SpeakerConfusion(speakers=speakers, matrix=matrix)


def deidentification_effect(m_oo: SpeakerConfusion, m_oa: SpeakerConfusion) -> float:
    """diag_ratio(original vs original) / diag_ratio(original vs anonymized)."""
    return m_oo.diag_ratio() / m_oa.diag_ratio()


def pseudonymization_effect(m_oo: SpeakerConfusion, m_aa: SpeakerConfusion) -> float:
    """diag_ratio(original vs original) / diag_ratio(anonymized vs anonymized)."""
    return m_oo.diag_ratio() / m_aa.diag_ratio()
