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

from typing import Any, Dict

from voiceprivacy.metrics.recognition import metrics
from voiceprivacy.metrics.recognition.metrics.wer import Tokens


class RecognitionMetrics:
    def __init__(self) -> None:
        """
        Class for utility metrics of recognized speech. Reports corpus WER in percent with its
        substitution, deletion and insertion counts.
        """
        self.metric = metrics.WordErrorRate()

    def evaluate(
        self,
        references: Dict[str, Tokens],
        hypotheses: Dict[str, Tokens],
        return_data: bool = False,
    ) -> Dict[str, Any]:
        """
        Returns corpus WER and its breakdown.

        Parameters
        ----------
        references : dict
            Utterance ID to reference transcript.

        hypotheses : dict
            Utterance ID to recognized transcript.

        return_data : bool, default=False
            Indicates whether to include per-utterance breakdowns.

        Returns
        -------
        dict
            Dictionary with a "metrics" entry, plus "data" when `return_data` is True.
        """
        total, per_utterance = metrics.wer_corpus(references, hypotheses)
        result = {
            "metrics": {
                self.metric.name: 100.0 * total.wer,
                "Substitutions": total.n_sub,
                "Deletions": total.n_del,
                "Insertions": total.n_ins,
                "Reference words": total.n_ref,
            }
        }
        if return_data:
            result["data"] = {utt: b.to_dict() for utt, b in per_utterance.items()}
        return result
